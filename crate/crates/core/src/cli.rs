//! Command-line front end: argument parsing, CSV ingestion and the six
//! subcommands of the `mdpde` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::are_table_partial;
use crate::error::{Error, Result};
use crate::estimation::{fit, FitMethod, FitResult, GdConfig};
use crate::format::{fmt_num, round_json};
use crate::hypothesis::{contiguous_power_with, wald_test_from_fit, HypothesisSpec, NuisanceTreatment, WaldTestResult};
use crate::montecarlo::{
    bias_mse_study, level_power_study, outlier_filter_boxplot, relative_difference, ContaminationScheme, SchemePair,
    SimulationReport,
};
use crate::quadrature::QuadratureSpec;
use crate::robustness::{if_curve, linear_grid, write_curves_csv, IfExtras, IfKind};
use crate::sample::Sample;
use crate::skew_normal::SnParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Minimum number of numeric cells `ingest_csv` accepts.
pub const MIN_ROWS: usize = 5;

pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0];
pub const ARE_ALPHAS: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];
pub const POWER_ALPHAS: [f64; 8] = ARE_ALPHAS;
pub const POWER_D: [f64; 10] = [3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0, 9.0];

/// Exit status for an error reaching the top level.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Parameter(_) => EXIT_USAGE,
        Error::Io(_) | Error::Data(_) => EXIT_DATA,
        Error::Integration { .. } | Error::Conditioning { .. } | Error::Numerical(_) | Error::Boundary { .. } => {
            EXIT_NUMERICAL
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Fit,
    Test,
    Simulate,
    Diagnose,
    Are,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    BiasMse,
    LevelPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// n = 50, 10 replications.
    Smoke,
    /// n = 100, 500 replications.
    Paper,
}

impl Profile {
    fn size(self) -> (usize, usize) {
        match self {
            Profile::Smoke => (50, 10),
            Profile::Paper => (100, 500),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Influence function of the estimator.
    If,
    /// Second-order influence function of the Wald-type statistic.
    If2,
    /// Power influence function.
    Pif,
}

impl From<CurveKind> for IfKind {
    fn from(k: CurveKind) -> Self {
        match k {
            CurveKind::If => IfKind::EstimatorIf,
            CurveKind::If2 => IfKind::TestIf2,
            CurveKind::Pif => IfKind::TestPif,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOptions {
    pub design: Design,
    pub n: usize,
    pub reps: usize,
    pub theta: SnParams,
    pub contaminant: SnParams,
    pub alt: SnParams,
    pub alt_contaminant: SnParams,
    pub epsilon: f64,
    pub gamma0: f64,
    pub tau0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseOptions {
    pub kind: CurveKind,
    pub theta: SnParams,
    pub y_min: f64,
    pub y_max: f64,
    pub step: f64,
    pub hypothesis: String,
    pub direction: [f64; 3],
    pub tau0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerOptions {
    pub theta: SnParams,
    pub hypothesis: String,
    pub direction: [f64; 3],
    pub d: Vec<f64>,
    pub tau0: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandOptions {
    Fit { drop_outliers: bool },
    Test { hypothesis: String, tau0: f64 },
    Simulate(SimulateOptions),
    Diagnose(DiagnoseOptions),
    Are { thetas: Vec<SnParams> },
    Power(PowerOptions),
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub column: Option<String>,
    pub alpha_list: Vec<f64>,
    pub seed: u64,
    pub output_path: PathBuf,
    pub format: OutputFormat,
    pub options: CommandOptions,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_list.is_empty() {
            return Err(Error::Config("alpha list is empty".into()));
        }
        if let Some(a) = self.alpha_list.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::Config(format!("alpha values must be finite and >= 0, got {a}")));
        }
        if matches!(self.command, Command::Fit | Command::Test) && (self.input_path.is_none() || self.column.is_none()) {
            return Err(Error::Config("fit and test need --input and --column".into()));
        }
        Ok(())
    }
}

fn parse_theta(s: &str) -> std::result::Result<SnParams, String> {
    let v = parse_triple(s)?;
    SnParams::from_array(v).map_err(|e| e.to_string())
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("cannot parse '{}' as a number", p.trim())))
        .collect::<std::result::Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected three comma-separated values, got {}", v.len()))
}

#[derive(Debug, Parser)]
#[command(
    name = "mdpde",
    version,
    about = "Robust skew-normal estimation and Wald-type tests by minimum density power divergence"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Args)]
struct Common {
    /// Comma-separated alpha values (default depends on the command)
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Master seed for anything random
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file
    #[arg(long, short)]
    output: PathBuf,
    /// Output format (default: json for fit/test/simulate, csv otherwise)
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
struct Input {
    /// CSV file with a header row
    #[arg(long, short)]
    input: PathBuf,
    /// Column to analyse
    #[arg(long, short)]
    column: String,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Fit SN parameters at each alpha
    Fit {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        /// Also fit the box-plot filtered sample and report relative differences
        #[arg(long)]
        drop_outliers: bool,
    },
    /// Wald-type test of gamma=<v>, sigma=<v> or mu=<v>
    Test {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        hypothesis: String,
        #[arg(long, default_value_t = 0.05)]
        tau0: f64,
    },
    /// Monte Carlo bias/MSE or level/power study
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Design::BiasMse)]
        design: Design,
        #[arg(long, value_enum, default_value_t = Profile::Smoke)]
        profile: Profile,
        /// Sample size (overrides the profile)
        #[arg(long)]
        n: Option<usize>,
        /// Replications (overrides the profile)
        #[arg(long)]
        reps: Option<usize>,
        /// True parameters, or the null for level/power
        #[arg(long, value_parser = parse_theta, allow_hyphen_values = true, default_value = "0,1,5")]
        theta: SnParams,
        /// Contaminating distribution (of the null for level/power)
        #[arg(long, value_parser = parse_theta, allow_hyphen_values = true, default_value = "10,1,5")]
        contaminant: SnParams,
        /// Alternative for level/power
        #[arg(long, value_parser = parse_theta, allow_hyphen_values = true, default_value = "0,1,1")]
        alt: SnParams,
        /// Contaminating distribution of the alternative
        #[arg(long, value_parser = parse_theta, allow_hyphen_values = true, default_value = "0,1,-3")]
        alt_contaminant: SnParams,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gamma0: f64,
        #[arg(long, default_value_t = 0.05)]
        tau0: f64,
    },
    /// Influence-function curves over a grid of contamination points
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CurveKind::If)]
        kind: CurveKind,
        #[arg(long, value_parser = parse_theta, allow_hyphen_values = true, default_value = "0,1,1")]
        theta: SnParams,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        y_min: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        y_max: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Null hypothesis for if2/pif
        #[arg(long, default_value = "gamma=1")]
        hypothesis: String,
        /// Contiguous direction d for pif
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0,0,1")]
        direction: [f64; 3],
        #[arg(long, default_value_t = 0.05)]
        tau0: f64,
    },
    /// Asymptotic relative efficiency table
    Are {
        #[command(flatten)]
        common: Common,
        /// Model parameters, repeatable (default: SN(0,1,1), SN(0,1,0), SN(0,1,-1))
        #[arg(long, value_parser = parse_theta, allow_hyphen_values = true)]
        theta: Vec<SnParams>,
    },
    /// Asymptotic contiguous power table
    Power {
        #[command(flatten)]
        common: Common,
        /// Null parameter value
        #[arg(long, value_parser = parse_theta, allow_hyphen_values = true, default_value = "0,1,0")]
        theta: SnParams,
        #[arg(long, default_value = "gamma=0")]
        hypothesis: String,
        /// Unit direction of the contiguous alternatives
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0,0,1")]
        direction: [f64; 3],
        /// Comma-separated distances d
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.05)]
        tau0: f64,
    },
}

fn make(
    command: Command,
    common: Common,
    default_alphas: &[f64],
    default_format: OutputFormat,
    input: Option<Input>,
    options: CommandOptions,
) -> RunConfig {
    let (input_path, column) = match input {
        Some(i) => (Some(i.input), Some(i.column)),
        None => (None, None),
    };
    RunConfig {
        command,
        input_path,
        column,
        alpha_list: common.alpha.unwrap_or_else(|| default_alphas.to_vec()),
        seed: common.seed,
        output_path: common.output,
        format: common.format.unwrap_or(default_format),
        options,
    }
}

fn resolve(cli: Cli) -> RunConfig {
    match cli.command {
        CliCommand::Fit {
            input,
            common,
            drop_outliers,
        } => make(Command::Fit, common, &DEFAULT_ALPHAS, OutputFormat::Json, Some(input), CommandOptions::Fit {
            drop_outliers,
        }),
        CliCommand::Test {
            input,
            common,
            hypothesis,
            tau0,
        } => make(Command::Test, common, &DEFAULT_ALPHAS, OutputFormat::Json, Some(input), CommandOptions::Test {
            hypothesis,
            tau0,
        }),
        CliCommand::Simulate {
            common,
            design,
            profile,
            n,
            reps,
            theta,
            contaminant,
            alt,
            alt_contaminant,
            epsilon,
            gamma0,
            tau0,
        } => {
            let (pn, preps) = profile.size();
            make(Command::Simulate, common, &DEFAULT_ALPHAS, OutputFormat::Json, None, CommandOptions::Simulate(
                SimulateOptions {
                    design,
                    n: n.unwrap_or(pn),
                    reps: reps.unwrap_or(preps),
                    theta,
                    contaminant,
                    alt,
                    alt_contaminant,
                    epsilon,
                    gamma0,
                    tau0,
                },
            ))
        }
        CliCommand::Diagnose {
            common,
            kind,
            theta,
            y_min,
            y_max,
            step,
            hypothesis,
            direction,
            tau0,
        } => make(Command::Diagnose, common, &DEFAULT_ALPHAS, OutputFormat::Csv, None, CommandOptions::Diagnose(
            DiagnoseOptions {
                kind,
                theta,
                y_min,
                y_max,
                step,
                hypothesis,
                direction,
                tau0,
            },
        )),
        CliCommand::Are { common, theta } => {
            let thetas = if theta.is_empty() {
                [1.0, 0.0, -1.0]
                    .iter()
                    .map(|&g| SnParams::new(0.0, 1.0, g).unwrap())
                    .collect()
            } else {
                theta
            };
            make(Command::Are, common, &ARE_ALPHAS, OutputFormat::Csv, None, CommandOptions::Are { thetas })
        }
        CliCommand::Power {
            common,
            theta,
            hypothesis,
            direction,
            d,
            tau0,
        } => make(Command::Power, common, &POWER_ALPHAS, OutputFormat::Csv, None, CommandOptions::Power(
            PowerOptions {
                theta,
                hypothesis,
                direction,
                d: d.unwrap_or_else(|| POWER_D.to_vec()),
                tau0,
            },
        )),
    }
}

/// Parses `args` (including the program name) into a [`RunConfig`].
/// `Err` carries clap's rendered message and whether it was a help or
/// version request.
pub fn parse_args<I, T>(args: I) -> std::result::Result<RunConfig, (String, bool)>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(resolve(cli)),
        Err(e) => {
            let info = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp
                    | clap::error::ErrorKind::DisplayVersion
                    | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            );
            Err((e.render().to_string(), info))
        }
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(args) {
        Ok(c) => c,
        Err((msg, info)) => {
            if info {
                print!("{msg}");
                return EXIT_OK;
            }
            eprint!("{msg}");
            return EXIT_USAGE;
        }
    };
    match run(&cfg) {
        Ok(out) => {
            for w in &out.messages {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", cfg.output_path.display());
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// A successful run wrote its output; `exit_code` is nonzero when some
/// α values failed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub messages: Vec<String>,
}

/// Executes a resolved configuration. Output is written only after the
/// whole report has been built.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let (mut doc, csv, outcome) = match &cfg.options {
        CommandOptions::Fit { drop_outliers } => cmd_fit(cfg, *drop_outliers)?,
        CommandOptions::Test { hypothesis, tau0 } => cmd_test(cfg, hypothesis, *tau0)?,
        CommandOptions::Simulate(o) => cmd_simulate(cfg, o)?,
        CommandOptions::Diagnose(o) => cmd_diagnose(cfg, o)?,
        CommandOptions::Are { thetas } => cmd_are(cfg, thetas)?,
        CommandOptions::Power(o) => cmd_power(cfg, o)?,
    };
    let text = match cfg.format {
        OutputFormat::Csv => csv,
        OutputFormat::Json => {
            round_json(&mut doc);
            if let Value::Object(map) = &mut doc {
                let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                map.insert(
                    "timestamp".into(),
                    json!({"unix_seconds": unix, "runtime_seconds": start.elapsed().as_secs_f64()}),
                );
            }
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };
    fs::write(&cfg.output_path, text).map_err(|e| Error::Io(format!("{}: {e}", cfg.output_path.display())))?;
    Ok(outcome)
}

/// Values read from one CSV column.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub sample: Sample,
    /// Rows whose cell was empty, non-numeric or non-finite.
    pub skipped: usize,
}

/// Reads the numeric cells of `column` (header row required).
pub fn ingest_csv(path: &Path, column: &str) -> Result<Ingested> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = rdr.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Io(format!("{}: no column named '{column}'", path.display())))?;
    let mut values = Vec::new();
    let mut skipped = 0;
    for rec in rdr.records() {
        let rec = rec?;
        match rec.get(idx).and_then(|c| c.trim().parse::<f64>().ok()).filter(|v| v.is_finite()) {
            Some(v) => values.push(v),
            None => skipped += 1,
        }
    }
    if values.len() < MIN_ROWS {
        return Err(Error::Data(format!(
            "{}:{column} has {} numeric values, need at least {MIN_ROWS}",
            path.display(),
            values.len()
        )));
    }
    let sample = Sample::new(values, column, format!("{}:{column}", path.display()))?;
    Ok(Ingested { sample, skipped })
}

fn load(cfg: &RunConfig) -> Result<Ingested> {
    match (&cfg.input_path, &cfg.column) {
        (Some(p), Some(c)) => ingest_csv(p, c),
        _ => Err(Error::Config("missing --input or --column".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
struct FitSummary {
    alpha: f64,
    method: FitMethod,
    params: SnParams,
    std_errors: [f64; 3],
    objective_value: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
    warnings: Vec<String>,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            alpha: f.alpha,
            method: f.method,
            params: f.params,
            std_errors: f.std_errors,
            objective_value: f.objective_value,
            gradient_norm: f.gradient_norm,
            iterations: f.iterations,
            converged: f.converged,
            warnings: f.warnings.clone(),
        }
    }
}

fn fit_all(data: &Sample, alphas: &[f64]) -> Vec<Result<FitResult>> {
    let cfg = GdConfig::default();
    alphas.par_iter().map(|&a| fit(data, a, &cfg, None)).collect()
}

fn fit_block(alpha: f64, r: &Result<FitResult>) -> Value {
    match r {
        Ok(f) => json!({"alpha": alpha, "status": "ok", "fit": FitSummary::from(f)}),
        Err(e) => json!({"alpha": alpha, "status": "error", "error": e.to_string()}),
    }
}

/// Exit status and messages for per-α results.
fn per_alpha_outcome<T>(alphas: &[f64], results: &[Result<T>]) -> RunOutcome {
    let mut exit = EXIT_OK;
    let mut messages = Vec::new();
    for (a, r) in alphas.iter().zip(results) {
        if let Err(e) = r {
            messages.push(format!("alpha={a}: {e}"));
            if exit == EXIT_OK {
                exit = exit_code(e);
            }
        }
    }
    RunOutcome { exit_code: exit, messages }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(r)?;
    }
    String::from_utf8(wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn fit_row(sample: &str, alpha: f64, r: &Result<FitResult>) -> Vec<String> {
    let mut row = vec![sample.to_string(), fmt_num(alpha)];
    match r {
        Ok(f) => {
            row.extend(f.params.to_array().iter().chain(&f.std_errors).map(|v| fmt_num(*v)));
            row.push(f.converged.to_string());
            row.push(f.iterations.to_string());
            row.push(String::new());
        }
        Err(e) => {
            row.extend(std::iter::repeat(String::new()).take(8));
            row.push(e.to_string());
        }
    }
    row
}

type CommandOutput = (Value, String, RunOutcome);

fn cmd_fit(cfg: &RunConfig, drop_outliers: bool) -> Result<CommandOutput> {
    let data = load(cfg)?;
    let alphas = &cfg.alpha_list;
    let full = fit_all(&data.sample, alphas);
    let mut outcome = per_alpha_outcome(alphas, &full);
    let mut doc = json!({
        "command": "fit",
        "input": data.sample.source,
        "n": data.sample.len(),
        "skipped": data.skipped,
        "fits": alphas.iter().zip(&full).map(|(a, r)| fit_block(*a, r)).collect::<Vec<_>>(),
    });
    let header = strings(&[
        "sample",
        "alpha",
        "mu",
        "sigma",
        "gamma",
        "se_mu",
        "se_sigma",
        "se_gamma",
        "converged",
        "iterations",
        "error",
    ]);
    let mut rows: Vec<Vec<String>> = alphas.iter().zip(&full).map(|(a, r)| fit_row("full", *a, r)).collect();
    if drop_outliers {
        let filtered = outlier_filter_boxplot(&data.sample)?;
        let clean = fit_all(&filtered.sample, alphas);
        let clean_outcome = per_alpha_outcome(alphas, &clean);
        if outcome.exit_code == EXIT_OK {
            outcome.exit_code = clean_outcome.exit_code;
        }
        outcome.messages.extend(clean_outcome.messages.into_iter().map(|m| format!("clean sample, {m}")));
        let blocks: Vec<Value> = alphas
            .iter()
            .zip(full.iter().zip(&clean))
            .map(|(a, (f, c))| {
                let mut b = fit_block(*a, c);
                if let (Ok(f), Ok(c)) = (f, c) {
                    b["relative_difference_percent"] = match relative_difference(f, c) {
                        Ok(rd) => json!(rd.map(|v| v.is_finite().then_some(v))),
                        Err(e) => json!(e.to_string()),
                    };
                }
                b
            })
            .collect();
        doc["outliers"] = json!({
            "removed": filtered.removed,
            "lower_fence": filtered.lower_fence,
            "upper_fence": filtered.upper_fence,
            "n_clean": filtered.sample.len(),
            "fits": blocks,
        });
        rows.extend(alphas.iter().zip(&clean).map(|(a, r)| fit_row("clean", *a, r)));
    }
    Ok((doc, csv_text(&header, &rows)?, outcome))
}

fn cmd_test(cfg: &RunConfig, hypothesis: &str, tau0: f64) -> Result<CommandOutput> {
    let hyp = HypothesisSpec::parse(hypothesis)?;
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(Error::Config(format!("tau0 must lie in (0, 1), got {tau0}")));
    }
    let data = load(cfg)?;
    let n = data.sample.len();
    let alphas = &cfg.alpha_list;
    let results: Vec<Result<WaldTestResult>> = fit_all(&data.sample, alphas)
        .into_iter()
        .map(|r| r.and_then(|f| wald_test_from_fit(f, n, &hyp)))
        .collect();
    let outcome = per_alpha_outcome(alphas, &results);
    let tests: Vec<Value> = alphas
        .iter()
        .zip(&results)
        .map(|(a, r)| match r {
            Ok(t) => {
                let mut v = t.summary_json();
                v["status"] = json!("ok");
                v[format!("reject_at_{tau0}")] = json!(t.rejects(tau0));
                v["warnings"] = json!(t.warnings);
                v
            }
            Err(e) => json!({"alpha": a, "status": "error", "error": e.to_string()}),
        })
        .collect();
    let doc = json!({
        "command": "test",
        "input": data.sample.source,
        "n": n,
        "skipped": data.skipped,
        "hypothesis": hyp.description,
        "tau0": tau0,
        "tests": tests,
    });
    let rows: Vec<Vec<String>> = alphas
        .iter()
        .zip(&results)
        .map(|(a, r)| match r {
            Ok(t) => vec![fmt_num(*a), fmt_num(t.statistic), fmt_num(t.p_value)],
            Err(_) => vec![fmt_num(*a), String::new(), String::new()],
        })
        .collect();
    Ok((doc, csv_text(&strings(&["alpha", "statistic", "p_value"]), &rows)?, outcome))
}

fn cmd_simulate(cfg: &RunConfig, o: &SimulateOptions) -> Result<CommandOutput> {
    let fit_cfg = GdConfig::default();
    let report: SimulationReport = match o.design {
        Design::BiasMse => {
            let scheme = ContaminationScheme::new(o.theta, o.contaminant, o.epsilon)?;
            bias_mse_study(&scheme, o.n, o.reps, &cfg.alpha_list, &fit_cfg, cfg.seed)?
        }
        Design::LevelPower => {
            let pair = SchemePair::contaminated(o.theta, o.alt, o.contaminant, o.alt_contaminant, o.epsilon)?;
            level_power_study(&pair, o.n, o.reps, &cfg.alpha_list, o.gamma0, o.tau0, &fit_cfg, cfg.seed)?
        }
    };
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    let csv = String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?;
    let mut rep = serde_json::to_value(&report)?;
    if let Value::Object(map) = &mut rep {
        map.remove("runtime_seconds");
    }
    let doc = json!({"command": "simulate", "seed": cfg.seed, "options": o, "report": rep});
    let outcome = RunOutcome {
        exit_code: EXIT_OK,
        messages: report.warnings.clone(),
    };
    Ok((doc, csv, outcome))
}

fn cmd_diagnose(cfg: &RunConfig, o: &DiagnoseOptions) -> Result<CommandOutput> {
    let grid = linear_grid(o.y_min, o.y_max, o.step)?;
    let kind = IfKind::from(o.kind);
    let extras = IfExtras {
        hypothesis: match kind {
            IfKind::EstimatorIf => None,
            _ => Some(HypothesisSpec::parse(&o.hypothesis)?),
        },
        d: Some(o.direction),
        tau0: Some(o.tau0),
    };
    let curves = cfg
        .alpha_list
        .par_iter()
        .map(|&a| if_curve(kind, &o.theta, a, &grid, &extras))
        .collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_curves_csv(&curves, &mut buf)?;
    let csv = String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?;
    let summaries: Vec<Value> = curves
        .iter()
        .map(|c| {
            let (y, v) = c.sup_norm();
            json!({"alpha": c.alpha, "sup_abs": v, "argmax_y": y, "values": c.values})
        })
        .collect();
    let doc = json!({"command": "diagnose", "options": o, "grid": grid, "curves": summaries});
    Ok((doc, csv, RunOutcome { exit_code: EXIT_OK, messages: Vec::new() }))
}

fn cmd_are(cfg: &RunConfig, thetas: &[SnParams]) -> Result<CommandOutput> {
    let table = are_table_partial(thetas, &cfg.alpha_list, &QuadratureSpec::default())?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let csv = String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?;
    let messages: Vec<String> = table
        .failures
        .iter()
        .map(|(t, a, m)| format!("ARE undefined at {t}, alpha={a}: {m}"))
        .collect();
    let doc = json!({"command": "are", "table": table, "undefined": messages});
    Ok((doc, csv, RunOutcome { exit_code: EXIT_OK, messages }))
}

fn cmd_power(cfg: &RunConfig, o: &PowerOptions) -> Result<CommandOutput> {
    let hyp = HypothesisSpec::parse(&o.hypothesis)?;
    let quad = QuadratureSpec::default();
    if o.d.is_empty() {
        return Err(Error::Config("list of d values is empty".into()));
    }
    let cells: Vec<_> = o
        .d
        .iter()
        .flat_map(|&d| cfg.alpha_list.iter().map(move |&a| (d, a)))
        .collect();
    let reports = cells
        .par_iter()
        .map(|&(d, a)| {
            let dir = o.direction.map(|x| x * d);
            contiguous_power_with(&o.theta, a, &hyp, &dir, o.tau0, NuisanceTreatment::Auto, &quad)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = cfg.alpha_list.len();
    let mut header = vec!["d".to_string()];
    header.extend(cfg.alpha_list.iter().map(|a| format!("{a}")));
    let rows: Vec<Vec<String>> = o
        .d
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut r = vec![fmt_num(*d)];
            r.extend(reports[i * k..(i + 1) * k].iter().map(|p| fmt_num(p.power)));
            r
        })
        .collect();
    let mut messages: Vec<String> = reports.iter().flat_map(|r| r.warnings.iter().cloned()).collect();
    messages.sort();
    messages.dedup();
    let entries: Vec<Value> = cells
        .iter()
        .zip(&reports)
        .map(|((d, a), r)| {
            json!({"d": d, "alpha": a, "power": r.power, "noncentrality": r.noncentrality,
                   "critical_value": r.critical_value, "nuisance": r.nuisance})
        })
        .collect();
    let doc = json!({"command": "power", "options": o, "alphas": cfg.alpha_list, "entries": entries, "warnings": messages});
    Ok((doc, csv_text(&header, &rows)?, RunOutcome { exit_code: EXIT_OK, messages }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("mdpde".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    #[test]
    fn defaults_follow_the_command() {
        let c = parse_args(args("are -o t.csv")).unwrap();
        assert_eq!(c.alpha_list, ARE_ALPHAS);
        assert_eq!(c.format, OutputFormat::Csv);
        let CommandOptions::Are { thetas } = &c.options else { panic!() };
        assert_eq!(thetas.len(), 3);
        let c = parse_args(args("fit -i x.csv -c v -o f.json --alpha 0,0.5")).unwrap();
        assert_eq!(c.alpha_list, vec![0.0, 0.5]);
        assert_eq!(c.format, OutputFormat::Json);
        let c = parse_args(args("simulate -o s.json --profile paper --contaminant -10,1,5")).unwrap();
        let CommandOptions::Simulate(o) = &c.options else { panic!() };
        assert_eq!((o.n, o.reps, o.contaminant.mu), (100, 500, -10.0));
    }

    #[test]
    fn usage_errors() {
        assert!(parse_args(args("fit -o f.json")).is_err());
        assert!(parse_args(args("power -o p.csv --theta 0,1")).is_err());
        let (_, info) = parse_args(args("--help")).unwrap_err();
        assert!(info);
        let mut c = parse_args(args("are -o t.csv")).unwrap();
        c.alpha_list = vec![-0.1];
        assert_eq!(exit_code(&c.validate().unwrap_err()), EXIT_USAGE);
    }

    #[test]
    fn ingest_skips_and_counts() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "id,x").unwrap();
        for i in 0..10 {
            if i % 4 == 1 {
                writeln!(f, "{i},").unwrap();
            } else {
                writeln!(f, "{i},{}", i as f64 * 0.5).unwrap();
            }
        }
        let d = ingest_csv(f.path(), "x").unwrap();
        assert_eq!(d.skipped, 3);
        assert_eq!(d.sample.values()[..3], [0.0, 1.0, 1.5]);
        assert!(d.sample.source.ends_with(":x"));
        assert!(matches!(ingest_csv(f.path(), "y"), Err(Error::Io(_))));
        assert!(matches!(ingest_csv(Path::new("/nonexistent/file.csv"), "x"), Err(Error::Io(_))));
    }

    #[test]
    fn header_only_is_a_data_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b").unwrap();
        let e = ingest_csv(f.path(), "b").unwrap_err();
        assert!(matches!(e, Error::Data(_)));
        assert_eq!(exit_code(&e), EXIT_DATA);
    }
}
