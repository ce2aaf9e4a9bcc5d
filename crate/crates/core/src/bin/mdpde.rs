fn main() {
    std::process::exit(sn_mdpde::cli::main_with_args(std::env::args_os()));
}
