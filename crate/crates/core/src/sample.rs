use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered collection of finite observations with provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    pub label: String,
    pub source: String,
}

impl Sample {
    pub fn new(values: Vec<f64>, label: impl Into<String>, source: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("sample is empty".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("observation {i} is not finite ({v})")));
        }
        Ok(Self {
            values,
            label: label.into(),
            source: source.into(),
        })
    }

    /// Unlabelled sample, mostly for tests and examples.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, "", "memory")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Central moment of order `k` (divisor n).
    pub fn central_moment(&self, k: i32) -> f64 {
        let m = self.mean();
        self.values.iter().map(|x| (x - m).powi(k)).sum::<f64>() / self.len() as f64
    }

    /// Standard deviation with divisor n.
    pub fn sd(&self) -> f64 {
        self.central_moment(2).sqrt()
    }

    /// Moment skewness `m3 / m2^{3/2}`; zero for constant data.
    pub fn skewness(&self) -> f64 {
        let m2 = self.central_moment(2);
        if m2 == 0.0 {
            0.0
        } else {
            self.central_moment(3) / m2.powf(1.5)
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Linear-interpolation (type 7) quantile, `p ∈ [0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        quantile_sorted(&v, p)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Fails on constant samples, which have no finite scale estimate.
    pub fn require_spread(&self) -> Result<()> {
        let first = self.values[0];
        if self.values.iter().all(|&v| v == first) {
            return Err(Error::Data(format!("all {} observations equal {first}", self.len())));
        }
        Ok(())
    }

    /// Affine image `c·x + b`, keeping the label.
    pub fn affine(&self, c: f64, b: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|x| c * x + b).collect(),
            self.label.clone(),
            format!("{} (affine {c}x+{b})", self.source),
        )
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Sample::from_values(vec![]).is_err());
        assert!(Sample::from_values(vec![1.0, f64::NAN]).is_err());
        assert!(Sample::from_values(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn summary_statistics() {
        let s = Sample::from_values(vec![1.0, 2.0, 3.0, 10.0]).unwrap();
        assert_eq!(s.mean(), 4.0);
        assert_eq!(s.central_moment(2), 12.5);
        assert!(s.skewness() > 0.0);
        assert_eq!((s.min(), s.max()), (1.0, 10.0));
    }

    #[test]
    fn type7_quantiles() {
        let s = Sample::from_values(vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.quantile(0.0), 1.0);
        assert_eq!(s.quantile(1.0), 4.0);
        assert_eq!(s.median(), 2.5);
        assert_eq!(s.quantile(0.25), 1.75);
    }

    #[test]
    fn constant_sample_has_no_spread() {
        let s = Sample::from_values(vec![2.0; 5]).unwrap();
        assert!(matches!(s.require_spread(), Err(Error::Data(_))));
        assert_eq!(s.skewness(), 0.0);
    }
}
