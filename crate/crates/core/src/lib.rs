pub mod asymptotics;
pub mod cli;
pub mod dpd;
pub mod error;
pub mod hypothesis;
pub mod estimation;
pub mod format;
pub mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod robustness;
pub mod sample;
pub mod skew_normal;
pub mod special;
