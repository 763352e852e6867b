use thiserror::Error;

/// Runtime failures of the solver and the diagnostics built on top of it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("solution blew up at t = {t} (sup norm {sup:e} above ceiling)")]
    Blowup { t: f64, sup: f64 },
    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("field is degenerate: sup norm {sup:e} below tolerance {tol:e}")]
    DegenerateField { sup: f64, tol: f64 },
    #[error("trajectories are not comparable: {0}")]
    MismatchedTrajectories(String),
    #[error("field is spatially flat{}; maximum location undefined", at_time(*.t))]
    FlatField { t: Option<f64> },
    #[error("phase unwrap failed between t = {t0} and t = {t1} (jump {jump})")]
    UnwrapFailure { t0: f64, t1: f64, jump: f64 },
    #[error("reduced vector field is singular at t = {t}: |phi_xx| = {phixx:e} < {guard:e}")]
    NearSingular { t: f64, phixx: f64, guard: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("tangent frame degenerated at t = {t}")]
    Degenerate { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn at_time(t: Option<f64>) -> String {
    t.map_or(String::new(), |t| format!(" at t = {t}"))
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
