use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the numerical pipelines.
///
/// Variants carry enough context to diagnose the failing stage without a
/// backtrace; the command line maps them to exit code 3 (numerical failure)
/// except [`Error::InvalidParams`], which is a configuration error.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside the supported parameter range.
    InvalidParams(&'static str),
    /// Both ends of the ground-state bracket fall on the same side of the dichotomy.
    NoSignChange { lo: f64, hi: f64 },
    /// The solver stopped short of the requested accuracy.
    ToleranceNotMet { achieved: f64, requested: f64 },
    WindowTooNarrow { nodes: usize },
    GridTooCoarse { h: f64 },
    /// Sturm count of negative eigenvalues in the radial sector is not one.
    MultipleNegative { count: usize },
    NegativeQuotient { quotient: f64 },
    QuadratureDivergence { boundary_ratio: f64 },
    SeparationFloor { separation: f64 },
    CollisionReached { t: f64 },
    NoDichotomy,
    OutsideTube { residual: f64 },
    IllConditioned { condition: f64 },
    NewtonDiverged { node: usize },
    CflViolation { ratio: f64 },
    ExitedTube { t: f64, norm: f64 },
    StepSizeUnderflow { t: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::NoSignChange { lo, hi } => {
                write!(f, "shooting bracket [{lo}, {hi}] does not straddle the ground state")
            }
            Error::ToleranceNotMet { achieved, requested } => {
                write!(f, "tolerance not met: achieved {achieved:e}, requested {requested:e}")
            }
            Error::WindowTooNarrow { nodes } => {
                write!(f, "fit window holds {nodes} nodes, at least 8 required")
            }
            Error::GridTooCoarse { h } => write!(f, "grid spacing {h} exceeds 0.02"),
            Error::MultipleNegative { count } => {
                write!(f, "expected exactly one negative eigenvalue, found {count}")
            }
            Error::NegativeQuotient { quotient } => {
                write!(f, "projected Rayleigh quotient is negative: {quotient:e}")
            }
            Error::QuadratureDivergence { boundary_ratio } => write!(
                f,
                "integrand not negligible at the quadrature box boundary (ratio {boundary_ratio:e})"
            ),
            Error::SeparationFloor { separation } => {
                write!(f, "soliton separation {separation} at or below the floor")
            }
            Error::CollisionReached { t } => write!(f, "collision reached at t = {t}"),
            Error::NoDichotomy => write!(f, "bracket endpoints exit on the same side"),
            Error::OutsideTube { residual } => {
                write!(f, "modulation Newton stalled with residual {residual:e}")
            }
            Error::IllConditioned { condition } => {
                write!(f, "Gram matrix ill-conditioned (condition number {condition:e})")
            }
            Error::NewtonDiverged { node } => write!(f, "implicit solve diverged at node {node}"),
            Error::CflViolation { ratio } => write!(f, "dt/h = {ratio} exceeds 0.9"),
            Error::ExitedTube { t, norm } => {
                write!(f, "solution left the two-soliton tube at t = {t} (|eps|_E = {norm:e})")
            }
            Error::StepSizeUnderflow { t } => write!(f, "integrator step size underflow at t = {t}"),
        }
    }
}

impl core::error::Error for Error {}
