use thiserror::Error;

/// Errors produced by the rating-dynamics toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor or operation received a value outside its admissible range.
    #[error("parameter `{name}` = {value} violates constraint: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Population sizes must be even (rank matching pairs two equal halves) and at least 4.
    #[error("population size {n} must be an even number >= 4")]
    PopulationSize { n: usize },

    /// A rating vector with zero dispersion cannot be rescaled to a positive target.
    #[error("cannot rescale a degenerate (zero-variance) rating vector to dispersion {target}")]
    DegenerateScale { target: f64 },

    /// The one-step accuracy map is a 0/0 form when both the scale and the gain vanish.
    #[error("accuracy transition undefined at scale = 0 with gain = 0 (no variance source)")]
    DegenerateTransition,

    /// The state dispersion and the control scale must agree within a period.
    #[error("state dispersion {state_sigma} does not match the control scale {control_scale}")]
    ScaleMismatch { state_sigma: f64, control_scale: f64 },

    /// Random draws produced a numerically degenerate configuration (probability zero).
    #[error("degenerate random configuration: {0}")]
    DegenerateDraw(&'static str),

    /// An iterative solve failed to reach the requested tolerance.
    #[error("solver residual {residual} exceeds tolerance {tol}")]
    ConvergenceFailure { residual: f64, tol: f64 },

    /// Log-log regression needs at least three strictly positive points.
    #[error("log-log fit needs >= 3 points with strictly positive coordinates")]
    FitDomain,
}

pub type Result<T> = std::result::Result<T, Error>;
