//! Closed-form mean-field moment dynamics.
//!
//! The population state of the rating system reduces, in the Gaussian regime,
//! to two scalars: the accuracy `r` (correlation between latent skill and
//! displayed rating) and the rating dispersion `sigma`. This module carries
//! the exact one-step transition of `r` under a control triple
//! `(gain, assortativity, scale)`, the decomposition of the pre-scaling
//! rating variance into its physical sources, the optimal filtering controls
//! with their invariant one-dimensional map, the fractional-linear envelope
//! machinery used to prove optimality of signal-matched scaling, and the
//! long-run fixed point of the optimally-controlled recursion.
//!
//! All functions are pure; every closed form here is cross-checked elsewhere
//! against an independent Monte Carlo oracle ([`crate::oracle`]) and against
//! the finite-population simulator ([`crate::sim`]).

use crate::error::{Error, Result};

/// Environment constants of the rating dynamics.
///
/// `lambda` is the AR(1) persistence of latent skill (1 = static skills) and
/// `beta2` the variance of the pairwise outcome noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    beta2: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, beta2: f64) -> Result<Self> {
        if !lambda.is_finite() || !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                constraint: "0 <= lambda <= 1",
            });
        }
        if !beta2.is_finite() || beta2 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta2",
                value: beta2,
                constraint: "beta2 > 0",
            });
        }
        Ok(Self { lambda, beta2 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }
}

/// Per-period platform controls: update gain `K`, matching assortativity
/// `eta`, and the target rating dispersion `sigma`.
///
/// A zero gain is admissible as the degenerate no-update control (useful for
/// decay-only analysis); zero scale is admissible only as the degenerate
/// initial condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTriple {
    gain: f64,
    assortativity: f64,
    scale: f64,
}

impl ControlTriple {
    pub fn new(gain: f64, assortativity: f64, scale: f64) -> Result<Self> {
        if !gain.is_finite() || gain < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gain",
                value: gain,
                constraint: "gain >= 0",
            });
        }
        if !assortativity.is_finite() || !(0.0..1.0).contains(&assortativity) {
            return Err(Error::InvalidParameter {
                name: "assortativity",
                value: assortativity,
                constraint: "0 <= assortativity < 1",
            });
        }
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: scale,
                constraint: "scale >= 0",
            });
        }
        Ok(Self {
            gain,
            assortativity,
            scale,
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn assortativity(&self) -> f64 {
        self.assortativity
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// The reduced state: accuracy `r` and current rating dispersion `sigma`.
///
/// `r` is a correlation, so it lives in `[-1, 1]`; the mean-field recursions
/// themselves evolve inside `[0, 1]`, but finite-population estimates can dip
/// below zero and are representable. A dispersion of zero forces `r = 0` by
/// convention (the correlation is undefined against a degenerate marginal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyState {
    r: f64,
    sigma: f64,
}

impl AccuracyState {
    pub fn new(r: f64, sigma: f64) -> Result<Self> {
        if !r.is_finite() || !(-1.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                constraint: "-1 <= r <= 1",
            });
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                constraint: "sigma >= 0",
            });
        }
        if sigma == 0.0 && r != 0.0 {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                constraint: "r = 0 when sigma = 0",
            });
        }
        Ok(Self { r, sigma })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Decomposition of the pre-scaling rating variance into its sources.
///
/// `total` is the normalizer inside the accuracy transition; the components
/// satisfy `total = var_rating + var_skill_mismatch + var_outcome_noise + cross_cov`
/// exactly, and `total > 0` whenever the current dispersion is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceBreakdown {
    /// Variance retained from the current ratings of the matched pair.
    pub var_rating: f64,
    /// Variance injected by the latent skill difference of the pair.
    pub var_skill_mismatch: f64,
    /// Variance injected by the outcome noise.
    pub var_outcome_noise: f64,
    /// Twice the covariance between the retained-rating and skill-difference terms.
    pub cross_cov: f64,
    /// The pre-scaling variance itself.
    pub total: f64,
}

/// Coefficients of the fractional-linear envelope `G(y) = (a + b y) / (c + d y)`
/// in `y = (sigma - r)^2`, the squared mismatch between scale and accuracy.
///
/// For admissible inputs `b < 0` and `d < 0`, and `r^2 c - a = (1 - r^2)^2`
/// exactly, which makes `G` strictly decreasing: any departure of the scale
/// from the accuracy strictly lowers the best achievable one-step accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Best gain at a fixed scale, with the value of the squared-accuracy envelope there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEnvelope {
    /// The gain maximizing squared one-step accuracy at the given scale.
    pub gain: f64,
    /// The maximum of `N^2 / Lambda^2` over all gains at that scale.
    pub value: f64,
}

fn consistent_scale(state: &AccuracyState, control: &ControlTriple) -> Result<f64> {
    if state.sigma() != control.scale() {
        return Err(Error::ScaleMismatch {
            state_sigma: state.sigma(),
            control_scale: control.scale(),
        });
    }
    Ok(control.scale())
}

/// Quadratic coefficients `(u, v, w)` of the pre-scaling variance as a
/// polynomial in the gain: `Lambda^2 = u + v K + w K^2`.
pub fn variance_quadratic(sigma: f64, r: f64, eta: f64, params: &ModelParams) -> (f64, f64, f64) {
    let u = sigma * sigma;
    let v = 2.0 * (1.0 - eta) * sigma * (r - sigma);
    let w = params.beta2() + 2.0 * (1.0 - r * r) + 2.0 * (1.0 - eta) * (sigma - r) * (sigma - r);
    (u, v, w)
}

/// Affine coefficients `(p, q)` of the covariance numerator in the gain:
/// `N = p + q K`.
pub fn numerator_affine(sigma: f64, r: f64, eta: f64) -> (f64, f64) {
    let p = r * sigma;
    let q = 1.0 - eta * r * r - (1.0 - eta) * r * sigma;
    (p, q)
}

/// Pre-scaling variance of the updated ratings, decomposed by source.
///
/// The state dispersion must equal the control scale (both describe the
/// current period's dispersion).
pub fn pre_scaling_variance(
    state: &AccuracyState,
    control: &ControlTriple,
    params: &ModelParams,
) -> Result<VarianceBreakdown> {
    let sigma = consistent_scale(state, control)?;
    let r = state.r();
    let k = control.gain();
    let eta = control.assortativity();

    let var_rating = sigma * sigma * ((1.0 - k) * (1.0 - k) + k * k + 2.0 * k * (1.0 - k) * eta);
    let var_skill_mismatch = 2.0 * k * k * (1.0 - eta * r * r);
    let var_outcome_noise = k * k * params.beta2();
    let cross_cov = 2.0 * k * (1.0 - eta) * r * sigma * (1.0 - 2.0 * k);
    let total = var_rating + var_skill_mismatch + var_outcome_noise + cross_cov;
    Ok(VarianceBreakdown {
        var_rating,
        var_skill_mismatch,
        var_outcome_noise,
        cross_cov,
        total,
    })
}

/// Covariance between current skill and the updated (pre-scaling) rating.
pub fn covariance_numerator(state: &AccuracyState, control: &ControlTriple) -> Result<f64> {
    let sigma = consistent_scale(state, control)?;
    let r = state.r();
    let k = control.gain();
    let eta = control.assortativity();
    Ok(r * sigma * (1.0 - k * (1.0 - eta)) + k * (1.0 - eta * r * r))
}

/// One-step accuracy transition: the next-period correlation between skill
/// and rating under the given control.
///
/// Defined for a zero scale through the continuous limit (the variance is
/// then injected entirely by the update), except for the genuine 0/0 case of
/// zero scale with zero gain, which errors.
pub fn transition_accuracy(
    state: &AccuracyState,
    control: &ControlTriple,
    params: &ModelParams,
) -> Result<f64> {
    let numerator = covariance_numerator(state, control)?;
    let breakdown = pre_scaling_variance(state, control, params)?;
    if breakdown.total <= 0.0 {
        return Err(Error::DegenerateTransition);
    }
    Ok(params.lambda() * numerator / breakdown.total.sqrt())
}

/// The one-dimensional accuracy recursion under optimal gain and
/// signal-matched scaling. Strictly increasing on `[0, 1]`, with value
/// `lambda` at `r = 1`.
pub fn invariant_map(r: f64, params: &ModelParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&r));
    let one_minus = 1.0 - r * r;
    params.lambda() * (r * r + one_minus * one_minus / (params.beta2() + 2.0 * one_minus)).sqrt()
}

/// The gain maximizing next-period accuracy at signal-matched scale.
pub fn optimal_gain(r: f64, params: &ModelParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&r));
    let one_minus = 1.0 - r * r;
    one_minus / (2.0 * one_minus + params.beta2())
}

/// Signal-matched scaling: the optimal dispersion equals the current accuracy.
pub fn optimal_scale(r: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&r));
    r
}

/// Best gain at a fixed scale and the envelope value reached there.
///
/// The envelope denominator `4uw - v^2 = 4 sigma^2 (beta2 + 2(1-r^2) +
/// (1-eta^2)(sigma-r)^2)` is strictly positive for `sigma > 0`, so both
/// closed forms are well-defined.
pub fn gain_envelope(sigma: f64, r: f64, eta: f64, params: &ModelParams) -> GainEnvelope {
    debug_assert!(sigma > 0.0 && (0.0..1.0).contains(&r) && r > 0.0 && (0.0..1.0).contains(&eta));
    let (p, q) = numerator_affine(sigma, r, eta);
    let (u, v, w) = variance_quadratic(sigma, r, eta, params);
    let gain = (-p * v + 2.0 * q * u) / (2.0 * p * w - q * v);
    let value = 4.0 * (p * p * w - p * q * v + q * q * u) / (4.0 * u * w - v * v);
    GainEnvelope { gain, value }
}

/// Coefficients of the envelope as a fractional-linear function of the
/// squared scale mismatch `y = (sigma - r)^2`.
pub fn envelope_coefficients(r: f64, eta: f64, params: &ModelParams) -> EnvelopeCoefficients {
    debug_assert!((0.0..1.0).contains(&r) && r > 0.0 && (0.0..1.0).contains(&eta));
    let b2 = params.beta2();
    let one_minus_eta2 = 1.0 - eta * eta;
    EnvelopeCoefficients {
        a: r.powi(4) - r * r * b2 - 1.0,
        b: -one_minus_eta2 * r * r,
        c: 2.0 * r * r - b2 - 2.0,
        d: -one_minus_eta2,
    }
}

/// Quadratic whose root in `(0, lambda^2)` is the squared fixed point of the
/// invariant map. Positive leading form: `(2 - lambda^2) x^2 - ((1 -
/// lambda^2)(beta2 + 2) + 2 lambda^2) x + lambda^2`.
fn fixed_point_quadratic(params: &ModelParams) -> (f64, f64, f64) {
    let l2 = params.lambda() * params.lambda();
    let a = 2.0 - l2;
    let b = -((1.0 - l2) * (params.beta2() + 2.0) + 2.0 * l2);
    let c = l2;
    (a, b, c)
}

/// Long-run accuracy under the optimally-controlled recursion.
///
/// Solved in closed form from the quadratic fixed-point condition (the other
/// root exceeds 1), polished by Newton steps, and verified against the map to
/// the requested tolerance. `lambda` must lie strictly inside `(0, 1)`; the
/// static limit `lambda = 1` (fixed point 1) is the caller's convention.
pub fn fixed_point(params: &ModelParams, tol: f64) -> Result<f64> {
    let lambda = params.lambda();
    if lambda <= 0.0 || lambda >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            constraint: "0 < lambda < 1 (lambda = 1 is the static limit, handled by callers)",
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            constraint: "tol > 0",
        });
    }

    let (a, b, c) = fixed_point_quadratic(params);
    let disc = b * b - 4.0 * a * c;
    // The smaller root, computed in the cancellation-free branch.
    let mut x = 2.0 * c / (-b + disc.sqrt());
    for _ in 0..3 {
        let h = a * x * x + b * x + c;
        let dh = 2.0 * a * x + b;
        if dh != 0.0 {
            x -= h / dh;
        }
    }
    let root = x.clamp(0.0, lambda * lambda).sqrt();

    let residual = (invariant_map(root, params) - root).abs();
    if residual > tol {
        return Err(Error::ConvergenceFailure { residual, tol });
    }
    Ok(root)
}

/// Iterates of the invariant map from `r0`: returns `steps + 1` values
/// starting with `r0` itself. The sequence is monotone and converges to the
/// fixed point.
pub fn iterate_invariant_map(r0: f64, steps: usize, params: &ModelParams) -> Vec<f64> {
    debug_assert!((0.0..1.0).contains(&r0) || r0 == 0.0);
    let mut out = Vec::with_capacity(steps + 1);
    let mut r = r0;
    out.push(r);
    for _ in 0..steps {
        r = invariant_map(r, params);
        out.push(r);
    }
    out
}
