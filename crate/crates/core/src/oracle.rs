//! Brute-force Monte Carlo oracle for the closed-form moment dynamics.
//!
//! Instead of simulating a population, the oracle draws a single
//! representative agent coupled to a "shadow opponent": the opponent's rating
//! is generated directly from the matching kernel and the opponent's skill
//! from the Gaussian conditional of skill given rating. One update step of
//! this coupling realizes the exact mean-field law, so its sampled moments
//! converge to the closed forms in [`crate::meanfield`] at the `n^{-1/2}`
//! rate — an error source independent of the finite-population simulator's.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::meanfield::{AccuracyState, ControlTriple, ModelParams};
use crate::rng::RngStream;
use crate::stats;

/// A Monte Carlo estimate with its standard error.
///
/// Every estimate here is a mean of per-sample terms (products or squared
/// deviations), so `std_error` is the sample standard deviation of those
/// terms over `sqrt(n_samples)`; correlations use the delta-method equivalent
/// `(1 - corr^2) / sqrt(n_samples)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl MomentEstimate {
    /// Absolute deviation from `target` in units of the standard error.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        if self.std_error == 0.0 {
            if (self.value - target).abs() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - target).abs() / self.std_error
        }
    }
}

/// One draw of the coupled variables and their one-step updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowSample {
    pub skill: f64,
    pub rating: f64,
    pub opponent_skill: f64,
    pub opponent_rating: f64,
    /// Post-update, pre-scaling rating.
    pub pre_scaled_next: f64,
    pub skill_next: f64,
}

/// Sampled one-step moments: the accuracy transition, the pre-scaling
/// variance, and its four components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowEstimates {
    pub psi: MomentEstimate,
    pub lambda2: MomentEstimate,
    pub var_rating: MomentEstimate,
    pub var_skill_mismatch: MomentEstimate,
    pub var_outcome_noise: MomentEstimate,
    pub cross_cov: MomentEstimate,
}

/// Sampled moments of the shadow-opponent coupling itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpponentMoments {
    /// Corr(rating, opponent rating); the matching kernel induces the assortativity.
    pub rating_corr: MomentEstimate,
    /// Cov(skill, opponent rating) = eta * r * sigma.
    pub skill_opponent_rating_cov: MomentEstimate,
    /// Cov(skill, opponent skill) = eta * r^2.
    pub skill_cov: MomentEstimate,
    /// Var(opponent skill) = 1.
    pub opponent_skill_var: MomentEstimate,
}

/// Draws one shadow-coupled sample and applies one update step.
pub fn draw_shadow_sample(
    state: &AccuracyState,
    control: &ControlTriple,
    params: &ModelParams,
    rng: &mut impl Rng,
) -> ShadowSample {
    let r = state.r();
    let sigma = state.sigma();
    let eta = control.assortativity();
    let gain = control.gain();
    let skill_load = (1.0 - r * r).sqrt();

    let skill: f64 = rng.sample(StandardNormal);
    let rating = sigma * (r * skill + skill_load * rng.sample::<f64, _>(StandardNormal));
    let opponent_rating = eta * rating
        + (1.0 - eta * eta).sqrt() * sigma * rng.sample::<f64, _>(StandardNormal);
    let opponent_skill = if sigma == 0.0 {
        rng.sample(StandardNormal)
    } else {
        (r / sigma) * opponent_rating + skill_load * rng.sample::<f64, _>(StandardNormal)
    };
    let outcome_noise = params.beta2().sqrt() * rng.sample::<f64, _>(StandardNormal);

    let pre_scaled_next = rating
        + gain * (skill - opponent_skill + outcome_noise - (rating - opponent_rating));
    let skill_next = params.lambda() * skill
        + (1.0 - params.lambda() * params.lambda()).sqrt() * rng.sample::<f64, _>(StandardNormal);

    ShadowSample {
        skill,
        rating,
        opponent_skill,
        opponent_rating,
        pre_scaled_next,
        skill_next,
    }
}

fn variance_estimate(xs: &[f64]) -> MomentEstimate {
    let n = xs.len();
    let m = stats::mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let value = stats::mean(&sq);
    let spread = stats::pop_var(&sq);
    MomentEstimate {
        value,
        std_error: (spread / n as f64).sqrt(),
        n_samples: n,
    }
}

fn covariance_estimate(xs: &[f64], ys: &[f64], scale: f64) -> MomentEstimate {
    let n = xs.len();
    let mx = stats::mean(xs);
    let my = stats::mean(ys);
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| scale * (x - mx) * (y - my))
        .collect();
    MomentEstimate {
        value: stats::mean(&prods),
        std_error: (stats::pop_var(&prods) / n as f64).sqrt(),
        n_samples: n,
    }
}

fn correlation_estimate(xs: &[f64], ys: &[f64]) -> MomentEstimate {
    let n = xs.len();
    let value = stats::pop_corr(xs, ys);
    MomentEstimate {
        value,
        std_error: (1.0 - value * value) / (n as f64).sqrt(),
        n_samples: n,
    }
}

fn validate_samples(n_samples: usize) -> Result<()> {
    if n_samples < 10_000 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            value: n_samples as f64,
            constraint: "n_samples >= 10_000",
        });
    }
    Ok(())
}

/// Samples the one-step mean-field law and estimates every moment the closed
/// forms predict: the accuracy transition, the pre-scaling variance, and its
/// four components.
pub fn sample_shadow_step(
    state: &AccuracyState,
    control: &ControlTriple,
    params: &ModelParams,
    n_samples: usize,
    stream: &RngStream,
) -> Result<ShadowEstimates> {
    validate_samples(n_samples)?;
    if state.sigma() <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: state.sigma(),
            constraint: "sigma > 0",
        });
    }
    let mut rng = stream.rng();
    let gain = control.gain();

    let mut skill_next = Vec::with_capacity(n_samples);
    let mut pre_next = Vec::with_capacity(n_samples);
    let mut retained = Vec::with_capacity(n_samples);
    let mut mismatch = Vec::with_capacity(n_samples);
    let mut noise_term = Vec::with_capacity(n_samples);

    for _ in 0..n_samples {
        let s = draw_shadow_sample(state, control, params, &mut rng);
        skill_next.push(s.skill_next);
        pre_next.push(s.pre_scaled_next);
        retained.push((1.0 - gain) * s.rating + gain * s.opponent_rating);
        mismatch.push(gain * (s.skill - s.opponent_skill));
        // The observation-noise contribution is the remainder of the affine update.
        noise_term.push(
            s.pre_scaled_next
                - ((1.0 - gain) * s.rating + gain * s.opponent_rating)
                - gain * (s.skill - s.opponent_skill),
        );
    }

    Ok(ShadowEstimates {
        psi: correlation_estimate(&skill_next, &pre_next),
        lambda2: variance_estimate(&pre_next),
        var_rating: variance_estimate(&retained),
        var_skill_mismatch: variance_estimate(&mismatch),
        var_outcome_noise: variance_estimate(&noise_term),
        cross_cov: covariance_estimate(&retained, &mismatch, 2.0),
    })
}

/// Samples only the shadow-opponent coupling and reports its moments against
/// the kernel's predictions.
pub fn opponent_moments(
    state: &AccuracyState,
    assortativity: f64,
    n_samples: usize,
    stream: &RngStream,
) -> Result<OpponentMoments> {
    validate_samples(n_samples)?;
    if state.sigma() <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: state.sigma(),
            constraint: "sigma > 0",
        });
    }
    let control = ControlTriple::new(0.0, assortativity, state.sigma())?;
    let params = ModelParams::new(1.0, 1.0).expect("constants are admissible");
    let mut rng = stream.rng();

    let mut skill = Vec::with_capacity(n_samples);
    let mut rating = Vec::with_capacity(n_samples);
    let mut op_skill = Vec::with_capacity(n_samples);
    let mut op_rating = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let s = draw_shadow_sample(state, &control, &params, &mut rng);
        skill.push(s.skill);
        rating.push(s.rating);
        op_skill.push(s.opponent_skill);
        op_rating.push(s.opponent_rating);
    }

    Ok(OpponentMoments {
        rating_corr: correlation_estimate(&rating, &op_rating),
        skill_opponent_rating_cov: covariance_estimate(&skill, &op_rating, 1.0),
        skill_cov: covariance_estimate(&skill, &op_skill, 1.0),
        opponent_skill_var: variance_estimate(&op_skill),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{pre_scaling_variance, transition_accuracy};
    use crate::stats::skewness;

    fn params(lambda: f64, beta2: f64) -> ModelParams {
        ModelParams::new(lambda, beta2).unwrap()
    }

    fn state(r: f64, sigma: f64) -> AccuracyState {
        AccuracyState::new(r, sigma).unwrap()
    }

    fn control(gain: f64, eta: f64, scale: f64) -> ControlTriple {
        ControlTriple::new(gain, eta, scale).unwrap()
    }

    #[test]
    fn sample_count_is_validated() {
        let p = params(0.99, 1.0);
        let got = sample_shadow_step(&state(0.4, 1.0), &control(0.1, 0.0, 1.0), &p, 100,
            &RngStream::new(1));
        assert!(got.is_err());
    }

    #[test]
    fn zero_gain_reproduces_pure_decay() {
        let p = params(0.99, 1.0);
        let st = state(0.5, 0.8);
        let est = sample_shadow_step(&st, &control(0.0, 0.4, 0.8), &p, 200_000,
            &RngStream::new(2)).unwrap();
        assert!(est.lambda2.sigmas_from(0.64) < 3.0, "Var should be sigma^2");
        assert!(est.psi.sigmas_from(0.99 * 0.5) < 3.0, "accuracy should decay by lambda");
        assert_eq!(est.var_skill_mismatch.value, 0.0);
        assert_eq!(est.var_outcome_noise.value, 0.0);
    }

    #[test]
    fn closed_forms_match_the_oracle_at_the_reference_point() {
        let p = params(0.99, 1.0);
        let st = state(0.4, 1.0);
        let ct = control(0.1, 0.5, 1.0);
        let est = sample_shadow_step(&st, &ct, &p, 1_000_000, &RngStream::new(3)).unwrap();

        let predicted_psi = transition_accuracy(&st, &ct, &p).unwrap();
        let predicted_var = pre_scaling_variance(&st, &ct, &p).unwrap();

        assert!(est.psi.sigmas_from(predicted_psi) < 3.0);
        assert!(est.lambda2.sigmas_from(predicted_var.total) < 3.0);
        assert!(est.var_rating.sigmas_from(predicted_var.var_rating) < 3.0);
        assert!(est.var_skill_mismatch.sigmas_from(predicted_var.var_skill_mismatch) < 3.0);
        assert!(est.var_outcome_noise.sigmas_from(predicted_var.var_outcome_noise) < 3.0);
        assert!(est.cross_cov.sigmas_from(predicted_var.cross_cov) < 3.0);
    }

    #[test]
    fn sampled_transition_is_assortativity_free_at_matched_scale() {
        let p = params(0.99, 1.0);
        let st = state(0.5, 0.5);
        let a = sample_shadow_step(&st, &control(0.3, 0.0, 0.5), &p, 1_000_000,
            &RngStream::new(4)).unwrap();
        let b = sample_shadow_step(&st, &control(0.3, 0.9, 0.5), &p, 1_000_000,
            &RngStream::new(5)).unwrap();
        let combined = (a.psi.std_error.powi(2) + b.psi.std_error.powi(2)).sqrt();
        assert!(
            (a.psi.value - b.psi.value).abs() < 3.0 * combined,
            "psi at eta=0 ({}) and eta=0.9 ({}) should agree",
            a.psi.value,
            b.psi.value
        );
    }

    #[test]
    fn updated_rating_is_gaussian() {
        // The update is affine in jointly Gaussian draws, so sample skewness
        // shrinks like n^{-1/2}.
        let p = params(0.99, 1.0);
        let st = state(0.4, 1.0);
        let ct = control(0.2, 0.3, 1.0);
        let n = 100_000;
        let mut rng = RngStream::new(6).rng();
        let pre: Vec<f64> = (0..n)
            .map(|_| draw_shadow_sample(&st, &ct, &p, &mut rng).pre_scaled_next)
            .collect();
        let band = 5.0 * (6.0 / n as f64).sqrt();
        assert!(skewness(&pre).abs() < band, "skewness {}", skewness(&pre));
    }

    #[test]
    fn independent_opponent_has_no_cross_moments() {
        let st = state(0.5, 0.8);
        let om = opponent_moments(&st, 0.0, 200_000, &RngStream::new(7)).unwrap();
        assert!(om.rating_corr.sigmas_from(0.0) < 3.0);
        assert!(om.skill_opponent_rating_cov.sigmas_from(0.0) < 3.0);
        assert!(om.skill_cov.sigmas_from(0.0) < 3.0);
        assert!(om.opponent_skill_var.sigmas_from(1.0) < 3.0);
    }

    #[test]
    fn opponent_moments_match_the_kernel() {
        let om = opponent_moments(&state(0.6, 0.6), 0.5, 1_000_000, &RngStream::new(8)).unwrap();
        assert!(om.skill_cov.sigmas_from(0.18) < 3.0, "Cov(skill, opponent skill)");
        assert!(om.skill_opponent_rating_cov.sigmas_from(0.5 * 0.6 * 0.6) < 3.0);
        assert!(om.rating_corr.sigmas_from(0.5) < 3.0);

        let tight = opponent_moments(&state(0.9, 0.9), 0.99, 200_000, &RngStream::new(9)).unwrap();
        assert!(tight.rating_corr.sigmas_from(0.99) < 3.0);
    }
}
