//! The N-agent microscopic rating system.
//!
//! Each period applies four steps to the population: deterministic rescaling
//! of the ratings to the target dispersion, rank-based correlated matchmaking,
//! noisy pairwise outcomes with linear rating updates, and AR(1) skill drift.
//! Empirical moments of the resulting trajectories converge to the closed
//! forms in [`crate::meanfield`] at the usual `N^{-1/2}` rate.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::control::{net_utility, CostParams, PolicySpec};
use crate::error::{Error, Result};
use crate::meanfield::{transition_accuracy, AccuracyState, ControlTriple, ModelParams};
use crate::rng::RngStream;
use crate::stats;

/// Paired skill/rating vectors of an N-agent system.
///
/// `ratings` holds the current scaled ratings; `pre_scaled` holds the
/// post-update ratings awaiting the next period's rescaling.
#[derive(Debug, Clone)]
pub struct Population {
    skills: Vec<f64>,
    ratings: Vec<f64>,
    pre_scaled: Vec<f64>,
    epoch: u64,
}

impl Population {
    /// Builds a population from explicit vectors (all of one even length >= 4).
    pub fn from_parts(skills: Vec<f64>, ratings: Vec<f64>, pre_scaled: Vec<f64>) -> Result<Self> {
        let n = skills.len();
        if n < 4 || n % 2 != 0 {
            return Err(Error::PopulationSize { n });
        }
        if ratings.len() != n || pre_scaled.len() != n {
            return Err(Error::PopulationSize { n: ratings.len().min(pre_scaled.len()) });
        }
        Ok(Self {
            skills,
            ratings,
            pre_scaled,
            epoch: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn skills(&self) -> &[f64] {
        &self.skills
    }

    pub fn ratings(&self) -> &[f64] {
        &self.ratings
    }

    pub fn pre_scaled(&self) -> &[f64] {
        &self.pre_scaled
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }
}

/// A perfect matching between two random halves of the population.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
}

/// Where an adaptive policy reads the accuracy that sets the scale.
///
/// `MeanField` follows the deterministic moment recursion (no oracle access
/// to latent skills); `Empirical` reads the population's own skill/rating
/// correlation, which a real platform could not observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleSource {
    MeanField,
    Empirical,
}

/// How the population starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitCondition {
    /// All ratings zero (the natural cold start). The first, degenerate
    /// period runs unrecorded and reporting starts from the first
    /// non-degenerate period, relabeled t = 0.
    Degenerate,
    /// Exact-moment construction: empirical variances exactly 1 and
    /// empirical correlation exactly `r0`.
    ExactMoments { r0: f64 },
}

/// Full description of one trajectory run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub horizon: usize,
    pub init: InitCondition,
    pub policy: PolicySpec,
    /// Cost parameters for the per-period utility bookkeeping (and for the
    /// matching policy when the policy is the separated optimum).
    pub cost: CostParams,
    pub params: ModelParams,
    pub scale_source: ScaleSource,
}

/// Run descriptor attached to every trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMeta {
    pub config: RunConfig,
    pub stream: RngStream,
}

/// Time series produced by a run: `horizon + 1` entries per sequence, one per
/// recorded period (the entry at index t is the state right after period t's
/// rescaling, together with the control chosen for period t).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub accuracy: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub controls: Vec<ControlTriple>,
    pub utility: Vec<f64>,
    pub meta: RunMeta,
}

// Sub-stream labels: purpose in the low bits, period index above.
const PURPOSE_INIT: u64 = 0;
const PURPOSE_MATCH: u64 = 1;
const PURPOSE_OUTCOME: u64 = 2;
const PURPOSE_SKILL: u64 = 3;

fn period_stream(stream: &RngStream, purpose: u64, period: u64) -> RngStream {
    stream.substream((period << 2) | purpose)
}

fn standard_normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws a population whose empirical moments exactly match the targets:
/// unit variances, zero means, and correlation exactly `r0`.
///
/// Both vectors are centered; the raw rating draw is orthogonalized against
/// the skills and both are rescaled to unit population variance before the
/// correlated combination is formed, so the construction is exact rather than
/// statistical.
pub fn init_population(n: usize, r0: f64, rng: &mut impl Rng) -> Result<Population> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::PopulationSize { n });
    }
    if !r0.is_finite() || !(0.0..1.0).contains(&r0) {
        return Err(Error::InvalidParameter {
            name: "r0",
            value: r0,
            constraint: "0 <= r0 < 1",
        });
    }

    let mut skills = standard_normals(rng, n);
    let mut residual = standard_normals(rng, n);

    let mean_s = stats::mean(&skills);
    skills.iter_mut().for_each(|x| *x -= mean_s);
    let mean_e = stats::mean(&residual);
    residual.iter_mut().for_each(|x| *x -= mean_e);

    let ss: f64 = skills.iter().map(|x| x * x).sum();
    if ss == 0.0 {
        return Err(Error::DegenerateDraw("skill vector has zero norm"));
    }
    let proj = skills.iter().zip(&residual).map(|(s, e)| s * e).sum::<f64>() / ss;
    residual
        .iter_mut()
        .zip(&skills)
        .for_each(|(e, s)| *e -= proj * s);

    let sd_s = stats::pop_std(&skills);
    let sd_e = stats::pop_std(&residual);
    if sd_e == 0.0 {
        return Err(Error::DegenerateDraw("rating residual has zero norm"));
    }
    skills.iter_mut().for_each(|x| *x /= sd_s);
    residual.iter_mut().for_each(|x| *x /= sd_e);

    let load = (1.0 - r0 * r0).sqrt();
    let ratings: Vec<f64> = skills
        .iter()
        .zip(&residual)
        .map(|(s, e)| r0 * s + load * e)
        .collect();

    Ok(Population {
        skills,
        pre_scaled: ratings.clone(),
        ratings,
        epoch: 0,
    })
}

/// AR(1) skill drift with unit stationary variance. A persistence of exactly
/// 1 leaves the skills bit-identical (and consumes no draws).
pub fn skill_step(pop: &mut Population, params: &ModelParams, rng: &mut impl Rng) {
    let lambda = params.lambda();
    if lambda == 1.0 {
        return;
    }
    let shock = (1.0 - lambda * lambda).sqrt();
    for s in &mut pop.skills {
        *s = lambda * *s + shock * rng.sample::<f64, _>(StandardNormal);
    }
}

/// Recenters and rescales the pre-scaled ratings to the target dispersion;
/// returns the applied factor `L = sigma_target / Lambda`.
///
/// A zero target zeroes the ratings (and returns `L = 0`); a zero empirical
/// dispersion with a positive target is an error.
pub fn scale_step(pop: &mut Population, sigma_target: f64) -> Result<f64> {
    if !sigma_target.is_finite() || sigma_target < 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma_target",
            value: sigma_target,
            constraint: "sigma_target >= 0",
        });
    }
    if sigma_target == 0.0 {
        pop.ratings.iter_mut().for_each(|x| *x = 0.0);
        return Ok(0.0);
    }
    let mean = stats::mean(&pop.pre_scaled);
    let dispersion = stats::pop_std(&pop.pre_scaled);
    if dispersion == 0.0 {
        return Err(Error::DegenerateScale { target: sigma_target });
    }
    let factor = sigma_target / dispersion;
    pop.ratings
        .iter_mut()
        .zip(&pop.pre_scaled)
        .for_each(|(x, pre)| *x = factor * (pre - mean));
    Ok(factor)
}

/// Rank-based correlated matchmaking.
///
/// The population is split uniformly at random into two halves. Half one is
/// sorted by the matching score `eta * X + sqrt(1 - eta^2) * v` (with `v`
/// drawn at the current empirical rating variance, so score and rating share
/// a marginal), half two by rating, and ranks are paired. Ties are broken by
/// index, so the pairing is a deterministic function of the draws. With a
/// degenerate rating vector every key is equal and the pairing is uniform.
pub fn match_step(pop: &Population, assortativity: f64, rng: &mut impl Rng) -> Pairing {
    debug_assert!((0.0..1.0).contains(&assortativity));
    let n = pop.len();
    let half = n / 2;

    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);
    let (group_one, group_two) = indices.split_at(half);

    let score_sd = stats::pop_std(&pop.ratings);
    let residual_load = (1.0 - assortativity * assortativity).sqrt() * score_sd;

    let mut scored: Vec<(f64, usize)> = group_one
        .iter()
        .map(|&i| {
            let noise: f64 = rng.sample(StandardNormal);
            (assortativity * pop.ratings[i] + residual_load * noise, i)
        })
        .collect();
    scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut by_rating: Vec<(f64, usize)> =
        group_two.iter().map(|&j| (pop.ratings[j], j)).collect();
    by_rating.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    Pairing {
        pairs: scored
            .iter()
            .zip(&by_rating)
            .map(|(&(_, i), &(_, j))| (i, j))
            .collect(),
    }
}

/// Noisy pairwise outcomes and the linear rating update.
///
/// Each pair observes `S = rho_i - rho_j + omega` and moves the pre-scaled
/// ratings by `+/- K (S - (X_i - X_j))`; the two changes share one computed
/// delta, so each pair's update is exactly antisymmetric.
pub fn update_step(
    pop: &mut Population,
    pairing: &Pairing,
    gain: f64,
    params: &ModelParams,
    rng: &mut impl Rng,
) {
    debug_assert!(gain >= 0.0);
    let noise_sd = params.beta2().sqrt();
    for &(i, j) in &pairing.pairs {
        let outcome =
            pop.skills[i] - pop.skills[j] + noise_sd * rng.sample::<f64, _>(StandardNormal);
        let delta = gain * (outcome - (pop.ratings[i] - pop.ratings[j]));
        pop.pre_scaled[i] = pop.ratings[i] + delta;
        pop.pre_scaled[j] = pop.ratings[j] - delta;
    }
}

/// Population-moment estimates of the current state: the dispersion of the
/// scaled ratings and their correlation with the skills (0 when degenerate).
pub fn empirical_state(pop: &Population) -> AccuracyState {
    let sigma = stats::pop_std(&pop.ratings);
    let r = if sigma == 0.0 {
        0.0
    } else {
        stats::pop_corr(&pop.skills, &pop.ratings)
    };
    AccuracyState::new(r, sigma).expect("empirical moments are always admissible")
}

/// Correlation between skills and the pre-scaled ratings (what the accuracy
/// will be once the period's rescaling is applied, since correlation is
/// scale-free).
fn pre_scale_accuracy(pop: &Population) -> f64 {
    stats::pop_corr(&pop.skills, &pop.pre_scaled)
}

fn validate_policy(policy: &PolicySpec) -> Result<()> {
    match policy {
        PolicySpec::Fixed(control) => {
            if control.scale() <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "scale",
                    value: control.scale(),
                    constraint: "a fixed policy needs a positive scale",
                });
            }
        }
        PolicySpec::AdaptiveScale {
            gain,
            assortativity,
        } => {
            // Reuse the control validation with a placeholder scale.
            ControlTriple::new(*gain, *assortativity, 1.0)?;
        }
        PolicySpec::OptimalSeparated(_) => {}
    }
    Ok(())
}

/// Runs one trajectory: per recorded period, rescale to the policy's target,
/// record the empirical state and the applied control, then match, update,
/// and drift. Sequences have `horizon + 1` entries; the final entry records
/// the post-horizon rescaled state with the control the policy would apply.
pub fn run_trajectory(cfg: &RunConfig, stream: &RngStream) -> Result<Trajectory> {
    validate_policy(&cfg.policy)?;
    if cfg.horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: 0.0,
            constraint: "horizon >= 1",
        });
    }

    let mut init_rng = period_stream(stream, PURPOSE_INIT, 0).rng();
    let (mut pop, mut mean_r, first_period) = match cfg.init {
        InitCondition::ExactMoments { r0 } => {
            (init_population(cfg.n, r0, &mut init_rng)?, r0, 0u64)
        }
        InitCondition::Degenerate => {
            if cfg.n < 4 || cfg.n % 2 != 0 {
                return Err(Error::PopulationSize { n: cfg.n });
            }
            let skills = standard_normals(&mut init_rng, cfg.n);
            let pop = Population {
                skills,
                ratings: vec![0.0; cfg.n],
                pre_scaled: vec![0.0; cfg.n],
                epoch: 0,
            };
            (pop, 0.0, 0u64)
        }
    };

    let mut accuracy = Vec::with_capacity(cfg.horizon + 1);
    let mut dispersion = Vec::with_capacity(cfg.horizon + 1);
    let mut controls = Vec::with_capacity(cfg.horizon + 1);
    let mut utility = Vec::with_capacity(cfg.horizon + 1);

    // The unrecorded bootstrap period for the cold start: scale is pinned at
    // zero, matching is uniform under the degenerate kernel, and the update
    // seeds the first informative ratings.
    let mut period = first_period;
    if cfg.init == InitCondition::Degenerate {
        let chosen = cfg.policy.control_at(0.0, &cfg.params)?;
        let control = ControlTriple::new(chosen.gain(), chosen.assortativity(), 0.0)?;
        scale_step(&mut pop, 0.0)?;
        run_interaction(&mut pop, &control, cfg, stream, period);
        mean_r = transition_accuracy(
            &AccuracyState::new(0.0, 0.0)?,
            &control,
            &cfg.params,
        )?;
        period += 1;
    }

    for t in 0..=cfg.horizon {
        let policy_r = match cfg.scale_source {
            ScaleSource::MeanField => mean_r,
            ScaleSource::Empirical => pre_scale_accuracy(&pop),
        }
        .clamp(0.0, 1.0);

        let control = cfg.policy.control_at(policy_r, &cfg.params)?;
        scale_step(&mut pop, control.scale())?;

        let observed = empirical_state(&pop);
        accuracy.push(observed.r());
        dispersion.push(observed.sigma());
        controls.push(control);
        utility.push(net_utility(policy_r, control.assortativity(), &cfg.cost)?);

        if t == cfg.horizon {
            break;
        }

        run_interaction(&mut pop, &control, cfg, stream, period);
        if cfg.scale_source == ScaleSource::MeanField {
            mean_r = transition_accuracy(
                &AccuracyState::new(mean_r.clamp(0.0, 1.0), control.scale())?,
                &control,
                &cfg.params,
            )?;
        }
        period += 1;
    }

    Ok(Trajectory {
        accuracy,
        dispersion,
        controls,
        utility,
        meta: RunMeta {
            config: *cfg,
            stream: *stream,
        },
    })
}

/// Match, update, and drift with the period's derived sub-streams.
fn run_interaction(
    pop: &mut Population,
    control: &ControlTriple,
    cfg: &RunConfig,
    stream: &RngStream,
    period: u64,
) {
    let pairing = match_step(
        pop,
        control.assortativity(),
        &mut period_stream(stream, PURPOSE_MATCH, period).rng(),
    );
    update_step(
        pop,
        &pairing,
        control.gain(),
        &cfg.params,
        &mut period_stream(stream, PURPOSE_OUTCOME, period).rng(),
    );
    skill_step(
        pop,
        &cfg.params,
        &mut period_stream(stream, PURPOSE_SKILL, period).rng(),
    );
    pop.epoch += 1;
}
