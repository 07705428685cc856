//! Reproducible experiment studies.
//!
//! Four studies cover the toolkit's empirical claims: finite-population
//! convergence to the moment map with its root-N scaling law, the long-run
//! accuracy ceiling as a function of drift and noise (the Red Queen effect),
//! the data collapse of learning curves across matching intensities under
//! signal-matched scaling, and the phase transition of the optimal matching
//! policy. Studies fan out over independent cells with derived sub-streams,
//! so results are deterministic for a given master seed regardless of thread
//! scheduling.

use rayon::prelude::*;

use crate::control::{envelope_value, optimal_assortativity, CostParams, PolicySpec};
use crate::error::{Error, Result};
use crate::meanfield::{fixed_point, transition_accuracy, AccuracyState, ControlTriple, ModelParams};
use crate::rng::RngStream;
use crate::sim::{run_trajectory, InitCondition, RunConfig, ScaleSource, Trajectory};

/// Shared configuration for the studies. Each study reads the grids that
/// apply to it and ignores the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub params: ModelParams,
    /// Population sizes (convergence: the scaling grid; invariance: one run per size).
    pub n_grid: Vec<usize>,
    /// Outcome-noise grid for the equilibrium table.
    pub beta2_grid: Vec<f64>,
    /// Persistence grid for the equilibrium table (1.0 rows use the static limit).
    pub lambda_grid: Vec<f64>,
    /// Matching intensities for the invariance study.
    pub eta_list: Vec<f64>,
    pub horizon: usize,
    pub replicates: usize,
    pub master_seed: u64,
    /// Convergence-study controls (gain, assortativity, scale), fixed per §-4.1-style runs.
    pub fixed_controls: ControlTriple,
    /// Fixed gain applied in both invariance regimes.
    pub invariance_gain: f64,
    /// Exact-moment initial accuracy.
    pub r0: f64,
    /// Smallest population size included in the log-log slope fit (0 = all).
    pub fit_min_n: usize,
    /// Cost parameters for utility bookkeeping inside trajectories.
    pub cost: CostParams,
}

impl StudyConfig {
    fn base(master_seed: u64) -> Self {
        Self {
            params: ModelParams::new(0.99, 1.0).expect("defaults are admissible"),
            n_grid: vec![100, 1000, 10_000],
            beta2_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            lambda_grid: vec![0.95, 0.99, 0.995, 1.0],
            eta_list: vec![0.0, 0.5, 0.9],
            horizon: 200,
            replicates: 8,
            master_seed,
            fixed_controls: ControlTriple::new(0.1, 0.0, 1.0).expect("defaults are admissible"),
            invariance_gain: 1.0,
            r0: 0.0,
            fit_min_n: 0,
            cost: CostParams::new(0.04, 0.95).expect("defaults are admissible"),
        }
    }

    /// Desk-scale convergence study: N in {1e2, 1e3, 1e4}, T = 200, 8 replicates.
    pub fn convergence_desk(master_seed: u64) -> Self {
        Self::base(master_seed)
    }

    /// Full-scale convergence study: N up to 1e5, T = 500, slope fitted on N >= 1e3.
    pub fn convergence_paper(master_seed: u64) -> Self {
        Self {
            n_grid: vec![10, 100, 1000, 10_000, 100_000],
            horizon: 500,
            fit_min_n: 1000,
            ..Self::base(master_seed)
        }
    }

    /// Desk-scale invariance study: N = 1e4, T = 100, unit fixed gain.
    pub fn invariance_desk(master_seed: u64) -> Self {
        Self {
            n_grid: vec![10_000],
            horizon: 100,
            r0: 0.1,
            ..Self::base(master_seed)
        }
    }

    /// Full-scale invariance study: N = 1e5.
    pub fn invariance_paper(master_seed: u64) -> Self {
        Self {
            n_grid: vec![100_000],
            ..Self::invariance_desk(master_seed)
        }
    }

    /// Equilibrium table over the default persistence/noise grids.
    pub fn red_queen_default(master_seed: u64) -> Self {
        Self::base(master_seed)
    }
}

/// Convergence-study output: per-size averaged errors plus the fitted scaling law.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub n_values: Vec<usize>,
    /// Time-averaged L2 error per size, averaged over replicates.
    pub l2_errors: Vec<f64>,
    /// Log-log slope over the fitted sub-range; `None` when degenerate
    /// (some averaged error is exactly zero).
    pub fitted_slope: Option<f64>,
    pub replicates: usize,
    /// Every (n, replicate, error) cell, in deterministic order.
    pub per_replicate: Vec<(usize, usize, f64)>,
    /// Full fit when available.
    pub fit: Option<LineFit>,
}

/// Ordinary least squares on (log x, log y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// One row of the equilibrium-accuracy table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedQueenRow {
    pub lambda: f64,
    pub beta2: f64,
    pub r_infinity: f64,
}

/// The two scaling regimes compared by the invariance study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleRegime {
    /// Rating scale pinned at 1 regardless of accuracy.
    FixedUnit,
    /// Signal-matched scale following the mean-field accuracy recursion.
    Adaptive,
}

impl ScaleRegime {
    pub fn name(&self) -> &'static str {
        match self {
            ScaleRegime::FixedUnit => "fixed",
            ScaleRegime::Adaptive => "adaptive",
        }
    }
}

/// One matched-seed trajectory cell of the invariance study.
#[derive(Debug, Clone)]
pub struct InvarianceCell {
    pub n: usize,
    pub regime: ScaleRegime,
    pub eta: f64,
    pub trajectory: Trajectory,
}

/// Cross-eta spread for one (size, regime) group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadRow {
    pub n: usize,
    pub regime: ScaleRegime,
    /// max over t of the largest pairwise accuracy gap across eta cells.
    pub spread: f64,
}

/// Invariance-study output: all cells plus the per-regime spread statistics.
#[derive(Debug, Clone)]
pub struct InvarianceResult {
    pub cells: Vec<InvarianceCell>,
    pub spreads: Vec<SpreadRow>,
}

/// One row of the phase-transition table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub r: f64,
    pub eta_star: f64,
    pub value: f64,
}

/// Time-averaged L2 error between a trajectory and its reference, summed
/// from t = 1 (the initial entry matches by construction).
pub fn time_averaged_l2_error(accuracy: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(accuracy.len(), reference.len());
    let horizon = accuracy.len() - 1;
    if horizon == 0 {
        return 0.0;
    }
    let sum: f64 = accuracy
        .iter()
        .zip(reference)
        .skip(1)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (sum / horizon as f64).sqrt()
}

/// Iterates of the one-step map under fixed controls, starting from `r0`.
pub fn transition_iterates(
    r0: f64,
    control: &ControlTriple,
    params: &ModelParams,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut r = r0;
    out.push(r);
    for _ in 0..steps {
        let state = AccuracyState::new(r.clamp(0.0, 1.0), control.scale())?;
        r = transition_accuracy(&state, control, params)?;
        out.push(r);
    }
    Ok(out)
}

/// Runs the finite-size convergence study against the exact moment-map
/// reference and fits the log-log scaling law.
pub fn convergence_study(cfg: &StudyConfig) -> Result<ConvergenceResult> {
    if cfg.n_grid.is_empty() || cfg.horizon == 0 || cfg.replicates == 0 {
        return Err(Error::InvalidParameter {
            name: "n_grid/horizon/replicates",
            value: 0.0,
            constraint: "grids non-empty, horizon >= 1, replicates >= 1",
        });
    }
    let reference = transition_iterates(cfg.r0, &cfg.fixed_controls, &cfg.params, cfg.horizon)?;
    let master = RngStream::new(cfg.master_seed);

    let cells: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .enumerate()
        .flat_map(|(i, _)| (0..cfg.replicates).map(move |rep| (i, rep)))
        .collect();

    let errors: Result<Vec<(usize, usize, f64)>> = cells
        .par_iter()
        .map(|&(n_idx, rep)| {
            let n = cfg.n_grid[n_idx];
            let run = RunConfig {
                n,
                horizon: cfg.horizon,
                init: InitCondition::ExactMoments { r0: cfg.r0 },
                policy: PolicySpec::Fixed(cfg.fixed_controls),
                cost: cfg.cost,
                params: cfg.params,
                scale_source: ScaleSource::MeanField,
            };
            let stream = master.substream((n_idx * cfg.replicates + rep) as u64);
            let traj = run_trajectory(&run, &stream)?;
            Ok((n, rep, time_averaged_l2_error(&traj.accuracy, &reference)))
        })
        .collect();
    let per_replicate = errors?;

    let l2_errors: Vec<f64> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let errs: Vec<f64> = per_replicate
                .iter()
                .filter(|(cell_n, _, _)| *cell_n == n)
                .map(|&(_, _, e)| e)
                .collect();
            errs.iter().sum::<f64>() / errs.len() as f64
        })
        .collect();

    let fit_points: (Vec<f64>, Vec<f64>) = cfg
        .n_grid
        .iter()
        .zip(&l2_errors)
        .filter(|(&n, _)| n >= cfg.fit_min_n)
        .map(|(&n, &e)| (n as f64, e))
        .unzip();
    let fit = fit_loglog_slope(&fit_points.0, &fit_points.1).ok();

    Ok(ConvergenceResult {
        n_values: cfg.n_grid.clone(),
        l2_errors,
        fitted_slope: fit.map(|f| f.slope),
        replicates: cfg.replicates,
        per_replicate,
        fit,
    })
}

/// Tabulates the long-run accuracy over the persistence/noise grids.
/// Rows with `lambda = 1` use the static-limit convention `r_infinity = 1`.
pub fn red_queen_study(cfg: &StudyConfig) -> Result<Vec<RedQueenRow>> {
    if cfg.lambda_grid.is_empty() || cfg.beta2_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "lambda_grid/beta2_grid",
            value: 0.0,
            constraint: "grids non-empty",
        });
    }
    let mut rows = Vec::with_capacity(cfg.lambda_grid.len() * cfg.beta2_grid.len());
    for &lambda in &cfg.lambda_grid {
        for &beta2 in &cfg.beta2_grid {
            let r_infinity = if lambda == 1.0 {
                1.0
            } else {
                fixed_point(&ModelParams::new(lambda, beta2)?, 1e-10)?
            };
            rows.push(RedQueenRow {
                lambda,
                beta2,
                r_infinity,
            });
        }
    }
    Ok(rows)
}

/// Runs matched-seed trajectories per (size, regime, eta) and reports the
/// cross-eta spreads. All cells of one size share a single stream, so the
/// initial population, skill shocks, match noise, and outcome noise are
/// common random numbers; differences isolate the controls.
pub fn invariance_study(cfg: &StudyConfig) -> Result<InvarianceResult> {
    if cfg.n_grid.is_empty() || cfg.eta_list.is_empty() || cfg.horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "n_grid/eta_list/horizon",
            value: 0.0,
            constraint: "grids non-empty, horizon >= 1",
        });
    }
    let master = RngStream::new(cfg.master_seed);
    let regimes = [ScaleRegime::FixedUnit, ScaleRegime::Adaptive];

    let specs: Vec<(usize, ScaleRegime, f64)> = cfg
        .n_grid
        .iter()
        .enumerate()
        .flat_map(|(n_idx, _)| {
            regimes.iter().flat_map(move |&regime| {
                cfg.eta_list.iter().map(move |&eta| (n_idx, regime, eta))
            })
        })
        .collect();

    let cells: Result<Vec<InvarianceCell>> = specs
        .par_iter()
        .map(|&(n_idx, regime, eta)| {
            let n = cfg.n_grid[n_idx];
            let policy = match regime {
                ScaleRegime::FixedUnit => PolicySpec::Fixed(ControlTriple::new(
                    cfg.invariance_gain,
                    eta,
                    1.0,
                )?),
                ScaleRegime::Adaptive => PolicySpec::AdaptiveScale {
                    gain: cfg.invariance_gain,
                    assortativity: eta,
                },
            };
            let run = RunConfig {
                n,
                horizon: cfg.horizon,
                init: InitCondition::ExactMoments { r0: cfg.r0 },
                policy,
                cost: cfg.cost,
                params: cfg.params,
                scale_source: ScaleSource::MeanField,
            };
            // Matched seeds: one stream per population size.
            let stream = master.substream(n_idx as u64);
            Ok(InvarianceCell {
                n,
                regime,
                eta,
                trajectory: run_trajectory(&run, &stream)?,
            })
        })
        .collect();
    let cells = cells?;

    let mut spreads = Vec::new();
    for (n_idx, &n) in cfg.n_grid.iter().enumerate() {
        for &regime in &regimes {
            let group: Vec<&InvarianceCell> = cells
                .iter()
                .filter(|c| c.n == cfg.n_grid[n_idx] && c.regime == regime)
                .collect();
            let mut spread = 0.0f64;
            for a in &group {
                for b in &group {
                    for (ra, rb) in a.trajectory.accuracy.iter().zip(&b.trajectory.accuracy) {
                        spread = spread.max((ra - rb).abs());
                    }
                }
            }
            spreads.push(SpreadRow { n, regime, spread });
        }
    }

    Ok(InvarianceResult { cells, spreads })
}

/// Tabulates the optimal matching intensity and its value over an accuracy grid.
pub fn phase_transition_study(kappa_c: f64, r_grid: &[f64]) -> Result<Vec<PhaseRow>> {
    let cost = CostParams::new(kappa_c, 0.5)?;
    r_grid
        .iter()
        .map(|&r| {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter {
                    name: "r",
                    value: r,
                    constraint: "0 <= r <= 1",
                });
            }
            Ok(PhaseRow {
                r,
                eta_star: optimal_assortativity(r, &cost),
                value: envelope_value(r, &cost),
            })
        })
        .collect()
}

/// Ordinary least squares of log y on log x.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::FitDomain);
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::FitDomain);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::FitDomain);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}
