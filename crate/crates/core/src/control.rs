//! The platform's decision layer.
//!
//! Matching quality yields flow utility `eta * r^2` while stricter sorting
//! incurs a queueing barrier cost that diverges as `eta -> 1`. Because
//! signal-matched scaling makes learning independent of assortativity, the
//! optimal policy separates: the gain and scale are chosen greedily to
//! maximize next-period accuracy, and the assortativity solves a static
//! trade-off whose solution switches on continuously at the critical accuracy
//! `sqrt(kappa_c)`.

use crate::error::{Error, Result};
use crate::meanfield::{
    invariant_map, optimal_gain, optimal_scale, AccuracyState, ControlTriple, ModelParams,
};

/// Cost-side constants: the barrier coefficient and the welfare discount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    kappa_c: f64,
    discount: f64,
}

impl CostParams {
    pub fn new(kappa_c: f64, discount: f64) -> Result<Self> {
        if !kappa_c.is_finite() || kappa_c <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "kappa_c",
                value: kappa_c,
                constraint: "kappa_c > 0",
            });
        }
        if !discount.is_finite() || discount <= 0.0 || discount >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "discount",
                value: discount,
                constraint: "0 < discount < 1",
            });
        }
        Ok(Self { kappa_c, discount })
    }

    pub fn kappa_c(&self) -> f64 {
        self.kappa_c
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }
}

/// How a trajectory chooses its per-period controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    /// The same control triple every period.
    Fixed(ControlTriple),
    /// Fixed gain and assortativity with signal-matched scale `sigma_t = r_t`.
    AdaptiveScale { gain: f64, assortativity: f64 },
    /// Greedy optimal filtering plus myopic optimal matching.
    OptimalSeparated(CostParams),
}

impl PolicySpec {
    /// The control triple this policy applies at accuracy `r`.
    pub fn control_at(&self, r: f64, params: &ModelParams) -> Result<ControlTriple> {
        match self {
            PolicySpec::Fixed(control) => Ok(*control),
            PolicySpec::AdaptiveScale {
                gain,
                assortativity,
            } => ControlTriple::new(*gain, *assortativity, r),
            PolicySpec::OptimalSeparated(cost) => ControlTriple::new(
                optimal_gain(r, params),
                optimal_assortativity(r, cost),
                optimal_scale(r),
            ),
        }
    }
}

/// Queueing barrier cost of sorting at the given intensity.
pub fn barrier_cost(assortativity: f64, cost: &CostParams) -> Result<f64> {
    if !assortativity.is_finite() || !(0.0..1.0).contains(&assortativity) {
        return Err(Error::InvalidParameter {
            name: "assortativity",
            value: assortativity,
            constraint: "0 <= assortativity < 1 (waiting times diverge at 1)",
        });
    }
    Ok(cost.kappa_c() * (1.0 / (1.0 - assortativity) - 1.0))
}

/// Instantaneous net utility of matching: quality minus sorting cost.
pub fn net_utility(r: f64, assortativity: f64, cost: &CostParams) -> Result<f64> {
    Ok(assortativity * r * r - barrier_cost(assortativity, cost)?)
}

/// The welfare-maximizing assortativity at accuracy `r`.
///
/// Zero up to the critical accuracy `sqrt(kappa_c)`, then rises continuously;
/// the transition is second-order (the derivative jumps).
pub fn optimal_assortativity(r: f64, cost: &CostParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&r));
    if r <= 0.0 {
        return 0.0;
    }
    (1.0 - cost.kappa_c().sqrt() / r).max(0.0)
}

/// Best attainable net utility at accuracy `r`: `max(0, r - sqrt(kappa_c))^2`
/// (the barrier cost's closed-form envelope). Nondecreasing in `r`.
pub fn envelope_value(r: f64, cost: &CostParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&r));
    let excess = (r - cost.kappa_c().sqrt()).max(0.0);
    excess * excess
}

/// One step of the separated optimal policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedStep {
    /// The applied control: optimal gain, optimal assortativity, signal-matched scale.
    pub control: ControlTriple,
    /// Next-period accuracy (the invariant map).
    pub next_r: f64,
    /// Net utility collected this period (the envelope value).
    pub utility: f64,
}

/// Evaluates the separated optimal policy at the current state.
pub fn separated_policy_step(
    state: &AccuracyState,
    cost: &CostParams,
    params: &ModelParams,
) -> SeparatedStep {
    let r = state.r().max(0.0);
    let control = ControlTriple::new(
        optimal_gain(r, params),
        optimal_assortativity(r, cost),
        optimal_scale(r),
    )
    .expect("optimal controls are always admissible");
    SeparatedStep {
        control,
        next_r: invariant_map(r, params),
        utility: envelope_value(r, cost),
    }
}

/// Discounted sum of per-period utilities over the given horizon.
pub fn discounted_welfare(utilities: &[f64], discount: f64) -> f64 {
    debug_assert!(discount > 0.0 && discount < 1.0);
    let mut weight = 1.0;
    let mut total = 0.0;
    for u in utilities {
        total += weight * u;
        weight *= discount;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::transition_accuracy;

    fn cost(kappa_c: f64) -> CostParams {
        CostParams::new(kappa_c, 0.95).unwrap()
    }

    #[test]
    fn barrier_cost_examples() {
        assert_eq!(barrier_cost(0.0, &cost(1.0)).unwrap(), 0.0);
        assert!((barrier_cost(0.5, &cost(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((barrier_cost(0.9, &cost(0.04)).unwrap() - 0.36).abs() < 1e-12);
        assert!(barrier_cost(1.0, &cost(1.0)).is_err());
    }

    #[test]
    fn net_utility_examples() {
        for r in [0.0, 0.3, 1.0] {
            assert_eq!(net_utility(r, 0.0, &cost(0.7)).unwrap(), 0.0);
        }
        assert!((net_utility(0.5, 0.6, &cost(0.04)).unwrap() - 0.09).abs() < 1e-15);
        assert!((net_utility(1.0, 0.5, &cost(1.0)).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn assortativity_switches_on_at_the_critical_accuracy() {
        let c = cost(0.04);
        assert_eq!(optimal_assortativity(0.1, &c), 0.0);
        assert_eq!(optimal_assortativity(0.04_f64.sqrt(), &c), 0.0);
        assert!((optimal_assortativity(0.5, &c) - 0.6).abs() < 1e-15);
        assert_eq!(optimal_assortativity(0.0, &c), 0.0);
    }

    #[test]
    fn transition_is_second_order_at_the_critical_accuracy() {
        // The order parameter leaves zero continuously with a derivative jump.
        let c = cost(0.04);
        let rc = 0.2;
        let h = 1e-6;
        let left = (optimal_assortativity(rc, &c) - optimal_assortativity(rc - h, &c)) / h;
        let right = (optimal_assortativity(rc + h, &c) - optimal_assortativity(rc, &c)) / h;
        assert!(left.abs() < 1e-9, "flat on the disordered side, got {left}");
        assert!((right - 5.0).abs() < 1e-3, "slope 1/sqrt(kappa_c) above, got {right}");
    }

    #[test]
    fn envelope_value_examples() {
        let c = cost(0.04);
        assert_eq!(envelope_value(0.1, &c), 0.0);
        assert!((envelope_value(0.5, &c) - 0.09).abs() < 1e-15);
        assert!((envelope_value(1.0, &cost(0.25)) - 0.25).abs() < 1e-15);
        // Grid-search oracle over the assortativity.
        let mut best = f64::NEG_INFINITY;
        let mut eta = 0.0;
        while eta < 1.0 {
            best = best.max(net_utility(1.0, eta, &cost(0.25)).unwrap());
            eta += 1e-5;
        }
        assert!((envelope_value(1.0, &cost(0.25)) - best).abs() < 1e-9);
    }

    #[test]
    fn envelope_dominates_and_is_monotone() {
        let c = cost(0.09);
        let mut prev = -1.0;
        for i in 0..=100 {
            let r = i as f64 / 100.0;
            let v = envelope_value(r, &c);
            assert!(v + 1e-15 >= prev, "envelope must be nondecreasing");
            prev = v;
            let mut eta = 0.0;
            while eta < 1.0 {
                assert!(v + 1e-12 >= net_utility(r, eta, &c).unwrap());
                eta += 0.01;
            }
            let at_star = net_utility(r, optimal_assortativity(r, &c), &c).unwrap();
            assert!((v - at_star).abs() < 1e-12);
        }
    }

    #[test]
    fn net_utility_is_concave_in_assortativity() {
        let c = cost(0.2);
        for r in [0.1, 0.5, 0.9] {
            let us: Vec<f64> = (0..99)
                .map(|i| net_utility(r, i as f64 / 100.0, &c).unwrap())
                .collect();
            for w in us.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-12, "second difference positive");
            }
        }
    }

    #[test]
    fn separated_step_examples() {
        let p = ModelParams::new(0.99, 1.0).unwrap();
        let c = cost(0.04);

        let zero = AccuracyState::new(0.0, 0.0).unwrap();
        let step = separated_policy_step(&zero, &c, &p);
        assert!((step.control.gain() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(step.control.assortativity(), 0.0);
        assert_eq!(step.control.scale(), 0.0);
        assert!((step.next_r - 0.99 / 3.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(step.utility, 0.0);

        let mid = AccuracyState::new(0.5, 0.5).unwrap();
        let step = separated_policy_step(&mid, &c, &p);
        assert!((step.control.gain() - 0.3).abs() < 1e-15);
        assert!((step.control.assortativity() - 0.6).abs() < 1e-15);
        assert_eq!(step.control.scale(), 0.5);
        assert!((step.next_r - 0.682310413228466).abs() < 1e-12);
        assert!((step.utility - 0.09).abs() < 1e-15);

        let r_inf = crate::meanfield::fixed_point(&p, 1e-12).unwrap();
        let at_fix = separated_policy_step(&AccuracyState::new(r_inf, r_inf).unwrap(), &c, &p);
        assert!((at_fix.next_r - r_inf).abs() < 1e-12);
    }

    #[test]
    fn discounted_welfare_examples() {
        assert_eq!(discounted_welfare(&[0.0; 16], 0.5), 0.0);
        assert!((discounted_welfare(&[1.0; 10], 0.5) - 1.998046875).abs() < 1e-15);

        // Constant stream at the steady state matches the geometric closed form.
        let p = ModelParams::new(0.99, 1.0).unwrap();
        let c = cost(0.04);
        let r_inf = crate::meanfield::fixed_point(&p, 1e-12).unwrap();
        let v = envelope_value(r_inf, &c);
        let horizon = 40;
        let utilities = vec![v; horizon];
        let delta: f64 = 0.9;
        let closed = v * (1.0 - delta.powi(horizon as i32)) / (1.0 - delta);
        assert!((discounted_welfare(&utilities, delta) - closed).abs() < 1e-12);
    }

    #[test]
    fn separated_policy_dominates_fixed_policies_in_welfare() {
        // Exact reduced dynamics over a 50-period horizon from r0 = 0.1.
        let p = ModelParams::new(0.99, 1.0).unwrap();
        let c = cost(0.04);
        let horizon = 50;
        let delta = c.discount();

        let mut r = 0.1;
        let mut best: Vec<f64> = Vec::new();
        for _ in 0..horizon {
            let step = separated_policy_step(&AccuracyState::new(r, r).unwrap(), &c, &p);
            best.push(step.utility);
            r = step.next_r;
        }
        let best_welfare = discounted_welfare(&best, delta);

        for gain in [0.05, 0.1, 0.3, 0.5] {
            for eta in [0.0, 0.3, 0.6, 0.9] {
                for sigma in [0.2, 0.5, 1.0, 2.0] {
                    let control = ControlTriple::new(gain, eta, sigma).unwrap();
                    let mut r: f64 = 0.1;
                    let mut us = Vec::new();
                    for _ in 0..horizon {
                        us.push(net_utility(r.max(0.0), eta, &c).unwrap());
                        let state = AccuracyState::new(r, sigma).unwrap();
                        r = transition_accuracy(&state, &control, &p).unwrap();
                    }
                    let welfare = discounted_welfare(&us, delta);
                    assert!(
                        welfare <= best_welfare + 1e-10,
                        "fixed (K={gain}, eta={eta}, sigma={sigma}) beats the separated policy: \
                         {welfare} > {best_welfare}"
                    );
                }
            }
        }
    }
}
