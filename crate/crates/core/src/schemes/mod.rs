//! Iterative equilibrium search by block coordinate ascent.
//!
//! Both schemes cycle through three blocks and keep the incumbent whenever
//! a block would lower the objective, so the recorded trace never
//! decreases:
//!
//! * PA: price (golden section), emitting time, schedule (interior point).
//! * JA: joint price and emitting time (convex–concave procedure), then the
//!   emitting time and the schedule.

mod init;
mod joint;
mod steps;
pub mod tables;

pub use init::{default_init, equal_split};
pub use joint::{build_joint_subproblem, CccpRecord, JointSubproblem, PIN_WIDTH};
pub use steps::{
    beta_interval_hold, beta_interval_shares, beta_step, power_interval, power_step, power_step_fixed, schedule_step, BetaStepMode, Mask,
};

use crate::game::{check_decision, CostModel, Decision, GameOutcome, Objective};
use crate::solvers::{BarrierOptions, CccpOptions};
use crate::throughput::{Network, Schedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Pa,
    Ja,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pa => "pa",
            Scheme::Ja => "ja",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when an outer iteration changes the objective by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub beta_mode: BetaStepMode,
    pub barrier: BarrierOptions,
    pub cccp: CccpOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 500,
            beta_mode: BetaStepMode::default(),
            barrier: BarrierOptions::default(),
            cccp: CccpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub outcome: GameOutcome,
    /// Final iterate, kept even when the outcome is a no-trade.
    pub decision: Decision,
    /// Every run of the convex–concave procedure (JA only).
    pub cccp: Vec<CccpRecord>,
}

/// Window shares of `d`, falling back to `prev` for a closed window.
fn update_shares(d: &Decision, prev: &Schedule) -> Schedule {
    let mut s = d.shares();
    if d.beta <= steps::MIN_WINDOW {
        s.theta.clone_from(&prev.theta);
        s.tau.clone_from(&prev.tau);
    }
    if 1.0 - d.beta <= steps::MIN_WINDOW {
        s.nu.clone_from(&prev.nu);
        s.mu.clone_from(&prev.mu);
    }
    s
}

/// Block coordinate ascent on `objective`, restricted to the schedule
/// entries allowed by `mask`.
///
/// With `init = None` the search starts from [`default_init`] under `mask`
/// and also from the terminal points of runs restricted to the backscatter
/// entries and to the active entries of `mask`, each continued under the
/// full `mask`. The best run is returned.
pub fn solve(
    objective: Objective,
    scheme: Scheme,
    net: &Network,
    cost: &CostModel,
    mask: Mask,
    init: Option<&Decision>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if let Some(d) = init {
        let v = check_decision(d, net, cost);
        if let Some(first) = v.first() {
            return Err(Error::Infeasible(format!("initial point violates {first}")));
        }
        return run(objective, scheme, net, cost, mask, d.clone(), opts);
    }
    let mut best: Option<SolveReport> = None;
    let keep = |r: SolveReport, best: &mut Option<SolveReport>| {
        let better = match best {
            None => true,
            Some(b) => objective.value(net, cost, &r.decision) > objective.value(net, cost, &b.decision),
        };
        if better {
            *best = Some(r);
        }
    };
    if let Some(d) = default_init(net, cost, mask) {
        keep(run(objective, scheme, net, cost, mask, d, opts)?, &mut best);
    }
    for sub in [mask.and(Mask::BACKSCATTER), mask.and(Mask::ACTIVE)] {
        if sub == mask || sub.is_empty() {
            continue;
        }
        let Some(d) = default_init(net, cost, sub) else {
            continue;
        };
        let first = run(objective, scheme, net, cost, sub, d, opts)?;
        let mut second = run(objective, scheme, net, cost, mask, first.decision.clone(), opts)?;
        second.outcome.iterations += first.outcome.iterations;
        let mut trace = first.outcome.trace;
        trace.extend_from_slice(&second.outcome.trace[1..]);
        second.outcome.trace = trace;
        let mut cccp = first.cccp;
        cccp.append(&mut second.cccp);
        second.cccp = cccp;
        keep(second, &mut best);
    }
    Ok(best.unwrap_or_else(|| SolveReport {
        outcome: GameOutcome::no_trade(net, cost, 0, vec![0.0], true),
        decision: Decision::no_trade(net),
        cccp: Vec::new(),
    }))
}

fn run(
    objective: Objective,
    scheme: Scheme,
    net: &Network,
    cost: &CostModel,
    mask: Mask,
    start: Decision,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let mut d = start;
    let mut shares = d.shares();
    let mut u = objective.value(net, cost, &d);
    let mut trace = vec![u];
    let mut records = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let accept = |cand: Decision, d: &mut Decision, u: &mut f64| {
        let v = objective.value(net, cost, &cand);
        if v >= *u && check_decision(&cand, net, cost).is_empty() {
            *d = cand;
            *u = v;
        }
    };

    for it in 1..=opts.max_iter {
        iterations = it;
        let u_prev = u;

        let first = if scheme == Scheme::Ja && objective == Objective::Leader {
            let (cand, recs) = joint::joint_step(net, cost, &d, &opts.cccp)?;
            records.extend(recs);
            cand
        } else {
            power_step(objective, net, cost, &d)?
        };
        if let Some(cand) = first {
            accept(cand, &mut d, &mut u);
        }
        trace.push(u);

        if let Some((beta, schedule)) = beta_step(objective, opts.beta_mode, net, cost, &d, &shares)? {
            let cand = Decision {
                power: d.power,
                beta,
                schedule,
            };
            accept(cand, &mut d, &mut u);
        }
        trace.push(u);

        match schedule_step(objective, net, cost, &d, mask, &opts.barrier) {
            Ok(schedule) => accept(Decision { schedule, ..d.clone() }, &mut d, &mut u),
            Err(Error::Infeasible(_)) => {}
            Err(e) => {
                return Err(Error::Solver {
                    iteration: it,
                    message: e.to_string(),
                })
            }
        }
        trace.push(u);
        shares = update_shares(&d, &shares);

        if (u - u_prev).abs() < opts.tol {
            converged = true;
            break;
        }
    }

    let outcome = GameOutcome::from_decision(net, cost, objective, &d, iterations, trace, converged);
    Ok(SolveReport {
        outcome,
        decision: d,
        cccp: records,
    })
}

/// PA scheme for the Stackelberg game. `init = None` uses [`default_init`].
pub fn pa_solve(net: &Network, cost: &CostModel, init: Option<&Decision>, opts: &SolverOptions) -> Result<GameOutcome> {
    Ok(solve(Objective::Leader, Scheme::Pa, net, cost, Mask::ALL, init, opts)?.outcome)
}

/// JA scheme for the Stackelberg game. `init = None` uses [`default_init`].
pub fn ja_solve(net: &Network, cost: &CostModel, init: Option<&Decision>, opts: &SolverOptions) -> Result<GameOutcome> {
    Ok(ja_solve_detailed(net, cost, init, opts)?.outcome)
}

/// [`ja_solve`] with every inner run of the convex–concave procedure.
pub fn ja_solve_detailed(
    net: &Network,
    cost: &CostModel,
    init: Option<&Decision>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    solve(Objective::Leader, Scheme::Ja, net, cost, Mask::ALL, init, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::radio::{Device, DeviceKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net_of(kinds: &[DeviceKind], d_bd: f64) -> Network {
        let devices = kinds
            .iter()
            .map(|&k| Device::with_defaults(k, d_bd, instances::DEFAULT_D_DG_M, instances::DEFAULT_NOISE_W))
            .collect();
        Network::new(devices, instances::default_environment()).unwrap()
    }

    #[test]
    fn single_pwpd_takes_whole_window() {
        let net = net_of(&[DeviceKind::Pwpd], 2.0);
        let cost = instances::default_cost();
        let d = Decision {
            power: 2.0,
            beta: 0.4,
            schedule: Schedule::zeros(&net),
        };
        let s = schedule_step(Objective::Leader, &net, &cost, &d, Mask::ALL, &BarrierOptions::default()).unwrap();
        assert!((s.theta[0] - 0.4).abs() < 1e-6, "{:?}", s.theta);
    }

    #[test]
    fn symmetric_awpds_share_equally() {
        let net = net_of(&[DeviceKind::Awpd, DeviceKind::Awpd], 3.0);
        let cost = instances::default_cost();
        let d = Decision {
            power: 1.0,
            beta: 0.5,
            schedule: Schedule::zeros(&net),
        };
        let s = schedule_step(Objective::Leader, &net, &cost, &d, Mask::ALL, &BarrierOptions::default()).unwrap();
        assert!((s.nu[0] - s.nu[1]).abs() < 1e-6, "{:?}", s.nu);
    }

    #[test]
    fn no_revenue_means_no_trade() {
        let net = instances::trio(3.0);
        let mut cost = instances::default_cost();
        cost.price_per_bit = 0.0;
        for scheme in [Scheme::Pa, Scheme::Ja] {
            let r = solve(Objective::Leader, scheme, &net, &cost, Mask::ALL, None, &SolverOptions::default()).unwrap();
            assert!(!r.outcome.negotiated);
            assert_eq!(r.outcome.u_leader, 0.0);
            assert_eq!(r.outcome.p_s_star, 0.0);
        }
    }

    #[test]
    fn traces_never_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cost = instances::default_cost();
        for _ in 0..5 {
            let net = instances::random_small(&mut rng);
            for scheme in [Scheme::Pa, Scheme::Ja] {
                let r = solve(Objective::Leader, scheme, &net, &cost, Mask::ALL, None, &SolverOptions::default()).unwrap();
                assert!(r.outcome.converged);
                for w in r.outcome.trace.windows(2) {
                    assert!(w[1] >= w[0] - 1e-9, "{scheme:?}: {} -> {}", w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn terminal_point_is_a_fixed_point() {
        let net = instances::trio(3.0);
        let cost = instances::default_cost();
        let opts = SolverOptions::default();
        let first = solve(Objective::Leader, Scheme::Pa, &net, &cost, Mask::ALL, None, &opts).unwrap();
        let again = solve(Objective::Leader, Scheme::Pa, &net, &cost, Mask::ALL, Some(&first.decision), &opts).unwrap();
        assert_eq!(again.outcome.iterations, 1);
        assert!(again.outcome.u_leader >= first.outcome.u_leader);
    }

    #[test]
    fn infeasible_init_is_rejected() {
        let net = instances::trio(3.0);
        let cost = instances::default_cost();
        let d = Decision {
            power: 10.0,
            beta: 0.5,
            schedule: Schedule::zeros(&net),
        };
        let r = solve(Objective::Leader, Scheme::Pa, &net, &cost, Mask::ALL, Some(&d), &SolverOptions::default());
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }
}
