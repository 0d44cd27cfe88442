//! Joint price and emitting-time update through the change of variables
//! `q₁ = ½(p_l − b_m)(1 + β)`, `q₂ = ½(p_l − b_m)(1 − β)` and the
//! convex–concave procedure.

use super::tables::{from_q, to_q, JointDc, JointTable};
use super::steps::release_ladder;
use crate::game::{CostModel, Decision, Objective};
use crate::solvers::{cccp_solve, CccpOptions, LinearConstraints};
use crate::throughput::Network;
use crate::{Error, Result};

/// Window slack below which `β` is pinned rather than bracketed.
pub const PIN_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct JointSubproblem {
    pub table: JointTable,
    pub dc: JointDc,
    /// Linear constraints in `(q₁, q₂)`.
    pub constraints: LinearConstraints,
    pub start: [f64; 2],
    /// Set when the two windows leave no room for `β` to move.
    pub pinned_beta: Option<f64>,
}

/// One run of the convex–concave procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct CccpRecord {
    pub trace: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Build the joint subproblem around the schedule of `d`. Every constraint
/// is linear in `(q₁, q₂)`: powers are `(q₁ + q₂)/(2a_m)`, the energy an
/// AWPD harvests is proportional to `q₁ − q₂`, and an HWPD's to
/// `(1 − τ)q₁ − (1 + τ)q₂`.
pub fn build_joint_subproblem(net: &Network, cost: &CostModel, d: &Decision) -> Result<JointSubproblem> {
    let s = &d.schedule;
    let (t_bs, t_at) = (s.backscatter_total(), s.active_total());
    let width = 1.0 - t_bs - t_at;
    if width < -1e-9 {
        return Err(Error::Infeasible(format!(
            "schedule occupies {:.6} of the frame",
            t_bs + t_at
        )));
    }
    let two_a = 2.0 * cost.a_m;
    let price = cost.price_for_power(d.power);
    let (q1, q2) = to_q(price, d.beta, cost.b_m);

    let mut c = LinearConstraints::new(2);
    c.ge(vec![(1, 1.0)], 0.0);
    c.ge(vec![(0, 1.0), (1, -1.0)], 0.0);
    c.le(vec![(0, 1.0), (1, 1.0)], two_a * cost.p_s_max);
    let pinned_beta = if width <= PIN_WIDTH {
        let b = d.beta;
        c.eq(vec![(0, 1.0 - b), (1, -(1.0 + b))], 0.0);
        Some(b)
    } else {
        c.ge(vec![(0, 1.0 - t_bs), (1, -(1.0 + t_bs))], 0.0);
        c.ge(vec![(0, -t_at), (1, 2.0 - t_at)], 0.0);
        None
    };

    let mut snr_floor = 0.0f64;
    for (k, &i) in net.pwpds().iter().enumerate() {
        if s.theta[k] > 0.0 {
            snr_floor = snr_floor.max(net.device(i).snr_min.unwrap_or(0.0) / net.link(i).kappa());
        }
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        if s.tau[k] > 0.0 {
            snr_floor = snr_floor.max(net.device(i).snr_min.unwrap_or(0.0) / net.link(i).kappa());
        }
    }
    if snr_floor > 0.0 {
        c.ge(vec![(0, 1.0), (1, 1.0)], two_a * snr_floor);
    }

    // Energy is `coef·q` with `coef = φg·u/(2a_m)`.
    let mut harvest = |i: usize, u: [f64; 2], slot: f64| {
        let dev = net.device(i);
        let g = net.harvest_gain(i) / two_a;
        let row = vec![(0, g * u[0]), (1, g * u[1])];
        if let Some(b) = dev.energy {
            c.ge(row.clone(), b.min);
            c.le(row.clone(), b.max);
        }
        if slot > 0.0 {
            if let Some(b) = dev.tx_power {
                c.ge(row.clone(), b.min * slot);
                c.le(row, b.max * slot);
            }
        }
    };
    for (k, &i) in net.awpds().iter().enumerate() {
        harvest(i, [1.0, -1.0], s.nu[k]);
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        let tau = s.tau[k];
        harvest(i, [1.0 - tau, -(1.0 + tau)], s.mu[k]);
    }

    let table = JointTable::new(net, cost, s);
    Ok(JointSubproblem {
        dc: table.dc_problem(),
        table,
        constraints: c,
        start: [q1, q2],
        pinned_beta,
    })
}

fn joint_candidate(
    net: &Network,
    cost: &CostModel,
    d: &Decision,
    opts: &CccpOptions,
) -> Result<Option<(Decision, CccpRecord)>> {
    let sub = match build_joint_subproblem(net, cost, d) {
        Ok(s) => s,
        Err(Error::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let sol = match cccp_solve(&sub.dc, &sub.constraints, &sub.start, opts) {
        Ok(s) => s,
        Err(Error::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (price, beta) = from_q(sol.x[0], sol.x[1], cost.b_m, d.beta);
    let beta = sub.pinned_beta.unwrap_or(beta).clamp(0.0, 1.0);
    let power = ((price - cost.b_m) / (2.0 * cost.a_m)).clamp(0.0, cost.p_s_max);
    let record = CccpRecord {
        trace: sol.trace,
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
        converged: sol.converged,
    };
    Ok(Some((
        Decision {
            power,
            beta,
            schedule: d.schedule.clone(),
        },
        record,
    )))
}

/// Best `(p_l, β)` for the schedule of `d` and for each rung of its
/// [`release_ladder`], as a decision with the power implied by the
/// follower's response. Also returns the record of every run. The decision
/// is `None` when no subproblem has an interior.
pub(crate) fn joint_step(
    net: &Network,
    cost: &CostModel,
    d: &Decision,
    opts: &CccpOptions,
) -> Result<(Option<Decision>, Vec<CccpRecord>)> {
    let mut best: Option<(f64, Decision)> = None;
    let mut records = Vec::new();
    for schedule in release_ladder(net, &d.schedule) {
        let start = Decision {
            schedule,
            ..d.clone()
        };
        let Some((cand, rec)) = joint_candidate(net, cost, &start, opts)? else {
            continue;
        };
        records.push(rec);
        let v = Objective::Leader.value(net, cost, &cand);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, cand));
        }
    }
    Ok((best.map(|(_, d)| d), records))
}
