//! The three block updates shared by every solver: beacon power (or price),
//! emitting time, and the device schedule.

use nalgebra::DMatrix;

use super::tables::{BetaTable, PriceTable, ScheduleTable, ShareBetaTable};
use crate::game::{CostModel, Decision, Objective};
use crate::solvers::{concave_max_linear, golden_section_max, BarrierOptions, ConcaveObjective, LinearConstraints, ScalarProblem};
use crate::throughput::{Network, Schedule};
use crate::{Error, Result};

/// Windows narrower than this are treated as closed.
pub(crate) const MIN_WINDOW: f64 = 1e-12;

/// Which schedule entries may be non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mask {
    pub theta: bool,
    pub nu: bool,
    pub tau: bool,
    pub mu: bool,
}

impl Mask {
    pub const ALL: Mask = Mask {
        theta: true,
        nu: true,
        tau: true,
        mu: true,
    };
    /// Backscatter only: active times pinned to zero.
    pub const BACKSCATTER: Mask = Mask {
        theta: true,
        nu: false,
        tau: true,
        mu: false,
    };
    /// Harvest-then-transmit only: backscatter times pinned to zero.
    pub const ACTIVE: Mask = Mask {
        theta: false,
        nu: true,
        tau: false,
        mu: true,
    };

    pub fn and(self, other: Mask) -> Mask {
        Mask {
            theta: self.theta && other.theta,
            nu: self.nu && other.nu,
            tau: self.tau && other.tau,
            mu: self.mu && other.mu,
        }
    }

    pub fn is_empty(self) -> bool {
        !(self.theta || self.nu || self.tau || self.mu)
    }
}

/// How the emitting-time block treats the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaStepMode {
    /// Keep each device's share of its window and rescale the schedule with
    /// `β`.
    #[default]
    ScaleSchedule,
    /// Keep the schedule; `β` moves only inside `[Σθ + Στ, 1 − Σν − Σμ]`.
    HoldSchedule,
}

/// Running intersection of one-dimensional constraints.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, empty: false }
    }

    /// `a·v ≥ b`.
    pub fn ge(&mut self, a: f64, b: f64) {
        if a > 0.0 {
            self.lo = self.lo.max(b / a);
        } else if a < 0.0 {
            self.hi = self.hi.min(b / a);
        } else if b > 0.0 {
            self.empty = true;
        }
    }

    /// `a·v ≤ b`.
    pub fn le(&mut self, a: f64, b: f64) {
        self.ge(-a, -b);
    }

    pub fn get(self) -> Option<(f64, f64)> {
        if self.empty || !(self.lo <= self.hi * (1.0 + 1e-12) + 1e-300) {
            return None;
        }
        Some((self.lo, self.hi.max(self.lo)))
    }
}

/// Feasible beacon powers for a fixed `β` and schedule.
pub fn power_interval(net: &Network, cost: &CostModel, beta: f64, sched: &Schedule) -> Option<(f64, f64)> {
    let mut iv = Interval::new(0.0, cost.p_s_max);
    let mut harvest = |i: usize, time: f64, slot: f64| {
        let dev = net.device(i);
        let e = time * net.harvest_gain(i);
        if let Some(b) = dev.energy {
            iv.ge(e, b.min);
            iv.le(e, b.max);
        }
        if slot > 0.0 {
            if let Some(b) = dev.tx_power {
                iv.ge(e, b.min * slot);
                iv.le(e, b.max * slot);
            }
        }
    };
    for (k, &i) in net.awpds().iter().enumerate() {
        harvest(i, beta, sched.nu[k]);
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        harvest(i, beta - sched.tau[k], sched.mu[k]);
    }
    let mut snr = |i: usize, slot: f64| {
        if slot > 0.0 {
            iv.ge(net.link(i).kappa(), net.device(i).snr_min.unwrap_or(0.0));
        }
    };
    for (k, &i) in net.pwpds().iter().enumerate() {
        snr(i, sched.theta[k]);
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        snr(i, sched.tau[k]);
    }
    iv.get()
}

fn scalar_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let tol = 1e-10 * (1.0 + hi.abs());
    Ok(golden_section_max(&ScalarProblem::new(f, lo, hi, tol))?.x)
}

/// The schedule of `d` followed by copies with backscatter slots released,
/// highest SNR floor first. A slot whose SNR floor sits above the useful
/// power range would otherwise hold the power up indefinitely.
pub(crate) fn release_ladder(net: &Network, sched: &Schedule) -> Vec<Schedule> {
    let floor = |i: usize| {
        let k = net.link(i).kappa();
        let g = net.device(i).snr_min.unwrap_or(0.0);
        if k > 0.0 {
            g / k
        } else {
            f64::INFINITY
        }
    };
    let mut slots: Vec<(f64, bool, usize)> = Vec::new();
    for (k, &i) in net.pwpds().iter().enumerate() {
        if sched.theta[k] > 0.0 {
            slots.push((floor(i), true, k));
        }
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        if sched.tau[k] > 0.0 {
            slots.push((floor(i), false, k));
        }
    }
    slots.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![sched.clone()];
    let mut cur = sched.clone();
    let mut idx = 0;
    while idx < slots.len() {
        let level = slots[idx].0;
        while idx < slots.len() && slots[idx].0 == level {
            let (_, pwpd, k) = slots[idx];
            if pwpd {
                cur.theta[k] = 0.0;
            } else {
                cur.tau[k] = 0.0;
            }
            idx += 1;
        }
        out.push(cur.clone());
    }
    out
}

/// Best power for fixed `β` and schedule. The leader searches over its
/// price through the price table; the other objectives search the power
/// directly. `None` when no power is feasible.
pub fn power_step_fixed(
    objective: Objective,
    net: &Network,
    cost: &CostModel,
    beta: f64,
    schedule: &Schedule,
) -> Result<Option<Decision>> {
    let Some((lo, hi)) = power_interval(net, cost, beta, schedule) else {
        return Ok(None);
    };
    let at = |p: f64| Decision {
        power: p,
        beta,
        schedule: schedule.clone(),
    };
    let power = match objective {
        Objective::Leader => {
            let table = PriceTable::new(net, cost, beta, schedule);
            let f = |p: f64| table.value(p);
            let price = scalar_max(&f, cost.price_for_power(lo), cost.price_for_power(hi))?;
            (price - cost.b_m) / (2.0 * cost.a_m)
        }
        _ => {
            let f = |p: f64| objective.value(net, cost, &at(p));
            scalar_max(&f, lo, hi)?
        }
    };
    Ok(Some(at(power.clamp(lo, hi))))
}

/// [`power_step_fixed`] on every rung of [`release_ladder`]; the best
/// decision is kept and the current schedule wins ties.
pub fn power_step(objective: Objective, net: &Network, cost: &CostModel, d: &Decision) -> Result<Option<Decision>> {
    let mut best: Option<(f64, Decision)> = None;
    for schedule in release_ladder(net, &d.schedule) {
        let Some(cand) = power_step_fixed(objective, net, cost, d.beta, &schedule)? else {
            continue;
        };
        let v = objective.value(net, cost, &cand);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, cand));
        }
    }
    Ok(best.map(|(_, d)| d))
}

/// Feasible emitting times when window shares are held fixed.
pub fn beta_interval_shares(net: &Network, power: f64, shares: &Schedule) -> Option<(f64, f64)> {
    let mut iv = Interval::new(0.0, 1.0);
    let mut harvest = |i: usize, frac: f64, share: f64| {
        let dev = net.device(i);
        // Energy is β·frac·φg·P; the active slot is (1 − β)·share.
        let e = frac * net.harvest_gain(i) * power;
        if let Some(b) = dev.energy {
            iv.ge(e, b.min);
            iv.le(e, b.max);
        }
        if share > 0.0 {
            if let Some(b) = dev.tx_power {
                iv.ge(e + b.min * share, b.min * share);
                iv.le(e + b.max * share, b.max * share);
            }
        }
    };
    for (k, &i) in net.awpds().iter().enumerate() {
        harvest(i, 1.0, shares.nu[k]);
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        harvest(i, 1.0 - shares.tau[k], shares.mu[k]);
    }
    iv.get()
}

/// Feasible emitting times with the schedule held fixed.
pub fn beta_interval_hold(net: &Network, power: f64, sched: &Schedule) -> Option<(f64, f64)> {
    let mut iv = Interval::new(sched.backscatter_total(), 1.0 - sched.active_total());
    let mut harvest = |i: usize, offset: f64, slot: f64| {
        let dev = net.device(i);
        // Energy is (β − offset)·φg·P.
        let e = net.harvest_gain(i) * power;
        iv.ge(1.0, offset);
        if let Some(b) = dev.energy {
            iv.ge(e, b.min + e * offset);
            iv.le(e, b.max + e * offset);
        }
        if slot > 0.0 {
            if let Some(b) = dev.tx_power {
                iv.ge(e, b.min * slot + e * offset);
                iv.le(e, b.max * slot + e * offset);
            }
        }
    };
    for (k, &i) in net.awpds().iter().enumerate() {
        harvest(i, 0.0, sched.nu[k]);
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        harvest(i, sched.tau[k], sched.mu[k]);
    }
    iv.get()
}

/// Best emitting time for fixed power. Returns the new `β` and schedule.
pub fn beta_step(
    objective: Objective,
    mode: BetaStepMode,
    net: &Network,
    cost: &CostModel,
    d: &Decision,
    shares: &Schedule,
) -> Result<Option<(f64, Schedule)>> {
    let unit = objective.unit_cost(cost, d.power);
    match mode {
        BetaStepMode::ScaleSchedule => {
            let Some((lo, hi)) = beta_interval_shares(net, d.power, shares) else {
                return Ok(None);
            };
            let table = ShareBetaTable::new(net, cost, d.power, unit, shares);
            let f = |b: f64| table.value(b);
            let beta = scalar_max(&f, lo, hi)?;
            Ok(Some((beta, shares.scaled(beta, 1.0 - beta))))
        }
        BetaStepMode::HoldSchedule => {
            let Some((lo, hi)) = beta_interval_hold(net, d.power, &d.schedule) else {
                return Ok(None);
            };
            let table = BetaTable::new(net, cost, d.power, unit, &d.schedule);
            let f = |b: f64| table.value(b);
            Ok(Some((scalar_max(&f, lo, hi)?, d.schedule.clone())))
        }
    }
}

/// The schedule table restricted to a subset of free entries; the others
/// are pinned to zero.
struct FreeSchedule<'a> {
    table: &'a ScheduleTable,
    free: &'a [usize],
    n: usize,
}

impl FreeSchedule<'_> {
    fn full(&self, z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (k, &j) in self.free.iter().enumerate() {
            x[j] = z[k];
        }
        x
    }
}

impl ConcaveObjective for FreeSchedule<'_> {
    fn dim(&self) -> usize {
        self.free.len()
    }
    fn value(&self, z: &[f64]) -> f64 {
        self.table.value(&self.full(z))
    }
    fn gradient(&self, z: &[f64], g: &mut [f64]) {
        let x = self.full(z);
        let mut gx = vec![0.0; self.n];
        self.table.gradient(&x, &mut gx);
        for (k, &j) in self.free.iter().enumerate() {
            g[k] = gx[j];
        }
    }
    fn hessian(&self, z: &[f64], h: &mut DMatrix<f64>) {
        let x = self.full(z);
        let mut hx = DMatrix::zeros(self.n, self.n);
        self.table.hessian(&x, &mut hx);
        for (a, &i) in self.free.iter().enumerate() {
            for (b, &j) in self.free.iter().enumerate() {
                h[(a, b)] = hx[(i, j)];
            }
        }
    }
}

/// Schedule entries that can carry time at `(power, β)` under `mask`.
fn free_entries(net: &Network, power: f64, beta: f64, mask: Mask) -> Vec<usize> {
    let (np, na, nh) = (net.pwpds().len(), net.awpds().len(), net.hwpds().len());
    let snr_ok = |i: usize| {
        let g = net.device(i).snr_min.unwrap_or(0.0);
        let k = net.link(i).kappa();
        k > 0.0 && g <= k * power * (1.0 + 1e-10)
    };
    let bs_open = beta > MIN_WINDOW;
    let act_open = 1.0 - beta > MIN_WINDOW;
    let mut free = Vec::new();
    for (k, &i) in net.pwpds().iter().enumerate() {
        if mask.theta && bs_open && snr_ok(i) {
            free.push(k);
        }
    }
    for (k, &i) in net.awpds().iter().enumerate() {
        if mask.nu && act_open && beta * net.harvest_gain(i) * power > 0.0 {
            free.push(np + k);
        }
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        if mask.tau && bs_open && snr_ok(i) {
            free.push(np + na + k);
        }
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        if mask.mu && act_open && beta * net.harvest_gain(i) * power > 0.0 {
            free.push(np + na + nh + k);
        }
    }
    free
}

fn schedule_constraints(net: &Network, power: f64, beta: f64, free: &[usize]) -> (LinearConstraints, Vec<f64>) {
    let (np, na, nh) = (net.pwpds().len(), net.awpds().len(), net.hwpds().len());
    let pos = |j: usize| free.iter().position(|&f| f == j);
    let mut c = LinearConstraints::new(free.len());
    // Lower bound of each active slot implied by the power ceiling; used to
    // pick which device to drop when the polytope is empty.
    let mut demand = vec![0.0; free.len()];
    for k in 0..free.len() {
        c.ge(vec![(k, 1.0)], 0.0);
    }
    let is_bs = |j: usize| j < np || (j >= np + na && j < np + na + nh);
    let bs: Vec<(usize, f64)> = (0..free.len()).filter(|&k| is_bs(free[k])).map(|k| (k, 1.0)).collect();
    let act: Vec<(usize, f64)> = (0..free.len()).filter(|&k| !is_bs(free[k])).map(|k| (k, 1.0)).collect();
    if !bs.is_empty() {
        c.le(bs, beta);
    }
    if !act.is_empty() {
        c.le(act, 1.0 - beta);
    }
    for (k, &i) in net.awpds().iter().enumerate() {
        if let (Some(z), Some(b)) = (pos(np + k), net.device(i).tx_power) {
            let e = beta * net.harvest_gain(i) * power;
            c.ge(vec![(z, b.max)], e);
            c.le(vec![(z, b.min)], e);
            demand[z] = e / b.max;
        }
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        let dev = net.device(i);
        let e = net.harvest_gain(i) * power;
        let t = pos(np + na + k);
        let m = pos(np + na + nh + k);
        if let (Some(t), Some(b)) = (t, dev.energy) {
            // b.min ≤ (β − τ)·e ≤ b.max
            c.le(vec![(t, e)], beta * e - b.min);
            c.ge(vec![(t, e)], beta * e - b.max);
        }
        if let (Some(m), Some(b)) = (m, dev.tx_power) {
            let mut lower = vec![(m, b.min)];
            let mut upper = vec![(m, b.max)];
            if let Some(t) = t {
                lower.push((t, e));
                upper.push((t, e));
            }
            c.le(lower, beta * e);
            c.ge(upper, beta * e);
            demand[m] = beta * e / b.max;
        }
    }
    (c, demand)
}

/// Best schedule for fixed power and `β`. Entries that cannot carry time
/// (masked out, below the SNR floor, closed window, no harvested energy)
/// are pinned to zero. When the active window cannot host every device at
/// its power ceiling, the most demanding active slots are dropped one by
/// one.
pub fn schedule_step(
    objective: Objective,
    net: &Network,
    cost: &CostModel,
    d: &Decision,
    mask: Mask,
    opts: &BarrierOptions,
) -> Result<Schedule> {
    let unit = objective.unit_cost(cost, d.power);
    let table = ScheduleTable::new(net, cost, d.power, d.beta, unit);
    let n = table.dim();
    let mut free = free_entries(net, d.power, d.beta, mask);
    let current = d.schedule.to_vec();
    loop {
        if free.is_empty() {
            return Ok(Schedule::zeros(net));
        }
        let (cons, demand) = schedule_constraints(net, d.power, d.beta, &free);
        let obj = FreeSchedule {
            table: &table,
            free: &free,
            n,
        };
        let z0: Vec<f64> = free.iter().map(|&j| current[j]).collect();
        match concave_max_linear(&obj, &cons, Some(&z0), opts) {
            Ok(sol) => return Ok(Schedule::from_slice(net, &obj.full(&sol.x))),
            Err(Error::Infeasible(_)) => {
                let worst = (0..free.len())
                    .filter(|&k| demand[k] > 0.0)
                    .max_by(|&a, &b| demand[a].total_cmp(&demand[b]).then(b.cmp(&a)));
                match worst {
                    Some(k) => {
                        free.remove(k);
                    }
                    None => return Err(Error::Infeasible("schedule polytope is empty".into())),
                }
            }
            Err(e) => return Err(e),
        }
    }
}
