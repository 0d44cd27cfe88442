//! Exhaustive grid search and coordinate probing, used to check the
//! iterative solvers on small networks.

use rayon::prelude::*;

use crate::game::{check_decision, Decision, Objective};
use crate::throughput::{Network, Schedule};
use crate::{CostModel, Error, Result};

pub const DEFAULT_GRID_CAP: u128 = 10_000_000;

/// One axis of the grid: a fixed value or `n ≥ 2` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Fixed(f64),
    Points(usize),
}

impl Axis {
    fn len(&self) -> usize {
        match *self {
            Axis::Fixed(_) => 1,
            Axis::Points(n) => n,
        }
    }

    /// `i`-th point on `[0, hi]`.
    fn value(&self, i: usize, hi: f64) -> f64 {
        match *self {
            Axis::Fixed(v) => v,
            Axis::Points(n) => hi * i as f64 / (n - 1) as f64,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match *self {
            Axis::Points(n) if n < 2 => Err(Error::config(name, "needs at least 2 points")),
            Axis::Fixed(v) if !v.is_finite() => Err(Error::config(name, "must be finite")),
            _ => Ok(()),
        }
    }
}

/// Grid over beacon power (equivalently the leader's price), the emitting
/// time and every schedule entry. Schedule entries range over their own
/// window, `[0, β]` or `[0, 1 − β]`; a fixed schedule entry is taken as is.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub price: Axis,
    pub beta: Axis,
    pub schedule: Axis,
    /// Drop infeasible points; when off, every point is scored.
    pub filter_feasible: bool,
    pub cap: u128,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            price: Axis::Points(40),
            beta: Axis::Points(25),
            schedule: Axis::Points(10),
            filter_feasible: true,
            cap: DEFAULT_GRID_CAP,
        }
    }
}

impl GridSpec {
    /// Raw Cartesian size for a network with `vars` schedule entries.
    pub fn size(&self, vars: usize) -> u128 {
        let s = self.schedule.len() as u128;
        (self.price.len() as u128) * (self.beta.len() as u128) * s.pow(vars as u32)
    }

    pub fn validate(&self) -> Result<()> {
        self.price.validate("grid.price")?;
        self.beta.validate("grid.beta")?;
        self.schedule.validate("grid.schedule")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: Decision,
    pub value: f64,
    /// Largest utility difference between the best cell and a feasible
    /// neighbour: a Lipschitz-times-step estimate of the grid resolution.
    pub slack: f64,
    pub evaluated: u128,
    pub feasible: u128,
}

struct Cell {
    index: Vec<usize>,
    value: f64,
}

/// Evaluate every grid point and return the best feasible one. Ties go to
/// the lexicographically smallest index tuple `(price, β, schedule…)`.
pub fn grid_search(objective: Objective, net: &Network, cost: &CostModel, spec: &GridSpec) -> Result<GridResult> {
    spec.validate()?;
    let vars = Schedule::zeros(net).len();
    let size = spec.size(vars);
    if size > spec.cap {
        return Err(Error::GridTooLarge {
            points: size,
            cap: spec.cap,
        });
    }
    let ctx = Ctx {
        objective,
        net,
        cost,
        spec,
        vars,
    };

    let per_price: Vec<(Option<Cell>, u128)> = (0..spec.price.len())
        .into_par_iter()
        .map(|ip| ctx.scan_price(ip))
        .collect();
    let mut best: Option<Cell> = None;
    let mut feasible = 0u128;
    for (cell, n) in per_price {
        feasible += n;
        if let Some(c) = cell {
            if best.as_ref().is_none_or(|b| c.value > b.value) {
                best = Some(c);
            }
        }
    }

    let Some(best) = best else {
        return Ok(GridResult {
            best: Decision::no_trade(net),
            value: 0.0,
            slack: 0.0,
            evaluated: size,
            feasible: 0,
        });
    };
    let slack = ctx.neighbour_slack(&best);
    Ok(GridResult {
        best: ctx.decision(&best.index),
        value: best.value,
        slack,
        evaluated: size,
        feasible,
    })
}

struct Ctx<'a> {
    objective: Objective,
    net: &'a Network,
    cost: &'a CostModel,
    spec: &'a GridSpec,
    vars: usize,
}

impl Ctx<'_> {
    fn decision(&self, index: &[usize]) -> Decision {
        let power = self.spec.price.value(index[0], self.cost.p_s_max);
        let beta = self.spec.beta.value(index[1], 1.0);
        let mut x = vec![0.0; self.vars];
        let bs = |j: usize| self.is_backscatter(j);
        for j in 0..self.vars {
            let window = if bs(j) { beta } else { 1.0 - beta };
            x[j] = self.spec.schedule.value(index[2 + j], window);
        }
        Decision {
            power,
            beta,
            schedule: Schedule::from_slice(self.net, &x),
        }
    }

    /// Layout `[θ | ν | τ | μ]`.
    fn is_backscatter(&self, j: usize) -> bool {
        let (np, na, nh) = (self.net.pwpds().len(), self.net.awpds().len(), self.net.hwpds().len());
        j < np || (j >= np + na && j < np + na + nh)
    }

    fn score(&self, d: &Decision) -> Option<f64> {
        let s = &d.schedule;
        let tol = 1e-12;
        if s.backscatter_total() > d.beta + tol || s.active_total() > 1.0 - d.beta + tol {
            return None;
        }
        if self.spec.filter_feasible && !check_decision(d, self.net, self.cost).is_empty() {
            return None;
        }
        let v = self.objective.value(self.net, self.cost, d);
        v.is_finite().then_some(v)
    }

    fn scan_price(&self, ip: usize) -> (Option<Cell>, u128) {
        let ns = self.spec.schedule.len();
        let mut index = vec![0usize; 2 + self.vars];
        index[0] = ip;
        let mut best: Option<Cell> = None;
        let mut feasible = 0u128;
        for ib in 0..self.spec.beta.len() {
            index[1] = ib;
            index[2..].fill(0);
            loop {
                let d = self.decision(&index);
                if let Some(v) = self.score(&d) {
                    feasible += 1;
                    if best.as_ref().is_none_or(|b| v > b.value) {
                        best = Some(Cell {
                            index: index.clone(),
                            value: v,
                        });
                    }
                }
                // Odometer over the schedule indices, last entry fastest.
                let mut k = index.len();
                loop {
                    if k == 2 {
                        break;
                    }
                    k -= 1;
                    index[k] += 1;
                    if index[k] < ns {
                        break;
                    }
                    index[k] = 0;
                }
                if index[2..].iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
        (best, feasible)
    }

    fn neighbour_slack(&self, best: &Cell) -> f64 {
        let lens: Vec<usize> = std::iter::once(self.spec.price.len())
            .chain(std::iter::once(self.spec.beta.len()))
            .chain(std::iter::repeat_n(self.spec.schedule.len(), self.vars))
            .collect();
        let mut slack = 0.0f64;
        for k in 0..best.index.len() {
            for step in [-1isize, 1] {
                let i = best.index[k] as isize + step;
                if i < 0 || i as usize >= lens[k] {
                    continue;
                }
                let mut nb = best.index.clone();
                nb[k] = i as usize;
                if let Some(v) = self.score(&self.decision(&nb)) {
                    slack = slack.max((v - best.value).abs());
                }
            }
        }
        slack
    }
}

/// Probe sizes for [`local_improvement_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSteps {
    pub power: f64,
    pub beta: f64,
    pub schedule: f64,
    /// Each direction is probed at `1..=multiples` times its step.
    pub multiples: usize,
    pub tol: f64,
}

impl Default for ProbeSteps {
    fn default() -> Self {
        ProbeSteps {
            power: 1e-3,
            beta: 1e-3,
            schedule: 1e-3,
            multiples: 3,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub coordinate: String,
    pub step: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalReport {
    pub base_feasible: bool,
    pub improvements: Vec<Improvement>,
    /// Largest gain over all feasible probes (may be negative).
    pub best_gain: f64,
    /// Probes with no feasible point along their direction.
    pub boundary: usize,
    pub probes: usize,
}

/// Probe `±k·step` along every coordinate: the power, the emitting time
/// (once with the schedule fixed and once with window shares fixed) and each
/// schedule entry. A probe leaving the feasible set is pulled back along its
/// direction to the last feasible point.
pub fn local_improvement_check(
    point: &Decision,
    objective: Objective,
    net: &Network,
    cost: &CostModel,
    steps: &ProbeSteps,
) -> LocalReport {
    let base = objective.value(net, cost, point);
    let base_feasible = check_decision(point, net, cost).is_empty();
    let mut report = LocalReport {
        base_feasible,
        improvements: Vec::new(),
        best_gain: f64::NEG_INFINITY,
        boundary: 0,
        probes: 0,
    };
    let shares = point.shares();
    let vars = point.schedule.to_vec();
    let n = vars.len();

    let mut moves: Vec<(String, f64, Box<dyn Fn(f64) -> Decision + '_>)> = vec![
        (
            "power".into(),
            steps.power,
            Box::new(|h| Decision {
                power: point.power + h,
                ..point.clone()
            }),
        ),
        (
            "beta".into(),
            steps.beta,
            Box::new(|h| Decision {
                beta: point.beta + h,
                ..point.clone()
            }),
        ),
        (
            "beta(shares)".into(),
            steps.beta,
            Box::new(|h| {
                let b = point.beta + h;
                Decision {
                    power: point.power,
                    beta: b,
                    schedule: shares.scaled(b, 1.0 - b),
                }
            }),
        ),
    ];
    let names = schedule_names(net);
    for j in 0..n {
        let vars = vars.clone();
        moves.push((
            names[j].clone(),
            steps.schedule,
            Box::new(move |h| {
                let mut x = vars.clone();
                x[j] += h;
                Decision {
                    power: point.power,
                    beta: point.beta,
                    schedule: Schedule::from_slice(net, &x),
                }
            }),
        ));
    }

    let feasible = |d: &Decision| d.schedule.is_nonnegative() && check_decision(d, net, cost).is_empty();
    for (name, h, mv) in &moves {
        for sign in [-1.0, 1.0] {
            for m in 1..=steps.multiples.max(1) {
                report.probes += 1;
                let full = sign * h * m as f64;
                let mut probe = mv(full);
                let mut used = full;
                if !feasible(&probe) {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..40 {
                        let mid = 0.5 * (lo + hi);
                        if feasible(&mv(mid * full)) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    if lo < 1e-9 {
                        report.boundary += 1;
                        continue;
                    }
                    used = lo * full;
                    probe = mv(used);
                }
                let gain = objective.value(net, cost, &probe) - base;
                report.best_gain = report.best_gain.max(gain);
                if gain > steps.tol {
                    report.improvements.push(Improvement {
                        coordinate: name.clone(),
                        step: used,
                        gain,
                    });
                }
            }
        }
    }
    report
}

/// Human-readable names of the schedule entries in `[θ | ν | τ | μ]` order.
pub fn schedule_names(net: &Network) -> Vec<String> {
    let mut out = Vec::new();
    for (prefix, ids) in [
        ("theta", net.pwpds()),
        ("nu", net.awpds()),
        ("tau", net.hwpds()),
        ("mu", net.hwpds()),
    ] {
        out.extend(ids.iter().map(|i| format!("{prefix}[{i}]")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::radio::Device;
    use crate::solvers::{golden_section_max, ScalarProblem};

    fn single_pwpd() -> Network {
        Network::new(
            vec![Device::pwpd(2.0, 5.0, instances::DEFAULT_NOISE_W)],
            instances::default_environment(),
        )
        .unwrap()
    }

    #[test]
    fn price_axis_matches_golden_section() {
        let net = single_pwpd();
        let cost = instances::oracle_cost();
        let spec = GridSpec {
            price: Axis::Points(2001),
            beta: Axis::Fixed(0.5),
            schedule: Axis::Fixed(0.5),
            ..GridSpec::default()
        };
        let g = grid_search(Objective::Leader, &net, &cost, &spec).unwrap();
        let sched = Schedule::from_slice(&net, &[0.5]);
        let f = |p: f64| {
            let d = Decision {
                power: p,
                beta: 0.5,
                schedule: sched.clone(),
            };
            if check_decision(&d, &net, &cost).is_empty() {
                Objective::Leader.value(&net, &cost, &d)
            } else {
                f64::NEG_INFINITY
            }
        };
        let lo = net.device(0).snr_min.unwrap() / net.link(0).kappa();
        let opt = golden_section_max(&ScalarProblem::new(&f, lo, cost.p_s_max, 1e-10)).unwrap();
        let h = cost.p_s_max / 2000.0;
        assert!((g.best.power - opt.x).abs() <= h, "{} vs {}", g.best.power, opt.x);
        assert!(g.value <= opt.value + 1e-12);
    }

    #[test]
    fn empty_feasible_grid_is_no_trade() {
        let net = single_pwpd();
        let cost = instances::oracle_cost();
        let spec = GridSpec {
            price: Axis::Fixed(-1.0),
            beta: Axis::Fixed(0.5),
            schedule: Axis::Fixed(0.5),
            ..GridSpec::default()
        };
        let g = grid_search(Objective::Leader, &net, &cost, &spec).unwrap();
        assert_eq!(g.value, 0.0);
        assert_eq!(g.feasible, 0);
        assert_eq!(g.best, Decision::no_trade(&net));
    }

    #[test]
    fn cap_is_enforced() {
        let net = instances::trio(3.0);
        let spec = GridSpec {
            schedule: Axis::Points(100),
            ..GridSpec::default()
        };
        let r = grid_search(Objective::Welfare, &net, &instances::oracle_cost(), &spec);
        assert!(matches!(r, Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn welfare_grid_dominates_any_grid_point() {
        let net = instances::trio(3.0);
        let cost = instances::oracle_cost();
        let spec = GridSpec {
            price: Axis::Points(9),
            beta: Axis::Points(5),
            schedule: Axis::Points(5),
            ..GridSpec::default()
        };
        let w = grid_search(Objective::Welfare, &net, &cost, &spec).unwrap();
        let l = grid_search(Objective::Leader, &net, &cost, &spec).unwrap();
        assert!(w.value >= Objective::Welfare.value(&net, &cost, &l.best) - 1e-12);
        assert!(check_decision(&w.best, &net, &cost).is_empty());
    }

    #[test]
    fn perturbed_point_shows_improvement() {
        let net = instances::trio(3.0);
        let cost = instances::oracle_cost();
        let spec = GridSpec {
            price: Axis::Points(9),
            beta: Axis::Points(5),
            schedule: Axis::Points(5),
            ..GridSpec::default()
        };
        let g = grid_search(Objective::Leader, &net, &cost, &spec).unwrap();
        let mut worse = g.best.clone();
        worse.schedule = worse.schedule.scaled(0.5, 0.5);
        let r = local_improvement_check(&worse, Objective::Leader, &net, &cost, &ProbeSteps::default());
        assert!(!r.improvements.is_empty());
    }

    #[test]
    fn deterministic() {
        let net = instances::trio(3.0);
        let cost = instances::oracle_cost();
        let spec = GridSpec {
            price: Axis::Points(7),
            beta: Axis::Points(4),
            schedule: Axis::Points(4),
            ..GridSpec::default()
        };
        let a = grid_search(Objective::Leader, &net, &cost, &spec).unwrap();
        let b = grid_search(Objective::Leader, &net, &cost, &spec).unwrap();
        assert_eq!(a, b);
    }
}
