//! The two players and the rules of the trade.
//!
//! The ISP (leader) announces a price `p_l`, an emitting time `β` and a
//! device schedule `ψ`; the ESP (follower) answers with beacon power
//! `P_S = (p_l − b_m)/(2a_m)`, the unique maximiser of its quadratic-cost
//! profit. Every decision in this crate is carried as a [`Decision`] whose
//! primary variable is `P_S`; the leader's price follows from the follower
//! response.

use std::fmt;

use crate::throughput::{Network, Schedule};

/// Relative slack accepted by the feasibility checks.
pub const FEAS_TOL: f64 = 1e-9;

/// ESP operating cost `a_m x² + b_m x`, the regulatory power cap and the
/// ISP's revenue per delivered bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub a_m: f64,
    pub b_m: f64,
    pub p_s_max: f64,
    pub price_per_bit: f64,
}

impl CostModel {
    pub fn new(a_m: f64, b_m: f64, p_s_max: f64, price_per_bit: f64) -> crate::Result<Self> {
        let c = CostModel {
            a_m,
            b_m,
            p_s_max,
            price_per_bit,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.a_m > 0.0 && self.a_m.is_finite()) {
            return Err(Error::config("cost.a_m", "must be > 0"));
        }
        if !(self.b_m >= 0.0 && self.b_m.is_finite()) {
            return Err(Error::config("cost.b_m", "must be >= 0"));
        }
        if !(self.p_s_max > 0.0 && self.p_s_max.is_finite()) {
            return Err(Error::config("cost.p_s_max", "must be > 0"));
        }
        if !(self.price_per_bit >= 0.0 && self.price_per_bit.is_finite()) {
            return Err(Error::config("cost.price_per_bit", "must be >= 0"));
        }
        Ok(())
    }

    /// Operating cost `F(x)` of supplying `x` watts for a whole frame.
    pub fn operating_cost(&self, x: f64) -> f64 {
        self.a_m * x * x + self.b_m * x
    }

    /// Price at which the follower's best response is `power`.
    pub fn price_for_power(&self, power: f64) -> f64 {
        self.b_m + 2.0 * self.a_m * power
    }

    /// Highest price that keeps the best response under the power cap.
    pub fn max_price(&self) -> f64 {
        self.price_for_power(self.p_s_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderStrategy {
    pub price: f64,
    pub beta: f64,
    pub schedule: Schedule,
}

/// A point of the joint decision space with beacon power as the primary
/// variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub power: f64,
    pub beta: f64,
    pub schedule: Schedule,
}

impl Decision {
    pub fn no_trade(net: &Network) -> Self {
        Decision {
            power: 0.0,
            beta: 0.0,
            schedule: Schedule::zeros(net),
        }
    }

    /// Window shares of the schedule: backscatter entries over `β`, active
    /// entries over `1 − β` (zero when the window is empty).
    pub fn shares(&self) -> Schedule {
        let bs = if self.beta > 0.0 { 1.0 / self.beta } else { 0.0 };
        let act = if self.beta < 1.0 { 1.0 / (1.0 - self.beta) } else { 0.0 };
        self.schedule.scaled(bs, act)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerResponse {
    pub power: f64,
    /// The price did not cover the linear cost; the follower supplies nothing.
    pub below_cost: bool,
}

/// Closed-form best response `(p_l − b_m)/(2a_m)`. The power cap is the
/// leader's constraint and is not applied here.
pub fn follower_best_response(price: f64, cost: &CostModel) -> FollowerResponse {
    if price < cost.b_m {
        FollowerResponse {
            power: 0.0,
            below_cost: true,
        }
    } else {
        FollowerResponse {
            power: (price - cost.b_m) / (2.0 * cost.a_m),
            below_cost: false,
        }
    }
}

/// `β·(p_l·P_S − a_m·P_S² − b_m·P_S)`.
pub fn follower_utility(p_s: f64, price: f64, beta: f64, cost: &CostModel) -> f64 {
    beta * (price * p_s - cost.operating_cost(p_s))
}

/// `p_r·R_sum − p_l·β·P_S` at an arbitrary purchase `p_s`.
pub fn leader_utility(strategy: &LeaderStrategy, net: &Network, cost: &CostModel, p_s: f64) -> f64 {
    cost.price_per_bit * net.rsum(&strategy.schedule, strategy.beta, p_s) - strategy.price * strategy.beta * p_s
}

/// The leader's utility with the follower response substituted.
pub fn leader_utility_at_response(strategy: &LeaderStrategy, net: &Network, cost: &CostModel) -> f64 {
    let p = follower_best_response(strategy.price, cost).power;
    leader_utility(strategy, net, cost, p)
}

/// Social welfare `p_r·R_sum − β·F(P_S)`: the two utilities summed, with the
/// price transfer cancelling.
pub fn social_welfare(net: &Network, cost: &CostModel, d: &Decision) -> f64 {
    cost.price_per_bit * net.rsum(&d.schedule, d.beta, d.power) - d.beta * cost.operating_cost(d.power)
}

/// The three objectives that share the same feasible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Stackelberg leader: the price is tied to power through the follower.
    Leader,
    /// Non-negotiated trade at a price fixed by the ESP; the ISP picks the power.
    FixedPrice { price: f64 },
    /// Cooperative welfare maximisation.
    Welfare,
}

impl Objective {
    /// Energy cost paid per unit of purchased power-time at `power`.
    pub fn unit_cost(&self, cost: &CostModel, power: f64) -> f64 {
        match *self {
            Objective::Leader => cost.price_for_power(power),
            Objective::FixedPrice { price } => price,
            Objective::Welfare => cost.a_m * power + cost.b_m,
        }
    }

    pub fn value(&self, net: &Network, cost: &CostModel, d: &Decision) -> f64 {
        cost.price_per_bit * net.rsum(&d.schedule, d.beta, d.power)
            - self.unit_cost(cost, d.power) * d.beta * d.power
    }

    /// The price recorded in an outcome: the announced price for the leader
    /// and the fixed-price trade, and marginal cost for the welfare optimum.
    pub fn price(&self, cost: &CostModel, power: f64) -> f64 {
        match *self {
            Objective::FixedPrice { price } => price,
            _ => cost.price_for_power(power),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub strategy: LeaderStrategy,
    pub p_s_star: f64,
    pub u_leader: f64,
    pub u_follower: f64,
    pub u_social: f64,
    pub negotiated: bool,
    pub iterations: usize,
    /// Objective value after every block update, starting at the initial point.
    pub trace: Vec<f64>,
    /// `false` when the iteration cap was hit before the stopping rule fired.
    pub converged: bool,
}

impl GameOutcome {
    pub(crate) fn from_decision(
        net: &Network,
        cost: &CostModel,
        objective: Objective,
        d: &Decision,
        iterations: usize,
        trace: Vec<f64>,
        converged: bool,
    ) -> Self {
        let value = objective.value(net, cost, d);
        if !(value > 0.0) {
            return Self::no_trade(net, cost, iterations, trace, converged);
        }
        let price = objective.price(cost, d.power);
        let u_follower = follower_utility(d.power, price, d.beta, cost);
        let u_social = social_welfare(net, cost, d);
        GameOutcome {
            strategy: LeaderStrategy {
                price,
                beta: d.beta,
                schedule: d.schedule.clone(),
            },
            p_s_star: d.power,
            u_leader: u_social - u_follower,
            u_follower,
            u_social,
            negotiated: true,
            iterations,
            trace,
            converged,
        }
    }

    pub(crate) fn no_trade(
        net: &Network,
        cost: &CostModel,
        iterations: usize,
        trace: Vec<f64>,
        converged: bool,
    ) -> Self {
        GameOutcome {
            strategy: LeaderStrategy {
                price: cost.b_m,
                beta: 0.0,
                schedule: Schedule::zeros(net),
            },
            p_s_star: 0.0,
            u_leader: 0.0,
            u_follower: 0.0,
            u_social: 0.0,
            negotiated: false,
            iterations,
            trace,
            converged,
        }
    }

    pub fn decision(&self) -> Decision {
        Decision {
            power: self.p_s_star,
            beta: self.strategy.beta,
            schedule: self.strategy.schedule.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// `0 ≤ P_S ≤ P_S^max`.
    BeaconPower,
    /// Active transmit power window of a device with active time.
    TransmitPower,
    /// Harvested energy window.
    Energy,
    /// Backscatter SNR floor of a device with backscatter time.
    Snr,
    /// `0 ≤ Σθ + Στ ≤ β ≤ 1` and non-negative backscatter times.
    BackscatterWindow,
    /// `Σν + Σμ ≤ 1 − β` and non-negative active times.
    ActiveWindow,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintKind::BeaconPower => "beacon-power",
            ConstraintKind::TransmitPower => "transmit-power",
            ConstraintKind::Energy => "energy",
            ConstraintKind::Snr => "snr",
            ConstraintKind::BackscatterWindow => "backscatter-window",
            ConstraintKind::ActiveWindow => "active-window",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: ConstraintKind,
    /// Index into [`Network::devices`] for per-device constraints.
    pub device: Option<usize>,
    /// Amount by which the constraint is exceeded, in its own units.
    pub margin: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.device {
            Some(d) => write!(f, "{} (device {d}) by {:e}", self.constraint, self.margin),
            None => write!(f, "{} by {:e}", self.constraint, self.margin),
        }
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn le(&mut self, lhs: f64, rhs: f64, kind: ConstraintKind, device: Option<usize>) {
        let slack = FEAS_TOL * rhs.abs().max(lhs.abs()).max(1e-300) + 1e-300;
        if !(lhs <= rhs + slack) {
            self.out.push(Violation {
                constraint: kind,
                device,
                margin: lhs - rhs,
            });
        }
    }
}

/// Check a strategy with the follower's response substituted. An empty list
/// means feasible.
pub fn check_feasibility(strategy: &LeaderStrategy, net: &Network, cost: &CostModel) -> Vec<Violation> {
    let mut extra = Vec::new();
    if strategy.price < cost.b_m {
        extra.push(Violation {
            constraint: ConstraintKind::BeaconPower,
            device: None,
            margin: (cost.b_m - strategy.price) / (2.0 * cost.a_m),
        });
    }
    let power = (strategy.price - cost.b_m) / (2.0 * cost.a_m);
    let d = Decision {
        power: power.max(0.0),
        beta: strategy.beta,
        schedule: strategy.schedule.clone(),
    };
    extra.extend(check_decision(&d, net, cost));
    extra
}

/// Check a decision with the beacon power given directly.
///
/// Transmit-power and SNR constraints bind only devices that hold a
/// non-zero slot of the corresponding kind.
pub fn check_decision(d: &Decision, net: &Network, cost: &CostModel) -> Vec<Violation> {
    use ConstraintKind::*;
    let mut c = Checker { out: Vec::new() };
    let (p, beta, s) = (d.power, d.beta, &d.schedule);

    c.le(-p, 0.0, BeaconPower, None);
    c.le(p, cost.p_s_max, BeaconPower, None);
    c.le(-beta, 0.0, BackscatterWindow, None);
    c.le(beta, 1.0, BackscatterWindow, None);
    for v in s.theta.iter().chain(&s.tau) {
        c.le(-v, 0.0, BackscatterWindow, None);
    }
    for v in s.nu.iter().chain(&s.mu) {
        c.le(-v, 0.0, ActiveWindow, None);
    }
    c.le(s.backscatter_total(), beta, BackscatterWindow, None);
    c.le(s.active_total(), 1.0 - beta, ActiveWindow, None);

    for (k, &i) in net.awpds().iter().enumerate() {
        let dev = net.device(i);
        let e = net.awpd_energy(k, beta, p);
        if let Some(b) = dev.energy {
            c.le(b.min, e, Energy, Some(i));
            c.le(e, b.max, Energy, Some(i));
        }
        let nu = s.nu[k];
        if nu > 0.0 {
            if let Some(b) = dev.tx_power {
                c.le(b.min * nu, e, TransmitPower, Some(i));
                c.le(e, b.max * nu, TransmitPower, Some(i));
            }
        }
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        let dev = net.device(i);
        let (tau, mu) = (s.tau[k], s.mu[k]);
        c.le(tau, beta, BackscatterWindow, Some(i));
        let e = net.hwpd_energy(k, beta, tau, p);
        if let Some(b) = dev.energy {
            c.le(b.min, e, Energy, Some(i));
            c.le(e, b.max, Energy, Some(i));
        }
        if mu > 0.0 {
            if let Some(b) = dev.tx_power {
                c.le(b.min * mu, e, TransmitPower, Some(i));
                c.le(e, b.max * mu, TransmitPower, Some(i));
            }
        }
        if tau > 0.0 {
            c.le(dev.snr_min.unwrap_or(0.0), net.link(i).kappa() * p, Snr, Some(i));
        }
    }
    for (k, &i) in net.pwpds().iter().enumerate() {
        if s.theta[k] > 0.0 {
            c.le(net.device(i).snr_min.unwrap_or(0.0), net.link(i).kappa() * p, Snr, Some(i));
        }
    }
    c.out
}

/// Probe sizes for [`verify_stackelberg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationGrid {
    /// Number of follower powers probed on `[0, 2·P_S^max]`.
    pub follower_points: usize,
    pub price_step: f64,
    pub beta_step: f64,
    pub schedule_step: f64,
    /// Probes per direction: multiples `1..=steps` of each step.
    pub steps: usize,
    pub tol: f64,
}

impl Default for PerturbationGrid {
    fn default() -> Self {
        PerturbationGrid {
            follower_points: 2001,
            price_step: 1e-2,
            beta_step: 1e-3,
            schedule_step: 1e-3,
            steps: 3,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackelbergReport {
    pub follower_optimal: bool,
    pub leader_locally_optimal: bool,
    /// Largest follower gain over the probed powers.
    pub follower_gain: f64,
    /// Largest leader gain over feasible single-block probes.
    pub leader_gain: f64,
    /// Probes skipped because they left the feasible set.
    pub boundary_probes: usize,
    pub probes: usize,
}

impl StackelbergReport {
    pub fn passed(&self) -> bool {
        self.follower_optimal && self.leader_locally_optimal
    }
}

/// Numerical certificate of the two equilibrium conditions: the follower
/// cannot gain by deviating from its power, and the leader cannot gain by a
/// feasible move of the price, the emitting time, or one schedule entry.
pub fn verify_stackelberg(
    outcome: &GameOutcome,
    net: &Network,
    cost: &CostModel,
    grid: &PerturbationGrid,
) -> StackelbergReport {
    let s = &outcome.strategy;
    let response = follower_best_response(s.price, cost).power;
    let u_star = follower_utility(response, s.price, s.beta, cost);
    let n = grid.follower_points.max(2);
    let follower_gain = (0..n)
        .map(|i| 2.0 * cost.p_s_max * i as f64 / (n - 1) as f64)
        .map(|p| follower_utility(p, s.price, s.beta, cost) - u_star)
        .fold(0.0f64, f64::max);

    let point = Decision {
        power: response,
        beta: s.beta,
        schedule: s.schedule.clone(),
    };
    let report = crate::oracle::local_improvement_check(
        &point,
        Objective::Leader,
        net,
        cost,
        &crate::oracle::ProbeSteps {
            power: grid.price_step / (2.0 * cost.a_m),
            beta: grid.beta_step,
            schedule: grid.schedule_step,
            multiples: grid.steps,
            tol: grid.tol,
        },
    );
    StackelbergReport {
        follower_optimal: follower_gain <= grid.tol,
        leader_locally_optimal: report.improvements.is_empty(),
        follower_gain,
        leader_gain: report.best_gain,
        boundary_probes: report.boundary,
        probes: report.probes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::solvers::{golden_section_max, ScalarProblem};

    fn cost() -> CostModel {
        CostModel::new(0.5, 0.0, 4.0, 1e-6).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let c = cost();
        assert_eq!(follower_best_response(0.0, &c).power, 0.0);
        assert!((follower_best_response(1.0, &c).power - 1.0).abs() < 1e-15);
        let c2 = CostModel::new(2.0, 3.0, 4.0, 1.0).unwrap();
        let r = follower_best_response(2.0, &c2);
        assert!(r.below_cost && r.power == 0.0);
        assert_eq!(follower_best_response(3.0, &c2).power, 0.0);
    }

    #[test]
    fn best_response_matches_line_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let c = CostModel::new(rng.gen_range(0.1..20.0), rng.gen_range(0.0..10.0), 4.0, 1.0).unwrap();
            let price = c.b_m + rng.gen_range(0.0..2.0 * c.a_m * c.p_s_max);
            let beta = rng.gen_range(0.1..1.0);
            let f = |x: f64| follower_utility(x, price, beta, &c);
            let opt = golden_section_max(&ScalarProblem::new(&f, 0.0, 10.0 * c.p_s_max, 1e-10)).unwrap();
            assert!((opt.x - follower_best_response(price, &c).power).abs() < 1e-6);
        }
    }

    #[test]
    fn follower_utility_cases() {
        let c = CostModel::new(1.5, 0.4, 4.0, 1.0).unwrap();
        assert_eq!(follower_utility(0.0, 3.0, 0.5, &c), 0.0);
        assert_eq!(follower_utility(2.0, 3.0, 0.0, &c), 0.0);
        let price = 3.0;
        let p = follower_best_response(price, &c).power;
        let expected = 0.5 * (price - c.b_m).powi(2) / (4.0 * c.a_m);
        assert!((follower_utility(p, price, 0.5, &c) - expected).abs() < 1e-12);
    }

    #[test]
    fn leader_utility_zero_revenue_is_negative() {
        let net = instances::trio(5.0);
        let c = CostModel::new(1.0, 0.5, 4.0, 0.0).unwrap();
        let s = LeaderStrategy {
            price: 2.0,
            beta: 0.5,
            schedule: Schedule {
                theta: vec![0.2],
                nu: vec![0.2],
                tau: vec![0.2],
                mu: vec![0.2],
            },
        };
        assert!((leader_utility(&s, &net, &c, 0.3) + 2.0 * 0.5 * 0.3).abs() < 1e-15);
        let z = LeaderStrategy {
            price: 2.0,
            beta: 0.0,
            schedule: Schedule::zeros(&net),
        };
        assert_eq!(leader_utility(&z, &net, &c, 0.3), 0.0);
    }

    #[test]
    fn zero_strategy_is_feasible() {
        let net = instances::trio(5.0);
        let c = instances::oracle_cost();
        let s = LeaderStrategy {
            price: c.b_m,
            beta: 0.0,
            schedule: Schedule::zeros(&net),
        };
        assert!(check_feasibility(&s, &net, &c).is_empty());
    }

    #[test]
    fn window_violation_detected() {
        let net = instances::trio(5.0);
        let c = instances::oracle_cost();
        let s = LeaderStrategy {
            price: c.b_m + 2.0 * c.a_m * 0.5,
            beta: 0.4,
            schedule: Schedule {
                theta: vec![0.3],
                nu: vec![0.0],
                tau: vec![0.2],
                mu: vec![0.0],
            },
        };
        let v = check_feasibility(&s, &net, &c);
        assert!(v
            .iter()
            .any(|v| v.constraint == ConstraintKind::BackscatterWindow && v.device.is_none()));
    }

    #[test]
    fn beacon_cap_violation_margin() {
        let net = instances::trio(5.0);
        let c = instances::oracle_cost();
        let s = LeaderStrategy {
            price: c.price_for_power(c.p_s_max + 0.5),
            beta: 0.0,
            schedule: Schedule::zeros(&net),
        };
        let v = check_feasibility(&s, &net, &c);
        let cap = v.iter().find(|v| v.constraint == ConstraintKind::BeaconPower).unwrap();
        assert!((cap.margin - 0.5).abs() < 1e-9);
    }

    #[test]
    fn shrinking_schedule_never_breaks_windows() {
        let net = instances::trio(5.0);
        let c = instances::oracle_cost();
        let d = Decision {
            power: 0.05,
            beta: 0.5,
            schedule: Schedule {
                theta: vec![0.3],
                nu: vec![0.3],
                tau: vec![0.2],
                mu: vec![0.2],
            },
        };
        for k in [1.0, 0.7, 0.3, 0.0] {
            let shrunk = Decision {
                schedule: d.schedule.scaled(k, k),
                ..d.clone()
            };
            assert!(check_decision(&shrunk, &net, &c).iter().all(|v| !matches!(
                v.constraint,
                ConstraintKind::BackscatterWindow | ConstraintKind::ActiveWindow
            )));
        }
    }
}
