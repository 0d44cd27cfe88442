//! Comparison scenarios: trade at a fixed price, cooperative welfare
//! maximisation, the price of anarchy, and fixed transmission modes.

use crate::game::{check_decision, CostModel, Decision, GameOutcome, Objective};
use crate::schemes::{default_init, equal_split, power_step_fixed, solve, Mask, Scheme, SolverOptions};
use crate::throughput::{Network, Schedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    FixedPrice(f64),
    SocialWelfare,
    /// Backscatter only.
    Bbcm,
    /// Harvest-then-transmit only.
    Httcm,
    /// `β = 0.5` and equal slots; only the price moves.
    Tdma,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::FixedPrice(_) => "fixed-price",
            BaselineKind::SocialWelfare => "welfare",
            BaselineKind::Bbcm => "bbcm",
            BaselineKind::Httcm => "httcm",
            BaselineKind::Tdma => "tdma",
        }
    }
}

/// Half of the widest price margin, `b_m + a_m·P_max`.
pub fn default_fixed_price(cost: &CostModel) -> f64 {
    cost.b_m + cost.a_m * cost.p_s_max
}

/// The ISP buys whatever power it likes at a price the ESP fixed up front.
pub fn solve_fixed_price(
    net: &Network,
    cost: &CostModel,
    price: f64,
    init: Option<&Decision>,
    opts: &SolverOptions,
) -> Result<GameOutcome> {
    if !(price >= cost.b_m) || !price.is_finite() {
        return Err(Error::config("price", format!("fixed price {price} is below b_m = {}", cost.b_m)));
    }
    let objective = Objective::FixedPrice { price };
    Ok(solve(objective, Scheme::Pa, net, cost, Mask::ALL, init, opts)?.outcome)
}

/// Both providers maximise the sum of their utilities. A feasible `init`
/// is used as an extra starting point next to the default ones, so the
/// result is never worse than `init`.
pub fn solve_social_welfare(
    net: &Network,
    cost: &CostModel,
    init: Option<&Decision>,
    opts: &SolverOptions,
) -> Result<GameOutcome> {
    let objective = Objective::Welfare;
    let mut best = solve(objective, Scheme::Pa, net, cost, Mask::ALL, None, opts)?;
    if let Some(d) = init.filter(|d| check_decision(d, net, cost).is_empty()) {
        let warm = solve(objective, Scheme::Pa, net, cost, Mask::ALL, Some(d), opts)?;
        if objective.value(net, cost, &warm.decision) > objective.value(net, cost, &best.decision) {
            best = warm;
        }
    }
    Ok(best.outcome)
}

/// Price of anarchy of a Stackelberg outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Efficiency {
    Ratio(f64),
    /// No positive welfare is reachable, so the ratio is undefined.
    NoMarket,
}

impl Efficiency {
    pub fn ratio(self) -> Option<f64> {
        match self {
            Efficiency::Ratio(r) => Some(r),
            Efficiency::NoMarket => None,
        }
    }
}

/// Welfare at the Stackelberg outcome over the welfare optimum, clamped
/// below at zero.
pub fn price_of_anarchy(stackelberg: &GameOutcome, welfare_opt: &GameOutcome) -> Efficiency {
    if !(welfare_opt.u_social > 0.0) {
        return Efficiency::NoMarket;
    }
    let num = if stackelberg.negotiated { stackelberg.u_social } else { 0.0 };
    Efficiency::Ratio((num / welfare_opt.u_social).max(0.0))
}

/// The Stackelberg game restricted to one transmission mode.
pub fn solve_fixed_mode(
    net: &Network,
    cost: &CostModel,
    mode: BaselineKind,
    scheme: Scheme,
    opts: &SolverOptions,
) -> Result<GameOutcome> {
    match mode {
        BaselineKind::Bbcm => Ok(solve(Objective::Leader, scheme, net, cost, Mask::BACKSCATTER, None, opts)?.outcome),
        BaselineKind::Httcm => Ok(solve(Objective::Leader, scheme, net, cost, Mask::ACTIVE, None, opts)?.outcome),
        BaselineKind::Tdma => solve_tdma(net, cost),
        other => Err(Error::config("mode", format!("{} is not a transmission mode", other.name()))),
    }
}

fn solve_tdma(net: &Network, cost: &CostModel) -> Result<GameOutcome> {
    let beta = 0.5;
    let on = vec![true; Schedule::zeros(net).len()];
    let schedule = equal_split(net, beta, &on);
    let objective = Objective::Leader;
    let Some(d) = power_step_fixed(objective, net, cost, beta, &schedule)? else {
        return Ok(GameOutcome::no_trade(net, cost, 1, vec![0.0], true));
    };
    let u = objective.value(net, cost, &d);
    Ok(GameOutcome::from_decision(net, cost, objective, &d, 1, vec![u], true))
}

/// Starting point the iterative solvers use for `mode`.
pub fn baseline_init(net: &Network, cost: &CostModel, mode: BaselineKind) -> Option<Decision> {
    let mask = match mode {
        BaselineKind::Bbcm => Mask::BACKSCATTER,
        BaselineKind::Httcm => Mask::ACTIVE,
        _ => Mask::ALL,
    };
    default_init(net, cost, mask)
}
