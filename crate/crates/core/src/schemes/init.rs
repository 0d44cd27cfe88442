use super::steps::{power_interval, Mask};
use crate::game::{CostModel, Decision};
use crate::throughput::{Network, Schedule};

/// Equal split of each window among the entries allowed by `on`.
pub fn equal_split(net: &Network, beta: f64, on: &[bool]) -> Schedule {
    let (np, na, nh) = (net.pwpds().len(), net.awpds().len(), net.hwpds().len());
    let is_bs = |j: usize| j < np || (j >= np + na && j < np + na + nh);
    let n_bs = (0..on.len()).filter(|&j| on[j] && is_bs(j)).count();
    let n_act = (0..on.len()).filter(|&j| on[j] && !is_bs(j)).count();
    let x: Vec<f64> = (0..on.len())
        .map(|j| match (on[j], is_bs(j)) {
            (false, _) => 0.0,
            (true, true) => beta / n_bs as f64,
            (true, false) => (1.0 - beta) / n_act as f64,
        })
        .collect();
    Schedule::from_slice(net, &x)
}

fn mask_entries(net: &Network, mask: Mask) -> Vec<bool> {
    let mut on = Vec::new();
    on.extend(std::iter::repeat_n(mask.theta, net.pwpds().len()));
    on.extend(std::iter::repeat_n(mask.nu, net.awpds().len()));
    on.extend(std::iter::repeat_n(mask.tau, net.hwpds().len()));
    on.extend(std::iter::repeat_n(mask.mu, net.hwpds().len()));
    on
}

/// Starting point of the iterative schemes: `β = 0.5`, each window split
/// equally among the entries allowed by `mask`, and the power at the middle
/// of its feasible interval. Backscatter entries that cannot reach their SNR
/// floor at full beacon power are left out when the first attempt is
/// infeasible. `None` when no power is feasible even then.
pub fn default_init(net: &Network, cost: &CostModel, mask: Mask) -> Option<Decision> {
    let beta = 0.5;
    let mut on = mask_entries(net, mask);
    let attempt = |on: &[bool]| {
        let schedule = equal_split(net, beta, on);
        power_interval(net, cost, beta, &schedule).map(|(lo, hi)| Decision {
            power: 0.5 * (lo + hi),
            beta,
            schedule,
        })
    };
    if let Some(d) = attempt(&on) {
        return Some(d);
    }
    let np = net.pwpds().len();
    let na = net.awpds().len();
    let reachable = |i: usize| {
        let g = net.device(i).snr_min.unwrap_or(0.0);
        net.link(i).kappa() * cost.p_s_max >= g
    };
    for (k, &i) in net.pwpds().iter().enumerate() {
        on[k] &= reachable(i);
    }
    for (k, &i) in net.hwpds().iter().enumerate() {
        on[np + na + k] &= reachable(i);
    }
    attempt(&on)
}
