//! Closed-form coefficient tables of the block subproblems. Each table
//! evaluates the leader objective restricted to one block with the other
//! blocks frozen, so it can be compared term by term with a direct
//! evaluation of the utility.

use std::f64::consts::LOG2_E;

use nalgebra::DMatrix;

use crate::game::CostModel;
use crate::solvers::ConcaveObjective;
use crate::throughput::{xlog, Network, Schedule};

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() * LOG2_E
}

fn bs_rate(net: &Network, i: usize, power: f64) -> f64 {
    log2_1p(net.link(i).kappa() * power)
}

/// Leader utility as a function of the price with `β` and `ψ` frozen:
///
/// `G(p_l) = Σ c_p1·log₂(1 + c_p2·x) + Σ c_a3·log₂(1 + c_a4·x)
///         + Σ [c_h5·log₂(1 + c_h6·x) + c_h7·log₂(1 + c_h8·x)] − β·p_l·x/(2a_m)`
///
/// with `x = p_l − b_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub a_m: f64,
    pub b_m: f64,
    pub beta: f64,
    /// `(c_p1, c_p2)` per PWPD.
    pub pwpd: Vec<(f64, f64)>,
    /// `(c_a3, c_a4)` per AWPD.
    pub awpd: Vec<(f64, f64)>,
    /// `(c_h5, c_h6, c_h7, c_h8)` per HWPD.
    pub hwpd: Vec<[f64; 4]>,
}

impl PriceTable {
    pub fn new(net: &Network, cost: &CostModel, beta: f64, sched: &Schedule) -> Self {
        let pr = cost.price_per_bit;
        let (ob, od) = (net.env().bandwidth_backscatter, net.env().bandwidth_active);
        let two_a = 2.0 * cost.a_m;
        let pwpd = net
            .pwpds()
            .iter()
            .zip(&sched.theta)
            .map(|(&i, &t)| (pr * ob * t, net.link(i).kappa() / two_a))
            .collect();
        let awpd = net
            .awpds()
            .iter()
            .zip(&sched.nu)
            .map(|(&i, &nu)| {
                if nu > 0.0 {
                    (pr * od * nu, net.link(i).delta() * beta / (nu * two_a))
                } else {
                    (0.0, 0.0)
                }
            })
            .collect();
        let hwpd = net
            .hwpds()
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let (tau, mu) = (sched.tau[k], sched.mu[k]);
                let link = net.link(i);
                let (c7, c8) = if mu > 0.0 {
                    (pr * od * mu, link.delta() * (beta - tau).max(0.0) / (two_a * mu))
                } else {
                    (0.0, 0.0)
                };
                [pr * ob * tau, link.kappa() / two_a, c7, c8]
            })
            .collect();
        PriceTable {
            a_m: cost.a_m,
            b_m: cost.b_m,
            beta,
            pwpd,
            awpd,
            hwpd,
        }
    }

    pub fn value(&self, price: f64) -> f64 {
        let x = price - self.b_m;
        let p: f64 = self.pwpd.iter().map(|&(c1, c2)| c1 * log2_1p(c2 * x)).sum();
        let a: f64 = self.awpd.iter().map(|&(c3, c4)| c3 * log2_1p(c4 * x)).sum();
        let h: f64 = self
            .hwpd
            .iter()
            .map(|c| c[0] * log2_1p(c[1] * x) + c[2] * log2_1p(c[3] * x))
            .sum();
        p + a + h - self.beta * price * x / (2.0 * self.a_m)
    }
}

/// Utility as a function of `β` with the power and the schedule frozen:
///
/// `Ĝ(β) = Σ ĉ_a1·log₂(1 + ĉ_a2·β) + Σ ĉ_h3·log₂(1 + ĉ_h4·(β − ĉ_h5)) − ĉ6·β + Ĉ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTable {
    /// `(ĉ_a1, ĉ_a2)` per AWPD.
    pub awpd: Vec<(f64, f64)>,
    /// `(ĉ_h3, ĉ_h4, ĉ_h5)` per HWPD.
    pub hwpd: Vec<[f64; 3]>,
    /// Energy cost per unit of emitting time.
    pub c6: f64,
    /// Backscatter revenue, which does not depend on `β`.
    pub constant: f64,
}

impl BetaTable {
    /// `unit_cost` is the price paid per watt of beacon power.
    pub fn new(net: &Network, cost: &CostModel, power: f64, unit_cost: f64, sched: &Schedule) -> Self {
        let pr = cost.price_per_bit;
        let od = net.env().bandwidth_active;
        let awpd = net
            .awpds()
            .iter()
            .zip(&sched.nu)
            .map(|(&i, &nu)| {
                if nu > 0.0 {
                    (pr * od * nu, net.link(i).delta() * power / nu)
                } else {
                    (0.0, 0.0)
                }
            })
            .collect();
        let hwpd = net
            .hwpds()
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let (tau, mu) = (sched.tau[k], sched.mu[k]);
                if mu > 0.0 {
                    [pr * od * mu, net.link(i).delta() * power / mu, tau]
                } else {
                    [0.0, 0.0, tau]
                }
            })
            .collect();
        BetaTable {
            awpd,
            hwpd,
            c6: unit_cost * power,
            constant: pr * net.throughput_backscatter(sched, power),
        }
    }

    pub fn value(&self, beta: f64) -> f64 {
        let a: f64 = self.awpd.iter().map(|&(c1, c2)| c1 * log2_1p(c2 * beta)).sum();
        let h: f64 = self.hwpd.iter().map(|c| c[0] * log2_1p(c[1] * (beta - c[2]))).sum();
        a + h - self.c6 * beta + self.constant
    }
}

/// Utility as a function of `β` with the power and the window shares
/// frozen, so every schedule entry scales with its window:
///
/// `U(β) = ℓ·β + Σ w·(1 − β)·log₂(1 + a·β/(1 − β))`.
///
/// Each summand is the perspective of a concave function composed with an
/// affine map, so `U` is concave on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareBetaTable {
    /// Backscatter revenue minus energy cost per unit of `β`.
    pub linear: f64,
    /// `(w, a)` per active slot (AWPDs first, then HWPDs).
    pub terms: Vec<(f64, f64)>,
}

impl ShareBetaTable {
    pub fn new(net: &Network, cost: &CostModel, power: f64, unit_cost: f64, shares: &Schedule) -> Self {
        let pr = cost.price_per_bit;
        let (ob, od) = (net.env().bandwidth_backscatter, net.env().bandwidth_active);
        let bs: f64 = net
            .pwpds()
            .iter()
            .zip(&shares.theta)
            .chain(net.hwpds().iter().zip(&shares.tau))
            .map(|(&i, &s)| s * bs_rate(net, i, power))
            .sum();
        let mut terms = Vec::new();
        for (&i, &s) in net.awpds().iter().zip(&shares.nu) {
            if s > 0.0 {
                terms.push((pr * od * s, net.link(i).delta() * power / s));
            }
        }
        for (k, &i) in net.hwpds().iter().enumerate() {
            let (st, sm) = (shares.tau[k], shares.mu[k]);
            if sm > 0.0 {
                terms.push((pr * od * sm, net.link(i).delta() * (1.0 - st).max(0.0) * power / sm));
            }
        }
        ShareBetaTable {
            linear: pr * ob * bs - unit_cost * power,
            terms,
        }
    }

    pub fn value(&self, beta: f64) -> f64 {
        let act: f64 = self.terms.iter().map(|&(w, a)| w * xlog(1.0 - beta, a * beta)).sum();
        self.linear * beta + act
    }
}

/// Utility as a function of the schedule `[θ | ν | τ | μ]` with power and
/// `β` frozen:
///
/// `G̃(ψ) = Σ c̃_p1·θ + w·Σ ν·log₂(1 + c̃_a2/ν)
///        + Σ [c̃_h3·τ + w·μ·log₂(1 + (c̃_h4 − c̃_h5·τ)/μ)] + C̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTable {
    /// `c̃_p1` per PWPD.
    pub pwpd: Vec<f64>,
    /// `c̃_a2` per AWPD.
    pub awpd: Vec<f64>,
    /// `(c̃_h3, c̃_h4, c̃_h5)` per HWPD.
    pub hwpd: Vec<[f64; 3]>,
    /// Revenue weight of active transmission, `p_r·Ω_D`.
    pub w: f64,
    /// Energy cost, `−unit_cost·β·P`.
    pub constant: f64,
}

impl ScheduleTable {
    pub fn new(net: &Network, cost: &CostModel, power: f64, beta: f64, unit_cost: f64) -> Self {
        let pr = cost.price_per_bit;
        let ob = net.env().bandwidth_backscatter;
        ScheduleTable {
            pwpd: net.pwpds().iter().map(|&i| pr * ob * bs_rate(net, i, power)).collect(),
            awpd: net.awpds().iter().map(|&i| net.link(i).delta() * beta * power).collect(),
            hwpd: net
                .hwpds()
                .iter()
                .map(|&i| {
                    let d = net.link(i).delta();
                    [pr * ob * bs_rate(net, i, power), d * beta * power, d * power]
                })
                .collect(),
            w: pr * net.env().bandwidth_active,
            constant: -unit_cost * beta * power,
        }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let (np, na, nh) = (self.pwpd.len(), self.awpd.len(), self.hwpd.len());
        (np, np + na, np + na + nh)
    }

    pub fn value_of(&self, sched: &Schedule) -> f64 {
        self.value(&sched.to_vec())
    }
}

const L: f64 = LOG2_E;

impl ConcaveObjective for ScheduleTable {
    fn dim(&self) -> usize {
        self.pwpd.len() + self.awpd.len() + 2 * self.hwpd.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().any(|&v| v < 0.0) {
            return f64::NEG_INFINITY;
        }
        let (o_a, o_t, o_m) = self.offsets();
        let mut v = self.constant;
        for (k, c) in self.pwpd.iter().enumerate() {
            v += c * x[k];
        }
        for (k, c) in self.awpd.iter().enumerate() {
            v += self.w * xlog(x[o_a + k], *c);
        }
        for (k, c) in self.hwpd.iter().enumerate() {
            let (tau, mu) = (x[o_t + k], x[o_m + k]);
            let y = c[1] - c[2] * tau;
            if y < -1e-12 * c[1].abs().max(1e-300) {
                return f64::NEG_INFINITY;
            }
            v += c[0] * tau + self.w * xlog(mu, y.max(0.0));
        }
        v
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let (o_a, o_t, o_m) = self.offsets();
        g[..o_a].copy_from_slice(&self.pwpd);
        for (k, &c) in self.awpd.iter().enumerate() {
            let nu = x[o_a + k];
            g[o_a + k] = self.w * L * ((c / nu).ln_1p() - c / (nu + c));
        }
        for (k, c) in self.hwpd.iter().enumerate() {
            let (tau, mu) = (x[o_t + k], x[o_m + k]);
            let y = (c[1] - c[2] * tau).max(0.0);
            g[o_m + k] = self.w * L * ((y / mu).ln_1p() - y / (mu + y));
            g[o_t + k] = c[0] - c[2] * self.w * L * mu / (mu + y);
        }
    }

    fn hessian(&self, x: &[f64], h: &mut DMatrix<f64>) {
        h.fill(0.0);
        let (o_a, o_t, o_m) = self.offsets();
        for (k, &c) in self.awpd.iter().enumerate() {
            let nu = x[o_a + k];
            h[(o_a + k, o_a + k)] = -self.w * L * c * c / (nu * (nu + c).powi(2));
        }
        for (k, c) in self.hwpd.iter().enumerate() {
            let (t, m) = (o_t + k, o_m + k);
            let (tau, mu) = (x[t], x[m]);
            let y = (c[1] - c[2] * tau).max(0.0);
            let s2 = (mu + y).powi(2);
            h[(m, m)] = -self.w * L * y * y / (mu * s2);
            h[(t, t)] = -self.w * L * c[2] * c[2] * mu / s2;
            let cross = -c[2] * self.w * L * y / s2;
            h[(t, m)] = cross;
            h[(m, t)] = cross;
        }
    }
}

/// `q₁ = ½(p_l − b_m)(1 + β)`, `q₂ = ½(p_l − b_m)(1 − β)`.
pub fn to_q(price: f64, beta: f64, b_m: f64) -> (f64, f64) {
    let x = price - b_m;
    (0.5 * x * (1.0 + beta), 0.5 * x * (1.0 - beta))
}

/// Inverse of [`to_q`]. At `q₁ + q₂ = 0` the emitting time is not
/// identified and `fallback_beta` is returned.
pub fn from_q(q1: f64, q2: f64, b_m: f64, fallback_beta: f64) -> (f64, f64) {
    let s = q1 + q2;
    let beta = if s > 0.0 { (q1 - q2) / s } else { fallback_beta };
    (b_m + s, beta)
}

/// Leader utility in `(p_l, β)` with the schedule frozen:
///
/// `Q(p_l, β) = Σ c_p1·log₂(1 + c_p2·x) + Σ c_a3·log₂(1 + e_a4·β·x)
///            + Σ [c_h5·log₂(1 + c_h6·x) + c_h7·log₂(1 + e_h8·(β − τ)·x)] − β·p_l·x/(2a_m)`
///
/// with `x = p_l − b_m`. After the change of variables to `(q₁, q₂)` the
/// logarithms take affine arguments and the cost splits into a concave part
/// `−(q₁² + b_m q₁)/(2a_m)` and a convex part `(q₂² + b_m q₂)/(2a_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub a_m: f64,
    pub b_m: f64,
    /// `(c_p1, c_p2)` per PWPD.
    pub pwpd: Vec<(f64, f64)>,
    /// `(c_a3, e_a4)` per AWPD.
    pub awpd: Vec<(f64, f64)>,
    /// `(c_h5, c_h6, c_h7, e_h8, τ)` per HWPD.
    pub hwpd: Vec<[f64; 5]>,
}

/// `weight·log₂(1 + u·q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LogTerm {
    weight: f64,
    u: [f64; 2],
}

impl JointTable {
    pub fn new(net: &Network, cost: &CostModel, sched: &Schedule) -> Self {
        let pr = cost.price_per_bit;
        let (ob, od) = (net.env().bandwidth_backscatter, net.env().bandwidth_active);
        let two_a = 2.0 * cost.a_m;
        JointTable {
            a_m: cost.a_m,
            b_m: cost.b_m,
            pwpd: net
                .pwpds()
                .iter()
                .zip(&sched.theta)
                .map(|(&i, &t)| (pr * ob * t, net.link(i).kappa() / two_a))
                .collect(),
            awpd: net
                .awpds()
                .iter()
                .zip(&sched.nu)
                .map(|(&i, &nu)| {
                    if nu > 0.0 {
                        (pr * od * nu, net.link(i).delta() / (two_a * nu))
                    } else {
                        (0.0, 0.0)
                    }
                })
                .collect(),
            hwpd: net
                .hwpds()
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let (tau, mu) = (sched.tau[k], sched.mu[k]);
                    let link = net.link(i);
                    let (c7, e8) = if mu > 0.0 {
                        (pr * od * mu, link.delta() / (two_a * mu))
                    } else {
                        (0.0, 0.0)
                    };
                    [pr * ob * tau, link.kappa() / two_a, c7, e8, tau]
                })
                .collect(),
        }
    }

    pub fn value(&self, price: f64, beta: f64) -> f64 {
        let x = price - self.b_m;
        let p: f64 = self.pwpd.iter().map(|&(c1, c2)| c1 * log2_1p(c2 * x)).sum();
        let a: f64 = self.awpd.iter().map(|&(c3, e4)| c3 * log2_1p(e4 * beta * x)).sum();
        let h: f64 = self
            .hwpd
            .iter()
            .map(|c| c[0] * log2_1p(c[1] * x) + c[2] * log2_1p(c[3] * (beta - c[4]) * x))
            .sum();
        p + a + h - beta * price * x / (2.0 * self.a_m)
    }

    fn log_terms(&self) -> Vec<LogTerm> {
        let mut out = Vec::new();
        for &(c1, c2) in &self.pwpd {
            out.push(LogTerm {
                weight: c1,
                u: [c2, c2],
            });
        }
        for &(c3, e4) in &self.awpd {
            out.push(LogTerm {
                weight: c3,
                u: [e4, -e4],
            });
        }
        for c in &self.hwpd {
            out.push(LogTerm {
                weight: c[0],
                u: [c[1], c[1]],
            });
            out.push(LogTerm {
                weight: c[2],
                u: [c[3] * (1.0 - c[4]), -c[3] * (1.0 + c[4])],
            });
        }
        out.retain(|t| t.weight != 0.0);
        out
    }

    /// `Q̂(q₁, q₂) = Q_ccav + Q_cvex`.
    pub fn q_value(&self, q1: f64, q2: f64) -> f64 {
        let dc = self.dc_problem();
        let q = [q1, q2];
        dc.concave.value(&q) + dc.convex(q2)
    }

    pub fn dc_problem(&self) -> JointDc {
        JointDc {
            concave: JointConcave {
                terms: self.log_terms(),
                a_m: self.a_m,
                b_m: self.b_m,
            },
        }
    }
}

/// Concave part of `Q̂`: the logarithms minus `(q₁² + b_m q₁)/(2a_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConcave {
    terms: Vec<LogTerm>,
    a_m: f64,
    b_m: f64,
}

impl ConcaveObjective for JointConcave {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, q: &[f64]) -> f64 {
        let mut v = -(q[0] * q[0] + self.b_m * q[0]) / (2.0 * self.a_m);
        for t in &self.terms {
            let z = t.u[0] * q[0] + t.u[1] * q[1];
            if z <= -1.0 {
                return f64::NEG_INFINITY;
            }
            v += t.weight * log2_1p(z);
        }
        v
    }

    fn gradient(&self, q: &[f64], g: &mut [f64]) {
        g[0] = -(2.0 * q[0] + self.b_m) / (2.0 * self.a_m);
        g[1] = 0.0;
        for t in &self.terms {
            let z = 1.0 + t.u[0] * q[0] + t.u[1] * q[1];
            let s = t.weight * L / z;
            g[0] += s * t.u[0];
            g[1] += s * t.u[1];
        }
    }

    fn hessian(&self, q: &[f64], h: &mut DMatrix<f64>) {
        h.fill(0.0);
        h[(0, 0)] = -1.0 / self.a_m;
        for t in &self.terms {
            let z = 1.0 + t.u[0] * q[0] + t.u[1] * q[1];
            let s = -t.weight * L / (z * z);
            for i in 0..2 {
                for j in 0..2 {
                    h[(i, j)] += s * t.u[i] * t.u[j];
                }
            }
        }
    }
}

/// `Q̂` split for the convex–concave procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDc {
    pub concave: JointConcave,
}

impl JointDc {
    fn convex(&self, q2: f64) -> f64 {
        (q2 * q2 + self.concave.b_m * q2) / (2.0 * self.concave.a_m)
    }
}

impl crate::solvers::DcProblem for JointDc {
    fn concave(&self) -> &dyn ConcaveObjective {
        &self.concave
    }

    fn convex_value(&self, x: &[f64]) -> f64 {
        self.convex(x[1])
    }

    fn convex_gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = 0.0;
        g[1] = (2.0 * x[1] + self.concave.b_m) / (2.0 * self.concave.a_m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Decision, Objective};
    use crate::instances;
    use crate::solvers::numeric_gradient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, net: &Network, cost: &CostModel) -> Decision {
        let beta = rng.gen_range(0.05..0.95);
        let n = Schedule::zeros(net).len();
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s = Schedule::from_slice(net, &x);
        let (bs, act) = (s.backscatter_total(), s.active_total());
        let np = net.pwpds().len();
        let na = net.awpds().len();
        let nh = net.hwpds().len();
        for (j, v) in x.iter_mut().enumerate() {
            let is_bs = j < np || (j >= np + na && j < np + na + nh);
            *v *= if is_bs { 0.9 * beta / bs } else { 0.9 * (1.0 - beta) / act };
        }
        Decision {
            power: rng.gen_range(0.01..cost.p_s_max),
            beta,
            schedule: Schedule::from_slice(net, &x),
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn tables_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cost = instances::default_cost();
        for _ in 0..20 {
            let net = instances::random_small(&mut rng);
            let d = random_point(&mut rng, &net, &cost);
            let direct = Objective::Leader.value(&net, &cost, &d);
            let price = cost.price_for_power(d.power);
            let unit = price;
            assert!(close(PriceTable::new(&net, &cost, d.beta, &d.schedule).value(price), direct));
            assert!(close(BetaTable::new(&net, &cost, d.power, unit, &d.schedule).value(d.beta), direct));
            let shares = d.shares();
            assert!(close(ShareBetaTable::new(&net, &cost, d.power, unit, &shares).value(d.beta), direct));
            let st = ScheduleTable::new(&net, &cost, d.power, d.beta, unit);
            assert!(close(st.value_of(&d.schedule), direct));
            assert!(close(JointTable::new(&net, &cost, &d.schedule).value(price, d.beta), direct));
        }
    }

    #[test]
    fn q_round_trip() {
        for (p, b) in [(5.5, 0.3), (12.0, 0.99), (5.0 + 1e-3, 0.5), (9.0, 1.0)] {
            let (q1, q2) = to_q(p, b, 5.0);
            let (p2, b2) = from_q(q1, q2, 5.0, 0.5);
            assert!((p - p2).abs() <= 1e-12 * p && (b - b2).abs() <= 1e-12, "{p} {b} -> {p2} {b2}");
        }
        assert_eq!(from_q(0.0, 0.0, 5.0, 0.25), (5.0, 0.25));
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cost = instances::default_cost();
        for _ in 0..10 {
            let net = instances::random_small(&mut rng);
            let d = random_point(&mut rng, &net, &cost);
            let st = ScheduleTable::new(&net, &cost, d.power, d.beta, cost.price_for_power(d.power));
            let x = d.schedule.to_vec();
            let mut g = vec![0.0; x.len()];
            st.gradient(&x, &mut g);
            let num = numeric_gradient(&|y| st.value(y), &x, 1e-7);
            for (a, b) in g.iter().zip(&num) {
                assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{a} vs {b}");
            }

            let dc = JointTable::new(&net, &cost, &d.schedule).dc_problem();
            let (q1, q2) = to_q(cost.price_for_power(d.power), d.beta, cost.b_m);
            let mut g = [0.0; 2];
            dc.concave.gradient(&[q1, q2], &mut g);
            let num = numeric_gradient(&|y| dc.concave.value(y), &[q1, q2], 1e-6);
            for (a, b) in g.iter().zip(&num) {
                assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }
}
