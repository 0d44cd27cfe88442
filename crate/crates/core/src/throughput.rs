//! Rate and energy formulas over a unit frame.
//!
//! The frame lasts one second, so "time fraction × rate" is bits and
//! "power × time" is joules. The beacon emits for `β` and sleeps for `1 − β`;
//! backscatter happens while it emits, active transmission while it sleeps.

use crate::error::{Error, Result};
use crate::radio::{link_coefficients, Device, DeviceKind, LinkCoefficients, RadioEnvironment};

/// Time allocation over the unit frame. Each vector is indexed by the
/// position of the device within its kind (see [`Network::pwpds`] etc.).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    /// Backscatter times of PWPDs.
    pub theta: Vec<f64>,
    /// Active times of AWPDs.
    pub nu: Vec<f64>,
    /// Backscatter times of HWPDs.
    pub tau: Vec<f64>,
    /// Active times of HWPDs.
    pub mu: Vec<f64>,
}

impl Schedule {
    pub fn zeros(net: &Network) -> Self {
        Schedule {
            theta: vec![0.0; net.pwpds().len()],
            nu: vec![0.0; net.awpds().len()],
            tau: vec![0.0; net.hwpds().len()],
            mu: vec![0.0; net.hwpds().len()],
        }
    }

    /// Σθ + Στ.
    pub fn backscatter_total(&self) -> f64 {
        self.theta.iter().sum::<f64>() + self.tau.iter().sum::<f64>()
    }

    /// Σν + Σμ.
    pub fn active_total(&self) -> f64 {
        self.nu.iter().sum::<f64>() + self.mu.iter().sum::<f64>()
    }

    pub fn len(&self) -> usize {
        self.theta.len() + self.nu.len() + self.tau.len() + self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat layout `[θ | ν | τ | μ]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.theta);
        v.extend_from_slice(&self.nu);
        v.extend_from_slice(&self.tau);
        v.extend_from_slice(&self.mu);
        v
    }

    pub fn from_slice(net: &Network, x: &[f64]) -> Self {
        let (p, a, h) = (net.pwpds().len(), net.awpds().len(), net.hwpds().len());
        assert_eq!(x.len(), p + a + 2 * h, "schedule vector length");
        Schedule {
            theta: x[..p].to_vec(),
            nu: x[p..p + a].to_vec(),
            tau: x[p + a..p + a + h].to_vec(),
            mu: x[p + a + h..].to_vec(),
        }
    }

    /// Scale the backscatter entries by `bs` and the active entries by `act`.
    pub fn scaled(&self, bs: f64, act: f64) -> Self {
        Schedule {
            theta: self.theta.iter().map(|v| v * bs).collect(),
            nu: self.nu.iter().map(|v| v * act).collect(),
            tau: self.tau.iter().map(|v| v * bs).collect(),
            mu: self.mu.iter().map(|v| v * act).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.theta
            .iter()
            .chain(&self.nu)
            .chain(&self.tau)
            .chain(&self.mu)
            .all(|v| *v >= 0.0)
    }
}

/// A device roster with its radio environment and precomputed link table.
#[derive(Debug, Clone)]
pub struct Network {
    devices: Vec<Device>,
    env: RadioEnvironment,
    coeffs: Vec<LinkCoefficients>,
    awpds: Vec<usize>,
    pwpds: Vec<usize>,
    hwpds: Vec<usize>,
}

impl Network {
    pub fn new(devices: Vec<Device>, env: RadioEnvironment) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::config("devices", "at least one device is required"));
        }
        env.validate()?;
        let mut coeffs = Vec::with_capacity(devices.len());
        for (i, d) in devices.iter().enumerate() {
            d.validate(&format!("devices[{i}]"))?;
            coeffs.push(link_coefficients(d, &env)?);
        }
        let of = |k: DeviceKind| -> Vec<usize> {
            devices
                .iter()
                .enumerate()
                .filter(|(_, d)| d.kind == k)
                .map(|(i, _)| i)
                .collect()
        };
        let (awpds, pwpds, hwpds) = (of(DeviceKind::Awpd), of(DeviceKind::Pwpd), of(DeviceKind::Hwpd));
        Ok(Network {
            devices,
            env,
            coeffs,
            awpds,
            pwpds,
            hwpds,
        })
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn env(&self) -> &RadioEnvironment {
        &self.env
    }

    pub fn coeffs(&self) -> &[LinkCoefficients] {
        &self.coeffs
    }

    pub fn awpds(&self) -> &[usize] {
        &self.awpds
    }

    pub fn pwpds(&self) -> &[usize] {
        &self.pwpds
    }

    pub fn hwpds(&self) -> &[usize] {
        &self.hwpds
    }

    pub fn device(&self, i: usize) -> &Device {
        &self.devices[i]
    }

    pub fn link(&self, i: usize) -> &LinkCoefficients {
        &self.coeffs[i]
    }

    /// Received power per watt of beacon power at a harvesting device, `φ·g_BD`.
    pub fn harvest_gain(&self, i: usize) -> f64 {
        self.devices[i].harvest_efficiency.unwrap_or(0.0) * self.coeffs[i].g_bd
    }

    /// Total backscatter throughput in the emitting period (bits).
    pub fn throughput_backscatter(&self, sched: &Schedule, p_s: f64) -> f64 {
        let omega = self.env.bandwidth_backscatter;
        let p: f64 = self
            .pwpds
            .iter()
            .zip(&sched.theta)
            .map(|(&i, &t)| t * backscatter_rate(self.coeffs[i].kappa(), p_s, omega))
            .sum();
        let h: f64 = self
            .hwpds
            .iter()
            .zip(&sched.tau)
            .map(|(&i, &t)| t * backscatter_rate(self.coeffs[i].kappa(), p_s, omega))
            .sum();
        p + h
    }

    /// Total active (HTT) throughput in the sleeping period (bits).
    pub fn throughput_active(&self, sched: &Schedule, beta: f64, p_s: f64) -> Result<f64> {
        if let Some((h, &t)) = sched.tau.iter().enumerate().find(|(_, &t)| t > beta) {
            return Err(Error::domain(format!("tau[{h}] = {t} exceeds beta = {beta}")));
        }
        Ok(self.throughput_active_unchecked(sched, beta, p_s))
    }

    pub(crate) fn throughput_active_unchecked(&self, sched: &Schedule, beta: f64, p_s: f64) -> f64 {
        let omega = self.env.bandwidth_active;
        let a: f64 = self
            .awpds
            .iter()
            .zip(&sched.nu)
            .map(|(&i, &nu)| xlog(nu, self.coeffs[i].delta() * beta * p_s))
            .sum();
        let h: f64 = self
            .hwpds
            .iter()
            .zip(sched.tau.iter().zip(&sched.mu))
            .map(|(&i, (&tau, &mu))| xlog(mu, self.coeffs[i].delta() * (beta - tau).max(0.0) * p_s))
            .sum();
        omega * (a + h)
    }

    /// `R_sum`: backscatter plus active throughput (bits per frame).
    pub fn network_throughput(&self, sched: &Schedule, beta: f64, p_s: f64) -> Result<f64> {
        Ok(self.throughput_backscatter(sched, p_s) + self.throughput_active(sched, beta, p_s)?)
    }

    pub(crate) fn rsum(&self, sched: &Schedule, beta: f64, p_s: f64) -> f64 {
        self.throughput_backscatter(sched, p_s) + self.throughput_active_unchecked(sched, beta, p_s)
    }

    /// Harvested energy of the `k`-th AWPD (J).
    pub fn awpd_energy(&self, k: usize, beta: f64, p_s: f64) -> f64 {
        beta * self.harvest_gain(self.awpds[k]) * p_s
    }

    /// Harvested energy of the `k`-th HWPD (J).
    pub fn hwpd_energy(&self, k: usize, beta: f64, tau: f64, p_s: f64) -> f64 {
        (beta - tau) * self.harvest_gain(self.hwpds[k]) * p_s
    }
}

/// `x·log₂(1 + c/x)`, extended continuously by 0 at `x = 0`.
pub fn xlog_term(x: f64, c: f64) -> Result<f64> {
    if x < 0.0 || c < 0.0 || x.is_nan() || c.is_nan() {
        return Err(Error::domain(format!("xlog_term needs x, c >= 0, got x={x}, c={c}")));
    }
    Ok(xlog(x, c))
}

#[inline]
pub(crate) fn xlog(x: f64, c: f64) -> f64 {
    if x <= 0.0 || c <= 0.0 {
        0.0
    } else {
        x * (c / x).ln_1p() * std::f64::consts::LOG2_E
    }
}

/// Backscatter rate `Ω_B·log₂(1 + κ·p_s)` in bit/s.
pub fn backscatter_rate(kappa: f64, p_s: f64, bandwidth: f64) -> f64 {
    bandwidth * (kappa * p_s).ln_1p() * std::f64::consts::LOG2_E
}

/// Energy harvested during the emitting period. For an HWPD the harvest
/// window shrinks by its own backscatter slot `tau`.
pub fn harvested_energy(
    device: &Device,
    link: &LinkCoefficients,
    beta: f64,
    tau: f64,
    p_s: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) || tau < 0.0 {
        return Err(Error::domain(format!("need 0 <= tau <= beta <= 1, got tau={tau}, beta={beta}")));
    }
    let phi = device.harvest_efficiency.unwrap_or(0.0);
    match device.kind {
        DeviceKind::Pwpd => Err(Error::Kind {
            kind: "PWPD",
            operation: "energy harvesting",
        }),
        DeviceKind::Awpd => Ok(beta * phi * link.g_bd * p_s),
        DeviceKind::Hwpd => {
            if tau > beta {
                return Err(Error::domain(format!("tau = {tau} exceeds beta = {beta}")));
            }
            Ok((beta - tau) * phi * link.g_bd * p_s)
        }
    }
}

/// Active transmit power `E/t`, with `0/0 = 0` for a silent device.
pub fn transmit_power(energy: f64, active_time: f64) -> f64 {
    if active_time <= 0.0 {
        if energy <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        energy / active_time
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::RadioEnvironment;

    fn env() -> RadioEnvironment {
        RadioEnvironment::new(2.4e9, 1e4, 1e6, 0.5, (1.0, 0.0), 3.98, 3.98, 3.98).unwrap()
    }

    fn trio() -> Network {
        Network::new(
            vec![Device::awpd(3.0, 5.0, 1e-10), Device::pwpd(4.0, 5.0, 1e-10), Device::hwpd(5.0, 5.0, 1e-10)],
            env(),
        )
        .unwrap()
    }

    #[test]
    fn xlog_examples() {
        assert_eq!(xlog_term(0.0, 123.0).unwrap(), 0.0);
        assert!((xlog_term(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((xlog_term(2.0, 6.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(xlog_term(-1.0, 1.0).is_err());
        assert!(xlog_term(1.0, -1.0).is_err());
    }

    #[test]
    fn backscatter_rate_examples() {
        assert_eq!(backscatter_rate(5.0, 0.0, 1e6), 0.0);
        assert!((backscatter_rate(1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((backscatter_rate(1e-2, 100.0, 1e7) - 1e7).abs() < 1e-6);
    }

    #[test]
    fn harvested_energy_cases() {
        let net = trio();
        let h = net.device(2);
        assert_eq!(harvested_energy(h, net.link(2), 0.4, 0.4, 1.0).unwrap(), 0.0);
        assert!(harvested_energy(h, net.link(2), 0.3, 0.4, 1.0).is_err());
        assert!(harvested_energy(net.device(1), net.link(1), 0.3, 0.0, 1.0).is_err());
        assert_eq!(harvested_energy(net.device(0), net.link(0), 0.5, 0.0, 0.0).unwrap(), 0.0);

        let mut a = Device::awpd(1.0, 1.0, 1.0);
        a.harvest_efficiency = Some(0.6);
        let link = LinkCoefficients {
            g_bd: 1e-3,
            g_dg: 1.0,
            kappa: None,
            delta: None,
        };
        assert!((harvested_energy(&a, &link, 0.5, 0.0, 1.0).unwrap() - 3e-4).abs() < 1e-18);
    }

    #[test]
    fn zero_inputs_annihilate() {
        let net = trio();
        let zero = Schedule::zeros(&net);
        assert_eq!(net.network_throughput(&zero, 0.5, 2.0).unwrap(), 0.0);
        let s = Schedule {
            theta: vec![0.2],
            nu: vec![0.3],
            tau: vec![0.1],
            mu: vec![0.2],
        };
        assert_eq!(net.network_throughput(&s, 0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_pwpd_unit_throughput() {
        let e = RadioEnvironment::new(2.4e9, 1.0, 1.0, 1.0, (1.0, 0.0), 1.0, 1.0, 1.0).unwrap();
        let net = Network::new(vec![Device::pwpd(1.0, 1.0, 1.0)], e).unwrap();
        let kappa = net.link(0).kappa();
        let s = Schedule {
            theta: vec![1.0],
            ..Schedule::zeros(&net)
        };
        assert!((net.throughput_backscatter(&s, 1.0 / kappa) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_awpd_log2_case() {
        let net = Network::new(vec![Device::awpd(3.0, 5.0, 1e-10)], env()).unwrap();
        let delta = net.link(0).delta();
        // δ·β·p_s/ν = 1 with ν = β = 0.5
        let p_s = 1.0 / delta;
        let s = Schedule {
            nu: vec![0.5],
            ..Schedule::zeros(&net)
        };
        let r = net.throughput_active(&s, 0.5, p_s).unwrap();
        assert!((r - 0.5 * 1e6).abs() < 1e-6);
    }

    #[test]
    fn rsum_matches_straight_line_sum() {
        let net = trio();
        let s = Schedule {
            theta: vec![0.15],
            nu: vec![0.3],
            tau: vec![0.2],
            mu: vec![0.25],
        };
        let (beta, p) = (0.45, 0.7);
        let e = net.env();
        let (ka, kp, kh) = (net.link(0), net.link(1), net.link(2));
        let expected = e.bandwidth_backscatter * 0.15 * (1.0 + kp.kappa() * p).log2()
            + e.bandwidth_active * 0.3 * (1.0 + ka.delta() * beta * p / 0.3).log2()
            + e.bandwidth_backscatter * 0.2 * (1.0 + kh.kappa() * p).log2()
            + e.bandwidth_active * 0.25 * (1.0 + kh.delta() * (beta - 0.2) * p / 0.25).log2();
        let got = net.network_throughput(&s, beta, p).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_above_beta_is_rejected() {
        let net = trio();
        let s = Schedule {
            tau: vec![0.6],
            ..Schedule::zeros(&net)
        };
        assert!(net.throughput_active(&s, 0.5, 1.0).is_err());
    }

    #[test]
    fn silent_device_power_is_zero() {
        assert_eq!(transmit_power(0.0, 0.0), 0.0);
        assert_eq!(transmit_power(2.0, 0.5), 4.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sched_strategy() -> impl Strategy<Value = (f64, [f64; 4])> {
            (0.05f64..0.95, prop::array::uniform4(0.0f64..1.0)).prop_map(|(beta, w)| {
                let bs = beta * w[0];
                let act = (1.0 - beta) * w[1];
                (beta, [bs * w[2], act * w[3], bs * (1.0 - w[2]), act * (1.0 - w[3])])
            })
        }

        fn to_sched(v: [f64; 4]) -> Schedule {
            Schedule {
                theta: vec![v[0]],
                nu: vec![v[1]],
                tau: vec![v[2]],
                mu: vec![v[3]],
            }
        }

        proptest! {
            #[test]
            fn rsum_midpoint_concave(p in 0.01f64..4.0, (beta, x) in sched_strategy(), (_, y) in sched_strategy()) {
                let net = trio();
                // both endpoints share β, so the midpoint stays feasible
                let tau_ok = |v: &[f64; 4]| v[2] <= beta;
                prop_assume!(tau_ok(&x) && tau_ok(&y));
                let mid: [f64; 4] = std::array::from_fn(|i| 0.5 * (x[i] + y[i]));
                let fx = net.rsum(&to_sched(x), beta, p);
                let fy = net.rsum(&to_sched(y), beta, p);
                let fm = net.rsum(&to_sched(mid), beta, p);
                prop_assert!(fm >= 0.5 * (fx + fy) - 1e-9 * fx.abs().max(fy.abs()).max(1.0));
            }

            #[test]
            fn rsum_nondecreasing_in_power(p in 0.0f64..4.0, dp in 0.0f64..1.0, (beta, x) in sched_strategy()) {
                let net = trio();
                let s = to_sched(x);
                prop_assert!(net.rsum(&s, beta, p + dp) >= net.rsum(&s, beta, p));
            }

            #[test]
            fn xlog_bounded_by_linearisation(x in 1e-6f64..10.0, c in 0.0f64..10.0) {
                let v = xlog(x, c);
                prop_assert!(v <= c / std::f64::consts::LN_2 * (1.0 + 1e-12));
                prop_assert!(xlog(x * 1.5, c) >= v);
                prop_assert!(xlog(x, c * 1.5) >= v);
            }
        }
    }
}
