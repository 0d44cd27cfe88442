//! Link budget: free-space channel gains and the per-device composite
//! coefficients that convert beacon power into receiver SNR.
//!
//! Only line-of-sight free-space propagation is modelled. All gains are
//! linear; conversion from dBi happens at the configuration boundary.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum transmit power of an active device (W).
pub const DEFAULT_P_TX_MIN: f64 = 1e-6;
/// Maximum transmit power of an active device (W).
pub const DEFAULT_P_TX_MAX: f64 = 0.1;
pub const DEFAULT_E_MIN: f64 = 0.0;
/// Battery capacity of a harvesting device (J).
pub const DEFAULT_E_MAX: f64 = 1e-3;
/// 3 dB, linear.
pub const DEFAULT_SNR_MIN: f64 = 1.995_262_314_968_879_5;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Total noise power over a band from a power spectral density.
pub fn noise_power_from_psd(psd_w_per_hz: f64, bandwidth_hz: f64) -> f64 {
    psd_w_per_hz * bandwidth_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    /// Harvest-then-transmit only.
    Awpd,
    /// Backscatter only.
    Pwpd,
    /// Both backscatter and harvest-then-transmit.
    Hwpd,
}

impl DeviceKind {
    pub fn name(self) -> &'static str {
        match self {
            DeviceKind::Awpd => "AWPD",
            DeviceKind::Pwpd => "PWPD",
            DeviceKind::Hwpd => "HWPD",
        }
    }

    pub fn can_backscatter(self) -> bool {
        matches!(self, DeviceKind::Pwpd | DeviceKind::Hwpd)
    }

    pub fn can_harvest(self) -> bool {
        matches!(self, DeviceKind::Awpd | DeviceKind::Hwpd)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioEnvironment {
    pub carrier_frequency: f64,
    pub wavelength: f64,
    /// Backscatter bandwidth, Hz.
    pub bandwidth_backscatter: f64,
    /// Active (HTT) bandwidth, Hz.
    pub bandwidth_active: f64,
    /// Gap between the Shannon bound and the real modulation, in (0, 1].
    pub performance_gap: f64,
    pub reflection_coefficients: (f64, f64),
    pub gain_pb: f64,
    pub gain_device: f64,
    pub gain_gateway: f64,
}

impl RadioEnvironment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        carrier_frequency: f64,
        bandwidth_backscatter: f64,
        bandwidth_active: f64,
        performance_gap: f64,
        reflection_coefficients: (f64, f64),
        gain_pb: f64,
        gain_device: f64,
        gain_gateway: f64,
    ) -> Result<Self> {
        if !(carrier_frequency > 0.0) {
            return Err(Error::config("carrier_frequency", "must be > 0"));
        }
        let env = RadioEnvironment {
            carrier_frequency,
            wavelength: SPEED_OF_LIGHT / carrier_frequency,
            bandwidth_backscatter,
            bandwidth_active,
            performance_gap,
            reflection_coefficients,
            gain_pb,
            gain_device,
            gain_gateway,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("bandwidth_backscatter", self.bandwidth_backscatter),
            ("bandwidth_active", self.bandwidth_active),
            ("gain_pb", self.gain_pb),
            ("gain_device", self.gain_device),
            ("gain_gateway", self.gain_gateway),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.performance_gap > 0.0 && self.performance_gap <= 1.0) {
            return Err(Error::config("performance_gap", "must lie in (0, 1]"));
        }
        let (g0, g1) = self.reflection_coefficients;
        if g0 == g1 {
            return Err(Error::config(
                "reflection_coefficients",
                "the two load reflection coefficients must differ",
            ));
        }
        Ok(())
    }

    /// (Γ₀ − Γ₁)².
    pub fn reflection_gap_sq(&self) -> f64 {
        let (g0, g1) = self.reflection_coefficients;
        (g0 - g1) * (g0 - g1)
    }

    pub fn gain_pb_device(&self, distance: f64) -> Result<f64> {
        friis_gain(self.gain_pb, self.gain_device, self.wavelength, distance)
    }

    pub fn gain_device_gateway(&self, distance: f64) -> Result<f64> {
        friis_gain(self.gain_device, self.gain_gateway, self.wavelength, distance)
    }
}

/// Lower/upper pair used for transmit-power and energy windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn new(min: f64, max: f64) -> Self {
        Bounds { min, max }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.min - tol && v <= self.max + tol
    }
}

/// One IoT node. Fields that do not apply to the node's kind are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub kind: DeviceKind,
    /// Power beacon to device distance, m.
    pub d_bd: f64,
    /// Device to gateway distance, m.
    pub d_dg: f64,
    pub harvest_efficiency: Option<f64>,
    pub backscatter_attenuation: Option<f64>,
    /// Receiver noise power for this device's link, W.
    pub noise_power: f64,
    pub tx_power: Option<Bounds>,
    pub energy: Option<Bounds>,
    pub snr_min: Option<f64>,
}

impl Device {
    /// A device of `kind` with the library's default efficiencies and bounds.
    pub fn with_defaults(kind: DeviceKind, d_bd: f64, d_dg: f64, noise_power: f64) -> Self {
        let harvest = kind.can_harvest();
        let backscatter = kind.can_backscatter();
        Device {
            kind,
            d_bd,
            d_dg,
            harvest_efficiency: harvest.then_some(0.6),
            backscatter_attenuation: backscatter.then_some(0.5),
            noise_power,
            tx_power: harvest.then_some(Bounds::new(DEFAULT_P_TX_MIN, DEFAULT_P_TX_MAX)),
            energy: harvest.then_some(Bounds::new(DEFAULT_E_MIN, DEFAULT_E_MAX)),
            snr_min: backscatter.then_some(DEFAULT_SNR_MIN),
        }
    }

    pub fn awpd(d_bd: f64, d_dg: f64, noise_power: f64) -> Self {
        Self::with_defaults(DeviceKind::Awpd, d_bd, d_dg, noise_power)
    }

    pub fn pwpd(d_bd: f64, d_dg: f64, noise_power: f64) -> Self {
        Self::with_defaults(DeviceKind::Pwpd, d_bd, d_dg, noise_power)
    }

    pub fn hwpd(d_bd: f64, d_dg: f64, noise_power: f64) -> Self {
        Self::with_defaults(DeviceKind::Hwpd, d_bd, d_dg, noise_power)
    }

    /// Build from planar positions of the beacon, the device and the gateway.
    pub fn from_positions(
        kind: DeviceKind,
        beacon: (f64, f64),
        device: (f64, f64),
        gateway: (f64, f64),
        noise_power: f64,
    ) -> Self {
        let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
        Self::with_defaults(kind, dist(beacon, device), dist(device, gateway), noise_power)
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let field = |f: &str| format!("{path}.{f}");
        if !(self.d_bd > 0.0 && self.d_bd.is_finite()) {
            return Err(Error::config(field("d_bd"), format!("distance must be > 0, got {}", self.d_bd)));
        }
        if !(self.d_dg > 0.0 && self.d_dg.is_finite()) {
            return Err(Error::config(field("d_dg"), format!("distance must be > 0, got {}", self.d_dg)));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::config(field("noise_power"), "must be > 0"));
        }
        let unit = |name: &str, v: Option<f64>, needed: bool| -> Result<()> {
            match v {
                Some(x) if x > 0.0 && x <= 1.0 => Ok(()),
                Some(x) => Err(Error::config(field(name), format!("must lie in (0, 1], got {x}"))),
                None if needed => Err(Error::config(field(name), format!("required for {}", self.kind))),
                None => Ok(()),
            }
        };
        unit("harvest_efficiency", self.harvest_efficiency, self.kind.can_harvest())?;
        unit("backscatter_attenuation", self.backscatter_attenuation, self.kind.can_backscatter())?;
        if self.kind.can_harvest() {
            for (name, b) in [("tx_power", self.tx_power), ("energy", self.energy)] {
                match b {
                    Some(b) if b.min >= 0.0 && b.min <= b.max => {}
                    Some(_) => return Err(Error::config(field(name), "need 0 <= min <= max")),
                    None => return Err(Error::config(field(name), format!("required for {}", self.kind))),
                }
            }
        }
        if self.kind.can_backscatter() {
            match self.snr_min {
                Some(g) if g >= 0.0 => {}
                Some(_) => return Err(Error::config(field("snr_min"), "must be >= 0")),
                None => return Err(Error::config(field("snr_min"), format!("required for {}", self.kind))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCoefficients {
    pub g_bd: f64,
    pub g_dg: f64,
    /// Backscatter SNR per watt of beacon power.
    pub kappa: Option<f64>,
    /// HTT SNR per joule of purchased beacon energy per unit active time.
    pub delta: Option<f64>,
}

impl LinkCoefficients {
    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(0.0)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.0)
    }
}

/// Free-space gain `g_tx·g_rx·λ² / (4π·d)²`.
pub fn friis_gain(g_tx: f64, g_rx: f64, wavelength: f64, distance: f64) -> Result<f64> {
    if !(g_tx > 0.0 && g_rx > 0.0 && wavelength > 0.0 && distance > 0.0) {
        return Err(Error::domain(format!(
            "friis_gain needs positive inputs, got g_tx={g_tx}, g_rx={g_rx}, λ={wavelength}, d={distance}"
        )));
    }
    let denom = 4.0 * PI * distance;
    Ok(g_tx * g_rx * wavelength * wavelength / (denom * denom))
}

pub fn link_coefficients(device: &Device, env: &RadioEnvironment) -> Result<LinkCoefficients> {
    let g_bd = env.gain_pb_device(device.d_bd)?;
    let g_dg = env.gain_device_gateway(device.d_dg)?;
    let zeta = env.performance_gap;
    let kappa = if device.kind.can_backscatter() {
        let eta = device.backscatter_attenuation.ok_or_else(|| {
            Error::config("backscatter_attenuation", format!("required for {}", device.kind))
        })?;
        Some(zeta * eta * eta * g_bd * g_dg * env.reflection_gap_sq() * 4.0 / (PI * PI * device.noise_power))
    } else {
        None
    };
    let delta = if device.kind.can_harvest() {
        let phi = device
            .harvest_efficiency
            .ok_or_else(|| Error::config("harvest_efficiency", format!("required for {}", device.kind)))?;
        Some(zeta * phi * g_dg * g_bd / device.noise_power)
    } else {
        None
    };
    Ok(LinkCoefficients {
        g_bd,
        g_dg,
        kappa,
        delta,
    })
}
