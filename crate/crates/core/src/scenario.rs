//! Scenario files: radio environment, device roster, cost model, solver
//! settings, and an optional one-variable sweep, in TOML.
//!
//! Every key is optional. Missing keys take the values of
//! [`Scenario::default`], which is the shipped 10/10/10 network, and
//! [`Scenario::to_toml`] writes the fully resolved scenario back out.
//!
//! ```toml
//! seed = 7
//! methods = ["pa", "ja"]
//!
//! [devices]
//! awpd_count = 3
//! distance_pb_device_m = 6.0
//!
//! [sweep]
//! variable = "price_per_mbit"
//! start = 0.1
//! stop = 1.0
//! steps = 10
//! ```

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::CostModel;
use crate::radio::{db_to_linear, Bounds, Device, DeviceKind, RadioEnvironment};
use crate::schemes::{BetaStepMode, Scheme, SolverOptions};
use crate::throughput::Network;
use crate::{Error, Result};

/// Solution methods a scenario can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pa,
    Ja,
    FixedPrice,
    Welfare,
    Bbcm,
    Httcm,
    Tdma,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Pa,
        Method::Ja,
        Method::FixedPrice,
        Method::Welfare,
        Method::Bbcm,
        Method::Httcm,
        Method::Tdma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pa => "pa",
            Method::Ja => "ja",
            Method::FixedPrice => "fixed-price",
            Method::Welfare => "welfare",
            Method::Bbcm => "bbcm",
            Method::Httcm => "httcm",
            Method::Tdma => "tdma",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_frequency_ghz: f64,
    pub bandwidth_backscatter_hz: f64,
    pub bandwidth_active_hz: f64,
    pub performance_gap: f64,
    pub reflection_coefficients: [f64; 2],
    pub antenna_gain_pb_dbi: f64,
    pub antenna_gain_device_dbi: f64,
    pub antenna_gain_gateway_dbi: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        RadioSection {
            carrier_frequency_ghz: 2.4,
            bandwidth_backscatter_hz: 1e7,
            bandwidth_active_hz: 1e3,
            performance_gap: 0.5,
            reflection_coefficients: [1.0, 0.0],
            antenna_gain_pb_dbi: 6.0,
            antenna_gain_device_dbi: 6.0,
            antenna_gain_gateway_dbi: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    /// Quadratic coefficient of the ESP's operating cost.
    pub a_m: f64,
    /// Linear coefficient of the ESP's operating cost.
    pub b_m: f64,
    pub beacon_power_max_w: f64,
    /// ISP revenue per delivered megabit.
    pub price_per_mbit: f64,
    /// Price used by the fixed-price baseline; `b_m + a_m·P_max` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_price: Option<f64>,
}

impl Default for CostSection {
    fn default() -> Self {
        CostSection {
            a_m: 5.0,
            b_m: 0.5,
            beacon_power_max_w: 2.0,
            price_per_mbit: 1.0,
            fixed_price: None,
        }
    }
}

/// One explicitly placed device. Parameters not given here come from the
/// `[devices]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub kind: DeviceKind,
    pub distance_pb_device_m: f64,
    pub distance_device_gateway_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSection {
    pub awpd_count: usize,
    pub pwpd_count: usize,
    pub hwpd_count: usize,
    pub distance_pb_device_m: f64,
    pub distance_device_gateway_m: f64,
    /// Each beacon distance is drawn uniformly from `d ± jitter` using the
    /// scenario seed.
    pub distance_jitter_m: f64,
    pub noise_power_w: f64,
    pub harvest_efficiency: f64,
    pub backscatter_attenuation: f64,
    pub tx_power_min_w: f64,
    pub tx_power_max_w: f64,
    pub energy_min_j: f64,
    pub energy_max_j: f64,
    pub snr_min_db: f64,
    /// When non-empty, replaces the counts and common distances above.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub list: Vec<DeviceEntry>,
}

impl Default for DeviceSection {
    fn default() -> Self {
        DeviceSection {
            awpd_count: 10,
            pwpd_count: 10,
            hwpd_count: 10,
            distance_pb_device_m: 4.0,
            distance_device_gateway_m: 5.0,
            distance_jitter_m: 0.0,
            noise_power_w: 1e-11,
            harvest_efficiency: 0.6,
            backscatter_attenuation: 0.5,
            tx_power_min_w: 1e-6,
            tx_power_max_w: 0.1,
            energy_min_j: 0.0,
            energy_max_j: 1e-3,
            snr_min_db: 3.0,
            list: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaStep {
    ScaleSchedule,
    HoldSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub beta_step: BetaStep,
    /// Scheme used by the fixed transmission modes.
    pub mode_scheme: Method,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tolerance: 1e-6,
            max_iterations: 500,
            beta_step: BetaStep::ScaleSchedule,
            mode_scheme: Method::Ja,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PricePerMbit,
    DistancePbDeviceM,
    AwpdCount,
    PwpdCount,
    HwpdCount,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PricePerMbit => "price_per_mbit",
            SweepVariable::DistancePbDeviceM => "distance_pb_device_m",
            SweepVariable::AwpdCount => "awpd_count",
            SweepVariable::PwpdCount => "pwpd_count",
            SweepVariable::HwpdCount => "hwpd_count",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, SweepVariable::AwpdCount | SweepVariable::PwpdCount | SweepVariable::HwpdCount)
    }
}

/// `steps` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSection {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        let mut v: Vec<f64> = (0..self.steps).map(|k| self.start + h * k as f64).collect();
        if self.variable.is_count() {
            for x in &mut v {
                *x = x.round();
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub methods: Vec<Method>,
    pub radio: RadioSection,
    pub cost: CostSection,
    pub devices: DeviceSection,
    pub solver: SolverSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 0,
            methods: Method::ALL.to_vec(),
            radio: RadioSection::default(),
            cost: CostSection::default(),
            devices: DeviceSection::default(),
            solver: SolverSection::default(),
            sweep: None,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be a finite number > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be a finite number >= 0, got {v}")))
    }
}

/// Parse and validate a scenario from TOML text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let sc: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    sc.validate()?;
    Ok(sc)
}

/// Read, parse and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

impl Scenario {
    /// Check every field and build the network once.
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if !matches!(self.solver.mode_scheme, Method::Pa | Method::Ja) {
            return Err(Error::config("solver.mode_scheme", "must be \"pa\" or \"ja\""));
        }
        positive("solver.tolerance", self.solver.tolerance)?;
        if self.solver.max_iterations == 0 {
            return Err(Error::config("solver.max_iterations", "must be >= 1"));
        }
        let d = &self.devices;
        non_negative("devices.distance_jitter_m", d.distance_jitter_m)?;
        if d.list.is_empty() {
            positive("devices.distance_pb_device_m", d.distance_pb_device_m)?;
            positive("devices.distance_device_gateway_m", d.distance_device_gateway_m)?;
            if d.distance_jitter_m >= d.distance_pb_device_m {
                return Err(Error::config(
                    "devices.distance_jitter_m",
                    "must be smaller than distance_pb_device_m",
                ));
            }
        }
        if let Some(f) = self.cost.fixed_price {
            if !(f >= self.cost.b_m && f.is_finite()) {
                return Err(Error::config("cost.fixed_price", format!("must be >= b_m = {}", self.cost.b_m)));
            }
        }
        non_negative("cost.price_per_mbit", self.cost.price_per_mbit)?;
        self.environment()?;
        self.cost_model()?;
        if let Some(sw) = &self.sweep {
            if sw.steps == 0 {
                return Err(Error::config("sweep.steps", "must be >= 1"));
            }
            if !d.list.is_empty() && sw.variable != SweepVariable::PricePerMbit {
                return Err(Error::config(
                    "sweep.variable",
                    "only price_per_mbit can be swept with an explicit device list",
                ));
            }
            for v in sw.values() {
                self.at(sw.variable, v)?.network()?;
            }
        } else {
            self.network()?;
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<RadioEnvironment> {
        let r = &self.radio;
        positive("radio.carrier_frequency_ghz", r.carrier_frequency_ghz)?;
        RadioEnvironment::new(
            r.carrier_frequency_ghz * 1e9,
            r.bandwidth_backscatter_hz,
            r.bandwidth_active_hz,
            r.performance_gap,
            (r.reflection_coefficients[0], r.reflection_coefficients[1]),
            db_to_linear(r.antenna_gain_pb_dbi),
            db_to_linear(r.antenna_gain_device_dbi),
            db_to_linear(r.antenna_gain_gateway_dbi),
        )
        .map_err(|e| prefix(e, "radio"))
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        let c = &self.cost;
        CostModel::new(c.a_m, c.b_m, c.beacon_power_max_w, c.price_per_mbit * 1e-6).map_err(|e| prefix(e, "cost"))
    }

    pub fn fixed_price(&self) -> Result<f64> {
        let cost = self.cost_model()?;
        Ok(self.cost.fixed_price.unwrap_or(crate::baselines::default_fixed_price(&cost)))
    }

    fn device(&self, kind: DeviceKind, d_bd: f64, d_dg: f64) -> Device {
        let s = &self.devices;
        let mut dev = Device::with_defaults(kind, d_bd, d_dg, s.noise_power_w);
        if kind.can_harvest() {
            dev.harvest_efficiency = Some(s.harvest_efficiency);
            dev.tx_power = Some(Bounds::new(s.tx_power_min_w, s.tx_power_max_w));
            dev.energy = Some(Bounds::new(s.energy_min_j, s.energy_max_j));
        }
        if kind.can_backscatter() {
            dev.backscatter_attenuation = Some(s.backscatter_attenuation);
            dev.snr_min = Some(db_to_linear(s.snr_min_db));
        }
        dev
    }

    /// The device roster. Jitter draws come from a generator seeded with
    /// `seed`, so the same scenario always yields the same network.
    pub fn network(&self) -> Result<Network> {
        let s = &self.devices;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut devices = Vec::new();
        if s.list.is_empty() {
            for (kind, n) in [
                (DeviceKind::Awpd, s.awpd_count),
                (DeviceKind::Pwpd, s.pwpd_count),
                (DeviceKind::Hwpd, s.hwpd_count),
            ] {
                for _ in 0..n {
                    let j = if s.distance_jitter_m > 0.0 {
                        rng.gen_range(-s.distance_jitter_m..=s.distance_jitter_m)
                    } else {
                        0.0
                    };
                    devices.push(self.device(kind, s.distance_pb_device_m + j, s.distance_device_gateway_m));
                }
            }
        } else {
            for e in &s.list {
                devices.push(self.device(e.kind, e.distance_pb_device_m, e.distance_device_gateway_m));
            }
        }
        for (i, d) in devices.iter().enumerate() {
            d.validate(&format!("devices[{i}]"))?;
        }
        Network::new(devices, self.environment()?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tolerance,
            max_iter: self.solver.max_iterations,
            beta_mode: match self.solver.beta_step {
                BetaStep::ScaleSchedule => BetaStepMode::ScaleSchedule,
                BetaStep::HoldSchedule => BetaStepMode::HoldSchedule,
            },
            ..SolverOptions::default()
        }
    }

    pub fn mode_scheme(&self) -> Scheme {
        match self.solver.mode_scheme {
            Method::Pa => Scheme::Pa,
            _ => Scheme::Ja,
        }
    }

    /// A copy with `var` set to `value` and the sweep removed.
    pub fn at(&self, var: SweepVariable, value: f64) -> Result<Scenario> {
        let mut sc = self.clone();
        sc.sweep = None;
        let count = |field: &str| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
                Ok(value as usize)
            } else {
                Err(Error::config(field, format!("count must be a whole number >= 0, got {value}")))
            }
        };
        match var {
            SweepVariable::PricePerMbit => sc.cost.price_per_mbit = value,
            SweepVariable::DistancePbDeviceM => sc.devices.distance_pb_device_m = value,
            SweepVariable::AwpdCount => sc.devices.awpd_count = count("sweep.awpd_count")?,
            SweepVariable::PwpdCount => sc.devices.pwpd_count = count("sweep.pwpd_count")?,
            SweepVariable::HwpdCount => sc.devices.hwpd_count = count("sweep.hwpd_count")?,
        }
        Ok(sc)
    }

    /// The scenario with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }
}

fn prefix(e: Error, section: &str) -> Error {
    match e {
        Error::Config { field, message } => Error::Config {
            field: format!("{section}.{field}"),
            message,
        },
        other => other,
    }
}
