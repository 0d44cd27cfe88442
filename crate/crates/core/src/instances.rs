//! Ready-made networks and cost models used by the examples, the tests and
//! the command-line defaults.

use rand::Rng;

use crate::game::CostModel;
use crate::radio::{db_to_linear, Device, DeviceKind, RadioEnvironment};
use crate::throughput::Network;

pub const DEFAULT_NOISE_W: f64 = 1e-11;
pub const DEFAULT_D_DG_M: f64 = 5.0;

/// 2.4 GHz carrier, 10 MHz backscatter and 1 kHz active bandwidth, 6 dBi
/// antennas everywhere.
pub fn default_environment() -> RadioEnvironment {
    let g = db_to_linear(6.0);
    RadioEnvironment::new(2.4e9, 1e7, 1e3, 0.5, (1.0, 0.0), g, g, g).expect("default environment is valid")
}

/// Operating cost of the reference ESP, priced per delivered bit.
pub fn default_cost() -> CostModel {
    CostModel::new(5.0, 0.5, 2.0, 1e-6).expect("default cost is valid")
}

/// Cost model used with the small exhaustive-search instances.
pub fn oracle_cost() -> CostModel {
    default_cost()
}

/// `n_a` AWPDs, `n_p` PWPDs and `n_h` HWPDs, all at the same distances.
pub fn uniform(n_a: usize, n_p: usize, n_h: usize, d_bd: f64, d_dg: f64) -> Network {
    let mut devices = Vec::with_capacity(n_a + n_p + n_h);
    for (kind, n) in [(DeviceKind::Awpd, n_a), (DeviceKind::Pwpd, n_p), (DeviceKind::Hwpd, n_h)] {
        devices.extend((0..n).map(|_| Device::with_defaults(kind, d_bd, d_dg, DEFAULT_NOISE_W)));
    }
    Network::new(devices, default_environment()).expect("uniform network is valid")
}

/// One device of each kind at `d_bd` metres from the beacon.
pub fn trio(d_bd: f64) -> Network {
    uniform(1, 1, 1, d_bd, DEFAULT_D_DG_M)
}

/// Random placement: beacon distances in `[1.5, 6]` m and gateway distances
/// in `[2, 8]` m.
pub fn random_network(rng: &mut impl Rng, n_a: usize, n_p: usize, n_h: usize) -> Network {
    let mut devices = Vec::with_capacity(n_a + n_p + n_h);
    for (kind, n) in [(DeviceKind::Awpd, n_a), (DeviceKind::Pwpd, n_p), (DeviceKind::Hwpd, n_h)] {
        for _ in 0..n {
            let d_bd = rng.gen_range(1.5..6.0);
            let d_dg = rng.gen_range(2.0..8.0);
            devices.push(Device::with_defaults(kind, d_bd, d_dg, DEFAULT_NOISE_W));
        }
    }
    Network::new(devices, default_environment()).expect("random network is valid")
}

/// A random network with 3 to 9 devices, at least one of each kind.
pub fn random_small(rng: &mut impl Rng) -> Network {
    let n_a = rng.gen_range(1..=3);
    let n_p = rng.gen_range(1..=3);
    let n_h = rng.gen_range(1..=3);
    random_network(rng, n_a, n_p, n_h)
}
