use std::path::PathBuf;

use wpbc_trade::experiments::{run_sweep, write_csv};
use wpbc_trade::scenario::{load_scenario, Method};

fn csv_for(seed: u64) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/jittered.toml");
    let mut sc = load_scenario(path).unwrap();
    sc.seed = seed;
    sc.devices.awpd_count = 2;
    sc.devices.pwpd_count = 2;
    sc.devices.hwpd_count = 2;
    sc.methods = vec![Method::Pa, Method::Ja, Method::Welfare];
    let rows = run_sweep(&sc, false).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn same_seed_same_bytes() {
    assert_eq!(csv_for(42), csv_for(42));
}

#[test]
fn seed_moves_the_devices() {
    assert_ne!(csv_for(42), csv_for(43));
}
