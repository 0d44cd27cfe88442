//! A scenario written inline with an explicit device list, solved under
//! each method.
//!
//!     cargo run --release --example custom_network

use wpbc_trade::experiments::run_point;
use wpbc_trade::scenario::parse_scenario;

const SCENARIO: &str = r#"
methods = ["pa", "ja", "welfare", "bbcm", "httcm"]

[cost]
price_per_mbit = 0.8

[[devices.list]]
kind = "pwpd"
distance_pb_device_m = 3.0
distance_device_gateway_m = 5.0

[[devices.list]]
kind = "hwpd"
distance_pb_device_m = 6.0
distance_device_gateway_m = 3.0

[[devices.list]]
kind = "awpd"
distance_pb_device_m = 2.0
distance_device_gateway_m = 8.0
"#;

fn main() -> wpbc_trade::Result<()> {
    let sc = parse_scenario(SCENARIO)?;
    let net = sc.network()?;
    for (d, c) in net.devices().iter().zip(net.coeffs()) {
        println!("{:>5} at {:.1} m: kappa {:.3e}, delta {:.3e}", d.kind.name(), d.d_bd, c.kappa(), c.delta());
    }
    println!();
    for r in run_point(&sc, "none", 0.0, false) {
        println!(
            "{:>8} ISP {:>9.4} ESP {:>8.4} P_S {:.4} beta {:.4}{}",
            r.method.name(),
            r.u_leader,
            r.u_follower,
            r.p_s_star,
            r.beta_star,
            r.poa.map(|p| format!(" PoA {p:.4}")).unwrap_or_default()
        );
    }
    Ok(())
}
