//! Link gains and SNR coefficients of one device of each kind as the
//! beacon moves away.
//!
//!     cargo run --example link_budget

use wpbc_trade::instances::{default_environment, DEFAULT_D_DG_M, DEFAULT_NOISE_W};
use wpbc_trade::radio::{link_coefficients, linear_to_db, Device, DeviceKind};

fn main() -> wpbc_trade::Result<()> {
    let env = default_environment();
    let p_s = 1.0;
    println!("beacon at {p_s} W, gateway {DEFAULT_D_DG_M} m from every device\n");
    println!("{:>5} {:>12} {:>12} {:>14} {:>14}", "d_bd", "g_bd (dB)", "kappa", "backscatter", "delta");
    for d in [1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0] {
        let pwpd = Device::with_defaults(DeviceKind::Pwpd, d, DEFAULT_D_DG_M, DEFAULT_NOISE_W);
        let awpd = Device::with_defaults(DeviceKind::Awpd, d, DEFAULT_D_DG_M, DEFAULT_NOISE_W);
        let bs = link_coefficients(&pwpd, &env)?;
        let act = link_coefficients(&awpd, &env)?;
        println!(
            "{d:>5} {:>12.2} {:>12.4e} {:>11.2} dB {:>14.4e}",
            linear_to_db(bs.g_bd),
            bs.kappa(),
            linear_to_db(bs.kappa() * p_s),
            act.delta()
        );
    }

    let snr_min = Device::pwpd(1.0, DEFAULT_D_DG_M, DEFAULT_NOISE_W).snr_min.unwrap_or(0.0);
    println!("\nbeacon power needed for the {:.1} dB backscatter floor:", linear_to_db(snr_min));
    for d in [4.0, 10.0, 16.0, 20.0] {
        let c = link_coefficients(&Device::pwpd(d, DEFAULT_D_DG_M, DEFAULT_NOISE_W), &env)?;
        println!("  {d:>4} m: {:.3} W", snr_min / c.kappa());
    }
    Ok(())
}
