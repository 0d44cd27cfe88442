//! PA and JA on the reference 10/10/10 network.
//!
//!     cargo run --release --example solve_default -- [distance_m]

use wpbc_trade::instances::{default_cost, uniform, DEFAULT_D_DG_M};
use wpbc_trade::schemes::{pa_solve, ja_solve, SolverOptions};

fn main() -> wpbc_trade::Result<()> {
    let d_bd: f64 = std::env::args().nth(1).map(|s| s.parse().expect("distance in metres")).unwrap_or(4.0);
    let net = uniform(10, 10, 10, d_bd, DEFAULT_D_DG_M);
    let cost = default_cost();
    let opts = SolverOptions::default();

    for (name, out) in [("PA", pa_solve(&net, &cost, None, &opts)?), ("JA", ja_solve(&net, &cost, None, &opts)?)] {
        println!("{name} at {d_bd} m");
        if !out.negotiated {
            println!("  no trade");
            continue;
        }
        let s = &out.strategy;
        println!("  price {:.4}/W, beacon {:.4} W, beta {:.4}", s.price, out.p_s_star, s.beta);
        println!("  backscatter time {:.4}, active time {:.4}", s.schedule.backscatter_total(), s.schedule.active_total());
        println!("  ISP {:.4}, ESP {:.4}, welfare {:.4}", out.u_leader, out.u_follower, out.u_social);
        println!("  {} iterations, converged: {}", out.iterations, out.converged);
    }
    Ok(())
}
