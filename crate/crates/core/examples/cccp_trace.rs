//! Inner runs of the convex-concave procedure inside JA, with their
//! stationarity residuals.
//!
//!     cargo run --release --example cccp_trace

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpbc_trade::instances::{default_cost, random_small};
use wpbc_trade::schemes::{ja_solve_detailed, SolverOptions};

fn main() -> wpbc_trade::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = random_small(&mut rng);
    let cost = default_cost();
    let report = ja_solve_detailed(&net, &cost, None, &SolverOptions::default())?;

    println!("{} devices, JA utility {:.6}", net.devices().len(), report.outcome.u_leader);
    println!("outer trace: {:?}", report.outcome.trace.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>());
    println!("{:>4} {:>6} {:>14} {:>14} {:>10}", "run", "iters", "first", "last", "kkt");
    for (k, r) in report.cccp.iter().enumerate() {
        let first = r.trace.first().copied().unwrap_or(f64::NAN);
        let last = r.trace.last().copied().unwrap_or(f64::NAN);
        println!("{k:>4} {:>6} {first:>14.6} {last:>14.6} {:>10.2e}", r.iterations, r.kkt_residual);
    }
    let worst = report.cccp.iter().map(|r| r.kkt_residual).fold(0.0, f64::max);
    println!("largest residual {worst:.2e}");
    Ok(())
}
