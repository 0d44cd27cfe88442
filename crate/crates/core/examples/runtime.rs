//! Solve time against network size.
//!
//!     cargo run --release --example runtime

use wpbc_trade::experiments::run_benchmark;
use wpbc_trade::scenario::{Method, Scenario};

fn main() -> wpbc_trade::Result<()> {
    let sc = Scenario::default();
    let rows = run_benchmark(&sc, &[1, 2, 5, 10, 15, 20], &[Method::Pa, Method::Ja], 3)?;
    println!("{:>8} {:>6} {:>10} {:>10}", "devices", "method", "mean ms", "max ms");
    for r in rows {
        println!("{:>8} {:>6} {:>10.1} {:>10.1}", 3 * r.n_per_kind, r.method.name(), r.mean_ms, r.max_ms);
    }
    Ok(())
}
