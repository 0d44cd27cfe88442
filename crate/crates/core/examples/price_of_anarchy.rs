//! How much welfare the Stackelberg outcome gives up as the devices move
//! away from the beacon.
//!
//!     cargo run --release --example price_of_anarchy

use rayon::prelude::*;
use wpbc_trade::baselines::{price_of_anarchy, solve_social_welfare};
use wpbc_trade::instances::{default_cost, uniform, DEFAULT_D_DG_M};
use wpbc_trade::schemes::{ja_solve, pa_solve, SolverOptions};

fn main() {
    let cost = default_cost();
    let opts = SolverOptions::default();
    let distances: Vec<f64> = (2..=20).map(f64::from).collect();
    let rows: Vec<String> = distances
        .par_iter()
        .map(|&d| {
            let net = uniform(10, 10, 10, d, DEFAULT_D_DG_M);
            let pa = pa_solve(&net, &cost, None, &opts).expect("pa");
            let ja = ja_solve(&net, &cost, None, &opts).expect("ja");
            let mut welfare = solve_social_welfare(&net, &cost, None, &opts).expect("welfare");
            for o in [&pa, &ja].into_iter().filter(|o| o.negotiated) {
                let w = solve_social_welfare(&net, &cost, Some(&o.decision()), &opts).expect("welfare");
                if w.u_social > welfare.u_social {
                    welfare = w;
                }
            }
            let show = |r: Option<f64>| r.map_or("no market".to_string(), |v| format!("{v:.4}"));
            format!(
                "{d:>4} {:>10.4} {:>10.4} {:>10} {:>10}",
                ja.u_social,
                welfare.u_social,
                show(price_of_anarchy(&pa, &welfare).ratio()),
                show(price_of_anarchy(&ja, &welfare).ratio())
            )
        })
        .collect();
    println!("{:>4} {:>10} {:>10} {:>10} {:>10}", "d", "W(stack)", "W(opt)", "PoA pa", "PoA ja");
    for r in rows {
        println!("{r}");
    }
}
