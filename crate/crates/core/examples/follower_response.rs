//! The ESP's best response to a price, checked against a scan of its
//! utility.
//!
//!     cargo run --example follower_response

use wpbc_trade::game::{follower_best_response, follower_utility};
use wpbc_trade::instances::default_cost;

fn main() {
    let cost = default_cost();
    let beta = 0.6;
    println!("a_m = {}, b_m = {}, beta = {beta}", cost.a_m, cost.b_m);
    println!("{:>8} {:>10} {:>12} {:>12}", "price", "P_S*", "utility", "best scan");
    for price in [0.2, 0.5, 2.0, 5.0, 10.0, 20.5] {
        let r = follower_best_response(price, &cost);
        let u = follower_utility(r.power, price, beta, &cost);
        let scan = (0..=40_000)
            .map(|k| follower_utility(k as f64 * 1e-4, price, beta, &cost))
            .fold(f64::NEG_INFINITY, f64::max);
        let note = if r.below_cost { "  (below cost)" } else { "" };
        println!("{price:>8} {:>10.4} {u:>12.6} {scan:>12.6}{note}", r.power);
    }
}
