//! The Stackelberg outcome next to fixed-price trade, cooperation and the
//! single-mode schedules.
//!
//!     cargo run --release --example baselines -- [distance_m]

use wpbc_trade::baselines::{
    default_fixed_price, price_of_anarchy, solve_fixed_mode, solve_fixed_price, solve_social_welfare, BaselineKind,
};
use wpbc_trade::instances::{default_cost, uniform, DEFAULT_D_DG_M};
use wpbc_trade::schemes::{ja_solve, Scheme, SolverOptions};
use wpbc_trade::GameOutcome;

fn row(name: &str, o: &GameOutcome) {
    println!(
        "{name:>12} {:>10.4} {:>10.4} {:>10.4} {:>8.4} {:>8.4}{}",
        o.u_leader,
        o.u_follower,
        o.u_social,
        o.p_s_star,
        o.strategy.beta,
        if o.negotiated { "" } else { "  no trade" }
    );
}

fn main() -> wpbc_trade::Result<()> {
    let d_bd: f64 = std::env::args().nth(1).map(|s| s.parse().expect("distance in metres")).unwrap_or(4.0);
    let net = uniform(10, 10, 10, d_bd, DEFAULT_D_DG_M);
    let cost = default_cost();
    let opts = SolverOptions::default();

    let ja = ja_solve(&net, &cost, None, &opts)?;
    let price = default_fixed_price(&cost);
    let fixed = solve_fixed_price(&net, &cost, price, None, &opts)?;
    let welfare = solve_social_welfare(&net, &cost, Some(&ja.decision()), &opts)?;

    println!("{d_bd} m, fixed price {price}");
    println!("{:>12} {:>10} {:>10} {:>10} {:>8} {:>8}", "", "ISP", "ESP", "welfare", "P_S", "beta");
    row("stackelberg", &ja);
    row("fixed-price", &fixed);
    row("welfare", &welfare);
    for mode in [BaselineKind::Bbcm, BaselineKind::Httcm, BaselineKind::Tdma] {
        row(mode.name(), &solve_fixed_mode(&net, &cost, mode, Scheme::Ja, &opts)?);
    }
    match price_of_anarchy(&ja, &welfare).ratio() {
        Some(r) => println!("price of anarchy {r:.4}"),
        None => println!("price of anarchy undefined: no market"),
    }
    Ok(())
}
