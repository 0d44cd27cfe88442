//! Exhaustive grid search on a one-device-per-kind network, compared with
//! the iterative schemes.
//!
//!     cargo run --release --example oracle_check -- [distance_m] [points_per_entry]

use std::time::Instant;

use wpbc_trade::game::{verify_stackelberg, PerturbationGrid};
use wpbc_trade::instances::{oracle_cost, trio};
use wpbc_trade::oracle::{grid_search, local_improvement_check, schedule_names, Axis, GridSpec, ProbeSteps};
use wpbc_trade::schemes::{solve, Mask, Scheme, SolverOptions};
use wpbc_trade::Objective;

fn main() -> wpbc_trade::Result<()> {
    let mut args = std::env::args().skip(1);
    let d_bd: f64 = args.next().map(|s| s.parse().expect("distance in metres")).unwrap_or(4.0);
    let points: usize = args.next().map(|s| s.parse().expect("grid points")).unwrap_or(8);
    let net = trio(d_bd);
    let cost = oracle_cost();
    let spec = GridSpec {
        schedule: Axis::Points(points),
        ..GridSpec::default()
    };

    let t = Instant::now();
    let grid = grid_search(Objective::Leader, &net, &cost, &spec)?;
    println!(
        "grid: {} of {} points feasible, best {:.6}, resolution {:.3e}, {:.2} s",
        grid.feasible,
        grid.evaluated,
        grid.value,
        grid.slack,
        t.elapsed().as_secs_f64()
    );
    let names = schedule_names(&net);
    let cells: Vec<String> = names
        .iter()
        .zip(grid.best.schedule.to_vec())
        .map(|(n, v)| format!("{n}={v:.3}"))
        .collect();
    println!("  P_S={:.3} beta={:.3} {}", grid.best.power, grid.best.beta, cells.join(" "));

    for scheme in [Scheme::Pa, Scheme::Ja] {
        let r = solve(Objective::Leader, scheme, &net, &cost, Mask::ALL, None, &SolverOptions::default())?;
        let local = local_improvement_check(&r.decision, Objective::Leader, &net, &cost, &ProbeSteps::default());
        let se = verify_stackelberg(&r.outcome, &net, &cost, &PerturbationGrid::default());
        println!(
            "{}: {:.6} ({:+.2e} vs grid), best local gain {:.2e}, follower gain {:.2e}",
            scheme.name(),
            r.outcome.u_leader,
            r.outcome.u_leader - grid.value,
            local.best_gain,
            se.follower_gain
        );
    }
    Ok(())
}
