use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wpbc_trade::experiments::{run_benchmark, run_sweep, ResultRow};
use wpbc_trade::game::{check_decision, follower_best_response, follower_utility};
use wpbc_trade::instances;
use wpbc_trade::oracle::{grid_search, local_improvement_check, GridSpec, ProbeSteps};
use wpbc_trade::scenario::{Method, Scenario, SweepSection, SweepVariable};
use wpbc_trade::schemes::tables::{from_q, to_q, BetaTable, JointTable, PriceTable, ScheduleTable, ShareBetaTable};
use wpbc_trade::schemes::{
    beta_interval_hold, beta_interval_shares, build_joint_subproblem, ja_solve_detailed, pa_solve, power_interval, solve,
    Mask, Scheme, SolverOptions,
};
use wpbc_trade::solvers::{golden_section_max, ConcaveObjective, ScalarProblem};
use wpbc_trade::{CostModel, Decision, Network, Objective, Schedule};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit, format!("{s:.2} s of {limit} s"))
}

/// Random schedule filling at most 90% of each window, with the active part
/// halved until the point is feasible.
fn random_schedule(rng: &mut ChaCha8Rng, net: &Network, cost: &CostModel, power: f64, beta: f64) -> Option<Schedule> {
    let n = Schedule::zeros(net).len();
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s = Schedule::from_slice(net, &x);
    let (bs, act) = (s.backscatter_total(), s.active_total());
    let fill_bs = rng.gen_range(0.1..0.9) * beta;
    let fill_act = rng.gen_range(0.1..0.9) * (1.0 - beta);
    let mut s = s.scaled(
        if bs > 0.0 { fill_bs / bs } else { 0.0 },
        if act > 0.0 { fill_act / act } else { 0.0 },
    );
    for _ in 0..40 {
        let d = Decision {
            power,
            beta,
            schedule: s.clone(),
        };
        if check_decision(&d, net, cost).is_empty() {
            return Some(s);
        }
        s = s.scaled(1.0, 0.5);
    }
    None
}

fn random_decision(rng: &mut ChaCha8Rng, net: &Network, cost: &CostModel) -> Decision {
    loop {
        let power = rng.gen_range(0.01..cost.p_s_max);
        let beta = rng.gen_range(0.05..0.95);
        if let Some(schedule) = random_schedule(rng, net, cost, power, beta) {
            return Decision { power, beta, schedule };
        }
    }
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let cost = CostModel::new(rng.gen_range(0.5..20.0), rng.gen_range(0.0..5.0), 2.0, 1e-6).unwrap();
        // Responses up to ten times the power cap.
        let price = rng.gen_range(0.0..cost.price_for_power(10.0 * cost.p_s_max));
        let beta = rng.gen_range(0.05..1.0);
        let f = |p: f64| follower_utility(p, price, beta, &cost);
        let hi = price.max(cost.b_m) / cost.a_m + 1.0;
        let opt = golden_section_max(&ScalarProblem::new(&f, 0.0, hi, 1e-10)).unwrap();
        let closed = follower_best_response(price, &cost).power;
        worst = worst.max((opt.x - closed).abs());
    }
    let (fast, time) = within(t.elapsed(), 1.0);
    verdict(worst <= 1e-6 && fast, format!("max |Δ| {worst:.2e}, {time}"))
}

fn midpoint_gap(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    f(0.5 * (lo + hi)) - 0.5 * (f(lo) + f(hi))
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cost = instances::default_cost();
    let names = ["G(p_l)", "Ĝ(β) hold", "Ĝ(β) shares", "G̃(ψ)", "Q̂ concave"];
    let mut worst = [f64::INFINITY; 5];
    let mut count = [0usize; 5];
    for _ in 0..20 {
        let net = instances::random_small(&mut rng);
        for _ in 0..100 {
            let d = random_decision(&mut rng, &net, &cost);
            let unit = cost.price_for_power(d.power);

            if let Some((lo, hi)) = power_interval(&net, &cost, d.beta, &d.schedule) {
                let table = PriceTable::new(&net, &cost, d.beta, &d.schedule);
                let (a, b) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
                let g = midpoint_gap(&|p| table.value(p), cost.price_for_power(a), cost.price_for_power(b));
                worst[0] = worst[0].min(g);
                count[0] += 1;
            }
            if let Some((lo, hi)) = beta_interval_hold(&net, d.power, &d.schedule) {
                let table = BetaTable::new(&net, &cost, d.power, unit, &d.schedule);
                let g = midpoint_gap(&|b| table.value(b), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
                worst[1] = worst[1].min(g);
                count[1] += 1;
            }
            let shares = d.shares();
            if let Some((lo, hi)) = beta_interval_shares(&net, d.power, &shares) {
                let table = ShareBetaTable::new(&net, &cost, d.power, unit, &shares);
                let g = midpoint_gap(&|b| table.value(b), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
                worst[2] = worst[2].min(g);
                count[2] += 1;
            }
            if let Some(other) = (0..1000).find_map(|_| random_schedule(&mut rng, &net, &cost, d.power, d.beta)) {
                let table = ScheduleTable::new(&net, &cost, d.power, d.beta, unit);
                let (x, y) = (d.schedule.to_vec(), other.to_vec());
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                let g = table.value(&mid) - 0.5 * (table.value(&x) + table.value(&y));
                worst[3] = worst[3].min(g);
                count[3] += 1;
            }
            let sub = build_joint_subproblem(&net, &cost, &d).unwrap();
            let cap = 2.0 * cost.a_m * cost.p_s_max;
            let mut sample = || -> Option<[f64; 2]> {
                for _ in 0..1000 {
                    let q = match sub.pinned_beta {
                        Some(b) => {
                            let (q1, q2) = to_q(rng.gen_range(cost.b_m..=cost.max_price()), b, cost.b_m);
                            [q1, q2]
                        }
                        None => [rng.gen_range(0.0..=cap), rng.gen_range(0.0..=cap)],
                    };
                    if sub.constraints.max_violation(&q) <= 1e-12 {
                        return Some(q);
                    }
                }
                None
            };
            if let (Some(p), Some(q)) = (sample(), sample()) {
                let f = &sub.dc.concave;
                let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                let g = f.value(&mid) - 0.5 * (f.value(&p) + f.value(&q));
                worst[4] = worst[4].min(g);
                count[4] += 1;
            }
        }
    }
    let (fast, time) = within(t.elapsed(), 10.0);
    let concave = worst.iter().all(|&g| g >= -1e-9);
    let enough = count.iter().all(|&c| c >= 20 * 100);
    let parts: Vec<String> = names
        .iter()
        .zip(worst.iter().zip(&count))
        .map(|(n, (w, c))| format!("{n} {c} seg min {w:.1e}"))
        .collect();
    verdict(concave && enough && fast, format!("{}; {time}", parts.join(", ")))
}

struct Runs {
    pass: bool,
    detail: String,
    kkt_worst: f64,
    cccp_runs: usize,
    cccp_monotone: bool,
}

fn monotone(trace: &[f64], tol: f64) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0] - tol)
}

fn criterion_3() -> Runs {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cost = instances::default_cost();
    let opts = SolverOptions::default();
    let mut ok = true;
    let mut max_iter = 0;
    let mut kkt_worst = 0.0f64;
    let mut cccp_runs = 0;
    let mut cccp_monotone = true;
    let mut errors = 0;
    for _ in 0..100 {
        let net = instances::random_small(&mut rng);
        match pa_solve(&net, &cost, None, &opts) {
            Ok(o) => {
                ok &= monotone(&o.trace, 1e-9) && o.converged && o.iterations < 500;
                max_iter = max_iter.max(o.iterations);
            }
            Err(_) => errors += 1,
        }
        match ja_solve_detailed(&net, &cost, None, &opts) {
            Ok(r) => {
                let o = &r.outcome;
                ok &= monotone(&o.trace, 1e-9) && o.converged && o.iterations < 500;
                max_iter = max_iter.max(o.iterations);
                for rec in &r.cccp {
                    cccp_runs += 1;
                    cccp_monotone &= monotone(&rec.trace, 0.0);
                    kkt_worst = kkt_worst.max(rec.kkt_residual);
                }
            }
            Err(_) => errors += 1,
        }
    }
    let (fast, time) = within(t.elapsed(), 60.0);
    Runs {
        pass: ok && errors == 0 && fast,
        detail: format!("200 solves, {errors} errors, most iterations {max_iter}, {time}"),
        kkt_worst,
        cccp_runs,
        cccp_monotone,
    }
}

fn criterion_4(runs: &Runs) -> Verdict {
    verdict(
        runs.cccp_monotone && runs.kkt_worst <= 1e-5 && runs.cccp_runs > 0,
        format!(
            "{} inner runs, traces {}, worst KKT residual {:.2e}",
            runs.cccp_runs,
            if runs.cccp_monotone { "nondecreasing" } else { "decreasing somewhere" },
            runs.kkt_worst
        ),
    )
}

fn criterion_5() -> Verdict {
    let t = Instant::now();
    let net = instances::trio(4.0);
    let cost = instances::oracle_cost();
    let grid = grid_search(Objective::Leader, &net, &cost, &GridSpec::default()).unwrap();
    let margin = grid.slack.min(2e-2);
    let mut ok = true;
    let mut parts = vec![format!("grid {:.6} (slack {:.2e})", grid.value, grid.slack)];
    for scheme in [Scheme::Pa, Scheme::Ja] {
        let r = solve(Objective::Leader, scheme, &net, &cost, Mask::ALL, None, &SolverOptions::default()).unwrap();
        let local = local_improvement_check(&r.decision, Objective::Leader, &net, &cost, &ProbeSteps::default());
        ok &= r.outcome.u_leader >= grid.value - margin && local.improvements.is_empty();
        parts.push(format!(
            "{} {:.6} local gain {:.1e}",
            scheme.name(),
            r.outcome.u_leader,
            local.best_gain.max(0.0)
        ));
    }
    let (fast, time) = within(t.elapsed(), 120.0);
    verdict(ok && fast, format!("{}; {time}", parts.join(", ")))
}

fn row(rows: &[ResultRow], x: f64, m: Method) -> &ResultRow {
    rows.iter().find(|r| r.sweep_value == x && r.method == m).unwrap()
}

fn sweep_points(rows: &[ResultRow]) -> Vec<f64> {
    let mut xs: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
    xs.dedup();
    xs
}

fn criterion_6() -> Vec<Verdict> {
    let t = Instant::now();
    let mut sc = Scenario {
        methods: vec![Method::Pa, Method::Ja, Method::Welfare, Method::Bbcm, Method::Httcm, Method::Tdma],
        ..Scenario::default()
    };
    sc.sweep = Some(SweepSection {
        variable: SweepVariable::DistancePbDeviceM,
        start: 2.0,
        stop: 20.0,
        steps: 19,
    });
    let dist = run_sweep(&sc, false).unwrap();
    sc.sweep = Some(SweepSection {
        variable: SweepVariable::PricePerMbit,
        start: 0.1,
        stop: 1.0,
        steps: 10,
    });
    let price = run_sweep(&sc, false).unwrap();
    let failed = dist.iter().chain(&price).filter(|r| r.error.is_some()).count();
    let stackelberg = [Method::Pa, Method::Ja];

    // (a)
    let mut worst_a = f64::INFINITY;
    for rows in [&dist, &price] {
        for x in sweep_points(rows) {
            let w = row(rows, x, Method::Welfare).u_welfare;
            for m in stackelberg {
                worst_a = worst_a.min(w - row(rows, x, m).u_welfare);
            }
        }
    }
    let a = verdict(failed == 0 && worst_a >= 0.0, format!("min welfare margin {worst_a:.2e}, {failed} failed rows"));

    // (b)
    let mut ok_b = true;
    let mut cutoffs = Vec::new();
    for m in stackelberg {
        let xs = sweep_points(&dist);
        let cut = xs.iter().copied().find(|&x| !row(&dist, x, m).negotiated);
        for &x in &xs {
            let poa = row(&dist, x, m).poa;
            ok_b &= matches!(poa, Some(p) if (0.0..=1.0).contains(&p));
            if cut.is_some_and(|c| x >= c) {
                ok_b &= poa == Some(0.0);
            }
        }
        ok_b &= cut.is_some();
        cutoffs.push(format!("{} cutoff {}", m.name(), cut.map_or("none".into(), |c| format!("{c} m"))));
    }
    let b = verdict(ok_b, cutoffs.join(", "));

    // (c)
    let mut ok_c = true;
    let mut us = Vec::new();
    for m in stackelberg {
        let series: Vec<f64> = sweep_points(&price).iter().map(|&x| row(&price, x, m).u_leader).collect();
        ok_c &= monotone(&series, 0.0);
        us.push(format!("{} {:.3}..{:.3}", m.name(), series[0], series[series.len() - 1]));
    }
    let c = verdict(ok_c, us.join(", "));

    // (d)
    let mut worst_d = f64::INFINITY;
    for rows in [&dist, &price] {
        for x in sweep_points(rows) {
            worst_d = worst_d.min(row(rows, x, Method::Ja).u_leader - row(rows, x, Method::Pa).u_leader);
        }
    }
    let d = verdict(worst_d >= -1e-6, format!("min JA − PA {worst_d:.2e}"));

    // (e)
    let base = *sweep_points(&price).last().unwrap();
    let ja = row(&price, base, Method::Ja).u_leader;
    let fixed: Vec<(Method, f64)> = [Method::Bbcm, Method::Httcm, Method::Tdma]
        .iter()
        .map(|&m| (m, row(&price, base, m).u_leader))
        .collect();
    let ok_e = (base - 1.0).abs() < 1e-12 && fixed.iter().all(|&(_, u)| ja >= u);
    let e = verdict(
        ok_e,
        format!(
            "ja {ja:.4}, {}",
            fixed.iter().map(|(m, u)| format!("{} {u:.4}", m.name())).collect::<Vec<_>>().join(", ")
        ),
    );

    let (fast, time) = within(t.elapsed(), 600.0);
    let mut out = vec![a, b, c, d, e];
    for v in &mut out {
        v.pass &= fast;
        v.detail.push_str(&format!("; sweeps {time}"));
    }
    out
}

fn criterion_7() -> Verdict {
    let sc = Scenario::default();
    let rows = run_benchmark(&sc, &[15], &[Method::Pa, Method::Ja], 100).unwrap();
    let ok = rows.iter().all(|r| r.failures == 0 && r.mean_ms <= 5000.0);
    let detail = rows
        .iter()
        .map(|r| format!("{} mean {:.0} ms over {} runs", r.method.name(), r.mean_ms, r.repetitions))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(ok && rows.len() == 2, detail)
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cost = instances::default_cost();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    let mut worst = 0.0f64;
    let mut worst_q = 0.0f64;
    for _ in 0..50 {
        let net = instances::random_small(&mut rng);
        let d = random_decision(&mut rng, &net, &cost);
        let direct = Objective::Leader.value(&net, &cost, &d);
        let price = cost.price_for_power(d.power);
        let (q1, q2) = to_q(price, d.beta, cost.b_m);
        let joint = JointTable::new(&net, &cost, &d.schedule);
        let values = [
            PriceTable::new(&net, &cost, d.beta, &d.schedule).value(price),
            BetaTable::new(&net, &cost, d.power, price, &d.schedule).value(d.beta),
            ShareBetaTable::new(&net, &cost, d.power, price, &d.shares()).value(d.beta),
            ScheduleTable::new(&net, &cost, d.power, d.beta, price).value_of(&d.schedule),
            joint.value(price, d.beta),
            joint.q_value(q1, q2),
        ];
        for v in values {
            worst = worst.max(rel(v, direct));
        }
        let (p, b) = from_q(q1, q2, cost.b_m, 0.5);
        worst_q = worst_q.max(rel(p, price)).max((b - d.beta).abs());
    }
    verdict(
        worst <= 1e-9 && worst_q <= 1e-12,
        format!("table vs direct {worst:.1e} relative, q round trip {worst_q:.1e}"),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |name: &str, v: Verdict| {
        all &= v.pass;
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    };
    report("1 follower closed form", criterion_1());
    report("2 subproblem concavity", criterion_2());
    let runs = criterion_3();
    let c4 = criterion_4(&runs);
    report(
        "3 monotone convergence",
        Verdict {
            pass: runs.pass,
            detail: runs.detail.clone(),
        },
    );
    report("4 inner monotonicity and stationarity", c4);
    report("5 oracle equivalence", criterion_5());
    for (tag, v) in ["a", "b", "c", "d", "e"].iter().zip(criterion_6()) {
        report(&format!("6{tag} game ordering"), v);
    }
    report("7 runtime at 45 devices", criterion_7());
    report("8 table self-consistency", criterion_8());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
