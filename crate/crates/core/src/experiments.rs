//! Sweeps over one scenario variable, result tables, and timing runs.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{price_of_anarchy, solve_fixed_mode, solve_fixed_price, solve_social_welfare, BaselineKind};
use crate::game::{CostModel, GameOutcome, Objective};
use crate::scenario::{Method, Scenario};
use crate::schemes::{solve, Mask, Scheme, SolverOptions};
use crate::throughput::Network;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "sweep_var",
    "sweep_value",
    "method",
    "u_leader",
    "u_follower",
    "u_welfare",
    "poa",
    "p_s_star",
    "p_l_star",
    "beta_star",
    "negotiated",
    "iterations",
    "wall_ms",
];

/// One method at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub method: Method,
    pub u_leader: f64,
    pub u_follower: f64,
    pub u_welfare: f64,
    /// Only for `pa` and `ja`; `None` when no positive welfare exists.
    pub poa: Option<f64>,
    pub p_s_star: f64,
    pub p_l_star: f64,
    pub beta_star: f64,
    pub negotiated: bool,
    pub iterations: usize,
    /// Zero unless timing was requested, so reruns stay byte-identical.
    pub wall_ms: f64,
    /// Set when the method failed at this point; the numbers are then NaN.
    pub error: Option<String>,
}

impl ResultRow {
    fn from_outcome(var: &str, value: f64, method: Method, o: &GameOutcome, poa: Option<f64>, wall_ms: f64) -> Self {
        ResultRow {
            sweep_var: var.to_string(),
            sweep_value: value,
            method,
            u_leader: o.u_leader,
            u_follower: o.u_follower,
            u_welfare: o.u_social,
            poa,
            p_s_star: o.p_s_star,
            p_l_star: o.strategy.price,
            beta_star: o.strategy.beta,
            negotiated: o.negotiated,
            iterations: o.iterations,
            wall_ms,
            error: None,
        }
    }

    fn failed(var: &str, value: f64, method: Method, e: &Error) -> Self {
        ResultRow {
            sweep_var: var.to_string(),
            sweep_value: value,
            method,
            u_leader: f64::NAN,
            u_follower: f64::NAN,
            u_welfare: f64::NAN,
            poa: None,
            p_s_star: f64::NAN,
            p_l_star: f64::NAN,
            beta_star: f64::NAN,
            negotiated: false,
            iterations: 0,
            wall_ms: 0.0,
            error: Some(e.to_string()),
        }
    }
}

/// Solve one method on a fixed network.
pub fn run_method(
    method: Method,
    net: &Network,
    cost: &CostModel,
    fixed_price: f64,
    mode_scheme: Scheme,
    opts: &SolverOptions,
) -> Result<GameOutcome> {
    match method {
        Method::Pa => Ok(solve(Objective::Leader, Scheme::Pa, net, cost, Mask::ALL, None, opts)?.outcome),
        Method::Ja => Ok(solve(Objective::Leader, Scheme::Ja, net, cost, Mask::ALL, None, opts)?.outcome),
        Method::FixedPrice => solve_fixed_price(net, cost, fixed_price, None, opts),
        Method::Welfare => solve_social_welfare(net, cost, None, opts),
        Method::Bbcm => solve_fixed_mode(net, cost, BaselineKind::Bbcm, mode_scheme, opts),
        Method::Httcm => solve_fixed_mode(net, cost, BaselineKind::Httcm, mode_scheme, opts),
        Method::Tdma => solve_fixed_mode(net, cost, BaselineKind::Tdma, mode_scheme, opts),
    }
}

fn elapsed_ms(t: Instant, timing: bool) -> f64 {
    if timing {
        t.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// Every selected method at a single scenario point. The welfare optimum
/// behind the PoA column is searched from the default starts and from each
/// Stackelberg outcome of the point.
pub fn run_point(sc: &Scenario, var: &str, value: f64, timing: bool) -> Vec<ResultRow> {
    let setup = || -> Result<(Network, CostModel, f64)> { Ok((sc.network()?, sc.cost_model()?, sc.fixed_price()?)) };
    let (net, cost, fixed_price) = match setup() {
        Ok(s) => s,
        Err(e) => return sc.methods.iter().map(|&m| ResultRow::failed(var, value, m, &e)).collect(),
    };
    let opts = sc.solver_options();
    let scheme = sc.mode_scheme();

    let mut solved: Vec<(Method, Result<GameOutcome>, f64)> = Vec::new();
    for &m in &sc.methods {
        if m == Method::Welfare {
            continue;
        }
        let t = Instant::now();
        let r = run_method(m, &net, &cost, fixed_price, scheme, &opts);
        solved.push((m, r, elapsed_ms(t, timing)));
    }

    let needs_welfare = sc.methods.iter().any(|m| matches!(m, Method::Welfare | Method::Pa | Method::Ja));
    let mut welfare: Option<(Result<GameOutcome>, f64)> = None;
    if needs_welfare {
        let t = Instant::now();
        let mut best = solve_social_welfare(&net, &cost, None, &opts);
        for (m, r, _) in &solved {
            if let (Method::Pa | Method::Ja, Ok(o), Ok(b)) = (m, r, &best) {
                if o.negotiated {
                    match solve_social_welfare(&net, &cost, Some(&o.decision()), &opts) {
                        Ok(w) if w.u_social > b.u_social => best = Ok(w),
                        Ok(_) => {}
                        Err(e) => best = Err(e),
                    }
                }
            }
        }
        welfare = Some((best, elapsed_ms(t, timing)));
    }

    sc.methods
        .iter()
        .map(|&m| {
            if m == Method::Welfare {
                let (r, ms) = welfare.as_ref().expect("welfare solved");
                return match r {
                    Ok(o) => ResultRow::from_outcome(var, value, m, o, None, *ms),
                    Err(e) => ResultRow::failed(var, value, m, e),
                };
            }
            let (_, r, ms) = solved.iter().find(|(k, _, _)| *k == m).expect("method solved");
            match r {
                Ok(o) => {
                    let poa = match (m, &welfare) {
                        (Method::Pa | Method::Ja, Some((Ok(w), _))) => price_of_anarchy(o, w).ratio(),
                        _ => None,
                    };
                    ResultRow::from_outcome(var, value, m, o, poa, *ms)
                }
                Err(e) => ResultRow::failed(var, value, m, e),
            }
        })
        .collect()
}

/// All sweep points of `sc` (or its single point when it has no sweep).
/// Points run in parallel; rows come back in sweep order.
pub fn run_sweep(sc: &Scenario, timing: bool) -> Result<Vec<ResultRow>> {
    sc.validate()?;
    let Some(sweep) = &sc.sweep else {
        return Ok(run_point(sc, "none", 0.0, timing));
    };
    let var = sweep.variable;
    let points: Vec<(f64, Scenario)> = sweep
        .values()
        .into_iter()
        .map(|v| sc.at(var, v).map(|s| (v, s)))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<ResultRow>> = points
        .par_iter()
        .map(|(v, s)| run_point(s, var.name(), *v, timing))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Output layout for [`write_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    /// JSON with one `(x, y)` series per method and metric.
    Plot,
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Write rows as CSV with the fixed header.
pub fn write_csv(rows: &[ResultRow], out: impl Write) -> Result<()> {
    let io = |e: csv::Error| Error::Output(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.sweep_var.clone(),
            num(r.sweep_value),
            r.method.name().to_string(),
            num(r.u_leader),
            num(r.u_follower),
            num(r.u_welfare),
            r.poa.map(num).unwrap_or_default(),
            num(r.p_s_star),
            num(r.p_l_star),
            num(r.beta_star),
            r.negotiated.to_string(),
            r.iterations.to_string(),
            num(r.wall_ms),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))?;
    Ok(())
}

#[derive(Serialize)]
struct Series {
    method: String,
    metric: &'static str,
    points: Vec<(f64, Option<f64>)>,
}

#[derive(Serialize)]
struct PlotFile {
    sweep_var: String,
    series: Vec<Series>,
}

/// Plot-ready series: for each method, one list of `(x, y)` pairs per
/// metric. Missing values are `null`.
pub fn plot_json(rows: &[ResultRow]) -> String {
    let mut methods: Vec<Method> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let metrics: [(&'static str, fn(&ResultRow) -> Option<f64>); 7] = [
        ("u_leader", |r| Some(r.u_leader)),
        ("u_follower", |r| Some(r.u_follower)),
        ("u_welfare", |r| Some(r.u_welfare)),
        ("poa", |r| r.poa),
        ("p_s_star", |r| Some(r.p_s_star)),
        ("p_l_star", |r| Some(r.p_l_star)),
        ("beta_star", |r| Some(r.beta_star)),
    ];
    let mut series = Vec::new();
    for m in methods {
        for (metric, f) in metrics {
            let points = rows
                .iter()
                .filter(|r| r.method == m)
                .map(|r| (r.sweep_value, f(r).filter(|v| v.is_finite())))
                .collect();
            series.push(Series {
                method: m.name().to_string(),
                metric,
                points,
            });
        }
    }
    let file = PlotFile {
        sweep_var: rows.first().map(|r| r.sweep_var.clone()).unwrap_or_default(),
        series,
    };
    serde_json::to_string_pretty(&file).expect("plot series serialise")
}

/// Write rows to `path` in `format`.
pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    match format {
        OutputFormat::Csv => write_csv(rows, &mut f),
        OutputFormat::Plot => {
            f.write_all(plot_json(rows).as_bytes()).map_err(io)?;
            f.write_all(b"\n").map_err(io)
        }
    }
}

/// Timing of one method on networks with `n_per_kind` devices of each kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_per_kind: usize,
    pub method: Method,
    pub repetitions: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub failures: usize,
}

/// Solve each method `reps` times per device count. Every repetition uses
/// a fresh network drawn with seed `seed + rep`, so a non-zero
/// `distance_jitter_m` varies the placements.
pub fn run_benchmark(sc: &Scenario, n_per_kind: &[usize], methods: &[Method], reps: usize) -> Result<Vec<BenchRow>> {
    sc.validate()?;
    let cost = sc.cost_model()?;
    let fixed_price = sc.fixed_price()?;
    let opts = sc.solver_options();
    let mut out = Vec::new();
    for &n in n_per_kind {
        let mut base = sc.clone();
        base.devices.list.clear();
        base.devices.awpd_count = n;
        base.devices.pwpd_count = n;
        base.devices.hwpd_count = n;
        let nets: Vec<Network> = (0..reps)
            .map(|r| {
                let mut s = base.clone();
                s.seed = sc.seed.wrapping_add(r as u64);
                s.network()
            })
            .collect::<Result<_>>()?;
        for &m in methods {
            let mut ms = Vec::with_capacity(reps);
            let mut failures = 0;
            for net in &nets {
                let t = Instant::now();
                if run_method(m, net, &cost, fixed_price, sc.mode_scheme(), &opts).is_err() {
                    failures += 1;
                }
                ms.push(t.elapsed().as_secs_f64() * 1e3);
            }
            let (mean, p95, max) = summary(&mut ms);
            out.push(BenchRow {
                n_per_kind: n,
                method: m,
                repetitions: reps,
                mean_ms: mean,
                p95_ms: p95,
                max_ms: max,
                failures,
            });
        }
    }
    Ok(out)
}

/// Mean, 95th percentile (nearest rank) and maximum.
fn summary(v: &mut [f64]) -> (f64, f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let rank = ((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    (mean, v[rank - 1], v[v.len() - 1])
}

/// Name of the sweep variable of `sc`, or `"none"`.
pub fn sweep_name(sc: &Scenario) -> &'static str {
    sc.sweep.as_ref().map(|s| s.variable.name()).unwrap_or("none")
}
