//! Convex–concave procedure for `max g(x) + h(x)` with `g` concave and `h`
//! convex over a polytope, plus the first-order residual used to certify
//! its fixed points.

use nalgebra::{DMatrix, DVector};

use super::barrier::{concave_max_linear, BarrierOptions, ConcaveObjective, LinearConstraints};
use super::nnls::nnls;
use crate::{Error, Result};

pub trait DcProblem {
    fn concave(&self) -> &dyn ConcaveObjective;
    fn convex_value(&self, x: &[f64]) -> f64;
    fn convex_gradient(&self, x: &[f64], g: &mut [f64]);

    fn value(&self, x: &[f64]) -> f64 {
        self.concave().value(x) + self.convex_value(x)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let mut h = vec![0.0; g.len()];
        self.concave().gradient(x, g);
        self.convex_gradient(x, &mut h);
        g.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CccpOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub barrier: BarrierOptions,
    /// Distance below which a constraint is a candidate for the active set
    /// in the first-order residual.
    pub active_tol: f64,
    /// After each step, also try points further along it and keep the best.
    pub extrapolate: bool,
}

impl Default for CccpOptions {
    fn default() -> Self {
        CccpOptions {
            tol: 1e-10,
            max_iter: 200,
            barrier: BarrierOptions::default(),
            active_tol: 1e-4,
            extrapolate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CccpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective at the start point and after every accepted iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// The concave part plus the tangent of the convex part at the previous
/// iterate: a minorant of the objective that is tight there.
struct Surrogate<'a> {
    concave: &'a dyn ConcaveObjective,
    slope: Vec<f64>,
}

impl ConcaveObjective for Surrogate<'_> {
    fn dim(&self) -> usize {
        self.concave.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.concave.value(x) + self.slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.concave.gradient(x, g);
        g.iter_mut().zip(&self.slope).for_each(|(a, b)| *a += b);
    }
    fn hessian(&self, x: &[f64], h: &mut DMatrix<f64>) {
        self.concave.hessian(x, h);
    }
}

/// Iterate `x_k = argmax g(x) + x·∇h(x_{k−1})` until the objective moves by
/// less than `tol`. An iterate that would lower the objective is rejected
/// and ends the run, so the trace is non-decreasing.
///
/// With `extrapolate` set, each step `x_{k−1} → x_k` is continued past `x_k`
/// in doubling lengths while the objective keeps rising (see [`stretch`]).
pub fn cccp_solve(
    problem: &dyn DcProblem,
    cons: &LinearConstraints,
    x0: &[f64],
    opts: &CccpOptions,
) -> Result<CccpSolution> {
    let n = problem.concave().dim();
    let mut x = x0.to_vec();
    let mut value = problem.value(&x);
    if !value.is_finite() {
        return Err(Error::Solver {
            iteration: 0,
            message: "start point outside the objective domain".into(),
        });
    }
    let mut trace = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=opts.max_iter {
        iterations = k;
        let mut slope = vec![0.0; n];
        problem.convex_gradient(&x, &mut slope);
        let surrogate = Surrogate {
            concave: problem.concave(),
            slope,
        };
        let sol = concave_max_linear(&surrogate, cons, Some(&x), &opts.barrier).map_err(|e| match e {
            Error::Infeasible(m) => Error::Infeasible(format!("iteration {k}: {m}")),
            e => Error::Solver {
                iteration: k,
                message: e.to_string(),
            },
        })?;
        let mut next_x = sol.x;
        let mut next = problem.value(&next_x);
        if !(next >= value) {
            converged = true;
            break;
        }
        if opts.extrapolate {
            (next_x, next) = stretch(problem, cons, &x, next_x, next);
        }
        let gain = next - value;
        x = next_x;
        value = next;
        trace.push(value);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    let mut g = vec![0.0; n];
    problem.gradient(&x, &mut g);
    let kkt_residual = kkt_residual(&g, &x, cons, opts.active_tol);
    Ok(CccpSolution {
        x,
        value,
        trace,
        iterations,
        kkt_residual,
        converged,
    })
}

fn dense(row: &[(usize, f64)], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(j, a) in row {
        v[j] += a;
    }
    v
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Continue the step `from → best` beyond `best`, along the part of it that
/// is parallel to the rows active at `best`. Those rows may end up violated
/// by rounding only; every other row must stay strictly satisfied.
fn stretch(problem: &dyn DcProblem, cons: &LinearConstraints, from: &[f64], mut best: Vec<f64>, mut value: f64) -> (Vec<f64>, f64) {
    let n = best.len();
    let tol = |b: f64, ax: f64| 1e-9 * (1.0 + b.abs().max(ax.abs()));
    let add = |row: &[(usize, f64)], normals: &mut Vec<Vec<f64>>| {
        let mut v = dense(row, n);
        let size = dotv(&v, &v).sqrt();
        for u in normals.iter() {
            let p = dotv(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let norm = dotv(&v, &v).sqrt();
        if norm > 1e-9 * size {
            v.iter_mut().for_each(|a| *a /= norm);
            normals.push(v);
        }
    };
    let near: Vec<bool> = cons
        .inequalities()
        .map(|(r, b)| {
            let ax = dotv(&dense(r, n), &best);
            b - ax <= tol(b, ax)
        })
        .collect();
    let mut normals: Vec<Vec<f64>> = Vec::new();
    for ((r, _), &on) in cons.inequalities().zip(&near) {
        if on {
            add(r, &mut normals);
        }
    }
    for (r, _) in cons.equalities() {
        add(r, &mut normals);
    }
    if normals.len() >= n {
        return (best, value);
    }
    let mut dir: Vec<f64> = best.iter().zip(from).map(|(b, a)| b - a).collect();
    for u in &normals {
        let p = dotv(&dir, u);
        dir.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
    }
    let base = best.clone();
    let mut factor = 1.0;
    while factor <= 1e6 {
        let y: Vec<f64> = base.iter().zip(&dir).map(|(a, d)| a + factor * d).collect();
        let rows_ok = cons.inequalities().zip(&near).all(|((r, b), &on)| {
            let ax = dotv(&dense(r, n), &y);
            b - ax > 0.0 || (on && b - ax >= -tol(b, ax))
        });
        let eq_ok = cons.equalities().all(|(r, b)| {
            let ax = dotv(&dense(r, n), &y);
            (ax - b).abs() <= tol(b, ax)
        });
        if !(rows_ok && eq_ok) {
            break;
        }
        let v = problem.value(&y);
        if !(v > value) {
            break;
        }
        best = y;
        value = v;
        factor *= 2.0;
    }
    (best, value)
}

/// Relative first-order residual of a maximisation over `cons` at `x`.
///
/// Rows within `near_tol` of `x` (scaled by `1 + ‖x‖∞`) are candidates for
/// the active set. With unit-normalised rows `â_i` at distance `d_i`, the
/// residual is `(‖∇f − Σ λ_i â_i‖ + Σ λ_i d_i) / max(1, ‖∇f‖)`, where the
/// non-negative `λ` minimise the first term and equality rows take either
/// sign. The second term charges complementary slackness.
pub fn kkt_residual(grad: &[f64], x: &[f64], cons: &LinearConstraints, near_tol: f64) -> f64 {
    let n = grad.len();
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut dist: Vec<f64> = Vec::new();
    let unit = |row: &Vec<(usize, f64)>, sign: f64, norm: f64| {
        let mut c = vec![0.0; n];
        for &(j, a) in row {
            c[j] += sign * a / norm;
        }
        c
    };
    for (row, b) in cons.inequalities() {
        let norm = row.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
        let ax: f64 = row.iter().map(|&(j, a)| a * x[j]).sum();
        let d = ((b - ax) / norm).max(0.0);
        if norm > 0.0 && d <= near_tol * (1.0 + xmax) {
            cols.push(unit(row, 1.0, norm));
            dist.push(d);
        }
    }
    for (row, _) in cons.equalities() {
        let norm = row.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            cols.push(unit(row, 1.0, norm));
            cols.push(unit(row, -1.0, norm));
            dist.extend([0.0, 0.0]);
        }
    }
    let g = DVector::from_column_slice(grad);
    let gnorm = g.norm();
    if cols.is_empty() {
        return gnorm / gnorm.max(1.0);
    }
    let a = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let lambda = nnls(&a, &g);
    let comp: f64 = lambda.iter().zip(&dist).map(|(l, d)| l * d).sum();
    ((&g - a * &lambda).norm() + comp) / gnorm.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `−(x−2)² + y²` on the box `[0,1]²`: a concave part in `x` and a convex
    /// part in `y`.
    struct Toy;
    struct ToyConcave;

    impl ConcaveObjective for ToyConcave {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            -(x[0] - 2.0).powi(2)
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            g[0] = -2.0 * (x[0] - 2.0);
            g[1] = 0.0;
        }
        fn hessian(&self, _: &[f64], h: &mut DMatrix<f64>) {
            h.fill(0.0);
            h[(0, 0)] = -2.0;
        }
    }

    impl DcProblem for Toy {
        fn concave(&self) -> &dyn ConcaveObjective {
            &ToyConcave
        }
        fn convex_value(&self, x: &[f64]) -> f64 {
            x[1] * x[1]
        }
        fn convex_gradient(&self, x: &[f64], g: &mut [f64]) {
            g[0] = 0.0;
            g[1] = 2.0 * x[1];
        }
    }

    #[test]
    fn climbs_to_a_vertex_with_small_residual() {
        let mut c = LinearConstraints::new(2);
        c.bounds(0, 0.0, 1.0);
        c.bounds(1, 0.0, 1.0);
        let sol = cccp_solve(&Toy, &c, &[0.5, 0.6], &CccpOptions::default()).unwrap();
        assert!(sol.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!((sol.x[0] - 1.0).abs() < 1e-7 && (sol.x[1] - 1.0).abs() < 1e-7);
        assert!(sol.kkt_residual < 1e-5, "{}", sol.kkt_residual);
    }

    #[test]
    fn interior_stationary_point_has_zero_residual() {
        let c = LinearConstraints::new(2);
        assert!(kkt_residual(&[0.0, 0.0], &[0.3, 0.3], &c, 1e-6) == 0.0);
        let mut c = LinearConstraints::new(1);
        c.le(vec![(0, 1.0)], 1.0);
        assert!(kkt_residual(&[2.0], &[1.0], &c, 1e-6) < 1e-12);
        assert!(kkt_residual(&[2.0], &[0.5], &c, 1e-6) > 0.5);
    }
}
