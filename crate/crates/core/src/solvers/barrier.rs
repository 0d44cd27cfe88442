//! Log-barrier interior-point method for concave maximisation over a
//! polytope `{x : A x ≤ b, E x = e}`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// A smooth concave function. `value` returns a non-finite number outside
/// the function's domain.
pub trait ConcaveObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    /// Writes the full (negative semidefinite) Hessian into `h`.
    fn hessian(&self, x: &[f64], h: &mut DMatrix<f64>);
}

/// Sparse row `Σ coef·x[idx]`.
pub type Row = Vec<(usize, f64)>;

fn dot(row: &Row, x: &[f64]) -> f64 {
    row.iter().map(|&(j, a)| a * x[j]).sum()
}

#[derive(Debug, Clone, Default)]
pub struct LinearConstraints {
    dim: usize,
    le_rows: Vec<Row>,
    le_rhs: Vec<f64>,
    eq_rows: Vec<Row>,
    eq_rhs: Vec<f64>,
}

impl LinearConstraints {
    pub fn new(dim: usize) -> Self {
        LinearConstraints {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `row · x ≤ rhs`. Zero coefficients are dropped.
    pub fn le(&mut self, row: Row, rhs: f64) {
        let row: Row = row.into_iter().filter(|&(_, a)| a != 0.0).collect();
        debug_assert!(row.iter().all(|&(j, _)| j < self.dim));
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    pub fn ge(&mut self, row: Row, rhs: f64) {
        self.le(row.into_iter().map(|(j, a)| (j, -a)).collect(), -rhs);
    }

    pub fn eq(&mut self, row: Row, rhs: f64) {
        let row: Row = row.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.ge(vec![(j, 1.0)], lo);
        self.le(vec![(j, 1.0)], hi);
    }

    pub fn inequalities(&self) -> impl Iterator<Item = (&Row, f64)> {
        self.le_rows.iter().zip(self.le_rhs.iter().copied())
    }

    pub fn equalities(&self) -> impl Iterator<Item = (&Row, f64)> {
        self.eq_rows.iter().zip(self.eq_rhs.iter().copied())
    }

    pub fn num_inequalities(&self) -> usize {
        self.le_rows.len()
    }

    /// Largest violation over all rows (non-positive when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let ineq = self.inequalities().map(|(r, b)| dot(r, x) - b);
        let eq = self.equalities().map(|(r, b)| (dot(r, x) - b).abs());
        ineq.chain(eq).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    pub t0: f64,
    pub growth: f64,
    pub newton_tol: f64,
    /// Stop once the duality-gap bound `m/t` falls below this value.
    pub gap_tol: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            t0: 1.0,
            growth: 10.0,
            newton_tol: 1e-8,
            gap_tol: 1e-9,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per inequality row, in insertion order.
    pub multipliers: Vec<f64>,
    pub newton_steps: usize,
}

struct Scaled<'a> {
    inner: &'a dyn ConcaveObjective,
    scale: f64,
}

/// `f(x_p + N z)`: the objective restricted to the affine set of the
/// equality rows.
struct Reduced<'a> {
    inner: &'a dyn ConcaveObjective,
    xp: DVector<f64>,
    basis: DMatrix<f64>,
}

impl Reduced<'_> {
    fn lift(&self, z: &[f64]) -> Vec<f64> {
        (&self.xp + &self.basis * DVector::from_column_slice(z)).as_slice().to_vec()
    }
}

impl ConcaveObjective for Reduced<'_> {
    fn dim(&self) -> usize {
        self.basis.ncols()
    }
    fn value(&self, z: &[f64]) -> f64 {
        self.inner.value(&self.lift(z))
    }
    fn gradient(&self, z: &[f64], g: &mut [f64]) {
        let x = self.lift(z);
        let mut gx = vec![0.0; x.len()];
        self.inner.gradient(&x, &mut gx);
        let gz = self.basis.transpose() * DVector::from_vec(gx);
        g.copy_from_slice(gz.as_slice());
    }
    fn hessian(&self, z: &[f64], h: &mut DMatrix<f64>) {
        let x = self.lift(z);
        let n = x.len();
        let mut hx = DMatrix::zeros(n, n);
        self.inner.hessian(&x, &mut hx);
        *h = self.basis.transpose() * hx * &self.basis;
    }
}

/// Maximise a concave function over a polytope with a non-empty relative
/// interior. `x0` is used as the starting point when it is strictly
/// feasible; otherwise a phase-1 problem finds one.
pub fn concave_max_linear(
    obj: &dyn ConcaveObjective,
    cons: &LinearConstraints,
    x0: Option<&[f64]>,
    opts: &BarrierOptions,
) -> Result<BarrierSolution> {
    let n = obj.dim();
    if cons.dim != n {
        return Err(Error::domain("constraint dimension does not match objective"));
    }
    if cons.eq_rows.is_empty() {
        return solve_inequality_form(obj, &cons.le_rows, &cons.le_rhs, x0, opts);
    }

    let p = cons.eq_rows.len();
    let mut a = DMatrix::zeros(p, n);
    for (i, row) in cons.eq_rows.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] += v;
        }
    }
    let e = DVector::from_column_slice(&cons.eq_rhs);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let xp = svd
        .solve(&e, 1e-12 * smax.max(1e-300))
        .map_err(|m| Error::domain(m.to_string()))?;
    if (&a * &xp - &e).amax() > 1e-9 * (1.0 + e.amax()) {
        return Err(Error::Infeasible("inconsistent equality constraints".into()));
    }
    let eig = (a.transpose() * &a).symmetric_eigen();
    let emax = eig.eigenvalues.amax();
    let null: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] <= 1e-12 * emax.max(1e-300))
        .collect();
    let mut basis = DMatrix::zeros(n, null.len());
    for (c, &k) in null.iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(k));
    }

    let reduced = Reduced {
        inner: obj,
        xp: xp.clone(),
        basis: basis.clone(),
    };
    let mut rows = Vec::with_capacity(cons.le_rows.len());
    let mut rhs = Vec::with_capacity(cons.le_rows.len());
    // Rows that are constant on the affine set are dropped when they hold.
    let mut kept = Vec::with_capacity(cons.le_rows.len());
    for (row, b) in cons.inequalities() {
        let mut r = Row::new();
        for c in 0..basis.ncols() {
            let v: f64 = row.iter().map(|&(j, a)| a * basis[(j, c)]).sum();
            if v.abs() > 1e-14 {
                r.push((c, v));
            }
        }
        let offset = b - dot(row, xp.as_slice());
        if r.is_empty() {
            let scale = 1.0 + b.abs() + row.iter().map(|&(_, a)| a.abs()).sum::<f64>() * xp.amax();
            if offset < -1e-12 * scale {
                return Err(Error::Infeasible("an inequality contradicts the equality constraints".into()));
            }
            kept.push(false);
            continue;
        }
        kept.push(true);
        rows.push(r);
        rhs.push(offset);
    }
    let z0 = x0.map(|x| {
        let d = DVector::from_column_slice(x) - &xp;
        (basis.transpose() * d).as_slice().to_vec()
    });
    let sol = solve_inequality_form(&reduced, &rows, &rhs, z0.as_deref(), opts)?;
    let x = reduced.lift(&sol.x);
    Ok(BarrierSolution {
        value: obj.value(&x),
        x,
        multipliers: {
            let mut m = sol.multipliers.into_iter();
            kept.iter().map(|&k| if k { m.next().unwrap_or(0.0) } else { 0.0 }).collect()
        },
        newton_steps: sol.newton_steps,
    })
}

fn solve_inequality_form(
    obj: &dyn ConcaveObjective,
    rows: &[Row],
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &BarrierOptions,
) -> Result<BarrierSolution> {
    let n = obj.dim();
    let start = match x0 {
        Some(x) if strictly_inside(rows, rhs, x) && obj.value(x).is_finite() => x.to_vec(),
        _ => phase_one(rows, rhs, x0.map(|x| x.to_vec()).unwrap_or_else(|| vec![0.0; n]), opts)?,
    };
    if !obj.value(&start).is_finite() {
        return Err(Error::domain("interior point lies outside the objective domain"));
    }
    let mut g = vec![0.0; n];
    obj.gradient(&start, &mut g);
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = 1.0 / obj.value(&start).abs().max(gmax).max(1e-12);
    let scaled = Scaled { inner: obj, scale };
    let (x, t, steps) = barrier_loop(&scaled, rows, rhs, start, opts, None)?;
    let multipliers = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| 1.0 / (t * (b - dot(r, &x)) * scale))
        .collect();
    Ok(BarrierSolution {
        value: obj.value(&x),
        x,
        multipliers,
        newton_steps: steps,
    })
}

fn strictly_inside(rows: &[Row], rhs: &[f64], x: &[f64]) -> bool {
    rows.iter().zip(rhs).all(|(r, &b)| b - dot(r, x) > 0.0)
}

impl ConcaveObjective for Scaled<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.inner.value(x)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.inner.gradient(x, g);
        g.iter_mut().for_each(|v| *v *= self.scale);
    }
    fn hessian(&self, x: &[f64], h: &mut DMatrix<f64>) {
        self.inner.hessian(x, h);
        *h *= self.scale;
    }
}

/// `−s` over `(y, s)`: the phase-1 objective.
struct PhaseOne {
    n: usize,
}

impl ConcaveObjective for PhaseOne {
    fn dim(&self) -> usize {
        self.n + 1
    }
    fn value(&self, x: &[f64]) -> f64 {
        -x[self.n]
    }
    fn gradient(&self, _: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        g[self.n] = -1.0;
    }
    fn hessian(&self, _: &[f64], h: &mut DMatrix<f64>) {
        h.fill(0.0);
    }
}

fn phase_one(rows: &[Row], rhs: &[f64], y0: Vec<f64>, opts: &BarrierOptions) -> Result<Vec<f64>> {
    let n = y0.len();
    let bound = 10.0 * (1.0 + y0.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let mut prows = Vec::with_capacity(rows.len() + 1);
    let mut prhs = Vec::with_capacity(rows.len() + 1);
    for (r, &b) in rows.iter().zip(rhs) {
        let norm = r.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            if b > 0.0 {
                continue;
            }
            return Err(Error::Infeasible("constant constraint row violated".into()));
        }
        let mut pr: Row = r.iter().map(|&(j, a)| (j, a / norm)).collect();
        pr.push((n, -1.0));
        prows.push(pr);
        prhs.push(b / norm);
    }
    prows.push(vec![(n, -1.0)]);
    prhs.push(bound);
    let worst = prows[..prows.len() - 1]
        .iter()
        .zip(&prhs)
        .map(|(r, b)| dot(r, &y0.iter().copied().chain([0.0]).collect::<Vec<_>>()) - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut start = y0;
    start.push(worst.max(-bound / 2.0) + 1.0);
    let stop = |x: &[f64]| x[n] < 0.0;
    let (x, _, _) = barrier_loop(&PhaseOne { n }, &prows, &prhs, start, opts, Some(&stop))?;
    if x[n] < 0.0 {
        Ok(x[..n].to_vec())
    } else {
        Err(Error::Infeasible("constraint polytope has an empty interior".into()))
    }
}

/// Centering loop on `t·f(x) + Σ ln(b − a·x)`. Returns the final point, the
/// final `t` and the number of Newton steps.
fn barrier_loop(
    obj: &dyn ConcaveObjective,
    rows: &[Row],
    rhs: &[f64],
    mut x: Vec<f64>,
    opts: &BarrierOptions,
    early_stop: Option<&dyn Fn(&[f64]) -> bool>,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = x.len();
    let m = rows.len().max(1) as f64;
    let mut t = opts.t0;
    let mut steps = 0usize;
    let mut g = vec![0.0; n];
    let mut h = DMatrix::zeros(n, n);
    let phi = |x: &[f64], t: f64| -> f64 {
        let f = obj.value(x);
        if !f.is_finite() {
            return f64::INFINITY;
        }
        let mut acc = -t * f;
        for (r, &b) in rows.iter().zip(rhs) {
            let s = b - dot(r, x);
            if s <= 0.0 {
                return f64::INFINITY;
            }
            acc -= s.ln();
        }
        acc
    };

    loop {
        let mut inner = 0usize;
        loop {
            if let Some(stop) = early_stop {
                if stop(&x) {
                    return Ok((x, t, steps));
                }
            }
            obj.gradient(&x, &mut g);
            obj.hessian(&x, &mut h);
            let mut grad = DVector::from_iterator(n, g.iter().map(|v| -t * v));
            let mut hess = -t * &h;
            for (r, &b) in rows.iter().zip(rhs) {
                let s = b - dot(r, &x);
                for &(j, a) in r {
                    grad[j] += a / s;
                }
                let s2 = s * s;
                for &(j, a) in r {
                    for &(k, c) in r {
                        hess[(j, k)] += a * c / s2;
                    }
                }
            }
            let dx = newton_direction(&hess, &grad)?;
            let slope = grad.dot(&dx);
            let decrement = -slope;
            if decrement / 2.0 <= opts.newton_tol {
                break;
            }
            let f0 = phi(&x, t);
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut stalled = false;
            for _ in 0..80 {
                let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + alpha * d).collect();
                let f1 = phi(&trial, t);
                if f1.is_finite() && f1 <= f0 + 0.25 * alpha * slope {
                    // Progress below rounding: the centre is as good as it gets.
                    stalled = f0 - f1 <= 1e-14 * f0.abs().max(1.0);
                    x = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            steps += 1;
            inner += 1;
            if !accepted || stalled || inner >= opts.max_newton {
                break;
            }
        }
        if m / t < opts.gap_tol {
            return Ok((x, t, steps));
        }
        t *= opts.growth;
    }
}

fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let n = hess.nrows();
    let dmax = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..30 {
        let mut hr = hess.clone();
        for i in 0..n {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = hr.cholesky() {
            let d = ch.solve(&(-grad));
            if d.iter().all(|v| v.is_finite()) {
                return Ok(d);
            }
        }
        reg = if reg == 0.0 { 1e-12 * dmax } else { reg * 100.0 };
    }
    Err(Error::Solver {
        iteration: 0,
        message: "Newton system could not be factorised".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `Σ w_i ln(x_i)`.
    struct LogSum(Vec<f64>);

    impl ConcaveObjective for LogSum {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            if x.iter().any(|&v| v <= 0.0) {
                return f64::NEG_INFINITY;
            }
            self.0.iter().zip(x).map(|(w, v)| w * v.ln()).sum()
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            for i in 0..x.len() {
                g[i] = self.0[i] / x[i];
            }
        }
        fn hessian(&self, x: &[f64], h: &mut DMatrix<f64>) {
            h.fill(0.0);
            for i in 0..x.len() {
                h[(i, i)] = -self.0[i] / (x[i] * x[i]);
            }
        }
    }

    struct Linear(Vec<f64>);

    impl ConcaveObjective for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.iter().zip(x).map(|(a, b)| a * b).sum()
        }
        fn gradient(&self, _: &[f64], g: &mut [f64]) {
            g.copy_from_slice(&self.0);
        }
        fn hessian(&self, _: &[f64], h: &mut DMatrix<f64>) {
            h.fill(0.0);
        }
    }

    fn simplex(n: usize) -> LinearConstraints {
        let mut c = LinearConstraints::new(n);
        for j in 0..n {
            c.ge(vec![(j, 1.0)], 0.0);
        }
        c.le((0..n).map(|j| (j, 1.0)).collect(), 1.0);
        c
    }

    #[test]
    fn weighted_log_on_simplex() {
        let w = vec![1.0, 2.0, 3.0];
        let sol = concave_max_linear(&LogSum(w), &simplex(3), None, &BarrierOptions::default()).unwrap();
        for (i, v) in sol.x.iter().enumerate() {
            assert!((v - (i as f64 + 1.0) / 6.0).abs() < 1e-7, "{:?}", sol.x);
        }
        assert!((sol.multipliers[3] - 6.0).abs() < 1e-3, "{:?}", sol.multipliers);
    }

    #[test]
    fn linear_program_vertex() {
        let sol = concave_max_linear(&Linear(vec![1.0, 3.0]), &simplex(2), Some(&[0.2, 0.2]), &BarrierOptions::default())
            .unwrap();
        assert!((sol.x[1] - 1.0).abs() < 1e-8 && sol.x[0].abs() < 1e-8);
    }

    #[test]
    fn phase_one_from_outside() {
        let mut c = simplex(2);
        c.ge(vec![(0, 1.0)], 0.6);
        let sol = concave_max_linear(&Linear(vec![0.0, 1.0]), &c, Some(&[5.0, -3.0]), &BarrierOptions::default()).unwrap();
        assert!((sol.x[0] - 0.6).abs() < 1e-7 && (sol.x[1] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn empty_interior_rejected() {
        let mut c = simplex(2);
        c.ge(vec![(0, 1.0), (1, 1.0)], 1.5);
        let r = concave_max_linear(&Linear(vec![1.0, 1.0]), &c, None, &BarrierOptions::default());
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn equality_constraints_reduce_dimension() {
        let mut c = LinearConstraints::new(3);
        for j in 0..3 {
            c.ge(vec![(j, 1.0)], 0.0);
        }
        c.eq(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 1.0);
        let sol = concave_max_linear(&LogSum(vec![1.0, 1.0, 2.0]), &c, None, &BarrierOptions::default()).unwrap();
        assert!((sol.x[2] - 0.5).abs() < 1e-7 && (sol.x[0] - 0.25).abs() < 1e-7);
        assert!(c.max_violation(&sol.x) < 1e-10);
    }
}
