use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximise a unimodal function on `[lo, hi]`.
pub struct ScalarProblem<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl<'a> ScalarProblem<'a> {
    pub fn new(f: &'a dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Self {
        ScalarProblem { f, lo, hi, tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarOptimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search. The bracket is shrunk to `tol`, then the interior
/// estimate competes with both endpoints; ties go to the lower abscissa so a
/// flat objective returns `lo`.
pub fn golden_section_max(p: &ScalarProblem<'_>) -> Result<ScalarOptimum> {
    if !(p.lo.is_finite() && p.hi.is_finite()) || p.lo > p.hi {
        return Err(Error::domain(format!("invalid interval [{}, {}]", p.lo, p.hi)));
    }
    if !(p.tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let f = p.f;
    let (mut a, mut b) = (p.lo, p.hi);
    let mut evals = 0usize;
    let mut eval = |x: f64| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut best = (a, eval(a));
    if b > a {
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut fc, mut fd) = (eval(c), eval(d));
        while b - a > p.tol {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = eval(d);
            }
        }
        let mid = 0.5 * (a + b);
        let mut candidates = vec![(c, fc), (mid, eval(mid)), (d, fd), (p.hi, eval(p.hi))];
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (x, v) in candidates {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok(ScalarOptimum {
        x: best.0,
        value: best.1,
        evaluations: evals,
    })
}
