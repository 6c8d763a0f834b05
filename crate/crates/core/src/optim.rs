//! Small numerical helpers shared by the solvers.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;

struct Objective<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Objective<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, argmin::core::Error> {
        Ok((self.0)(p))
    }
}

/// Nelder–Mead from `x0` with an axis-aligned initial simplex of size `step`.
/// Returns the best point and its value.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    max_iters: u64,
) -> (Vec<f64>, f64) {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let fallback = (x0.to_vec(), f(x0));
    let solver = match NelderMead::new(simplex).with_sd_tolerance(1e-14) {
        Ok(s) => s,
        Err(_) => return fallback,
    };
    match Executor::new(Objective(&f), solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
    {
        Ok(res) => {
            let st = res.state();
            match &st.best_param {
                Some(p) if st.best_cost <= fallback.1 => (p.clone(), st.best_cost),
                _ => fallback,
            }
        }
        Err(_) => fallback,
    }
}

/// Bisection for a sign change of `g` on `[a, b]` (`g(a)` and `g(b)` of opposite sign).
pub fn bisect<F: Fn(f64) -> f64>(g: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let mut ga = g(a);
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Boundary between `good` (predicate true) and `bad` (false), returned on the good side.
pub fn bisect_predicate<P: Fn(f64) -> bool>(
    pred: P,
    mut good: f64,
    mut bad: f64,
    iters: usize,
) -> f64 {
    for _ in 0..iters {
        let m = 0.5 * (good + bad);
        if pred(m) {
            good = m;
        } else {
            bad = m;
        }
    }
    good
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
