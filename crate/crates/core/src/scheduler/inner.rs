//! Box-constrained minimization of functions that are smooth except for
//! kinks at zero in selected coordinates (terms like `|x_i|`).
//!
//! Each iteration fixes an orthant for the kinked coordinates, which turns
//! zero into an extra bound; inside that orthant the function is smooth.
//! Variables on a bound with the gradient pushing outward are frozen and a
//! search direction is built on the rest, either by limited-memory BFGS or
//! from a caller-supplied Hessian, then followed with a projected
//! backtracking search.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub max_iter: usize,
    /// Target for the projected-gradient infinity norm.
    pub tol: f64,
    pub memory: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-7,
            memory: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub pg_norm: f64,
    pub converged: bool,
    /// Accepted function values, starting with the initial point.
    pub trace: Vec<f64>,
}

/// `||P(x - g) - x||_inf`.
pub fn projected_grad_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .fold(0.0, |m, ((x, g), (l, h))| {
            m.max(((x - g).clamp(*l, *h) - x).abs())
        })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Local model at a point: a pseudo-gradient, the side of zero each kinked
/// coordinate may move into, and the box restricted to that side.
pub struct Orthant {
    pub grad: Vec<f64>,
    pub side: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Combines the one-sided gradients `g_right` (slope `+1` of `|x_i|` at
/// zero) and `g_left` (slope `-1`) into an [`Orthant`].
pub fn orthant(
    x: &[f64],
    g_right: &[f64],
    g_left: &[f64],
    lo: &[f64],
    hi: &[f64],
    kinks: &[bool],
) -> Orthant {
    let n = x.len();
    let mut o = Orthant {
        grad: g_right.to_vec(),
        side: vec![0.0; n],
        lo: lo.to_vec(),
        hi: hi.to_vec(),
    };
    for i in 0..n {
        if !kinks[i] {
            continue;
        }
        let s = if x[i] > 0.0 {
            1.0
        } else if x[i] < 0.0 {
            -1.0
        } else {
            // descent into x > 0 needs g_right < 0, into x < 0 needs g_left > 0
            let right = (g_right[i] < 0.0 && hi[i] > 0.0).then_some(-g_right[i]);
            let left = (g_left[i] > 0.0 && lo[i] < 0.0).then_some(g_left[i]);
            match (right, left) {
                (Some(r), Some(l)) if l > r => -1.0,
                (Some(_), _) => 1.0,
                (None, Some(_)) => -1.0,
                (None, None) => 0.0,
            }
        };
        o.side[i] = s;
        if s > 0.0 {
            o.lo[i] = lo[i].max(0.0);
        } else if s < 0.0 {
            o.hi[i] = hi[i].min(0.0);
            o.grad[i] = g_left[i];
        } else {
            o.lo[i] = 0.0;
            o.hi[i] = 0.0;
            o.grad[i] = 0.0;
        }
    }
    o
}

fn frozen(x: f64, g: f64, lo: f64, hi: f64) -> bool {
    lo == hi || (x <= lo && g > 0.0) || (x >= hi && g < 0.0)
}

/// Minimizes `fun` over `[lo, hi]` starting from the projection of `x0`,
/// with L-BFGS directions.
///
/// `fun(x, side, grad)` returns the value and writes the gradient; for a
/// kinked coordinate with `x_i == 0` the derivative of `|x_i|` is taken as
/// `side[i]`.
pub fn minimize_box<F>(
    fun: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    kinks: &[bool],
    opts: &InnerOptions,
) -> InnerResult
where
    F: FnMut(&[f64], &[f64], &mut [f64]) -> f64,
{
    run(fun, None, x0, lo, hi, kinks, opts)
}

/// Projected Newton variant of [`minimize_box`]: `hess(x, side)` returns a
/// symmetric positive semidefinite model of the Hessian.
pub fn minimize_box_newton<F, H>(
    fun: F,
    mut hess: H,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    kinks: &[bool],
    opts: &InnerOptions,
) -> InnerResult
where
    F: FnMut(&[f64], &[f64], &mut [f64]) -> f64,
    H: FnMut(&[f64], &[f64]) -> DMatrix<f64>,
{
    run(fun, Some(&mut hess), x0, lo, hi, kinks, opts)
}

/// Solves `H_FF d_F = -g_F`, shifting the diagonal until the factorization
/// succeeds. Variables outside `free` get a diagonally scaled gradient step.
fn newton_direction(h: &DMatrix<f64>, g: &[f64], free: &[bool], d: &mut [f64]) -> bool {
    let idx: Vec<usize> = (0..g.len()).filter(|i| free[*i]).collect();
    for i in 0..g.len() {
        d[i] = if free[i] {
            0.0
        } else {
            -g[i] / h[(i, i)].max(1.0)
        };
    }
    if idx.is_empty() {
        return true;
    }
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |a, b| h[(idx[a], idx[b])]);
    let rhs = DVector::from_iterator(m, idx.iter().map(|i| -g[*i]));
    let scale = (0..m)
        .fold(0.0f64, |s, a| s.max(sub[(a, a)].abs()))
        .max(1e-12);
    let mut shift = 0.0;
    for _ in 0..30 {
        let mut a = sub.clone();
        for j in 0..m {
            a[(j, j)] += shift;
        }
        if let Some(ch) = a.cholesky() {
            let sol = ch.solve(&rhs);
            if sol.iter().all(|v| v.is_finite()) {
                for (j, i) in idx.iter().enumerate() {
                    d[*i] = sol[j];
                }
                return true;
            }
        }
        shift = if shift == 0.0 {
            1e-10 * scale
        } else {
            shift * 10.0
        };
    }
    false
}

#[allow(clippy::type_complexity)]
fn run<F>(
    mut fun: F,
    mut hess: Option<&mut dyn FnMut(&[f64], &[f64]) -> DMatrix<f64>>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    kinks: &[bool],
    opts: &InnerOptions,
) -> InnerResult
where
    F: FnMut(&[f64], &[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x: Vec<f64> = x0
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(x, (l, h))| x.clamp(*l, *h))
        .collect();
    let plus = vec![1.0; n];
    let minus = vec![-1.0; n];
    let mut g_right = vec![0.0; n];
    let mut g_left = vec![0.0; n];
    let local = |x: &[f64], g_right: &mut [f64], g_left: &mut [f64], fun: &mut F| {
        let f = fun(x, &plus, g_right);
        if (0..n).any(|i| kinks[i] && x[i] == 0.0) {
            fun(x, &minus, g_left);
        } else {
            g_left.copy_from_slice(g_right);
        }
        f
    };
    let mut f = local(&x, &mut g_right, &mut g_left, &mut fun);
    let mut o = orthant(&x, &g_right, &g_left, lo, hi, kinks);
    let mut trace = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut stalls = 0;
    let mut iterations = 0;
    let mut pg = projected_grad_norm(&x, &o.grad, &o.lo, &o.hi);
    let mut best_pg = pg;

    while iterations < opts.max_iter && pg > opts.tol {
        iterations += 1;
        let g = &o.grad;
        let newton = hess.is_some();
        // near-bound variables pushed outward count as active for Newton steps
        let eps = if newton { pg.min(1e-3) } else { 0.0 };
        let free: Vec<bool> = (0..n)
            .map(|i| !frozen(x[i], g[i], o.lo[i] + eps, o.hi[i] - eps) && o.lo[i] < o.hi[i])
            .collect();

        if let Some(h) = hess.as_mut() {
            let hm = h(&x, &o.side);
            if !newton_direction(&hm, g, &free, &mut d) || !(dot(g, &d) < 0.0) {
                for i in 0..n {
                    d[i] = -g[i];
                }
            }
        } else {
            // two-loop recursion restricted to the free variables
            for i in 0..n {
                d[i] = if free[i] { g[i] } else { 0.0 };
            }
            let mut alphas = Vec::with_capacity(memory.len());
            for (s, y, rho) in memory.iter().rev() {
                let a = rho * dot(s, &d);
                for i in 0..n {
                    d[i] -= a * y[i];
                }
                alphas.push(a);
            }
            if let Some((s, y, _)) = memory.back() {
                let gamma = dot(s, y) / dot(y, y);
                d.iter_mut().for_each(|v| *v *= gamma);
            }
            for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &d);
                for i in 0..n {
                    d[i] += (a - b) * s[i];
                }
            }
            for i in 0..n {
                d[i] = if free[i] { -d[i] } else { 0.0 };
            }
            if !(dot(g, &d) < 0.0) {
                memory.clear();
                for i in 0..n {
                    d[i] = if free[i] { -g[i] } else { 0.0 };
                }
            }
        }

        let mut step = if memory.is_empty() && !newton {
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (1.0 / dmax.max(1e-300)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = (x[i] + step * d[i]).clamp(o.lo[i], o.hi[i]);
            }
            let moved: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            // gradient on the orthant just searched, for the curvature pair
            let f_new = fun(&x_new, &o.side, &mut g_new);
            let armijo = f_new <= f + 1e-4 * moved.min(0.0);
            // once decreases drop below rounding, fall back on the slope:
            // no increase and a directional derivative that has flattened
            let slope_new: f64 = (0..n).map(|i| g_new[i] * (x_new[i] - x[i])).sum();
            let approx_wolfe =
                f_new <= f && moved < 0.0 && slope_new >= 0.9 * moved && slope_new <= -0.8 * moved;
            if f_new.is_finite() && (armijo || approx_wolfe) {
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                    if memory.len() == opts.memory {
                        memory.pop_front();
                    }
                    memory.push_back((s, y, 1.0 / sy));
                }
                std::mem::swap(&mut x, &mut x_new);
                f = local(&x, &mut g_right, &mut g_left, &mut fun);
                trace.push(f);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        o = orthant(&x, &g_right, &g_left, lo, hi, kinks);
        pg = projected_grad_norm(&x, &o.grad, &o.lo, &o.hi);
        if pg < 0.5 * best_pg {
            best_pg = pg;
            stalls = 0;
        } else {
            stalls += 1;
        }
        if !accepted {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        }
        if stalls >= if hess.is_some() { 20 } else { 200 } {
            break;
        }
    }
    InnerResult {
        converged: pg <= opts.tol,
        x,
        value: f,
        iterations,
        pg_norm: pg,
        trace,
    }
}
