//! Preconditioned conjugate gradients and GMRES, the fractional iteration
//! count, and the mixed-precision preconditioner wrapper.
//!
//! Both solvers start from `x_0 = 0` and stop once `‖r_n‖ / ‖r_0‖ ≤ tol`.
//! CG and right-preconditioned GMRES monitor the residual `b - A x`;
//! left-preconditioned GMRES monitors the preconditioned residual
//! `P (b - A x)`.

use std::time::Instant;

use crate::operator::LinearOperator;
use crate::scalar::{axpy, dot, norm2, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KrylovMethod {
    Cg,
    Gmres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖r_0‖, …, ‖r_n‖`.
    pub residual_history: Vec<f64>,
    pub fractional: f64,
    pub converged: bool,
    pub wall_time: f64,
}

impl SolveReport {
    pub fn relative_residual(&self) -> f64 {
        let r0 = self.residual_history[0];
        let rn = *self.residual_history.last().expect("nonempty history");
        if r0 == 0.0 {
            0.0
        } else {
            rn / r0
        }
    }

    fn finish(iterations: usize, residual_history: Vec<f64>, tol: f64, start: Instant) -> Self {
        let r0 = residual_history[0];
        let rn = *residual_history.last().expect("nonempty history");
        let converged = rn <= tol * r0;
        Self {
            iterations,
            fractional: fractional_iterations(iterations, r0, rn),
            residual_history,
            converged,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }
}

/// Iterations needed for eight digits at the average reduction rate,
/// `ν = -8 / log10(r̄)` with `r̄ = (‖r_n‖ / ‖r_0‖)^(1/n)`.
///
/// Zero when the residual vanishes or no iteration was needed.
pub fn fractional_iterations(iterations: usize, r0: f64, rn: f64) -> f64 {
    if iterations == 0 || rn == 0.0 || r0 == 0.0 {
        return 0.0;
    }
    let log_ratio = (rn / r0).log10();
    if log_ratio >= 0.0 {
        return f64::INFINITY;
    }
    -8.0 * iterations as f64 / log_ratio
}

/// Preconditioned CG; `p` must be symmetric positive definite.
pub fn cg(
    a: &dyn LinearOperator<f64>,
    p: &dyn LinearOperator<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveReport) {
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = norm2(&r);
    let mut history = vec![r0];
    if r0 == 0.0 {
        return (x, SolveReport::finish(0, history, tol, start));
    }
    let mut z = vec![0.0; n];
    p.apply(&r, &mut z);
    let mut dir = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut it = 0;
    while it < max_iter {
        a.apply(&dir, &mut q);
        let alpha = rz / dot(&dir, &q);
        axpy(alpha, &dir, &mut x);
        axpy(-alpha, &q, &mut r);
        it += 1;
        let rn = norm2(&r);
        history.push(rn);
        if rn <= tol * r0 {
            break;
        }
        p.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (d, &zi) in dir.iter_mut().zip(&z) {
            *d = zi + beta * *d;
        }
    }
    (x, SolveReport::finish(it, history, tol, start))
}

/// Which side the preconditioner is applied on in GMRES.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GmresSide {
    /// Solve `P A x = P b`; the monitored residual is preconditioned.
    #[default]
    Left,
    /// Solve `A P y = b`, `x = P y`; the monitored residual is `b - A x`.
    Right,
}

/// GMRES without restarts, modified Gram-Schmidt and Givens rotations.
/// The residual history holds the least-squares residual norms.
pub fn gmres(
    a: &dyn LinearOperator<f64>,
    p: &dyn LinearOperator<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    side: GmresSide,
) -> (Vec<f64>, SolveReport) {
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let r = match side {
        GmresSide::Left => {
            p.apply(b, &mut z);
            z.clone()
        }
        GmresSide::Right => b.to_vec(),
    };
    let r0 = norm2(&r);
    let mut history = vec![r0];
    if r0 == 0.0 || max_iter == 0 {
        return (x, SolveReport::finish(0, history, tol, start));
    }
    let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / r0).collect()];
    // right preconditioning keeps z_j = P v_j so that x is formed in
    // double precision without another preconditioner application
    let mut precond: Vec<Vec<f64>> = Vec::new();
    let mut hess: Vec<Vec<f64>> = Vec::new(); // column j has j + 2 entries
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![r0];
    let mut it = 0;
    while it < max_iter {
        let j = it;
        match side {
            GmresSide::Left => {
                a.apply(&basis[j], &mut z);
                p.apply(&z, &mut w);
            }
            GmresSide::Right => {
                p.apply(&basis[j], &mut z);
                a.apply(&z, &mut w);
                precond.push(z.clone());
            }
        }
        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            h[i] = dot(&w, v);
            axpy(-h[i], v, &mut w);
        }
        let hn = norm2(&w);
        h[j + 1] = hn;
        for i in 0..j {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let denom = h[j].hypot(h[j + 1]);
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (h[j] / denom, h[j + 1] / denom)
        };
        h[j] = denom;
        h[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        hess.push(h);
        it += 1;
        let res = g[j + 1].abs();
        history.push(res);
        if res <= tol * r0 || hn == 0.0 {
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }
    // back substitution for the least-squares coefficients
    let m = it;
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = g[i];
        for (l, yl) in y.iter().enumerate().take(m).skip(i + 1) {
            s -= hess[l][i] * yl;
        }
        y[i] = s / hess[i][i];
    }
    let dirs = match side {
        GmresSide::Left => &basis,
        GmresSide::Right => &precond,
    };
    for (yi, d) in y.iter().zip(dirs) {
        axpy(*yi, d, &mut x);
    }
    (x, SolveReport::finish(it, history, tol, start))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub gmres_side: GmresSide,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            gmres_side: GmresSide::default(),
        }
    }
}

pub fn solve(
    method: KrylovMethod,
    a: &dyn LinearOperator<f64>,
    p: &dyn LinearOperator<f64>,
    b: &[f64],
    opts: &SolverOptions,
) -> (Vec<f64>, SolveReport) {
    match method {
        KrylovMethod::Cg => cg(a, p, b, opts.tol, opts.max_iter),
        KrylovMethod::Gmres => gmres(a, p, b, opts.tol, opts.max_iter, opts.gmres_side),
    }
}

/// Working precision of the preconditioner; the outer iteration always runs
/// in double precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    #[default]
    Double,
    /// Single-precision V-cycle.
    Mixed,
}

/// Runs a preconditioner of working precision `T` inside a double-precision
/// Krylov method: the residual is converted on entry and the correction on
/// exit, once per application.
pub struct PrecisionCycle<'a, T> {
    inner: &'a dyn LinearOperator<T>,
}

impl<'a, T: Scalar> PrecisionCycle<'a, T> {
    pub fn new(inner: &'a dyn LinearOperator<T>) -> Self {
        Self { inner }
    }
}

impl<T: Scalar> LinearOperator<f64> for PrecisionCycle<'_, T> {
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let rl: Vec<T> = r.iter().map(|&v| T::from_f64(v)).collect();
        let mut zl = vec![T::zero(); rl.len()];
        self.inner.apply(&rl, &mut zl);
        for (o, v) in z.iter_mut().zip(zl) {
            *o = v.to_f64();
        }
    }
}
