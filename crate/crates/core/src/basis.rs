//! 1D Lagrange bases on Gauss–Lobatto support points and Gauss–Legendre
//! quadrature on the reference interval `[0, 1]`.

use crate::error::{Error, Result};

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        0.5 * n * (n + 1.0) * x.powi((n as i32) + 1)
    } else {
        n * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// Gauss–Legendre rule with `n` points mapped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn gauss(n: usize) -> Self {
        assert!(n >= 1);
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            points[i] = 0.5 * (x + 1.0);
            weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss–Lobatto points (`n + 1` of them) on `[0, 1]`: the endpoints and the
/// roots of `P_n'`.
pub fn gauss_lobatto_points(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    let mut pts = vec![0.0; n + 1];
    pts[n] = 1.0;
    for i in 1..n {
        // Chebyshev–Gauss–Lobatto initial guess
        let mut x = -(std::f64::consts::PI * i as f64 / n as f64).cos();
        for _ in 0..100 {
            // Newton on P_n'(x); P_n'' from the Legendre ODE
            let (p, dp) = legendre(n, x);
            let ddp = (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        pts[i] = 0.5 * (x + 1.0);
    }
    pts
}

/// Nodal Lagrange basis of degree `k` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Basis1D {
    degree: usize,
    support_points: Vec<f64>,
    quadrature: Quadrature,
}

impl Basis1D {
    /// Gauss–Lobatto support points and a `k + 2` point Gauss rule.
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidDegree(degree));
        }
        Ok(Self {
            degree,
            support_points: gauss_lobatto_points(degree),
            quadrature: Quadrature::gauss(degree + 2),
        })
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn n_dofs(&self) -> usize {
        self.degree + 1
    }

    pub fn support_points(&self) -> &[f64] {
        &self.support_points
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    pub fn value(&self, i: usize, x: f64) -> f64 {
        let xs = &self.support_points;
        let xi = xs[i];
        xs.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &xj)| (x - xj) / (xi - xj))
            .product()
    }

    pub fn derivative(&self, i: usize, x: f64) -> f64 {
        let xs = &self.support_points;
        let n = xs.len();
        let xi = xs[i];
        let mut sum = 0.0;
        for m in (0..n).filter(|&m| m != i) {
            let mut term = 1.0 / (xi - xs[m]);
            for j in (0..n).filter(|&j| j != i && j != m) {
                term *= (x - xs[j]) / (xi - xs[j]);
            }
            sum += term;
        }
        sum
    }

    pub fn second_derivative(&self, i: usize, x: f64) -> f64 {
        let xs = &self.support_points;
        let n = xs.len();
        let xi = xs[i];
        let mut sum = 0.0;
        for m in (0..n).filter(|&m| m != i) {
            for l in (0..n).filter(|&l| l != i && l != m) {
                let mut term = 1.0 / ((xi - xs[m]) * (xi - xs[l]));
                for j in (0..n).filter(|&j| j != i && j != m && j != l) {
                    term *= (x - xs[j]) / (xi - xs[j]);
                }
                sum += term;
            }
        }
        sum
    }

    /// `[value, first, second]` derivative of shape function `i` at `x`.
    pub fn jet(&self, i: usize, x: f64) -> [f64; 3] {
        [
            self.value(i, x),
            self.derivative(i, x),
            self.second_derivative(i, x),
        ]
    }
}
