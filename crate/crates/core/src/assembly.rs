//! Quadrature-based assembly on the d-dimensional mesh: the dense C0IP
//! matrix (cell Hessian term plus the three face terms), right-hand sides,
//! nodal interpolation and the mesh-dependent energy error.
//!
//! Nothing here goes through the 1D matrices or the Kronecker machinery;
//! the dense matrix is the reference the matrix-free operator is checked
//! against.

use crate::basis::{Basis1D, Quadrature};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::mesh::{MeshHierarchy, MAX_DIM};

/// Largest system [`assemble_dense`] accepts.
pub const DENSE_GUARD: usize = 20_000;

/// Gauss points per direction for right-hand sides and error integrals.
pub fn rhs_quadrature_points(degree: usize) -> usize {
    degree + 6
}

fn unflatten(mut lin: usize, base: usize, dim: usize) -> [usize; MAX_DIM] {
    let mut out = [0; MAX_DIM];
    for o in out.iter_mut().take(dim) {
        *o = lin % base;
        lin /= base;
    }
    out
}

/// Geometry and indexing of one level.
struct LevelGeometry {
    dim: usize,
    k: usize,
    n_cells: usize,
    h: f64,
    n1: usize,
}

impl LevelGeometry {
    fn new(hier: &MeshHierarchy, level: usize) -> Self {
        Self {
            dim: hier.dim(),
            k: hier.degree(),
            n_cells: hier.cells_per_dim(level),
            h: hier.cell_width(level),
            n1: hier.dofs_1d(level),
        }
    }

    fn n_dofs(&self) -> usize {
        self.n1.pow(self.dim as u32)
    }

    fn n_cells_total(&self) -> usize {
        self.n_cells.pow(self.dim as u32)
    }

    fn local_dofs(&self) -> usize {
        (self.k + 1).pow(self.dim as u32)
    }

    /// Global interior index of local DoF `a` in `cell`, if not on the
    /// boundary.
    fn global_index(&self, cell: &[usize; MAX_DIM], a: &[usize; MAX_DIM]) -> Option<usize> {
        let last = self.k * self.n_cells;
        let mut idx = 0;
        let mut stride = 1;
        for d in 0..self.dim {
            let g = cell[d] * self.k + a[d];
            if g == 0 || g == last {
                return None;
            }
            idx += (g - 1) * stride;
            stride *= self.n1;
        }
        Some(idx)
    }
}

/// 1D shape function jets tabulated at a set of reference points.
struct Tabulation {
    /// `jets[a][q] = [φ_a, φ_a', φ_a'']` in reference coordinates.
    jets: Vec<Vec<[f64; 3]>>,
}

impl Tabulation {
    fn new(basis: &Basis1D, points: &[f64]) -> Self {
        let jets = (0..basis.n_dofs())
            .map(|a| points.iter().map(|&x| basis.jet(a, x)).collect())
            .collect();
        Self { jets }
    }
}

/// Hessian of the tensor-product shape function `a` at tensor point `q`,
/// physical coordinates on a cell of width `h`.
fn shape_hessian(
    tab: &Tabulation,
    dim: usize,
    a: &[usize; MAX_DIM],
    q: &[usize; MAX_DIM],
    h: f64,
) -> [[f64; MAX_DIM]; MAX_DIM] {
    let mut hess = [[0.0; MAX_DIM]; MAX_DIM];
    for p in 0..dim {
        for r in 0..dim {
            let mut v = 1.0;
            for d in 0..dim {
                let order = (p == d) as usize + (r == d) as usize;
                v *= tab.jets[a[d]][q[d]][order];
            }
            hess[p][r] = v / (h * h);
        }
    }
    hess
}

/// Dense C0IP matrix on `level` by cell and face quadrature.
pub fn assemble_dense(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    sigma: f64,
) -> Result<DenseMatrix<f64>> {
    hier.check_level(level)?;
    let g = LevelGeometry::new(hier, level);
    let n = g.n_dofs();
    if n > DENSE_GUARD {
        return Err(Error::DenseGuard {
            dofs: n,
            limit: DENSE_GUARD,
        });
    }
    let dim = g.dim;
    let k = g.k;
    let h = g.h;
    let nloc = g.local_dofs();
    let quad = basis.quadrature();
    let nq = quad.len();
    let tab = Tabulation::new(basis, &quad.points);
    let mut a_mat = DenseMatrix::<f64>::zeros(n, n);

    // Cell term: every cell is the same affine image of the reference cell,
    // so the local Hessian matrix is computed once.
    let mut local = DenseMatrix::<f64>::zeros(nloc, nloc);
    for ql in 0..nq.pow(dim as u32) {
        let q = unflatten(ql, nq, dim);
        let w: f64 = (0..dim).map(|d| quad.weights[q[d]] * h).product();
        let hess: Vec<_> = (0..nloc)
            .map(|al| shape_hessian(&tab, dim, &unflatten(al, k + 1, dim), &q, h))
            .collect();
        for i in 0..nloc {
            for j in 0..nloc {
                let mut s = 0.0;
                for p in 0..dim {
                    for r in 0..dim {
                        s += hess[i][p][r] * hess[j][p][r];
                    }
                }
                local[(i, j)] += w * s;
            }
        }
    }
    for cl in 0..g.n_cells_total() {
        let cell = unflatten(cl, g.n_cells, dim);
        let map: Vec<Option<usize>> = (0..nloc)
            .map(|al| g.global_index(&cell, &unflatten(al, k + 1, dim)))
            .collect();
        for i in 0..nloc {
            let Some(gi) = map[i] else { continue };
            for j in 0..nloc {
                let Some(gj) = map[j] else { continue };
                a_mat[(gi, gj)] += local[(i, j)];
            }
        }
    }

    // Face terms.
    let end_tab = Tabulation::new(basis, &[0.0, 1.0]);
    let nq_face = nq.pow(dim as u32 - 1);
    for axis in 0..dim {
        let others: Vec<usize> = (0..dim).filter(|&d| d != axis).collect();
        for e in 0..=g.n_cells {
            let has_left = e > 0;
            let has_right = e < g.n_cells;
            let mean_w = if has_left && has_right { 0.5 } else { 1.0 };
            let he = if has_left && has_right {
                2.0 * h * h / (h + h)
            } else {
                h
            };
            for fl in 0..g.n_cells.pow(dim as u32 - 1) {
                let fcell = unflatten(fl, g.n_cells, dim - 1);
                // unique global DoFs seen from either side, with per-point
                // jump and mean accumulators
                let mut dofs: Vec<usize> = Vec::new();
                let mut contrib: Vec<(usize, usize, usize, f64)> = Vec::new(); // (slot, local a, side, sign)
                for (side, present) in [(0usize, has_left), (1usize, has_right)] {
                    if !present {
                        continue;
                    }
                    let mut cell = [0; MAX_DIM];
                    cell[axis] = if side == 0 { e - 1 } else { e };
                    for (t, &d) in others.iter().enumerate() {
                        cell[d] = fcell[t];
                    }
                    for al in 0..nloc {
                        let a = unflatten(al, k + 1, dim);
                        let Some(gi) = g.global_index(&cell, &a) else {
                            continue;
                        };
                        let slot = match dofs.iter().position(|&x| x == gi) {
                            Some(s) => s,
                            None => {
                                dofs.push(gi);
                                dofs.len() - 1
                            }
                        };
                        // outward normal is +e_axis on the left cell, -e_axis on the right
                        let sign = if side == 0 { 1.0 } else { -1.0 };
                        contrib.push((slot, al, side, sign));
                    }
                }
                let nd = dofs.len();
                let mut jump = vec![0.0; nd];
                let mut mean = vec![0.0; nd];
                for ql in 0..nq_face {
                    let qf = unflatten(ql, nq, dim - 1);
                    let w: f64 = (0..dim - 1).map(|t| quad.weights[qf[t]] * h).product();
                    jump.iter_mut().for_each(|v| *v = 0.0);
                    mean.iter_mut().for_each(|v| *v = 0.0);
                    for &(slot, al, side, sign) in &contrib {
                        let a = unflatten(al, k + 1, dim);
                        // reference coordinate along the normal: right end of
                        // the left cell, left end of the right cell
                        let end = if side == 0 { 1 } else { 0 };
                        let jet_n = end_tab.jets[a[axis]][end];
                        let mut tang = 1.0;
                        for (t, &d) in others.iter().enumerate() {
                            tang *= tab.jets[a[d]][qf[t]][0];
                        }
                        jump[slot] += sign * jet_n[1] / h * tang;
                        mean[slot] += mean_w * jet_n[2] / (h * h) * tang;
                    }
                    for i in 0..nd {
                        for j in 0..nd {
                            let v = sigma / he * jump[j] * jump[i]
                                - mean[j] * jump[i]
                                - jump[j] * mean[i];
                            a_mat[(dofs[i], dofs[j])] += w * v;
                        }
                    }
                }
            }
        }
    }
    Ok(a_mat)
}

/// Closed-form solution `Π_d sin(π x_d)` with `f = Δ²u = d² π⁴ u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub dim: usize,
}

impl ManufacturedCase {
    pub fn new(dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { dim })
    }

    pub fn exact(&self, x: &[f64]) -> f64 {
        use std::f64::consts::PI;
        x[..self.dim].iter().map(|&xi| (PI * xi).sin()).product()
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; MAX_DIM] {
        use std::f64::consts::PI;
        let mut g = [0.0; MAX_DIM];
        for (p, gp) in g.iter_mut().enumerate().take(self.dim) {
            *gp = (0..self.dim)
                .map(|d| {
                    if d == p {
                        PI * (PI * x[d]).cos()
                    } else {
                        (PI * x[d]).sin()
                    }
                })
                .product();
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> [[f64; MAX_DIM]; MAX_DIM] {
        use std::f64::consts::PI;
        let mut hm = [[0.0; MAX_DIM]; MAX_DIM];
        for p in 0..self.dim {
            for r in 0..self.dim {
                hm[p][r] = (0..self.dim)
                    .map(|d| match (p == d) as usize + (r == d) as usize {
                        0 => (PI * x[d]).sin(),
                        1 => PI * (PI * x[d]).cos(),
                        _ => -PI * PI * (PI * x[d]).sin(),
                    })
                    .product();
            }
        }
        hm
    }

    /// Outward normal derivative on the boundary face orthogonal to `axis`
    /// containing `x` (`x[axis]` is 0 or 1).
    pub fn normal_derivative(&self, axis: usize, x: &[f64]) -> f64 {
        let d = self.gradient(x)[axis];
        if x[axis] < 0.5 {
            -d
        } else {
            d
        }
    }

    pub fn forcing(&self, x: &[f64]) -> f64 {
        let pi4 = std::f64::consts::PI.powi(4);
        (self.dim * self.dim) as f64 * pi4 * self.exact(x)
    }
}

/// `b_i = ∫ f φ_i` over all continuous nodes, boundary included, with an
/// `nq`-point Gauss rule per direction and cell. Node ordering is
/// lexicographic on the `(k n + 1)^d` grid.
pub fn assemble_rhs_with_boundary(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    f: &dyn Fn(&[f64]) -> f64,
    nq: usize,
) -> Result<Vec<f64>> {
    hier.check_level(level)?;
    let g = LevelGeometry::new(hier, level);
    let dim = g.dim;
    let k = g.k;
    let nfull = g.k * g.n_cells + 1;
    let quad = Quadrature::gauss(nq);
    let tab = Tabulation::new(basis, &quad.points);
    let nqd = nq.pow(dim as u32);
    let nloc = g.local_dofs();
    let mut b = vec![0.0; nfull.pow(dim as u32)];
    let mut fw = vec![0.0; nqd];
    for cl in 0..g.n_cells_total() {
        let cell = unflatten(cl, g.n_cells, dim);
        for (ql, v) in fw.iter_mut().enumerate() {
            let q = unflatten(ql, nq, dim);
            let mut x = [0.0; MAX_DIM];
            let mut w = 1.0;
            for d in 0..dim {
                x[d] = (cell[d] as f64 + quad.points[q[d]]) * g.h;
                w *= quad.weights[q[d]] * g.h;
            }
            *v = w * f(&x[..dim]);
        }
        for al in 0..nloc {
            let a = unflatten(al, k + 1, dim);
            let gi: usize = (0..dim)
                .map(|d| (cell[d] * k + a[d]) * nfull.pow(d as u32))
                .sum();
            let mut s = 0.0;
            for (ql, &v) in fw.iter().enumerate() {
                let q = unflatten(ql, nq, dim);
                let mut phi = 1.0;
                for d in 0..dim {
                    phi *= tab.jets[a[d]][q[d]][0];
                }
                s += v * phi;
            }
            b[gi] += s;
        }
    }
    Ok(b)
}

/// Boundary-inclusive vector restricted to the interior DoFs.
pub fn restrict_to_interior(hier: &MeshHierarchy, level: usize, full: &[f64]) -> Vec<f64> {
    let dim = hier.dim();
    let nfull = hier.dofs_1d_with_boundary(level);
    let n1 = hier.dofs_1d(level);
    (0..n1.pow(dim as u32))
        .map(|lin| {
            let idx = unflatten(lin, n1, dim);
            let g: usize = (0..dim).map(|d| (idx[d] + 1) * nfull.pow(d as u32)).sum();
            full[g]
        })
        .collect()
}

/// `b_i = ∫ f φ_i` on the interior DoFs.
pub fn assemble_rhs_with(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    f: &dyn Fn(&[f64]) -> f64,
    nq: usize,
) -> Result<Vec<f64>> {
    let full = assemble_rhs_with_boundary(hier, level, basis, f, nq)?;
    Ok(restrict_to_interior(hier, level, &full))
}

/// Weakly imposed normal-derivative data `g = ∂_n u` on the boundary faces:
/// `Σ_e ∫_e g (σ/h_e ∂_n v - ∂_nn v)` on the interior DoFs.
pub fn assemble_boundary_data_rhs(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    sigma: f64,
    normal_derivative: &dyn Fn(usize, &[f64]) -> f64,
    nq: usize,
) -> Result<Vec<f64>> {
    hier.check_level(level)?;
    let g = LevelGeometry::new(hier, level);
    let dim = g.dim;
    let k = g.k;
    let h = g.h;
    let quad = Quadrature::gauss(nq);
    let tab = Tabulation::new(basis, &quad.points);
    let end_tab = Tabulation::new(basis, &[0.0, 1.0]);
    let nloc = g.local_dofs();
    let mut b = vec![0.0; g.n_dofs()];
    for axis in 0..dim {
        let others: Vec<usize> = (0..dim).filter(|&d| d != axis).collect();
        for (cell_along, end, sign) in [(0, 0, -1.0), (g.n_cells - 1, 1, 1.0)] {
            for fl in 0..g.n_cells.pow(dim as u32 - 1) {
                let fcell = unflatten(fl, g.n_cells, dim - 1);
                let mut cell = [0; MAX_DIM];
                cell[axis] = cell_along;
                for (t, &d) in others.iter().enumerate() {
                    cell[d] = fcell[t];
                }
                for ql in 0..nq.pow(dim as u32 - 1) {
                    let qf = unflatten(ql, nq, dim - 1);
                    let mut x = [0.0; MAX_DIM];
                    x[axis] = end as f64;
                    let mut w = 1.0;
                    for (t, &d) in others.iter().enumerate() {
                        x[d] = (fcell[t] as f64 + quad.points[qf[t]]) * h;
                        w *= quad.weights[qf[t]] * h;
                    }
                    let gn = normal_derivative(axis, &x[..dim]);
                    for al in 0..nloc {
                        let a = unflatten(al, k + 1, dim);
                        let Some(gi) = g.global_index(&cell, &a) else {
                            continue;
                        };
                        let jet = end_tab.jets[a[axis]][end];
                        let mut tang = 1.0;
                        for (t, &d) in others.iter().enumerate() {
                            tang *= tab.jets[a[d]][qf[t]][0];
                        }
                        let dn = sign * jet[1] / h;
                        let dnn = jet[2] / (h * h);
                        b[gi] += w * gn * tang * (sigma / h * dn - dnn);
                    }
                }
            }
        }
    }
    Ok(b)
}

/// Right-hand side for the manufactured case: the load plus the weakly
/// imposed normal derivative of the exact solution.
pub fn assemble_rhs(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    sigma: f64,
    case: &ManufacturedCase,
) -> Result<Vec<f64>> {
    let nq = rhs_quadrature_points(basis.degree());
    let mut b = assemble_rhs_with(hier, level, basis, &|x| case.forcing(x), nq)?;
    let data = assemble_boundary_data_rhs(
        hier,
        level,
        basis,
        sigma,
        &|axis, x| case.normal_derivative(axis, x),
        nq,
    )?;
    for (bi, di) in b.iter_mut().zip(&data) {
        *bi += di;
    }
    Ok(b)
}

/// Nodal interpolant on the interior DoFs.
pub fn interpolate(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    f: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    hier.check_level(level)?;
    let g = LevelGeometry::new(hier, level);
    let k = g.k;
    let pts = basis.support_points();
    let coord = |i: usize| {
        // interior node i (0-based) is continuous node i + 1
        let c = (i + 1) / k;
        let a = (i + 1) % k;
        (c as f64 + pts[a]) * g.h
    };
    Ok((0..g.n_dofs())
        .map(|lin| {
            let idx = unflatten(lin, g.n1, g.dim);
            let x: Vec<f64> = (0..g.dim).map(|d| coord(idx[d])).collect();
            f(&x)
        })
        .collect())
}

/// Physical coordinate of interior 1D node `i` on `level`.
pub fn node_coordinate(hier: &MeshHierarchy, level: usize, basis: &Basis1D, i: usize) -> f64 {
    let k = hier.degree();
    let c = (i + 1) / k;
    let a = (i + 1) % k;
    (c as f64 + basis.support_points()[a]) * hier.cell_width(level)
}

/// Mesh-dependent energy error
/// `( Σ_K |u - u_h|²_{H²(K)} + Σ_e σ/h_e ‖[∂_n (u - u_h)]‖²_e )^{1/2}`.
pub fn energy_seminorm_error(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    sigma: f64,
    u_h: &[f64],
    case: &ManufacturedCase,
) -> Result<f64> {
    energy_norm_impl(hier, level, basis, sigma, u_h, Some(case))
}

/// Mesh-dependent energy norm of a discrete function.
pub fn discrete_energy_norm(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    sigma: f64,
    v: &[f64],
) -> Result<f64> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    energy_norm_impl(hier, level, basis, sigma, &neg, None)
}

fn energy_norm_impl(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    sigma: f64,
    u_h: &[f64],
    case: Option<&ManufacturedCase>,
) -> Result<f64> {
    hier.check_level(level)?;
    let g = LevelGeometry::new(hier, level);
    if u_h.len() != g.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: g.n_dofs(),
            found: u_h.len(),
        });
    }
    let dim = g.dim;
    let k = g.k;
    let h = g.h;
    let nq = rhs_quadrature_points(k);
    let quad = Quadrature::gauss(nq);
    let tab = Tabulation::new(basis, &quad.points);
    let end_tab = Tabulation::new(basis, &[0.0, 1.0]);
    let nloc = g.local_dofs();

    let local_coeffs = |cell: &[usize; MAX_DIM]| -> Vec<f64> {
        (0..nloc)
            .map(|al| {
                g.global_index(cell, &unflatten(al, k + 1, dim))
                    .map_or(0.0, |gi| u_h[gi])
            })
            .collect()
    };

    let mut total = 0.0;
    for cl in 0..g.n_cells_total() {
        let cell = unflatten(cl, g.n_cells, dim);
        let coeffs = local_coeffs(&cell);
        for ql in 0..nq.pow(dim as u32) {
            let q = unflatten(ql, nq, dim);
            let mut x = [0.0; MAX_DIM];
            let mut w = 1.0;
            for d in 0..dim {
                x[d] = (cell[d] as f64 + quad.points[q[d]]) * h;
                w *= quad.weights[q[d]] * h;
            }
            let mut hess = case.map_or([[0.0; MAX_DIM]; MAX_DIM], |c| c.hessian(&x));
            for (al, &c) in coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let hs = shape_hessian(&tab, dim, &unflatten(al, k + 1, dim), &q, h);
                for p in 0..dim {
                    for r in 0..dim {
                        hess[p][r] -= c * hs[p][r];
                    }
                }
            }
            let s: f64 = (0..dim)
                .flat_map(|p| (0..dim).map(move |r| (p, r)))
                .map(|(p, r)| hess[p][r] * hess[p][r])
                .sum();
            total += w * s;
        }
    }

    // normal derivative of the error on each side of every face
    for axis in 0..dim {
        let others: Vec<usize> = (0..dim).filter(|&d| d != axis).collect();
        for e in 0..=g.n_cells {
            let has_left = e > 0;
            let has_right = e < g.n_cells;
            let he = h;
            for fl in 0..g.n_cells.pow(dim as u32 - 1) {
                let fcell = unflatten(fl, g.n_cells, dim - 1);
                let sides: Vec<(usize, Vec<f64>)> = [(0usize, has_left), (1usize, has_right)]
                    .iter()
                    .filter(|s| s.1)
                    .map(|&(side, _)| {
                        let mut cell = [0; MAX_DIM];
                        cell[axis] = if side == 0 { e - 1 } else { e };
                        for (t, &d) in others.iter().enumerate() {
                            cell[d] = fcell[t];
                        }
                        (side, local_coeffs(&cell))
                    })
                    .collect();
                for ql in 0..nq.pow(dim as u32 - 1) {
                    let qf = unflatten(ql, nq, dim - 1);
                    let mut x = [0.0; MAX_DIM];
                    x[axis] = e as f64 * h;
                    let mut w = 1.0;
                    for (t, &d) in others.iter().enumerate() {
                        x[d] = (fcell[t] as f64 + quad.points[qf[t]]) * h;
                        w *= quad.weights[qf[t]] * h;
                    }
                    let du = case.map_or(0.0, |c| c.gradient(&x)[axis]);
                    let mut jump = 0.0;
                    for (side, coeffs) in &sides {
                        let sign = if *side == 0 { 1.0 } else { -1.0 };
                        let end = if *side == 0 { 1 } else { 0 };
                        let mut duh = 0.0;
                        for (al, &c) in coeffs.iter().enumerate() {
                            if c == 0.0 {
                                continue;
                            }
                            let a = unflatten(al, k + 1, dim);
                            let mut v = end_tab.jets[a[axis]][end][1] / h;
                            for (t, &d) in others.iter().enumerate() {
                                v *= tab.jets[a[d]][qf[t]][0];
                            }
                            duh += c * v;
                        }
                        jump += sign * (du - duh);
                    }
                    total += w * sigma / he * jump * jump;
                }
            }
        }
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axis::default_penalty;
    use crate::dense::Cholesky;

    #[test]
    fn dense_matrix_symmetric_and_spd() {
        for (dim, k) in [(2, 2), (2, 3), (3, 2)] {
            let h = MeshHierarchy::new(dim, k, 2).unwrap();
            let b = Basis1D::new(k).unwrap();
            let a = assemble_dense(&h, 1, &b, default_penalty(k)).unwrap();
            assert!(a.asymmetry() <= 1e-12 * a.max_abs());
            assert!(Cholesky::new(&a).is_ok());
        }
    }

    #[test]
    fn dense_guard() {
        let h = MeshHierarchy::new(2, 4, 6).unwrap();
        let b = Basis1D::new(4).unwrap();
        assert!(matches!(
            assemble_dense(&h, 5, &b, 20.0),
            Err(Error::DenseGuard { .. })
        ));
    }

    #[test]
    fn manufactured_solution_boundary_values() {
        for dim in [2, 3] {
            let case = ManufacturedCase::new(dim).unwrap();
            for &t in &[0.13, 0.5, 0.77] {
                for axis in 0..dim {
                    for side in [0.0, 1.0] {
                        let mut x = vec![t; dim];
                        x[axis] = side;
                        assert!(case.exact(&x).abs() < 1e-15);
                        // the outward normal derivative is -π Π sin, not zero; it is
                        // imposed weakly through the boundary data
                        let expect = -std::f64::consts::PI
                            * (0..dim)
                                .filter(|&d| d != axis)
                                .map(|d| (std::f64::consts::PI * x[d]).sin())
                                .product::<f64>();
                        assert!((case.normal_derivative(axis, &x) - expect).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn forcing_is_bilaplacian_of_exact() {
        let case = ManufacturedCase::new(2).unwrap();
        let x = [0.3, 0.6];
        // Δu = trace of the Hessian = -2π² u, so Δ²u = 4π⁴ u
        let hm = case.hessian(&x);
        let lap = hm[0][0] + hm[1][1];
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((lap + 2.0 * pi2 * case.exact(&x)).abs() < 1e-12);
        assert!((case.forcing(&x) - 4.0 * pi2 * pi2 * case.exact(&x)).abs() < 1e-10);
    }

    #[test]
    fn rhs_of_zero_and_constant() {
        let h = MeshHierarchy::new(2, 3, 3).unwrap();
        let b = Basis1D::new(3).unwrap();
        let z = assemble_rhs_with(&h, 2, &b, &|_| 0.0, 6).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        for dim in [2, 3] {
            let h = MeshHierarchy::new(dim, 3, 2).unwrap();
            let c = assemble_rhs_with_boundary(&h, 1, &b, &|_| 2.5, 6).unwrap();
            let s: f64 = c.iter().sum();
            assert!((s - 2.5).abs() < 1e-12, "sum {s}");
        }
    }

    #[test]
    fn rhs_converged_in_quadrature() {
        let case = ManufacturedCase::new(2).unwrap();
        for k in [2, 3, 5] {
            let h = MeshHierarchy::new(2, k, 4).unwrap();
            let b = Basis1D::new(k).unwrap();
            for level in [0, 3] {
                let nq = rhs_quadrature_points(k);
                let b1 = assemble_rhs_with(&h, level, &b, &|x| case.forcing(x), nq).unwrap();
                let b2 = assemble_rhs_with(&h, level, &b, &|x| case.forcing(x), 2 * nq).unwrap();
                let nrm: f64 = b2.iter().map(|v| v * v).sum::<f64>().sqrt();
                let diff: f64 = b1
                    .iter()
                    .zip(&b2)
                    .map(|(a, c)| (a - c).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    diff <= 1e-10 * nrm,
                    "k={k} level={level} rel {}",
                    diff / nrm
                );
            }
        }
    }

    #[test]
    fn interpolant_error_decreases() {
        let case = ManufacturedCase::new(2).unwrap();
        let k = 2;
        let h = MeshHierarchy::new(2, k, 5).unwrap();
        let b = Basis1D::new(k).unwrap();
        let mut prev = f64::INFINITY;
        for level in 1..5 {
            let u = interpolate(&h, level, &b, &|x| case.exact(x)).unwrap();
            let err = energy_seminorm_error(&h, level, &b, default_penalty(k), &u, &case).unwrap();
            assert!(err < prev, "level {level}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn discrete_norm_of_difference_with_itself_is_zero() {
        let case = ManufacturedCase::new(2).unwrap();
        let h = MeshHierarchy::new(2, 3, 3).unwrap();
        let b = Basis1D::new(3).unwrap();
        let u = interpolate(&h, 2, &b, &|x| case.exact(x)).unwrap();
        let diff: Vec<f64> = u.iter().map(|v| v - v).collect();
        assert_eq!(discrete_energy_norm(&h, 2, &b, 12.0, &diff).unwrap(), 0.0);
        assert!(discrete_energy_norm(&h, 2, &b, 12.0, &u).unwrap() > 0.0);
    }

    #[test]
    fn dense_solution_converges_in_energy_norm() {
        for k in [2, 3] {
            let b = Basis1D::new(k).unwrap();
            let h = MeshHierarchy::new(2, k, 4).unwrap();
            let case = ManufacturedCase::new(2).unwrap();
            let sigma = default_penalty(k);
            let errs: Vec<f64> = (1..4)
                .map(|level| {
                    let a = assemble_dense(&h, level, &b, sigma).unwrap();
                    let mut u = assemble_rhs(&h, level, &b, sigma, &case).unwrap();
                    Cholesky::new(&a).unwrap().solve_in_place(&mut u);
                    energy_seminorm_error(&h, level, &b, sigma, &u, &case).unwrap()
                })
                .collect();
            for w in errs.windows(2) {
                let rate = (w[0] / w[1]).log2();
                assert!(rate > k as f64 - 1.0 - 0.15, "k={k} errs={errs:?}");
            }
        }
    }
}
