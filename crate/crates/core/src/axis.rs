//! Per-direction global 1D matrices: mass `M`, stiffness `L` and the 1D C0IP
//! matrix `B` (second-derivative cell term plus penalty, consistency and
//! adjoint consistency terms at every mesh node).

use crate::banded::BandMatrix;
use crate::basis::Basis1D;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::mesh::{MeshHierarchy, VertexPatch};

/// Default penalty `σ(k) = k (k + 1)`.
pub fn default_penalty(degree: usize) -> f64 {
    (degree * (degree + 1)) as f64
}

/// `h_e` for a node between cells of widths `left`/`right`: the harmonic
/// mean of the adjacent extents, or the single extent on the boundary.
pub fn face_length_scale(left: Option<f64>, right: Option<f64>) -> f64 {
    match (left, right) {
        (Some(a), Some(b)) => 2.0 * a * b / (a + b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => panic!("face without adjacent cells"),
    }
}

/// Symmetric band accumulator used during assembly.
struct BandBuilder {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandBuilder {
    fn new(n: usize, w: usize) -> Self {
        Self {
            n,
            w,
            data: vec![0.0; n * (2 * w + 1)],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i.abs_diff(j) <= self.w);
        self.data[i * (2 * self.w + 1) + (self.w + j - i)] += v;
    }

    /// Drops the first and last rows/columns and compresses.
    fn finish_interior(self) -> BandMatrix<f64> {
        let n = self.n;
        let w = self.w;
        let rows = (1..n - 1)
            .map(|i| {
                let lo = i.saturating_sub(w).max(1);
                let hi = (i + w).min(n - 2);
                let vals: Vec<f64> = (lo..=hi)
                    .map(|j| self.data[i * (2 * w + 1) + (w + j - i)])
                    .collect();
                // trim exact zeros at the run ends
                let first = vals.iter().position(|v| *v != 0.0).unwrap_or(0);
                let last = vals.iter().rposition(|v| *v != 0.0).map_or(0, |p| p + 1);
                let vals = if first < last {
                    vals[first..last].to_vec()
                } else {
                    Vec::new()
                };
                (lo - 1 + first, vals)
            })
            .collect();
        BandMatrix::from_rows(n - 2, rows)
    }

    fn finish_full(self) -> DenseMatrix<f64> {
        let n = self.n;
        let w = self.w;
        DenseMatrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) <= w {
                self.data[i * (2 * w + 1) + (w + j - i)]
            } else {
                0.0
            }
        })
    }
}

/// Reference-cell integrals `∫ φ_a^(p) φ_b^(p)` on `[0,1]` for `p = 0, 1, 2`.
fn reference_cell_matrices(basis: &Basis1D) -> [DenseMatrix<f64>; 3] {
    let n = basis.n_dofs();
    let q = basis.quadrature();
    let mut out = [
        DenseMatrix::zeros(n, n),
        DenseMatrix::zeros(n, n),
        DenseMatrix::zeros(n, n),
    ];
    for (&x, &w) in q.points.iter().zip(&q.weights) {
        let jets: Vec<[f64; 3]> = (0..n).map(|a| basis.jet(a, x)).collect();
        for (p, m) in out.iter_mut().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    m[(a, b)] += w * jets[a][p] * jets[b][p];
                }
            }
        }
    }
    out
}

struct RawAxis {
    mass: BandBuilder,
    stiffness: BandBuilder,
    bulk: BandBuilder,
}

fn assemble_raw(n_cells: usize, basis: &Basis1D, sigma: f64) -> RawAxis {
    let k = basis.degree();
    let n = k * n_cells + 1;
    let h = 1.0 / n_cells as f64;
    let w = 2 * k;
    let mut mass = BandBuilder::new(n, w);
    let mut stiffness = BandBuilder::new(n, w);
    let mut bulk = BandBuilder::new(n, w);

    let [m_ref, l_ref, h_ref] = reference_cell_matrices(basis);
    for c in 0..n_cells {
        for a in 0..=k {
            for b in 0..=k {
                let (i, j) = (c * k + a, c * k + b);
                mass.add(i, j, h * m_ref[(a, b)]);
                stiffness.add(i, j, l_ref[(a, b)] / h);
                bulk.add(i, j, h_ref[(a, b)] / (h * h * h));
            }
        }
    }

    // One-sided derivative jets at the cell ends.
    let left_end: Vec<[f64; 3]> = (0..=k).map(|a| basis.jet(a, 1.0)).collect();
    let right_end: Vec<[f64; 3]> = (0..=k).map(|a| basis.jet(a, 0.0)).collect();

    for e in 0..=n_cells {
        let has_left = e > 0;
        let has_right = e < n_cells;
        let interior = has_left && has_right;
        let he = face_length_scale(has_left.then_some(h), has_right.then_some(h));
        let mean_w = if interior { 0.5 } else { 1.0 };
        // (global index, [∂_n v], {∂_n² v})
        let mut terms: Vec<(usize, f64, f64)> = Vec::with_capacity(2 * k + 2);
        let mut push = |g: usize, jump: f64, mean: f64| {
            if let Some(t) = terms.iter_mut().find(|t| t.0 == g) {
                t.1 += jump;
                t.2 += mean;
            } else {
                terms.push((g, jump, mean));
            }
        };
        if has_left {
            for a in 0..=k {
                let jet = left_end[a];
                push((e - 1) * k + a, jet[1] / h, mean_w * jet[2] / (h * h));
            }
        }
        if has_right {
            for a in 0..=k {
                let jet = right_end[a];
                push(e * k + a, -jet[1] / h, mean_w * jet[2] / (h * h));
            }
        }
        for &(gi, ji, mi) in &terms {
            for &(gj, jj, mj) in &terms {
                let v = sigma / he * jj * ji - mj * ji - jj * mi;
                if v != 0.0 {
                    bulk.add(gi, gj, v);
                }
            }
        }
    }
    RawAxis {
        mass,
        stiffness,
        bulk,
    }
}

/// Full (boundary-inclusive) 1D matrices `(M, L, B)` of an `n_cells` mesh.
pub fn assemble_axis_with_boundary(
    n_cells: usize,
    basis: &Basis1D,
    sigma: f64,
) -> (DenseMatrix<f64>, DenseMatrix<f64>, DenseMatrix<f64>) {
    let raw = assemble_raw(n_cells, basis, sigma);
    (
        raw.mass.finish_full(),
        raw.stiffness.finish_full(),
        raw.bulk.finish_full(),
    )
}

/// Interior-DoF 1D matrices of one direction on one level.
#[derive(Debug, Clone)]
pub struct Axis1DMatrices {
    pub level: usize,
    pub direction: usize,
    pub n_cells: usize,
    pub h: f64,
    pub sigma: f64,
    pub mass: BandMatrix<f64>,
    pub stiffness: BandMatrix<f64>,
    pub bulk: BandMatrix<f64>,
}

impl Axis1DMatrices {
    pub fn size(&self) -> usize {
        self.mass.rows()
    }
}

pub fn assemble_axis_matrices(
    hier: &MeshHierarchy,
    level: usize,
    direction: usize,
    basis: &Basis1D,
    sigma: f64,
) -> Result<Axis1DMatrices> {
    hier.check_level(level)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "penalty must be positive, got {sigma}"
        )));
    }
    let n_cells = hier.cells_per_dim(level);
    let raw = assemble_raw(n_cells, basis, sigma);
    let bulk = raw.bulk.finish_interior();
    bulk.check_positive_definite()
        .map_err(|_| Error::NotCoercive {
            sigma,
            what: format!("1D C0IP matrix B on level {level} (k = {})", basis.degree()),
        })?;
    Ok(Axis1DMatrices {
        level,
        direction,
        n_cells,
        h: 1.0 / n_cells as f64,
        sigma,
        mass: raw.mass.finish_interior(),
        stiffness: raw.stiffness.finish_interior(),
        bulk,
    })
}

/// Principal submatrices of `(M, L, B)` on the patch's 1D index range.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchAxisMatrices {
    pub mass: DenseMatrix<f64>,
    pub stiffness: DenseMatrix<f64>,
    pub bulk: DenseMatrix<f64>,
}

pub fn patch_axis_matrices(
    hier: &MeshHierarchy,
    ax: &Axis1DMatrices,
    p: &VertexPatch,
    direction: usize,
) -> PatchAxisMatrices {
    let range = hier.patch_axis_ranges(p)[direction].clone();
    patch_block(ax, range.start, range.len())
}

pub fn patch_block(ax: &Axis1DMatrices, start: usize, len: usize) -> PatchAxisMatrices {
    PatchAxisMatrices {
        mass: ax.mass.principal_block(start, len),
        stiffness: ax.stiffness.principal_block(start, len),
        bulk: ax.bulk.principal_block(start, len),
    }
}
