//! Property checks shared by the property suites and the acceptance run.
//! Each returns the measured defect so callers choose the tolerance.

#![allow(dead_code)]

use std::collections::HashSet;

use c0ip_mg::axis::default_penalty;
use c0ip_mg::basis::Basis1D;
use c0ip_mg::dense::Cholesky;
use c0ip_mg::mesh::MeshHierarchy;
use c0ip_mg::multigrid::{assemble_level_axes, TransferOperators};
use c0ip_mg::operator::{KroneckerSumOperator, LinearOperator};
use c0ip_mg::patch::LocalSolverKind;
use c0ip_mg::scalar::{dot, norm2};
use c0ip_mg::smoother::{PatchSmoother, SmootherConfig, SmootherKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub struct Setup {
    pub hier: MeshHierarchy,
    pub basis: Basis1D,
    pub level: usize,
    pub axes: Vec<c0ip_mg::axis::Axis1DMatrices>,
    pub op: KroneckerSumOperator<f64>,
}

pub fn setup(dim: usize, k: usize, level: usize) -> Setup {
    let hier = MeshHierarchy::new(dim, k, level + 1).unwrap();
    let basis = Basis1D::new(k).unwrap();
    let axes = assemble_level_axes(&hier, level, &basis, default_penalty(k)).unwrap();
    let op = KroneckerSumOperator::c0ip(&axes);
    Setup {
        hier,
        basis,
        level,
        axes,
        op,
    }
}

fn apply(op: &dyn LinearOperator<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    y
}

/// `|<Ax, y> - <x, Ay>| / (‖Ax‖ ‖y‖)` for random `x`, `y`.
pub fn symmetry_defect(s: &Setup, seed: u64) -> f64 {
    let n = s.op.len();
    let x = random(n, seed);
    let y = random(n, seed + 1);
    let ax = apply(&s.op, &x);
    let ay = apply(&s.op, &y);
    (dot(&ax, &y) - dot(&x, &ay)).abs() / (norm2(&ax) * norm2(&y))
}

/// Rayleigh quotient `<Ax, x> / <x, x>` of a random vector.
pub fn rayleigh(s: &Setup, seed: u64) -> f64 {
    let x = random(s.op.len(), seed);
    dot(&apply(&s.op, &x), &x) / dot(&x, &x)
}

/// Whether the materialized operator admits a Cholesky factorization.
pub fn cholesky_succeeds(s: &Setup) -> bool {
    Cholesky::new(&s.op.materialize()).is_ok()
}

/// `|<P c, f> - <c, R f>| / (‖P c‖ ‖f‖)` on `fine_level`.
pub fn adjointness_gap(dim: usize, k: usize, fine_level: usize, seed: u64) -> f64 {
    let hier = MeshHierarchy::new(dim, k, fine_level + 1).unwrap();
    let basis = Basis1D::new(k).unwrap();
    let t = TransferOperators::<f64>::new(&hier, fine_level, &basis).unwrap();
    let c = random(t.coarse_len(), seed);
    let f = random(t.fine_len(), seed + 1);
    let mut pc = vec![0.0; t.fine_len()];
    let mut rf = vec![0.0; t.coarse_len()];
    t.prolongate(&c, &mut pc);
    t.restrict(&f, &mut rf);
    (dot(&pc, &f) - dot(&c, &rf)).abs() / (norm2(&pc) * norm2(&f))
}

/// Every interior vertex appears in exactly one color and patches of one
/// color share no degree of freedom.
pub fn coloring_is_partition(dim: usize, k: usize, level: usize) -> Result<(), String> {
    let hier = MeshHierarchy::new(dim, k, level + 1).unwrap();
    let coloring = hier.color_patches(level).unwrap();
    let all = hier.interior_patches(level).unwrap();
    let mut seen = HashSet::new();
    for class in &coloring.classes {
        let mut dofs = HashSet::new();
        for p in class {
            if !seen.insert(p.vertex().to_vec()) {
                return Err(format!("vertex {:?} colored twice", p.vertex()));
            }
            for d in hier.patch_dof_map(p) {
                if !dofs.insert(d) {
                    return Err(format!("DoF {d} shared within a color"));
                }
            }
        }
    }
    if seen.len() != all.len() {
        return Err(format!("{} of {} patches colored", seen.len(), all.len()));
    }
    Ok(())
}

pub fn smoother(s: &Setup, kind: SmootherKind, local: LocalSolverKind) -> PatchSmoother<f64> {
    let cfg = SmootherConfig::default_for(s.hier.dim(), kind, local);
    PatchSmoother::new(&s.hier, s.level, &s.axes, cfg).unwrap()
}

/// `max |S(x*) - x*| / max |x*|` for `b = A x*`.
pub fn fixed_point_error(s: &Setup, kind: SmootherKind, local: LocalSolverKind, seed: u64) -> f64 {
    let sm = smoother(s, kind, local);
    let xs = random(s.op.len(), seed);
    let b = apply(&s.op, &xs);
    let mut x = xs.clone();
    sm.smooth(&s.op, &mut x, &b);
    let scale = xs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter()
        .zip(&xs)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

/// Relative deviation of one multiplicative step when the patches inside
/// every color are shuffled.
pub fn permutation_gap(s: &Setup, local: LocalSolverKind, seed: u64) -> f64 {
    let sm = smoother(s, SmootherKind::Multiplicative, local);
    let b = random(s.op.len(), seed);
    let x0 = random(s.op.len(), seed + 1);
    let mut x1 = x0.clone();
    sm.mvs_step(&s.op, &mut x1, &b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
    let mut classes = sm.coloring().classes.clone();
    for c in classes.iter_mut() {
        c.shuffle(&mut rng);
    }
    let mut x2 = x0;
    sm.mvs_step_ordered(&s.op, &mut x2, &b, &classes);
    let scale = x1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x1.iter()
        .zip(&x2)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}
