//! Nested uniform Cartesian meshes of `[0, 1]^d`, interior vertex patches,
//! their DoF maps, and the parity/red-black coloring.
//!
//! Level `ℓ` has `2^(ℓ+1)` cells per axis, so level 0 has exactly one
//! interior vertex. Interior DoFs are numbered lexicographically with axis 0
//! fastest; the endpoint DoFs of each axis are eliminated (clamped `u = 0`).

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshHierarchy {
    dim: usize,
    degree: usize,
    num_levels: usize,
}

impl MeshHierarchy {
    pub fn new(dim: usize, degree: usize, num_levels: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        if degree < 2 {
            return Err(Error::InvalidDegree(degree));
        }
        if num_levels == 0 {
            return Err(Error::NoLevels);
        }
        Ok(Self {
            dim,
            degree,
            num_levels,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn finest_level(&self) -> usize {
        self.num_levels - 1
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level < self.num_levels {
            Ok(())
        } else {
            Err(Error::LevelOutOfRange {
                level,
                num_levels: self.num_levels,
            })
        }
    }

    #[inline]
    pub fn cells_per_dim(&self, level: usize) -> usize {
        2usize << level
    }

    #[inline]
    pub fn cell_width(&self, level: usize) -> f64 {
        1.0 / self.cells_per_dim(level) as f64
    }

    /// Continuous 1D DoFs per axis including both boundary nodes.
    #[inline]
    pub fn dofs_1d_with_boundary(&self, level: usize) -> usize {
        self.degree * self.cells_per_dim(level) + 1
    }

    /// Interior 1D DoFs per axis after clamped-boundary elimination.
    #[inline]
    pub fn dofs_1d(&self, level: usize) -> usize {
        self.degree * self.cells_per_dim(level) - 1
    }

    pub fn dofs_per_axis(&self, level: usize) -> Vec<usize> {
        vec![self.dofs_1d(level); self.dim]
    }

    pub fn n_dofs(&self, level: usize) -> usize {
        self.dofs_1d(level).pow(self.dim as u32)
    }

    pub fn n_patches(&self, level: usize) -> usize {
        (self.cells_per_dim(level) - 1).pow(self.dim as u32)
    }

    /// Side length `2k - 1` of the patch-local DoF block.
    #[inline]
    pub fn patch_size_1d(&self) -> usize {
        2 * self.degree - 1
    }

    pub fn patch_n_dofs(&self) -> usize {
        self.patch_size_1d().pow(self.dim as u32)
    }

    /// All interior vertex patches on `level`, lexicographic by vertex
    /// (axis 0 fastest).
    pub fn interior_patches(&self, level: usize) -> Result<Vec<VertexPatch>> {
        self.check_level(level)?;
        let n = self.cells_per_dim(level) - 1;
        let total = n.pow(self.dim as u32);
        let mut out = Vec::with_capacity(total);
        for lin in 0..total {
            let mut vertex = [0usize; MAX_DIM];
            let mut rem = lin;
            for v in vertex.iter_mut().take(self.dim) {
                *v = rem % n + 1;
                rem /= n;
            }
            out.push(VertexPatch {
                level,
                dim: self.dim,
                vertex,
            });
        }
        Ok(out)
    }

    /// Colors vertex patches by the parity tuple `(i_d mod 2)` refined by the
    /// red-black key `(Σ_d ⌊i_d / 2⌋) mod 2`, giving `2^(d+1)` colors.
    /// Empty colors are kept.
    pub fn color_patches(&self, level: usize) -> Result<Coloring> {
        let patches = self.interior_patches(level)?;
        let n_colors = 2usize << self.dim;
        let mut classes = vec![Vec::new(); n_colors];
        for p in patches {
            classes[p.color_index()].push(p);
        }
        Ok(Coloring { level, classes })
    }

    /// Global interior DoF indices of the patch in patch-local lexicographic
    /// order.
    pub fn patch_dof_map(&self, p: &VertexPatch) -> Vec<usize> {
        let ranges = self.patch_axis_ranges(p);
        let n1 = self.dofs_1d(p.level);
        let m = self.patch_size_1d();
        let total = m.pow(self.dim as u32);
        let mut out = Vec::with_capacity(total);
        for lin in 0..total {
            let mut rem = lin;
            let mut g = 0;
            let mut stride = 1;
            for r in ranges.iter().take(self.dim) {
                g += (r.start + rem % m) * stride;
                rem /= m;
                stride *= n1;
            }
            out.push(g);
        }
        out
    }

    /// Per-axis contiguous interior index ranges spanned by the patch.
    pub fn patch_axis_ranges(&self, p: &VertexPatch) -> Vec<std::ops::Range<usize>> {
        (0..self.dim)
            .map(|d| {
                let start = (p.vertex[d] - 1) * self.degree;
                start..start + self.patch_size_1d()
            })
            .collect()
    }
}

/// Position of a patch relative to the boundary along one axis. Patches on a
/// uniform axis with the same position have identical 1D restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisPosition {
    Interior = 0,
    TouchesLower = 1,
    TouchesUpper = 2,
    TouchesBoth = 3,
}

impl AxisPosition {
    pub fn of(vertex: usize, cells: usize) -> Self {
        match (vertex == 1, vertex + 1 == cells) {
            (false, false) => Self::Interior,
            (true, false) => Self::TouchesLower,
            (false, true) => Self::TouchesUpper,
            (true, true) => Self::TouchesBoth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VertexPatch {
    pub level: usize,
    pub dim: usize,
    /// Interior vertex coordinates, each in `1..cells_per_dim`; unused
    /// trailing entries are zero.
    pub vertex: [usize; MAX_DIM],
}

impl VertexPatch {
    pub fn vertex(&self) -> &[usize] {
        &self.vertex[..self.dim]
    }

    /// Lexicographic indices of the `2^d` cells sharing this vertex.
    pub fn cells(&self) -> Vec<[usize; MAX_DIM]> {
        (0..1usize << self.dim)
            .map(|mask| {
                let mut c = [0; MAX_DIM];
                for d in 0..self.dim {
                    c[d] = self.vertex[d] - 1 + ((mask >> d) & 1);
                }
                c
            })
            .collect()
    }

    pub fn parity_class(&self) -> usize {
        (0..self.dim).map(|d| (self.vertex[d] % 2) << d).sum()
    }

    pub fn red_black(&self) -> usize {
        (0..self.dim).map(|d| self.vertex[d] / 2).sum::<usize>() % 2
    }

    pub fn color_index(&self) -> usize {
        2 * self.parity_class() + self.red_black()
    }

    pub fn axis_positions(&self, cells_per_dim: usize) -> [AxisPosition; MAX_DIM] {
        let mut out = [AxisPosition::Interior; MAX_DIM];
        for d in 0..self.dim {
            out[d] = AxisPosition::of(self.vertex[d], cells_per_dim);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coloring {
    pub level: usize,
    pub classes: Vec<Vec<VertexPatch>>,
}

impl Coloring {
    pub fn n_colors(&self) -> usize {
        self.classes.len()
    }

    pub fn n_nonempty(&self) -> usize {
        self.classes.iter().filter(|c| !c.is_empty()).count()
    }

    pub fn n_patches(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(MeshHierarchy::new(1, 2, 3), Err(Error::InvalidDimension(1)));
        assert_eq!(MeshHierarchy::new(4, 2, 3), Err(Error::InvalidDimension(4)));
        assert_eq!(MeshHierarchy::new(2, 1, 3), Err(Error::InvalidDegree(1)));
        assert_eq!(MeshHierarchy::new(2, 2, 0), Err(Error::NoLevels));
    }

    #[test]
    fn dof_counts() {
        let h = MeshHierarchy::new(2, 2, 3).unwrap();
        assert_eq!(h.cells_per_dim(0), 2);
        assert_eq!(h.cells_per_dim(1), 4);
        assert_eq!(h.dofs_1d_with_boundary(1), 9);
        assert_eq!(h.dofs_1d(1), 7);
        assert_eq!(h.n_dofs(1), 49);
        for l in 1..3 {
            assert_eq!(h.cells_per_dim(l), 2 * h.cells_per_dim(l - 1));
        }
        assert!(h.check_level(3).is_err());
    }

    #[test]
    fn patch_counts() {
        let h2 = MeshHierarchy::new(2, 3, 3).unwrap();
        assert_eq!(h2.interior_patches(0).unwrap().len(), 1);
        let p = h2.interior_patches(1).unwrap();
        assert_eq!(p.len(), 9);
        assert_eq!(p[0].vertex(), &[1, 1]);
        assert_eq!(p[1].vertex(), &[2, 1]);
        assert_eq!(p[8].vertex(), &[3, 3]);
        let h3 = MeshHierarchy::new(3, 2, 3).unwrap();
        assert_eq!(h3.interior_patches(1).unwrap().len(), 27);
        assert_eq!(h3.interior_patches(2).unwrap().len(), 343);
        assert!(h3.interior_patches(3).is_err());
    }

    #[test]
    fn coloring_example_3x3() {
        let h = MeshHierarchy::new(2, 2, 2).unwrap();
        let c = h.color_patches(1).unwrap();
        assert_eq!(c.n_colors(), 8);
        // parity class (1,1) is index 3; red/black subclasses 6 and 7
        let red: Vec<_> = c.classes[6].iter().map(|p| p.vertex().to_vec()).collect();
        let black: Vec<_> = c.classes[7].iter().map(|p| p.vertex().to_vec()).collect();
        assert_eq!(red, vec![vec![1, 1], vec![3, 3]]);
        assert_eq!(black, vec![vec![3, 1], vec![1, 3]]);
        assert_eq!(c.n_patches(), 9);
    }

    #[test]
    fn single_patch_one_nonempty_color() {
        for dim in 2..=3 {
            let h = MeshHierarchy::new(dim, 2, 1).unwrap();
            let c = h.color_patches(0).unwrap();
            assert_eq!(c.n_colors(), 2 << dim);
            assert_eq!(c.n_nonempty(), 1);
        }
    }

    #[test]
    fn one_patch_map_is_identity() {
        for (dim, k) in [(2, 2), (2, 3), (3, 2)] {
            let h = MeshHierarchy::new(dim, k, 1).unwrap();
            let p = h.interior_patches(0).unwrap()[0];
            let map = h.patch_dof_map(&p);
            assert_eq!(map.len(), (2 * k - 1usize).pow(dim as u32));
            assert_eq!(map, (0..map.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn colors_have_disjoint_dofs_and_separated_cells() {
        for (dim, k, level) in [(2, 2, 2), (2, 3, 2), (3, 2, 1), (3, 3, 2)] {
            let h = MeshHierarchy::new(dim, k, level + 1).unwrap();
            let c = h.color_patches(level).unwrap();
            let mut seen = HashSet::new();
            for class in &c.classes {
                let mut dofs = HashSet::new();
                for p in class {
                    assert!(seen.insert(p.vertex), "vertex colored twice");
                    for g in h.patch_dof_map(p) {
                        assert!(dofs.insert(g), "shared DoF inside one color");
                    }
                }
                for (a, p) in class.iter().enumerate() {
                    for q in &class[a + 1..] {
                        // same parity => every axis offset is even; red-black
                        // forbids the pure face-neighbour offset (2 along one axis)
                        let diffs: Vec<usize> = (0..dim)
                            .map(|d| p.vertex[d].abs_diff(q.vertex[d]))
                            .collect();
                        assert!(diffs.iter().all(|x| x % 2 == 0));
                        let sum: usize = diffs.iter().sum();
                        assert!(sum != 2, "face-adjacent patches share a color");
                    }
                }
            }
            assert_eq!(seen.len(), h.n_patches(level));
        }
    }
}
