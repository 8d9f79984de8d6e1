//! Global degree-of-freedom layout and the constrained-to-free reduction.
//!
//! The global (full) vector concatenates, in order:
//!
//! | block | element            | dofs |
//! |-------|--------------------|------|
//! | `U_1` | bilinear           | one per plate node |
//! | `U_2` | bilinear           | one per plate node |
//! | `U_3` | bicubic Hermite    | four per plate node: value, d1, d2, d12 |
//! | `W_1` | cubic Hermite      | two per rod node: value, slope |
//! | `W_2` | cubic Hermite      | two per rod node |
//! | `W_3` | quadratic Lagrange | vertices and midpoints |
//! | `Q3`  | quadratic Lagrange | vertices and midpoints |
//!
//! Constraints turn the full vector into a reduced (free) one:
//! clamped-edge dofs and the junction conditions
//! `W_a(0) = W_a'(0) = Q3(0) = 0` are `Zero`, and the rod's axial anchor
//! `W_3(0) = U_3(0,0)` is an `Alias` of the plate dof.

use nalgebra::DVector;

use super::mesh::{PlateMesh, RodMesh};
use crate::model::{Edge, Geometry};

/// Base offsets of the blocks in the full dof vector.
#[derive(Debug, Clone)]
pub struct Layout {
    pub u1: usize,
    pub u2: usize,
    pub u3: usize,
    pub w1: usize,
    pub w2: usize,
    pub w3: usize,
    pub q3: usize,
    pub n_full: usize,
}

impl Layout {
    pub fn new(pm: &PlateMesh, rm: &RodMesh) -> Layout {
        let np = pm.n_nodes();
        let nr = rm.n_nodes();
        let nq = 2 * rm.n + 1;
        let u1 = 0;
        let u2 = u1 + np;
        let u3 = u2 + np;
        let w1 = u3 + 4 * np;
        let w2 = w1 + 2 * nr;
        let w3 = w2 + 2 * nr;
        let q3 = w3 + nq;
        Layout {
            u1,
            u2,
            u3,
            w1,
            w2,
            w3,
            q3,
            n_full: q3 + nq,
        }
    }

    pub fn u1(&self, node: usize) -> usize {
        self.u1 + node
    }
    pub fn u2(&self, node: usize) -> usize {
        self.u2 + node
    }
    /// `k`: 0 value, 1 d/dx1, 2 d/dx2, 3 mixed.
    pub fn u3(&self, node: usize, k: usize) -> usize {
        self.u3 + 4 * node + k
    }
    /// `k`: 0 value, 1 slope.
    pub fn w1(&self, node: usize, k: usize) -> usize {
        self.w1 + 2 * node + k
    }
    pub fn w2(&self, node: usize, k: usize) -> usize {
        self.w2 + 2 * node + k
    }
    /// Quadratic-Lagrange numbering: vertex `i` at `2 i`, midpoint of
    /// element `e` at `2 e + 1`.
    pub fn w3(&self, dof: usize) -> usize {
        self.w3 + dof
    }
    pub fn q3(&self, dof: usize) -> usize {
        self.q3 + dof
    }
}

/// Disposition of one full dof.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofTarget {
    Free,
    Zero,
    /// Takes the value of another (free) full dof.
    Alias(usize),
}

/// Resolved constraint map between full and reduced vectors.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub target: Vec<DofTarget>,
    /// Reduced index of each full dof (`None` for `Zero`; aliases share the
    /// target's index).
    pub reduced: Vec<Option<usize>>,
    pub n_reduced: usize,
}

impl DofMap {
    pub fn resolve(target: Vec<DofTarget>) -> DofMap {
        let mut reduced = vec![None; target.len()];
        let mut next = 0usize;
        for (i, t) in target.iter().enumerate() {
            if matches!(t, DofTarget::Free) {
                reduced[i] = Some(next);
                next += 1;
            }
        }
        for (i, t) in target.iter().enumerate() {
            if let DofTarget::Alias(j) = t {
                reduced[i] = Some(
                    reduced[*j].expect("alias target must itself be a free dof"),
                );
            }
        }
        DofMap {
            target,
            reduced,
            n_reduced: next,
        }
    }

    pub fn n_full(&self) -> usize {
        self.target.len()
    }

    /// Full vector from the reduced one (zeros and aliases filled in).
    pub fn expand(&self, reduced: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_full(), |i, _| match self.reduced[i] {
            Some(r) => reduced[r],
            None => 0.0,
        })
    }

    /// Reduced vector of the free entries of a full vector (aliased entries
    /// are read from their target).
    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_reduced);
        for (i, t) in self.target.iter().enumerate() {
            if matches!(t, DofTarget::Free) {
                out[self.reduced[i].unwrap()] = full[i];
            }
        }
        out
    }

    /// Reduced gradient: aliased contributions accumulate onto their target.
    pub fn reduce_gradient(&self, full: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_reduced);
        for (i, r) in self.reduced.iter().enumerate() {
            if let Some(r) = r {
                out[*r] += full[i];
            }
        }
        out
    }
}

/// Build the constraint map: clamped edges, junction conditions, and the
/// axial anchor.
pub fn build_dof_map(pm: &PlateMesh, rm: &RodMesh, geom: &Geometry) -> (Layout, DofMap) {
    let layout = Layout::new(pm, rm);
    let mut target = vec![DofTarget::Free; layout.n_full];
    for j in 0..=pm.ny {
        for i in 0..=pm.nx {
            let clamped = (geom.clamped(Edge::Left) && i == 0)
                || (geom.clamped(Edge::Right) && i == pm.nx)
                || (geom.clamped(Edge::Bottom) && j == 0)
                || (geom.clamped(Edge::Top) && j == pm.ny);
            if clamped {
                let n = pm.node(i, j);
                target[layout.u1(n)] = DofTarget::Zero;
                target[layout.u2(n)] = DofTarget::Zero;
                // All four Hermite dofs: U3 and its full gradient vanish on
                // the clamped edge.
                for k in 0..4 {
                    target[layout.u3(n, k)] = DofTarget::Zero;
                }
            }
        }
    }
    // Junction conditions at the plate end of the rod.
    target[layout.w1(0, 0)] = DofTarget::Zero;
    target[layout.w1(0, 1)] = DofTarget::Zero;
    target[layout.w2(0, 0)] = DofTarget::Zero;
    target[layout.w2(0, 1)] = DofTarget::Zero;
    target[layout.q3(0)] = DofTarget::Zero;
    target[layout.w3(0)] = DofTarget::Alias(layout.u3(pm.junction_node(), 0));
    (layout, DofMap::resolve(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Geometry;

    fn setup() -> (PlateMesh, RodMesh, Geometry) {
        let geom = Geometry::new(1.0, 1.0, 1.0, 1.0, 1.0, vec![Edge::Left]).unwrap();
        let pm = PlateMesh::new(&geom, 4, 4).unwrap();
        let rm = RodMesh::new(1.0, 3).unwrap();
        (pm, rm, geom)
    }

    #[test]
    fn layout_counts() {
        let (pm, rm, _) = setup();
        let l = Layout::new(&pm, &rm);
        // 25 plate nodes, 4 rod nodes, 7 quadratic dofs.
        assert_eq!(l.n_full, 25 + 25 + 100 + 8 + 8 + 7 + 7);
        assert_eq!(l.q3(6), l.n_full - 1);
    }

    #[test]
    fn constraints_and_roundtrip() {
        let (pm, rm, geom) = setup();
        let (l, map) = build_dof_map(&pm, &rm, &geom);
        // Left edge (5 nodes x 6 dofs) zeroed, junction: 5 zeros + 1 alias.
        assert_eq!(map.n_reduced, l.n_full - 5 * 6 - 5 - 1);
        assert_eq!(map.target[l.u3(pm.node(0, 2), 3)], DofTarget::Zero);
        assert!(matches!(map.target[l.w3(0)], DofTarget::Alias(_)));

        let reduced = DVector::from_fn(map.n_reduced, |i, _| (i % 7) as f64 - 3.0);
        let full = map.expand(&reduced);
        // The anchor alias is honoured.
        assert_eq!(full[l.w3(0)], full[l.u3(pm.junction_node(), 0)]);
        assert_eq!(full[l.w1(0, 1)], 0.0);
        assert_eq!(map.restrict(&full), reduced);
    }

    #[test]
    fn gradient_reduction_accumulates_aliases() {
        let (pm, rm, geom) = setup();
        let (l, map) = build_dof_map(&pm, &rm, &geom);
        let mut g = DVector::zeros(l.n_full);
        g[l.w3(0)] = 2.0;
        g[l.u3(pm.junction_node(), 0)] = 3.0;
        let r = map.reduce_gradient(&g);
        let target = map.reduced[l.u3(pm.junction_node(), 0)].unwrap();
        assert_eq!(r[target], 5.0);
        assert_eq!(r.iter().filter(|v| **v != 0.0).count(), 1);
    }
}
