//! Uniform rectangular meshes for the mid-surface and the rod axis.

use crate::error::{Error, Result};
use crate::model::Geometry;

/// Uniform `nx x ny` grid over the mid-surface `(-a,b) x (-c,d)`.
///
/// The junction (the origin) must be a grid node: the junction carries a dof
/// coupling (the rod's axial displacement equals `U_3` there), which the dof
/// map ties at a node.
#[derive(Debug, Clone)]
pub struct PlateMesh {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Node indices of the junction.
    pub junction: (usize, usize),
}

impl PlateMesh {
    pub fn new(geom: &Geometry, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Mesh(format!(
                "mid-surface mesh needs at least 2 cells per direction, got {nx} x {ny}"
            )));
        }
        let hx = (geom.a + geom.b) / nx as f64;
        let hy = (geom.c + geom.d) / ny as f64;
        let find = |lo: f64, h: f64, n: usize, name: &str| -> Result<usize> {
            let mut best = 0usize;
            let mut dist = f64::INFINITY;
            for i in 0..=n {
                let x = lo + i as f64 * h;
                if x.abs() < dist {
                    dist = x.abs();
                    best = i;
                }
            }
            if dist > 1e-12 * h.max(1.0) {
                return Err(Error::Mesh(format!(
                    "the junction must be a mesh node: nearest {name}-grid line misses the \
                     origin by {dist:.3e} (adjust the cell count or the rectangle)"
                )));
            }
            Ok(best)
        };
        let ji = find(-geom.a, hx, nx, "x1")?;
        let jj = find(-geom.c, hy, ny, "x2")?;
        if ji == 0 || ji == nx || jj == 0 || jj == ny {
            return Err(Error::Mesh(
                "the junction node must be interior to the mid-surface".into(),
            ));
        }
        Ok(PlateMesh {
            x0: -geom.a,
            y0: -geom.c,
            nx,
            ny,
            hx,
            hy,
            junction: (ji, jj),
        })
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_coord(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy)
    }

    pub fn junction_node(&self) -> usize {
        self.node(self.junction.0, self.junction.1)
    }

    /// Cell containing `(x1, x2)` and the reference coordinates inside it;
    /// points on the outer boundary land in the adjacent cell.
    pub fn locate(&self, x1: f64, x2: f64) -> (usize, usize, f64, f64) {
        let ci = (((x1 - self.x0) / self.hx).floor() as isize).clamp(0, self.nx as isize - 1)
            as usize;
        let cj = (((x2 - self.y0) / self.hy).floor() as isize).clamp(0, self.ny as isize - 1)
            as usize;
        let tx = (x1 - (self.x0 + ci as f64 * self.hx)) / self.hx;
        let ty = (x2 - (self.y0 + cj as f64 * self.hy)) / self.hy;
        (ci, cj, tx, ty)
    }
}

/// Uniform partition of the rod axis `(0, L)`.
#[derive(Debug, Clone)]
pub struct RodMesh {
    pub length: f64,
    pub n: usize,
    pub h: f64,
}

impl RodMesh {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Mesh(format!(
                "rod mesh needs at least 2 intervals, got {n}"
            )));
        }
        Ok(RodMesh {
            length,
            n,
            h: length / n as f64,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n + 1
    }

    pub fn locate(&self, x3: f64) -> (usize, f64) {
        let e = ((x3 / self.h).floor() as isize).clamp(0, self.n as isize - 1) as usize;
        (e, (x3 - e as f64 * self.h) / self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;

    fn geom(a: f64, b: f64) -> Geometry {
        Geometry::new(a, b, 1.0, 1.0, 1.0, vec![Edge::Left]).unwrap()
    }

    #[test]
    fn junction_must_sit_on_the_grid() {
        // (-1,1) with 8 cells: node at 0 exists.
        let m = PlateMesh::new(&geom(1.0, 1.0), 8, 8).unwrap();
        assert_eq!(m.junction, (4, 4));
        let (x, y) = m.node_coord(4, 4);
        assert_eq!((x, y), (0.0, 0.0));
        // (-1, 0.7) with 8 cells: no node at the origin.
        assert!(PlateMesh::new(&geom(1.0, 0.7), 8, 8).is_err());
    }

    #[test]
    fn locate_roundtrip() {
        let m = PlateMesh::new(&geom(1.0, 1.0), 4, 4).unwrap();
        let (ci, cj, tx, ty) = m.locate(-0.3, 0.9);
        assert_eq!((ci, cj), (1, 3));
        assert!((tx - 0.4).abs() < 1e-12 && (ty - 0.8).abs() < 1e-12);
        // Boundary points stay in range.
        let (ci, _, tx, _) = m.locate(1.0, 0.0);
        assert_eq!(ci, 3);
        assert!((tx - 1.0).abs() < 1e-12);
        let r = RodMesh::new(2.0, 4).unwrap();
        let (e, t) = r.locate(2.0);
        assert_eq!(e, 3);
        assert!((t - 1.0).abs() < 1e-12);
    }
}
