//! Reference-element shape functions.
//!
//! All elements live on the unit reference interval/square with coordinate
//! `t in [0,1]`; derivative-type degrees of freedom are physical (the basis
//! carries the element length `h`), so returned derivatives are with respect
//! to the physical coordinate.

/// Cubic Hermite shape functions on an interval of length `h`.
///
/// Dof order: (value at 0, slope at 0, value at 1, slope at 1). Returns
/// `(values, first derivatives, second derivatives)`.
pub fn hermite(t: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = [
        2.0 * t3 - 3.0 * t2 + 1.0,
        h * (t3 - 2.0 * t2 + t),
        -2.0 * t3 + 3.0 * t2,
        h * (t3 - t2),
    ];
    let d = [
        (6.0 * t2 - 6.0 * t) / h,
        3.0 * t2 - 4.0 * t + 1.0,
        (-6.0 * t2 + 6.0 * t) / h,
        3.0 * t2 - 2.0 * t,
    ];
    let dd = [
        (12.0 * t - 6.0) / (h * h),
        (6.0 * t - 4.0) / h,
        (-12.0 * t + 6.0) / (h * h),
        (6.0 * t - 2.0) / h,
    ];
    (v, d, dd)
}

/// Linear shape functions on an interval of length `h`: (left, right).
pub fn linear(t: f64, h: f64) -> ([f64; 2], [f64; 2]) {
    ([1.0 - t, t], [-1.0 / h, 1.0 / h])
}

/// Quadratic Lagrange shape functions on an interval of length `h`.
///
/// Dof order: (vertex at 0, midpoint, vertex at 1).
pub fn quadratic(t: f64, h: f64) -> ([f64; 3], [f64; 3]) {
    let v = [
        2.0 * t * t - 3.0 * t + 1.0,
        4.0 * t - 4.0 * t * t,
        2.0 * t * t - t,
    ];
    let d = [
        (4.0 * t - 3.0) / h,
        (4.0 - 8.0 * t) / h,
        (4.0 * t - 1.0) / h,
    ];
    (v, d)
}

/// Bicubic Hermite (Bogner–Fox–Schmit) tables on a `hx x hy` cell at
/// reference coordinates `(tx, ty)`.
///
/// 16 dofs, corner-major in the order (0,0), (1,0), (0,1), (1,1), with
/// per-corner dofs (value, d/dx1, d/dx2, d2/dx1dx2).
#[derive(Debug, Clone, Copy)]
pub struct BfsTable {
    pub n: [f64; 16],
    pub dx: [f64; 16],
    pub dy: [f64; 16],
    pub dxx: [f64; 16],
    pub dxy: [f64; 16],
    pub dyy: [f64; 16],
}

/// Corner order shared by [`bfs`] and [`q1`].
pub const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

pub fn bfs(tx: f64, ty: f64, hx: f64, hy: f64) -> BfsTable {
    let (xv, xd, xdd) = hermite(tx, hx);
    let (yv, yd, ydd) = hermite(ty, hy);
    let mut out = BfsTable {
        n: [0.0; 16],
        dx: [0.0; 16],
        dy: [0.0; 16],
        dxx: [0.0; 16],
        dxy: [0.0; 16],
        dyy: [0.0; 16],
    };
    for (c, &(cx, cy)) in CORNERS.iter().enumerate() {
        for kx in 0..2 {
            for ky in 0..2 {
                // (kx, ky) = (0,0) value, (1,0) d/dx1, (0,1) d/dx2, (1,1) mixed.
                let dof = 4 * c + kx + 2 * ky;
                let ix = 2 * cx + kx;
                let iy = 2 * cy + ky;
                out.n[dof] = xv[ix] * yv[iy];
                out.dx[dof] = xd[ix] * yv[iy];
                out.dy[dof] = xv[ix] * yd[iy];
                out.dxx[dof] = xdd[ix] * yv[iy];
                out.dxy[dof] = xd[ix] * yd[iy];
                out.dyy[dof] = xv[ix] * ydd[iy];
            }
        }
    }
    out
}

/// Bilinear tables on a `hx x hy` cell: 4 dofs in [`CORNERS`] order.
#[derive(Debug, Clone, Copy)]
pub struct Q1Table {
    pub n: [f64; 4],
    pub dx: [f64; 4],
    pub dy: [f64; 4],
}

pub fn q1(tx: f64, ty: f64, hx: f64, hy: f64) -> Q1Table {
    let (xv, xd) = linear(tx, hx);
    let (yv, yd) = linear(ty, hy);
    let mut out = Q1Table {
        n: [0.0; 4],
        dx: [0.0; 4],
        dy: [0.0; 4],
    };
    for (c, &(cx, cy)) in CORNERS.iter().enumerate() {
        out.n[c] = xv[cx] * yv[cy];
        out.dx[c] = xd[cx] * yv[cy];
        out.dy[c] = xv[cx] * yd[cy];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_nodal_duality() {
        let h = 0.7;
        for (node, t) in [(0usize, 0.0), (1, 1.0)] {
            let (v, d, _) = hermite(t, h);
            for k in 0..4 {
                let expect_v = if k == 2 * node { 1.0 } else { 0.0 };
                let expect_d = if k == 2 * node + 1 { 1.0 } else { 0.0 };
                assert_relative_eq!(v[k], expect_v, epsilon = 1e-14);
                assert_relative_eq!(d[k], expect_d, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // p(x) = 1 + 2x - x^2 + 0.5 x^3 on [0, h] from nodal values/slopes.
        let h = 1.3;
        let p = |x: f64| 1.0 + 2.0 * x - x * x + 0.5 * x * x * x;
        let dp = |x: f64| 2.0 - 2.0 * x + 1.5 * x * x;
        let ddp = |x: f64| -2.0 + 3.0 * x;
        let dofs = [p(0.0), dp(0.0), p(h), dp(h)];
        for t in [0.15, 0.5, 0.85] {
            let (v, d, dd) = hermite(t, h);
            let at = |tbl: [f64; 4]| tbl.iter().zip(dofs).map(|(b, u)| b * u).sum::<f64>();
            assert_relative_eq!(at(v), p(t * h), max_relative = 1e-13);
            assert_relative_eq!(at(d), dp(t * h), max_relative = 1e-13);
            assert_relative_eq!(at(dd), ddp(t * h), max_relative = 1e-12);
        }
    }

    #[test]
    fn quadratic_reproduces_parabolas() {
        let h = 0.6;
        let p = |x: f64| 2.0 - x + 3.0 * x * x;
        let dp = |x: f64| -1.0 + 6.0 * x;
        let dofs = [p(0.0), p(0.5 * h), p(h)];
        for t in [0.2, 0.5, 0.9] {
            let (v, d) = quadratic(t, h);
            let at = |tbl: [f64; 3]| tbl.iter().zip(dofs).map(|(b, u)| b * u).sum::<f64>();
            assert_relative_eq!(at(v), p(t * h), max_relative = 1e-13);
            assert_relative_eq!(at(d), dp(t * h), max_relative = 1e-13);
        }
    }

    #[test]
    fn bfs_reproduces_bicubics() {
        let (hx, hy) = (0.8, 1.1);
        let f = |x: f64, y: f64| (1.0 + x + 0.5 * x * x * x) * (2.0 - y + y * y);
        let fx = |x: f64, y: f64| (1.0 + 1.5 * x * x) * (2.0 - y + y * y);
        let fy = |x: f64, y: f64| (1.0 + x + 0.5 * x * x * x) * (-1.0 + 2.0 * y);
        let fxy = |x: f64, y: f64| (1.0 + 1.5 * x * x) * (-1.0 + 2.0 * y);
        let fxx = |x: f64, y: f64| 3.0 * x * (2.0 - y + y * y);
        let fyy = |x: f64, _y: f64| (1.0 + x + 0.5 * x * x * x) * 2.0;
        let mut dofs = [0.0; 16];
        for (c, &(cx, cy)) in CORNERS.iter().enumerate() {
            let (x, y) = (cx as f64 * hx, cy as f64 * hy);
            dofs[4 * c] = f(x, y);
            dofs[4 * c + 1] = fx(x, y);
            dofs[4 * c + 2] = fy(x, y);
            dofs[4 * c + 3] = fxy(x, y);
        }
        for (tx, ty) in [(0.3, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            let tbl = bfs(tx, ty, hx, hy);
            let at = |b: [f64; 16]| b.iter().zip(dofs).map(|(b, u)| b * u).sum::<f64>();
            let (x, y) = (tx * hx, ty * hy);
            assert_relative_eq!(at(tbl.n), f(x, y), max_relative = 1e-13);
            assert_relative_eq!(at(tbl.dx), fx(x, y), max_relative = 1e-13);
            assert_relative_eq!(at(tbl.dy), fy(x, y), max_relative = 1e-13);
            assert_relative_eq!(at(tbl.dxx), fxx(x, y), max_relative = 1e-12);
            assert_relative_eq!(at(tbl.dxy), fxy(x, y), max_relative = 1e-12);
            assert_relative_eq!(at(tbl.dyy), fyy(x, y), max_relative = 1e-12);
        }
    }

    #[test]
    fn q1_partition_of_unity() {
        let tbl = q1(0.37, 0.81, 2.0, 3.0);
        assert_relative_eq!(tbl.n.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(tbl.dx.iter().sum::<f64>(), 0.0, epsilon = 1e-14);
        // Reproduces x1: dofs are corner x-coordinates.
        let dofs = [0.0, 2.0, 0.0, 2.0];
        let v: f64 = tbl.n.iter().zip(dofs).map(|(b, u)| b * u).sum();
        assert_relative_eq!(v, 0.37 * 2.0, max_relative = 1e-14);
    }
}
