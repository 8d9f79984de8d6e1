//! Assembly of the discrete limit energy, its exact gradient and Hessian,
//! and the load vector.
//!
//! All assembly happens in the full dof vector (see
//! [`super::dofs::Layout`]); the [`super::dofs::DofMap`] reduces results to
//! the free dofs. The energy is quartic in the coupled regimes (the membrane
//! strain and the rod stretch carry quadratic slope terms), so gradients and
//! Hessians carry the corresponding geometric parts and the Hessian depends
//! on the state.

use nalgebra::{DMatrix, DVector, Matrix2};

use super::basis;
use super::dofs::{DofMap, Layout};
use super::mesh::{PlateMesh, RodMesh};
use crate::limit::{plate_reduced_density, Materials, PlateState};
use crate::model::{derived_moduli, ForceData, Geometry};
use crate::quadrature::Rule1d;

/// Meshes, dof bookkeeping and quadrature orders for one problem.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub plate: PlateMesh,
    pub rod: RodMesh,
    pub layout: Layout,
    pub dofs: DofMap,
    /// Gauss points per axis per plate cell.
    pub plate_qp: usize,
    /// Gauss points per rod interval.
    pub rod_qp: usize,
}

impl Discretization {
    pub fn new(
        geom: &Geometry,
        plate: PlateMesh,
        rod: RodMesh,
        plate_qp: usize,
        rod_qp: usize,
    ) -> Discretization {
        let (layout, dofs) = super::dofs::build_dof_map(&plate, &rod, geom);
        Discretization {
            plate,
            rod,
            layout,
            dofs,
            plate_qp,
            rod_qp,
        }
    }
}

/// Symmetric matrix in triplet form, assembled in full dof indices.
#[derive(Debug, Clone)]
pub struct SymCoo {
    pub dim: usize,
    pub entries: Vec<(u32, u32, f64)>,
}

impl SymCoo {
    pub fn new(dim: usize) -> SymCoo {
        SymCoo {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((i as u32, j as u32, v));
        }
    }

    /// Dense reduced matrix: rows/columns follow the dof map, aliased dofs
    /// accumulate onto their targets.
    pub fn reduce(&self, map: &DofMap) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(map.n_reduced, map.n_reduced);
        for &(i, j, v) in &self.entries {
            if let (Some(ri), Some(rj)) = (map.reduced[i as usize], map.reduced[j as usize]) {
                out[(ri, rj)] += v;
            }
        }
        out
    }

    /// Matrix-vector product in full indices.
    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for &(i, j, v) in &self.entries {
            out[i as usize] += v * x[j as usize];
        }
        out
    }
}

struct System {
    energy: f64,
    gradient: Option<DVector<f64>>,
    hessian: Option<SymCoo>,
}

/// Contraction of two symmetric 2x2 matrices.
fn ddot(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    a[(0, 0)] * b[(0, 0)] + a[(1, 1)] * b[(1, 1)] + 2.0 * a[(0, 1)] * b[(0, 1)]
}

fn assemble(
    disc: &Discretization,
    mats: Materials,
    vk_plate: bool,
    vk_rod: bool,
    full: &DVector<f64>,
    want_gradient: bool,
    want_hessian: bool,
) -> System {
    let l = &disc.layout;
    let mut energy = 0.0;
    let mut gradient = want_gradient.then(|| DVector::zeros(l.n_full));
    let mut hessian = want_hessian.then(|| SymCoo::new(l.n_full));

    // ---- plate cells ----
    let pm = &disc.plate;
    let (ep, nup) = derived_moduli(mats.plate);
    let cb = ep / (3.0 * (1.0 - nup * nup));
    let cm = ep / (1.0 - nup * nup);
    let rule = Rule1d::gauss(disc.plate_qp, 0.0, 1.0);
    let vk = if vk_plate { 1.0 } else { 0.0 };
    let mut local = DMatrix::zeros(24, 24);
    for cj in 0..pm.ny {
        for ci in 0..pm.nx {
            let nodes: [usize; 4] = std::array::from_fn(|c| {
                let (cx, cy) = basis::CORNERS[c];
                pm.node(ci + cx, cj + cy)
            });
            // Local dof order: U1 (4), U2 (4), U3 (16).
            let mut idx = [0usize; 24];
            for c in 0..4 {
                idx[c] = l.u1(nodes[c]);
                idx[4 + c] = l.u2(nodes[c]);
                for k in 0..4 {
                    idx[8 + 4 * c + k] = l.u3(nodes[c], k);
                }
            }
            if want_hessian {
                local.fill(0.0);
            }
            for (&tx, &wx) in rule.nodes.iter().zip(rule.weights.iter()) {
                for (&ty, &wy) in rule.nodes.iter().zip(rule.weights.iter()) {
                    let w = wx * wy * pm.hx * pm.hy;
                    let q1 = basis::q1(tx, ty, pm.hx, pm.hy);
                    let bfs = basis::bfs(tx, ty, pm.hx, pm.hy);
                    let mut g1 = [0.0; 2];
                    let mut g2 = [0.0; 2];
                    for c in 0..4 {
                        g1[0] += q1.dx[c] * full[idx[c]];
                        g1[1] += q1.dy[c] * full[idx[c]];
                        g2[0] += q1.dx[c] * full[idx[4 + c]];
                        g2[1] += q1.dy[c] * full[idx[4 + c]];
                    }
                    let mut t = [0.0; 2];
                    let mut h = Matrix2::zeros();
                    for k in 0..16 {
                        let u = full[idx[8 + k]];
                        t[0] += bfs.dx[k] * u;
                        t[1] += bfs.dy[k] * u;
                        h[(0, 0)] += bfs.dxx[k] * u;
                        h[(0, 1)] += bfs.dxy[k] * u;
                        h[(1, 1)] += bfs.dyy[k] * u;
                    }
                    h[(1, 0)] = h[(0, 1)];
                    let z = Matrix2::new(
                        g1[0] + vk * 0.5 * t[0] * t[0],
                        0.5 * (g1[1] + g2[0]) + vk * 0.5 * t[0] * t[1],
                        0.5 * (g1[1] + g2[0]) + vk * 0.5 * t[0] * t[1],
                        g2[1] + vk * 0.5 * t[1] * t[1],
                    );
                    energy += w
                        * plate_reduced_density(
                            mats.plate,
                            &PlateState {
                                hess: h,
                                membrane: z,
                            },
                        );
                    if !want_gradient && !want_hessian {
                        continue;
                    }
                    // dpsi/dZ and dpsi/dH.
                    let sz = 2.0 * cm * ((1.0 - nup) * z + nup * z.trace() * Matrix2::identity());
                    let sh = 2.0 * cb * ((1.0 - nup) * h + nup * h.trace() * Matrix2::identity());
                    // First variations of Z and H per local dof.
                    let mut dz = [Matrix2::zeros(); 24];
                    let mut dh = [Matrix2::zeros(); 24];
                    for c in 0..4 {
                        dz[c] = Matrix2::new(
                            q1.dx[c],
                            0.5 * q1.dy[c],
                            0.5 * q1.dy[c],
                            0.0,
                        );
                        dz[4 + c] = Matrix2::new(
                            0.0,
                            0.5 * q1.dx[c],
                            0.5 * q1.dx[c],
                            q1.dy[c],
                        );
                    }
                    for k in 0..16 {
                        let (px, py) = (bfs.dx[k], bfs.dy[k]);
                        dz[8 + k] = vk
                            * Matrix2::new(
                                px * t[0],
                                0.5 * (px * t[1] + py * t[0]),
                                0.5 * (px * t[1] + py * t[0]),
                                py * t[1],
                            );
                        dh[8 + k] = Matrix2::new(
                            bfs.dxx[k],
                            bfs.dxy[k],
                            bfs.dxy[k],
                            bfs.dyy[k],
                        );
                    }
                    if let Some(g) = gradient.as_mut() {
                        for d in 0..24 {
                            g[idx[d]] += w * (ddot(&sz, &dz[d]) + ddot(&sh, &dh[d]));
                        }
                    }
                    if want_hessian {
                        for d in 0..24 {
                            let (tzd, thd) = (dz[d].trace(), dh[d].trace());
                            for e in 0..24 {
                                let mut v = 2.0
                                    * cm
                                    * ((1.0 - nup) * ddot(&dz[d], &dz[e])
                                        + nup * tzd * dz[e].trace())
                                    + 2.0
                                        * cb
                                        * ((1.0 - nup) * ddot(&dh[d], &dh[e])
                                            + nup * thd * dh[e].trace());
                                // Geometric part: both dofs bend U3.
                                if vk_plate && d >= 8 && e >= 8 {
                                    let (pdx, pdy) = (bfs.dx[d - 8], bfs.dy[d - 8]);
                                    let (qdx, qdy) = (bfs.dx[e - 8], bfs.dy[e - 8]);
                                    v += sz[(0, 0)] * pdx * qdx
                                        + sz[(0, 1)] * (pdx * qdy + pdy * qdx)
                                        + sz[(1, 1)] * pdy * qdy;
                                }
                                local[(d, e)] += w * v;
                            }
                        }
                    }
                }
            }
            if let Some(hs) = hessian.as_mut() {
                for d in 0..24 {
                    for e in 0..24 {
                        hs.push(idx[d], idx[e], local[(d, e)]);
                    }
                }
            }
        }
    }

    // ---- rod elements ----
    let rm = &disc.rod;
    let (er, _) = derived_moduli(mats.rod);
    let pi = std::f64::consts::PI;
    let rule = Rule1d::gauss(disc.rod_qp, 0.0, 1.0);
    let vkr = if vk_rod { 1.0 } else { 0.0 };
    let mut local = DMatrix::zeros(14, 14);
    for e in 0..rm.n {
        // Local order: W1 (4 Hermite), W2 (4), W3 (3 quadratic), Q3 (3).
        let idx: [usize; 14] = [
            l.w1(e, 0),
            l.w1(e, 1),
            l.w1(e + 1, 0),
            l.w1(e + 1, 1),
            l.w2(e, 0),
            l.w2(e, 1),
            l.w2(e + 1, 0),
            l.w2(e + 1, 1),
            l.w3(2 * e),
            l.w3(2 * e + 1),
            l.w3(2 * e + 2),
            l.q3(2 * e),
            l.q3(2 * e + 1),
            l.q3(2 * e + 2),
        ];
        if want_hessian {
            local.fill(0.0);
        }
        for (&t, &wt) in rule.nodes.iter().zip(rule.weights.iter()) {
            let w = wt * rm.h;
            let (_, hd, hdd) = basis::hermite(t, rm.h);
            let (_, qd) = basis::quadratic(t, rm.h);
            let mut dw = [0.0; 2];
            let mut ddw = [0.0; 2];
            for k in 0..4 {
                dw[0] += hd[k] * full[idx[k]];
                ddw[0] += hdd[k] * full[idx[k]];
                dw[1] += hd[k] * full[idx[4 + k]];
                ddw[1] += hdd[k] * full[idx[4 + k]];
            }
            let mut dw3 = 0.0;
            let mut dq3 = 0.0;
            for k in 0..3 {
                dw3 += qd[k] * full[idx[8 + k]];
                dq3 += qd[k] * full[idx[11 + k]];
            }
            let axial = dw3 + vkr * 0.5 * (dw[0] * dw[0] + dw[1] * dw[1]);
            energy += w
                * (er * pi / 8.0 * (ddw[0] * ddw[0] + ddw[1] * ddw[1])
                    + er * pi / 2.0 * axial * axial
                    + mats.rod.mu * pi / 4.0 * dq3 * dq3);
            if !want_gradient && !want_hessian {
                continue;
            }
            // d(axial)/d(dof) and the bending/torsion rates per local dof.
            let mut dax = [0.0; 14];
            for k in 0..4 {
                dax[k] = vkr * dw[0] * hd[k];
                dax[4 + k] = vkr * dw[1] * hd[k];
            }
            dax[8..11].copy_from_slice(&qd[..3]);
            if let Some(g) = gradient.as_mut() {
                for k in 0..4 {
                    g[idx[k]] += w * (er * pi / 4.0 * ddw[0] * hdd[k] + er * pi * axial * dax[k]);
                    g[idx[4 + k]] +=
                        w * (er * pi / 4.0 * ddw[1] * hdd[k] + er * pi * axial * dax[4 + k]);
                }
                for k in 0..3 {
                    g[idx[8 + k]] += w * er * pi * axial * qd[k];
                    g[idx[11 + k]] += w * mats.rod.mu * pi / 2.0 * dq3 * qd[k];
                }
            }
            if want_hessian {
                for d in 0..14 {
                    for e2 in 0..14 {
                        let mut v = er * pi * dax[d] * dax[e2];
                        // Bending blocks (same transverse component).
                        if d < 4 && e2 < 4 {
                            v += er * pi / 4.0 * hdd[d] * hdd[e2];
                            v += er * pi * axial * vkr * hd[d] * hd[e2];
                        } else if (4..8).contains(&d) && (4..8).contains(&e2) {
                            v += er * pi / 4.0 * hdd[d - 4] * hdd[e2 - 4];
                            v += er * pi * axial * vkr * hd[d - 4] * hd[e2 - 4];
                        } else if d >= 11 && e2 >= 11 {
                            v += mats.rod.mu * pi / 2.0 * qd[d - 11] * qd[e2 - 11];
                        }
                        local[(d, e2)] += w * v;
                    }
                }
            }
        }
        if let Some(hs) = hessian.as_mut() {
            for d in 0..14 {
                for e2 in 0..14 {
                    hs.push(idx[d], idx[e2], local[(d, e2)]);
                }
            }
        }
    }

    System {
        energy,
        gradient,
        hessian,
    }
}

/// Internal (elastic) energy `J_p + J_r` at a full dof vector.
pub fn assemble_energy(
    disc: &Discretization,
    mats: Materials,
    vk_plate: bool,
    vk_rod: bool,
    full: &DVector<f64>,
) -> f64 {
    assemble(disc, mats, vk_plate, vk_rod, full, false, false).energy
}

/// Gradient of the internal energy in full dof indices.
pub fn assemble_gradient(
    disc: &Discretization,
    mats: Materials,
    vk_plate: bool,
    vk_rod: bool,
    full: &DVector<f64>,
) -> DVector<f64> {
    assemble(disc, mats, vk_plate, vk_rod, full, true, false)
        .gradient
        .unwrap()
}

/// Hessian of the internal energy in full dof indices (state-dependent in
/// the coupled regimes).
pub fn assemble_hessian(
    disc: &Discretization,
    mats: Materials,
    vk_plate: bool,
    vk_rod: bool,
    full: &DVector<f64>,
) -> SymCoo {
    assemble(disc, mats, vk_plate, vk_rod, full, false, true)
        .hessian
        .unwrap()
}

/// Load vector (full indices): the discrete counterpart of the limit load
/// functional, so that the work at a state `x` is `load . x`.
pub fn assemble_load(disc: &Discretization, forces: &ForceData) -> DVector<f64> {
    let l = &disc.layout;
    let mut out = DVector::zeros(l.n_full);
    let pi = std::f64::consts::PI;

    let pm = &disc.plate;
    let rule = Rule1d::gauss(disc.plate_qp, 0.0, 1.0);
    for cj in 0..pm.ny {
        for ci in 0..pm.nx {
            let (x0, y0) = pm.node_coord(ci, cj);
            for (&tx, &wx) in rule.nodes.iter().zip(rule.weights.iter()) {
                for (&ty, &wy) in rule.nodes.iter().zip(rule.weights.iter()) {
                    let w = 2.0 * wx * wy * pm.hx * pm.hy;
                    let f = forces.fp_at(x0 + tx * pm.hx, y0 + ty * pm.hy);
                    if f == [0.0; 3] {
                        continue;
                    }
                    let q1 = basis::q1(tx, ty, pm.hx, pm.hy);
                    let bfs = basis::bfs(tx, ty, pm.hx, pm.hy);
                    for (c, &(cx, cy)) in basis::CORNERS.iter().enumerate() {
                        let n = pm.node(ci + cx, cj + cy);
                        out[l.u1(n)] += w * f[0] * q1.n[c];
                        out[l.u2(n)] += w * f[1] * q1.n[c];
                        for k in 0..4 {
                            out[l.u3(n, k)] += w * f[2] * bfs.n[4 * c + k];
                        }
                    }
                }
            }
        }
    }

    let rm = &disc.rod;
    let rule = Rule1d::gauss(disc.rod_qp, 0.0, 1.0);
    for e in 0..rm.n {
        for (&t, &wt) in rule.nodes.iter().zip(rule.weights.iter()) {
            let w = wt * rm.h;
            let x3 = (e as f64 + t) * rm.h;
            let fr = forces.fr_at(x3);
            let g1 = forces.g_at(1, x3);
            let g2 = forces.g_at(2, x3);
            let (hv, hd, _) = basis::hermite(t, rm.h);
            let (qv, _) = basis::quadratic(t, rm.h);
            for k in 0..4 {
                let (node, kind) = (e + k / 2, k % 2);
                // pi f_r . W plus the moment terms -(pi/2) g_a3 W_a'.
                out[l.w1(node, kind)] += w * (pi * fr[0] * hv[k] - 0.5 * pi * g1[2] * hd[k]);
                out[l.w2(node, kind)] += w * (pi * fr[1] * hv[k] - 0.5 * pi * g2[2] * hd[k]);
            }
            for k in 0..3 {
                out[l.w3(2 * e + k)] += w * pi * fr[2] * qv[k];
                out[l.q3(2 * e + k)] += w * 0.5 * pi * (g1[1] - g2[0]) * qv[k];
            }
        }
    }
    out
}
