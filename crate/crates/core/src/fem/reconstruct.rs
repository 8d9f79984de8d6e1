//! Reconstruction of continuous fields from dof vectors, and interpolation
//! of analytic fields onto the discrete spaces.
//!
//! [`FePlate`] and [`FeRod`] wrap a full dof vector behind the same field
//! traits the quadrature-based energies consume, so every contract that
//! holds for analytic states can be checked verbatim on discrete ones.

use nalgebra::{DVector, Matrix2, Matrix3x2, Vector3};

use super::assemble::Discretization;
use super::basis;
use super::dofs::DofTarget;
use crate::limit::{PlateField, RodField};
use crate::{Error, Result};

/// Finite element midsurface field: bilinear in-plane components and a
/// Bogner-Fox-Schmit bicubic transverse deflection.
pub struct FePlate<'a> {
    disc: &'a Discretization,
    full: &'a DVector<f64>,
}

impl<'a> FePlate<'a> {
    pub fn new(disc: &'a Discretization, full: &'a DVector<f64>) -> FePlate<'a> {
        FePlate { disc, full }
    }

    /// Local 24-dof gather for the cell containing `(x1, x2)`.
    fn cell(&self, x1: f64, x2: f64) -> ([f64; 4], [f64; 4], [f64; 16], f64, f64) {
        let pm = &self.disc.plate;
        let l = &self.disc.layout;
        let (ci, cj, tx, ty) = pm.locate(x1, x2);
        let mut u1 = [0.0; 4];
        let mut u2 = [0.0; 4];
        let mut u3 = [0.0; 16];
        for (c, &(cx, cy)) in basis::CORNERS.iter().enumerate() {
            let n = pm.node(ci + cx, cj + cy);
            u1[c] = self.full[l.u1(n)];
            u2[c] = self.full[l.u2(n)];
            for k in 0..4 {
                u3[4 * c + k] = self.full[l.u3(n, k)];
            }
        }
        (u1, u2, u3, tx, ty)
    }
}

impl PlateField for FePlate<'_> {
    fn value(&self, x1: f64, x2: f64) -> Vector3<f64> {
        let pm = &self.disc.plate;
        let (u1, u2, u3, tx, ty) = self.cell(x1, x2);
        let q1 = basis::q1(tx, ty, pm.hx, pm.hy);
        let bfs = basis::bfs(tx, ty, pm.hx, pm.hy);
        let mut v = Vector3::zeros();
        for c in 0..4 {
            v[0] += q1.n[c] * u1[c];
            v[1] += q1.n[c] * u2[c];
        }
        for (n, u) in bfs.n.iter().zip(&u3) {
            v[2] += n * u;
        }
        v
    }

    fn gradient(&self, x1: f64, x2: f64) -> Matrix3x2<f64> {
        let pm = &self.disc.plate;
        let (u1, u2, u3, tx, ty) = self.cell(x1, x2);
        let q1 = basis::q1(tx, ty, pm.hx, pm.hy);
        let bfs = basis::bfs(tx, ty, pm.hx, pm.hy);
        let mut g = Matrix3x2::zeros();
        for c in 0..4 {
            g[(0, 0)] += q1.dx[c] * u1[c];
            g[(0, 1)] += q1.dy[c] * u1[c];
            g[(1, 0)] += q1.dx[c] * u2[c];
            g[(1, 1)] += q1.dy[c] * u2[c];
        }
        for (k, u) in u3.iter().enumerate() {
            g[(2, 0)] += bfs.dx[k] * u;
            g[(2, 1)] += bfs.dy[k] * u;
        }
        g
    }

    fn hessian3(&self, x1: f64, x2: f64) -> Matrix2<f64> {
        let pm = &self.disc.plate;
        let (_, _, u3, tx, ty) = self.cell(x1, x2);
        let bfs = basis::bfs(tx, ty, pm.hx, pm.hy);
        let mut h = Matrix2::zeros();
        for (k, u) in u3.iter().enumerate() {
            h[(0, 0)] += bfs.dxx[k] * u;
            h[(0, 1)] += bfs.dxy[k] * u;
            h[(1, 1)] += bfs.dyy[k] * u;
        }
        h[(1, 0)] = h[(0, 1)];
        h
    }
}

/// Finite element rod field: Hermite cubic transverse deflections,
/// quadratic stretch and twist.
pub struct FeRod<'a> {
    disc: &'a Discretization,
    full: &'a DVector<f64>,
}

impl<'a> FeRod<'a> {
    pub fn new(disc: &'a Discretization, full: &'a DVector<f64>) -> FeRod<'a> {
        FeRod { disc, full }
    }

    fn element(&self, x3: f64) -> ([f64; 4], [f64; 4], [f64; 3], [f64; 3], f64) {
        let rm = &self.disc.rod;
        let l = &self.disc.layout;
        let (e, t) = rm.locate(x3);
        let mut w1 = [0.0; 4];
        let mut w2 = [0.0; 4];
        for k in 0..4 {
            w1[k] = self.full[l.w1(e + k / 2, k % 2)];
            w2[k] = self.full[l.w2(e + k / 2, k % 2)];
        }
        let mut w3 = [0.0; 3];
        let mut q3 = [0.0; 3];
        for k in 0..3 {
            w3[k] = self.full[l.w3(2 * e + k)];
            q3[k] = self.full[l.q3(2 * e + k)];
        }
        (w1, w2, w3, q3, t)
    }
}

impl RodField for FeRod<'_> {
    fn value(&self, x3: f64) -> Vector3<f64> {
        let rm = &self.disc.rod;
        let (w1, w2, w3, _, t) = self.element(x3);
        let (hv, _, _) = basis::hermite(t, rm.h);
        let (qv, _) = basis::quadratic(t, rm.h);
        Vector3::new(
            (0..4).map(|k| hv[k] * w1[k]).sum(),
            (0..4).map(|k| hv[k] * w2[k]).sum(),
            (0..3).map(|k| qv[k] * w3[k]).sum(),
        )
    }

    fn derivative(&self, x3: f64) -> Vector3<f64> {
        let rm = &self.disc.rod;
        let (w1, w2, w3, _, t) = self.element(x3);
        let (_, hd, _) = basis::hermite(t, rm.h);
        let (_, qd) = basis::quadratic(t, rm.h);
        Vector3::new(
            (0..4).map(|k| hd[k] * w1[k]).sum(),
            (0..4).map(|k| hd[k] * w2[k]).sum(),
            (0..3).map(|k| qd[k] * w3[k]).sum(),
        )
    }

    fn second_derivative(&self, x3: f64) -> [f64; 2] {
        let rm = &self.disc.rod;
        let (w1, w2, _, _, t) = self.element(x3);
        let (_, _, hdd) = basis::hermite(t, rm.h);
        [
            (0..4).map(|k| hdd[k] * w1[k]).sum(),
            (0..4).map(|k| hdd[k] * w2[k]).sum(),
        ]
    }

    fn twist(&self, x3: f64) -> f64 {
        let rm = &self.disc.rod;
        let (_, _, _, q3, t) = self.element(x3);
        let (qv, _) = basis::quadratic(t, rm.h);
        (0..3).map(|k| qv[k] * q3[k]).sum()
    }

    fn twist_rate(&self, x3: f64) -> f64 {
        let rm = &self.disc.rod;
        let (_, _, _, q3, t) = self.element(x3);
        let (_, qd) = basis::quadratic(t, rm.h);
        (0..3).map(|k| qd[k] * q3[k]).sum()
    }
}

/// Samples analytic fields into a full dof vector.
///
/// Nodal values, slopes and (for the deflection) twist derivatives are read
/// straight off the fields. Constrained dofs are then checked against the
/// sampled values: a clamped or junction dof whose sampled value differs
/// from its constraint by more than `1e-8` (relative to the dof magnitude)
/// means the field is not admissible, and interpolation fails rather than
/// silently projecting. Admissible vectors are canonicalized so constraints
/// hold exactly.
pub fn interpolate(
    disc: &Discretization,
    plate: &impl PlateField,
    rod: &impl RodField,
) -> Result<DVector<f64>> {
    let pm = &disc.plate;
    let rm = &disc.rod;
    let l = &disc.layout;
    let mut full = DVector::zeros(l.n_full);
    for j in 0..=pm.ny {
        for i in 0..=pm.nx {
            let (x1, x2) = pm.node_coord(i, j);
            let n = pm.node(i, j);
            let v = plate.value(x1, x2);
            let g = plate.gradient(x1, x2);
            let h = plate.hessian3(x1, x2);
            full[l.u1(n)] = v[0];
            full[l.u2(n)] = v[1];
            full[l.u3(n, 0)] = v[2];
            full[l.u3(n, 1)] = g[(2, 0)];
            full[l.u3(n, 2)] = g[(2, 1)];
            full[l.u3(n, 3)] = h[(0, 1)];
        }
    }
    for i in 0..=rm.n {
        let x3 = i as f64 * rm.h;
        let v = rod.value(x3);
        let d = rod.derivative(x3);
        full[l.w1(i, 0)] = v[0];
        full[l.w1(i, 1)] = d[0];
        full[l.w2(i, 0)] = v[1];
        full[l.w2(i, 1)] = d[1];
        full[l.w3(2 * i)] = v[2];
        full[l.q3(2 * i)] = rod.twist(x3);
    }
    for e in 0..rm.n {
        let x3 = (e as f64 + 0.5) * rm.h;
        full[l.w3(2 * e + 1)] = rod.value(x3)[2];
        full[l.q3(2 * e + 1)] = rod.twist(x3);
    }

    let scale = 1.0 + full.amax();
    let tol = 1e-8 * scale;
    for d in 0..l.n_full {
        match disc.dofs.target[d] {
            DofTarget::Free => {}
            DofTarget::Zero => {
                if full[d].abs() > tol {
                    return Err(Error::Constraint(format!(
                        "field is not admissible: constrained dof {d} samples to {:.3e} \
                         but must vanish (clamped edge or junction)",
                        full[d]
                    )));
                }
                full[d] = 0.0;
            }
            DofTarget::Alias(t) => {
                if (full[d] - full[t]).abs() > tol {
                    return Err(Error::Constraint(format!(
                        "field is not admissible: dof {d} samples to {:.3e} but is tied \
                         to dof {t} = {:.3e} (junction continuity)",
                        full[d], full[t]
                    )));
                }
                full[d] = full[t];
            }
        }
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{PlateMesh, RodMesh};
    use crate::limit::{AnalyticPlate, AnalyticRod};
    use crate::model::{Edge, Geometry};
    use approx::assert_relative_eq;

    fn setup() -> Discretization {
        let geom = Geometry::new(1.0, 1.0, 1.0, 1.0, 1.0, vec![Edge::Left]).unwrap();
        let pm = PlateMesh::new(&geom, 4, 4).unwrap();
        let rm = RodMesh::new(geom.rod_length, 3).unwrap();
        Discretization::new(&geom, pm, rm, 5, 6)
    }

    fn admissible_fields() -> (AnalyticPlate, AnalyticRod) {
        // In the finite element spaces, clamped on the left edge, junction
        // conditions satisfied.
        let plate = AnalyticPlate::new(
            |x1, x2| Vector3::new((1.0 + x1) * x2, 0.5 * (1.0 + x1), (1.0 + x1) * (1.0 + x1) * x2),
            |x1, x2| {
                Matrix3x2::new(
                    x2,
                    1.0 + x1,
                    0.5,
                    0.0,
                    2.0 * (1.0 + x1) * x2,
                    (1.0 + x1) * (1.0 + x1),
                )
            },
            |x1, x2| Matrix2::new(2.0 * x2, 2.0 * (1.0 + x1), 2.0 * (1.0 + x1), 0.0),
        );
        let rod = AnalyticRod::new(
            |x3| Vector3::new(x3 * x3, x3 * x3 * x3, 1.0 * x3),
            |x3| Vector3::new(2.0 * x3, 3.0 * x3 * x3, 1.0),
            |x3| [2.0, 6.0 * x3],
            |x3| x3 - x3 * x3,
            |x3| 1.0 - 2.0 * x3,
        );
        (plate, rod)
    }

    #[test]
    fn interpolation_reproduces_in_space_fields() {
        let disc = setup();
        let (plate, rod) = admissible_fields();
        // W3(0) must match U3(0,0) = 1 * 0 = 0; take W3 = x3 so W3(0) = 0.
        let full = interpolate(&disc, &plate, &rod).unwrap();
        let fp = FePlate::new(&disc, &full);
        let fr = FeRod::new(&disc, &full);
        for &(x1, x2) in &[(-0.63, 0.21), (0.4, -0.9), (0.99, 0.99), (-1.0, -1.0)] {
            assert_relative_eq!(fp.value(x1, x2), plate.value(x1, x2), epsilon = 1e-12);
            assert_relative_eq!(
                fp.gradient(x1, x2),
                plate.gradient(x1, x2),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                fp.hessian3(x1, x2),
                plate.hessian3(x1, x2),
                epsilon = 1e-12
            );
        }
        for &x3 in &[0.0, 0.31, 0.5, 0.97, 1.0] {
            assert_relative_eq!(fr.value(x3), rod.value(x3), epsilon = 1e-12);
            assert_relative_eq!(fr.derivative(x3), rod.derivative(x3), epsilon = 1e-12);
            let [a, b] = fr.second_derivative(x3);
            let [ea, eb] = rod.second_derivative(x3);
            assert_relative_eq!(a, ea, epsilon = 1e-12);
            assert_relative_eq!(b, eb, epsilon = 1e-12);
            assert_relative_eq!(fr.twist(x3), rod.twist(x3), epsilon = 1e-12);
            assert_relative_eq!(fr.twist_rate(x3), rod.twist_rate(x3), epsilon = 1e-12);
        }
    }

    #[test]
    fn junction_violations_are_rejected() {
        let disc = setup();
        let (plate, _) = admissible_fields();
        // W1(0) != 0 breaks the clamped junction condition.
        let bad = AnalyticRod::new(
            |x3| Vector3::new(0.5 + x3 * x3, 0.0, x3),
            |x3| Vector3::new(2.0 * x3, 0.0, 1.0),
            |_| [2.0, 0.0],
            |_| 0.0,
            |_| 0.0,
        );
        let err = interpolate(&disc, &plate, &bad).unwrap_err();
        assert!(matches!(err, Error::Constraint(_)), "got {err:?}");
    }

    #[test]
    fn clamping_violations_are_rejected() {
        let disc = setup();
        let (_, rod) = admissible_fields();
        // Nonzero in-plane displacement on the clamped left edge.
        let bad = AnalyticPlate::new(
            |_, _| Vector3::new(1.0, 0.0, 0.0),
            |_, _| Matrix3x2::zeros(),
            |_, _| Matrix2::zeros(),
        );
        let err = interpolate(&disc, &bad, &rod).unwrap_err();
        assert!(matches!(err, Error::Constraint(_)), "got {err:?}");
    }

    #[test]
    fn stretch_continuity_is_aliased_to_plate_deflection() {
        let disc = setup();
        // W3(0) and U3 at the junction node are one reduced dof: a round
        // trip through the reduced space overwrites W3(0) with the plate
        // value, it does not keep two copies.
        let l = &disc.layout;
        let mut full = DVector::zeros(l.n_full);
        full[l.u3(disc.plate.junction_node(), 0)] = 0.18;
        full[l.w3(0)] = 0.18 + 5e-10;
        let expanded = disc.dofs.expand(&disc.dofs.restrict(&full));
        assert_eq!(expanded[l.w3(0)], 0.18);
    }

    #[test]
    fn fe_fields_satisfy_junction_conditions() {
        let disc = setup();
        let (plate, rod) = admissible_fields();
        let full = interpolate(&disc, &plate, &rod).unwrap();
        let fp = FePlate::new(&disc, &full);
        let fr = FeRod::new(&disc, &full);
        let res = crate::limit::junction_residual(&fp, &fr);
        assert!(res < 1e-14, "junction residual {res:.3e}");
    }
}
