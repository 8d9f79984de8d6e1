//! 3D verification bridge between the full St Venant–Kirchhoff structure and
//! the reduced plate/rod model.
//!
//! The reduced model in [`crate::limit`] describes the asymptotic behaviour of
//! a genuinely three-dimensional body: the plate `omega x (-delta, delta)`
//! with the rod `D(O, eps) x (delta, L)` standing on it, joined through the
//! cylinder `D(O, eps) x (-delta, delta)`. This module rebuilds that body.
//! Given a limit triple `(U, W, Q3)` it constructs a family of *recovery
//! deformations* `v_delta` of the 3D structure,
//!
//! ```text
//! plate:  v_a = x_a + delta^(k-1) (U_a - (x3/delta) d_a U3 + delta ubar_a)
//!         v_3 = x3  + delta^(k-2) (U3 + delta^2 ubar_3)
//! rod:    v_a = x_a + delta^(k-1) (U_a - (x3/delta) d_a U3)
//!               + eps^(k'-2) (W_a -+ x_(3-a) Q3 + eps^2 wbar_a)
//!         v_3 = x3  + delta^(k-2) U3
//!               + eps^(k'-1) ([W3 - U3(0,0)] - X1 W1' - X2 W2' + eps wbar_3)
//! ```
//!
//! where `X_a = x_a / eps` are disc coordinates and `ubar`, `wbar` are
//! through-thickness / cross-section warpings. The fields entering the
//! formulas are *mollified*: multiplied by a `C^2` cutoff so that the axis
//! fields vanish (and `W3` freezes to `U3(0,0)`) on `[-1/n, 1/n]` and the
//! warpings vanish on a neighbourhood of the junction and of the plate
//! boundary. On the junction cylinder both expressions then collapse to the
//! plate Kirchhoff–Love part, so the deformation is single-valued.
//!
//! Two checks tie the 3D body to the reduced model:
//!
//! * the rescaled energy `J_delta(v_delta) / delta^(2k-1)` converges, as
//!   `delta -> 0` at fixed `n`, to the limit energy of the mollified triple
//!   (computed here with the warpings kept explicit, not eliminated);
//! * the rescaled Green–St Venant tensors
//!   `(1/(2 delta^(k-1))) ((grad v)^T grad v - I)` on the reference plate and
//!   `(1/(2 eps^(k'-1))) (...)` on the reference rod converge in `L^2` to
//!   explicit limit tensors assembled from the mollified fields.
//!
//! Two terms deserve a comment. First, in the coupled (Von Kármán) regime
//! the rescaled thickness stretch of a Kirchhoff–Love deformation is not the
//! warping rate alone: the rotation column contributes its square, so
//! `E_33 = |grad U3|^2 / 2 + d ubar_3 / d X3`. The limit tensor carries the
//! rotation term explicitly, and the optimal warping subtracts
//! `X3 |grad U3|^2 / 2` (equivalently, the deformation follows the
//! *normalised* director), so that in the bulk the thickness stretch relaxes
//! to the trace-optimal value and the energy density to the reduced one.
//! Second, inside the rod the plate extension
//! `-delta^(k-2) x3 d_a U3(x1, x2)` varies across the cross-section, and the
//! rescaled rod tensor picks up its linearisation
//! `-x3 [X . grad] d_a U3(0,0)`. The rod warping used here therefore carries
//! the compensating term `+ x3 (H(0,0) X)_a` (with `H` the Hessian of `U3` at
//! the origin), so that away from the junction the effective cross-section
//! warping is exactly the energy-minimising one and the limit energy of the
//! family agrees with the reduced functional as `n -> infinity`.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limit::{
    junction_residual, load_functional, plate_warping, plate_warping_rate, rod_warping,
    rod_warping_gradient, Materials, PlateField, PlateState, RodField, RodState,
};
use crate::model::{
    body_force, derive_regime, derived_moduli, quadratic_form, svk_density, ForceData, Geometry,
    ScalingRegime,
};
use crate::quadrature::{Rule1d, Rule2d};

/// Step used for the few deformation-gradient entries that are differenced
/// numerically (in-plane rates of the plate warping, axial rate of the rod
/// warping). Those entries are suppressed by at least one extra power of
/// `delta` or `eps` in the gradient, so the difference error is far below
/// quadrature accuracy.
const FD_STEP: f64 = 1e-6;

/// `C^2` ramp rising from 0 on `(-inf, 1/n]` to 1 on `[2/n, inf)` through the
/// quintic smoothstep `6u^5 - 15u^4 + 10u^3`.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    n: f64,
}

impl Cutoff {
    pub fn new(n: usize) -> Cutoff {
        Cutoff { n: n as f64 }
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = self.n * t - 1.0;
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            ((6.0 * u - 15.0) * u + 10.0) * u * u * u
        }
    }

    /// `d/dt` of [`Cutoff::value`].
    pub fn rate(&self, t: f64) -> f64 {
        let u = self.n * t - 1.0;
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            self.n * 30.0 * u * u * (u - 1.0) * (u - 1.0)
        }
    }

    /// `d^2/dt^2` of [`Cutoff::value`].
    pub fn curvature(&self, t: f64) -> f64 {
        let u = self.n * t - 1.0;
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            self.n * self.n * 60.0 * u * (2.0 * u - 1.0) * (u - 1.0)
        }
    }
}

/// Which warpings enter the recovery deformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpingChoice {
    /// No warpings: the deformation is Kirchhoff–Love in the plate and
    /// Bernoulli–Navier plus rotation in the rod.
    Zero,
    /// The closed-form energy-minimising warpings of the limit model
    /// (plus the junction-curvature compensation in the rod).
    Optimal,
}

/// A limit triple together with its mollified companions: the axis fields
/// are cut off near the junction (`W^(n) = 0`, `Q3^(n) = 0`,
/// `W3^(n) = U3(0,0)` on `[0, 1/n]`), the plate warping is cut off near the
/// junction disc and near the plate boundary, and the rod warping is cut off
/// for `x3 <= 1/n`. The mid-surface field `U` is kept as given (it must
/// already be clamped on `gamma_0`).
pub struct MollifiedTriple<'a> {
    plate: &'a dyn PlateField,
    rod: &'a dyn RodField,
    geom: &'a Geometry,
    pub mats: Materials,
    pub vk_plate: bool,
    pub vk_rod: bool,
    pub warpings: WarpingChoice,
    pub n: usize,
    cut: Cutoff,
    u3_origin: f64,
    h_origin: Matrix2<f64>,
}

impl<'a> MollifiedTriple<'a> {
    /// Build the mollified companions of an admissible triple. Fails if
    /// `n < 2` or if the raw triple violates the junction conditions (the
    /// mollified fields always satisfy them, so they could not converge to
    /// a non-admissible input).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        plate: &'a dyn PlateField,
        rod: &'a dyn RodField,
        geom: &'a Geometry,
        mats: Materials,
        vk_plate: bool,
        vk_rod: bool,
        warpings: WarpingChoice,
        n: usize,
    ) -> Result<MollifiedTriple<'a>> {
        if n < 2 {
            return Err(Error::Domain(format!(
                "mollification index must be at least 2, got {n}"
            )));
        }
        let res = junction_residual(plate, rod);
        let scale = 1.0
            + plate.value(0.0, 0.0).norm()
            + rod.value(0.0).norm()
            + rod.derivative(0.0).norm();
        if res > 1e-10 * scale {
            return Err(Error::Constraint(format!(
                "triple violates the junction conditions (residual {res:.3e}); \
                 its mollified companions would not converge to it"
            )));
        }
        Ok(MollifiedTriple {
            plate,
            rod,
            geom,
            mats,
            vk_plate,
            vk_rod,
            warpings,
            n,
            cut: Cutoff::new(n),
            u3_origin: plate.value(0.0, 0.0)[2],
            h_origin: plate.hessian3(0.0, 0.0),
        })
    }

    /// The (unmodified) mid-surface field.
    pub fn plate_field(&self) -> &dyn PlateField {
        self.plate
    }

    /// The mollified axis fields as a [`RodField`].
    pub fn rod_field(&self) -> MollifiedRod<'_> {
        MollifiedRod { t: self }
    }

    /// In-plane cutoff of the plate warping: vanishes on the junction disc
    /// `r <= 1/n` and within distance `1/n` of the plate boundary.
    pub fn plate_cut(&self, x1: f64, x2: f64) -> f64 {
        let g = self.geom;
        self.cut.value((x1 * x1 + x2 * x2).sqrt())
            * self.cut.value(x1 + g.a)
            * self.cut.value(g.b - x1)
            * self.cut.value(x2 + g.c)
            * self.cut.value(g.d - x2)
    }

    /// `|grad U3|^2` when the regime couples bending and membrane effects
    /// (the square of the mid-surface rotation), zero otherwise.
    fn plate_slope_sq(&self, x1: f64, x2: f64) -> f64 {
        if self.vk_plate {
            let g = self.plate.gradient(x1, x2);
            g[(2, 0)] * g[(2, 0)] + g[(2, 1)] * g[(2, 1)]
        } else {
            0.0
        }
    }

    /// Mollified plate warping `ubar_3^(n)(x1, x2, X3)` (the in-plane
    /// components of the energy-minimising warping vanish identically). In
    /// the coupled regime it carries the director normalisation
    /// `-X3 |grad U3|^2 / 2` on top of the trace-relaxation profile, so that
    /// the thickness stretch of the recovered deformation is the
    /// energy-minimising one (see [`MollifiedTriple::plate_limit_tensor`]).
    pub fn plate_warping3(&self, x1: f64, x2: f64, big_x3: f64) -> f64 {
        match self.warpings {
            WarpingChoice::Zero => 0.0,
            WarpingChoice::Optimal => {
                let (_, nu) = derived_moduli(self.mats.plate);
                let s = PlateState::at(self.plate, x1, x2, self.vk_plate);
                let w = plate_warping(nu, &s, big_x3)
                    - 0.5 * big_x3 * self.plate_slope_sq(x1, x2);
                self.plate_cut(x1, x2) * w
            }
        }
    }

    /// `d ubar_3^(n) / d X3`.
    pub fn plate_warping3_rate(&self, x1: f64, x2: f64, big_x3: f64) -> f64 {
        match self.warpings {
            WarpingChoice::Zero => 0.0,
            WarpingChoice::Optimal => {
                let (_, nu) = derived_moduli(self.mats.plate);
                let s = PlateState::at(self.plate, x1, x2, self.vk_plate);
                let r = plate_warping_rate(nu, &s, big_x3) - 0.5 * self.plate_slope_sq(x1, x2);
                self.plate_cut(x1, x2) * r
            }
        }
    }

    /// Junction-curvature compensation `x3 (H(0,0) X)_a e_a` carried by the
    /// rod warping (see the module docs).
    fn rod_compensation(&self, big_x1: f64, big_x2: f64, x3: f64) -> Vector3<f64> {
        let h = &self.h_origin;
        Vector3::new(
            x3 * (h[(0, 0)] * big_x1 + h[(0, 1)] * big_x2),
            x3 * (h[(0, 1)] * big_x1 + h[(1, 1)] * big_x2),
            0.0,
        )
    }

    /// Mollified rod warping `wbar^(n)(X1, X2, x3)`.
    pub fn rod_warping(&self, big_x1: f64, big_x2: f64, x3: f64) -> Vector3<f64> {
        match self.warpings {
            WarpingChoice::Zero => Vector3::zeros(),
            WarpingChoice::Optimal => {
                let (_, nu) = derived_moduli(self.mats.rod);
                let s = RodState::at(&self.rod_field(), x3, self.vk_rod);
                self.cut.value(x3)
                    * (rod_warping(nu, &s, big_x1, big_x2)
                        + self.rod_compensation(big_x1, big_x2, x3))
            }
        }
    }

    /// Cross-section gradient `d wbar^(n)_i / d X_a` (3x2).
    pub fn rod_warping_section_gradient(
        &self,
        big_x1: f64,
        big_x2: f64,
        x3: f64,
    ) -> Matrix3x2<f64> {
        match self.warpings {
            WarpingChoice::Zero => Matrix3x2::zeros(),
            WarpingChoice::Optimal => {
                let (_, nu) = derived_moduli(self.mats.rod);
                let s = RodState::at(&self.rod_field(), x3, self.vk_rod);
                let mut g = rod_warping_gradient(nu, &s, big_x1, big_x2);
                let h = &self.h_origin;
                g[(0, 0)] += x3 * h[(0, 0)];
                g[(0, 1)] += x3 * h[(0, 1)];
                g[(1, 0)] += x3 * h[(0, 1)];
                g[(1, 1)] += x3 * h[(1, 1)];
                self.cut.value(x3) * g
            }
        }
    }

    /// Limit plate strain tensor on the reference plate `omega x (-1, 1)`:
    /// in-plane `-X3 H + Z`, thickness entry `|grad U3|^2 / 2` (the square of
    /// the Kirchhoff–Love rotation, present only in the coupled regime) plus
    /// `d ubar_3^(n) / d X3`. The in-plane warping components vanish, so
    /// there is no shear; where the warping cutoff equals one, the thickness
    /// entry reduces to the trace-optimal value `-nu/(1-nu) tr(-X3 H + Z)`.
    pub fn plate_limit_tensor(&self, x1: f64, x2: f64, big_x3: f64) -> Matrix3<f64> {
        let s = PlateState::at(self.plate, x1, x2, self.vk_plate);
        let mut e = Matrix3::zeros();
        for a in 0..2 {
            for b in 0..2 {
                e[(a, b)] = -big_x3 * s.hess[(a, b)] + s.membrane[(a, b)];
            }
        }
        e[(2, 2)] =
            0.5 * self.plate_slope_sq(x1, x2) + self.plate_warping3_rate(x1, x2, big_x3);
        e
    }

    /// Limit rod strain tensor on the reference rod `D x (0, L)`, assembled
    /// from the mollified axis fields, the effective cross-section warping
    /// `chi wbar - (1 - chi) x3 (H(0,0) X)` and the quadratic correction `F`.
    pub fn rod_limit_tensor(&self, big_x1: f64, big_x2: f64, x3: f64) -> Matrix3<f64> {
        let s = RodState::at(&self.rod_field(), x3, self.vk_rod);
        // Section gradient of the effective warping: the compensation term
        // enters with weight (chi - 1) because the plate extension supplies
        // its own copy along the whole rod.
        let mut g = self.rod_warping_section_gradient(big_x1, big_x2, x3);
        let h = &self.h_origin;
        g[(0, 0)] -= x3 * h[(0, 0)];
        g[(0, 1)] -= x3 * h[(0, 1)];
        g[(1, 0)] -= x3 * h[(0, 1)];
        g[(1, 1)] -= x3 * h[(1, 1)];
        let f = &s.correction;
        let mut e = Matrix3::zeros();
        e[(0, 0)] = g[(0, 0)] + f[(0, 0)];
        e[(1, 1)] = g[(1, 1)] + f[(1, 1)];
        e[(0, 1)] = 0.5 * (g[(0, 1)] + g[(1, 0)]) + f[(0, 1)];
        e[(1, 0)] = e[(0, 1)];
        e[(0, 2)] = -0.5 * big_x2 * s.twist_rate + 0.5 * g[(2, 0)] + f[(0, 2)];
        e[(2, 0)] = e[(0, 2)];
        e[(1, 2)] = 0.5 * big_x1 * s.twist_rate + 0.5 * g[(2, 1)] + f[(1, 2)];
        e[(2, 1)] = e[(1, 2)];
        e[(2, 2)] = s.stretch + f[(2, 2)] - big_x1 * s.bend[0] - big_x2 * s.bend[1];
        e
    }

    /// Limit energy of the mollified triple with the warpings kept explicit:
    /// `int_Omega Q(2 E_p^(n)) + int_B Q(2 E_r^(n)) - L(U, W^(n), Q3^(n))`.
    /// This is the value the rescaled 3D energy of the recovery family
    /// converges to as `delta -> 0` at fixed `n`.
    pub fn limit_energy(&self, forces: &ForceData, res: &BridgeResolution) -> f64 {
        let g = self.geom;
        let plate_rule = Rule2d::composite_tensor(
            res.plate_gauss,
            -g.a,
            g.b,
            -g.c,
            g.d,
            res.plate_cells,
            res.plate_cells,
        );
        let thick = Rule1d::gauss(res.thickness_points, -1.0, 1.0);
        let plate: f64 = (0..plate_rule.points.len())
            .into_par_iter()
            .map(|i| {
                let [x1, x2] = plate_rule.points[i];
                let mut acc = 0.0;
                for (x3, w3) in thick.nodes.iter().zip(&thick.weights) {
                    let e = 2.0 * self.plate_limit_tensor(x1, x2, *x3);
                    acc += w3
                        * quadratic_form(self.mats.plate, &e)
                            .expect("limit strain tensors are symmetric");
                }
                plate_rule.weights[i] * acc
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let disc = Rule2d::disc(res.disc_radial, res.disc_angular, 1.0);
        let axial = Rule1d::composite_gauss(res.axial_gauss, 0.0, g.rod_length, res.axial_cells);
        let rod: f64 = (0..axial.nodes.len())
            .into_par_iter()
            .map(|k| {
                let x3 = axial.nodes[k];
                let mut acc = 0.0;
                for (p, w) in disc.points.iter().zip(&disc.weights) {
                    let e = 2.0 * self.rod_limit_tensor(p[0], p[1], x3);
                    acc += w
                        * quadratic_form(self.mats.rod, &e)
                            .expect("limit strain tensors are symmetric");
                }
                axial.weights[k] * acc
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let load = load_functional(forces, self.plate, &self.rod_field(), &plate_rule, &axial);
        plate + rod - load
    }
}

/// Mollified axis fields: `W^(n)_a = chi W_a`, `Q3^(n) = chi Q3`,
/// `W3^(n) = U3(0,0) + chi (W3 - U3(0,0))` with the `C^2` cutoff `chi`.
pub struct MollifiedRod<'a> {
    t: &'a MollifiedTriple<'a>,
}

impl RodField for MollifiedRod<'_> {
    fn value(&self, x3: f64) -> Vector3<f64> {
        let c = self.t.cut.value(x3);
        let w = self.t.rod.value(x3);
        let u0 = self.t.u3_origin;
        Vector3::new(c * w[0], c * w[1], u0 + c * (w[2] - u0))
    }

    fn derivative(&self, x3: f64) -> Vector3<f64> {
        let c = self.t.cut.value(x3);
        let dc = self.t.cut.rate(x3);
        let w = self.t.rod.value(x3);
        let dw = self.t.rod.derivative(x3);
        let u0 = self.t.u3_origin;
        Vector3::new(
            dc * w[0] + c * dw[0],
            dc * w[1] + c * dw[1],
            dc * (w[2] - u0) + c * dw[2],
        )
    }

    fn second_derivative(&self, x3: f64) -> [f64; 2] {
        let c = self.t.cut.value(x3);
        let dc = self.t.cut.rate(x3);
        let ddc = self.t.cut.curvature(x3);
        let w = self.t.rod.value(x3);
        let dw = self.t.rod.derivative(x3);
        let ddw = self.t.rod.second_derivative(x3);
        [
            ddc * w[0] + 2.0 * dc * dw[0] + c * ddw[0],
            ddc * w[1] + 2.0 * dc * dw[1] + c * ddw[1],
        ]
    }

    fn twist(&self, x3: f64) -> f64 {
        self.t.cut.value(x3) * self.t.rod.twist(x3)
    }

    fn twist_rate(&self, x3: f64) -> f64 {
        self.t.cut.rate(x3) * self.t.rod.twist(x3) + self.t.cut.value(x3) * self.t.rod.twist_rate(x3)
    }
}

/// A deformation of the 3D structure: the map `v` and its gradient.
pub trait Deformation: Sync {
    fn value(&self, x: [f64; 3]) -> Vector3<f64>;
    fn gradient(&self, x: [f64; 3]) -> Matrix3<f64>;
}

/// The recovery deformation of a mollified triple at a given regime. Points
/// with `x3 <= delta` evaluate the plate expression, points above it the rod
/// expression; on the junction cylinder the two agree because the mollified
/// fields vanish there.
pub struct RecoveryDeformation<'a> {
    triple: &'a MollifiedTriple<'a>,
    pub regime: ScalingRegime,
}

/// Build the recovery deformation, checking the junction matching conditions
/// `delta <= 1/n` and `eps <= 1/n` (the cutoffs must cover the junction
/// cylinder) and that the regime's coupling flags agree with the ones the
/// triple was mollified with.
pub fn build_recovery_deformation<'a>(
    triple: &'a MollifiedTriple<'a>,
    regime: &ScalingRegime,
) -> Result<RecoveryDeformation<'a>> {
    let n = triple.n as f64;
    let tol = 1.0 + 1e-12;
    if regime.delta * n > tol || regime.epsilon * n > tol {
        return Err(Error::Constraint(format!(
            "junction matching requires delta <= 1/n and eps <= 1/n; \
             got delta = {:.4e}, eps = {:.4e}, n = {}",
            regime.delta, regime.epsilon, triple.n
        )));
    }
    let g = triple.geom;
    if regime.epsilon >= g.a.min(g.b).min(g.c).min(g.d) {
        return Err(Error::Domain(format!(
            "rod radius eps = {:.4e} does not fit inside the mid-surface",
            regime.epsilon
        )));
    }
    if triple.vk_plate != regime.vk_plate() || triple.vk_rod != regime.vk_rod() {
        return Err(Error::Regime(
            "triple was mollified with coupling flags that do not match the regime".into(),
        ));
    }
    Ok(RecoveryDeformation {
        triple,
        regime: *regime,
    })
}

impl RecoveryDeformation<'_> {
    fn plate_map(&self, x: [f64; 3]) -> Vector3<f64> {
        let [x1, x2, x3] = x;
        let r = &self.regime;
        let d = r.delta;
        let dk1 = d.powf(r.kappa - 1.0);
        let dk2 = d.powf(r.kappa - 2.0);
        let t = self.triple;
        let u = t.plate.value(x1, x2);
        let g = t.plate.gradient(x1, x2);
        let ub3 = t.plate_warping3(x1, x2, x3 / d);
        Vector3::new(
            x1 + dk1 * u[0] - dk2 * x3 * g[(2, 0)],
            x2 + dk1 * u[1] - dk2 * x3 * g[(2, 1)],
            x3 + dk2 * u[2] + dk2 * d * d * ub3,
        )
    }

    fn plate_gradient(&self, x: [f64; 3]) -> Matrix3<f64> {
        let [x1, x2, x3] = x;
        let r = &self.regime;
        let d = r.delta;
        let dk1 = d.powf(r.kappa - 1.0);
        let dk2 = d.powf(r.kappa - 2.0);
        let dk = dk1 * d;
        let t = self.triple;
        let g = t.plate.gradient(x1, x2);
        let h = t.plate.hessian3(x1, x2);
        let big_x3 = x3 / d;
        // In-plane rates of the warping by symmetric differences; its
        // transverse rate is analytic.
        let ub_d1 = (t.plate_warping3(x1 + FD_STEP, x2, big_x3)
            - t.plate_warping3(x1 - FD_STEP, x2, big_x3))
            / (2.0 * FD_STEP);
        let ub_d2 = (t.plate_warping3(x1, x2 + FD_STEP, big_x3)
            - t.plate_warping3(x1, x2 - FD_STEP, big_x3))
            / (2.0 * FD_STEP);
        let mut f = Matrix3::identity();
        f[(0, 0)] += dk1 * g[(0, 0)] - dk2 * x3 * h[(0, 0)];
        f[(0, 1)] += dk1 * g[(0, 1)] - dk2 * x3 * h[(0, 1)];
        f[(0, 2)] += -dk2 * g[(2, 0)];
        f[(1, 0)] += dk1 * g[(1, 0)] - dk2 * x3 * h[(0, 1)];
        f[(1, 1)] += dk1 * g[(1, 1)] - dk2 * x3 * h[(1, 1)];
        f[(1, 2)] += -dk2 * g[(2, 1)];
        f[(2, 0)] += dk2 * g[(2, 0)] + dk * ub_d1;
        f[(2, 1)] += dk2 * g[(2, 1)] + dk * ub_d2;
        f[(2, 2)] += dk1 * t.plate_warping3_rate(x1, x2, big_x3);
        f
    }

    fn rod_map(&self, x: [f64; 3]) -> Vector3<f64> {
        let [x1, x2, x3] = x;
        let r = &self.regime;
        let (d, eps) = (r.delta, r.epsilon);
        let dk1 = d.powf(r.kappa - 1.0);
        let dk2 = d.powf(r.kappa - 2.0);
        let ek2 = eps.powf(r.kappa_prime - 2.0);
        let ek1 = ek2 * eps;
        let t = self.triple;
        let u = t.plate.value(x1, x2);
        let g = t.plate.gradient(x1, x2);
        let rf = t.rod_field();
        let w = rf.value(x3);
        let dw = rf.derivative(x3);
        let q3 = rf.twist(x3);
        let (bx1, bx2) = (x1 / eps, x2 / eps);
        let wb = t.rod_warping(bx1, bx2, x3);
        Vector3::new(
            x1 + dk1 * (u[0] - x3 / d * g[(2, 0)]) + ek2 * (w[0] - x2 * q3 + eps * eps * wb[0]),
            x2 + dk1 * (u[1] - x3 / d * g[(2, 1)]) + ek2 * (w[1] + x1 * q3 + eps * eps * wb[1]),
            x3 + dk2 * u[2]
                + ek1 * ((w[2] - t.u3_origin) - bx1 * dw[0] - bx2 * dw[1] + eps * wb[2]),
        )
    }

    fn rod_gradient(&self, x: [f64; 3]) -> Matrix3<f64> {
        let [x1, x2, x3] = x;
        let r = &self.regime;
        let (d, eps) = (r.delta, r.epsilon);
        let dk1 = d.powf(r.kappa - 1.0);
        let dk2 = d.powf(r.kappa - 2.0);
        let ek2 = eps.powf(r.kappa_prime - 2.0);
        let ek1 = ek2 * eps;
        let ekp = ek1 * eps;
        let t = self.triple;
        let g = t.plate.gradient(x1, x2);
        let h = t.plate.hessian3(x1, x2);
        let rf = t.rod_field();
        let dw = rf.derivative(x3);
        let ddw = rf.second_derivative(x3);
        let q3 = rf.twist(x3);
        let dq3 = rf.twist_rate(x3);
        let (bx1, bx2) = (x1 / eps, x2 / eps);
        let swg = t.rod_warping_section_gradient(bx1, bx2, x3);
        // Axial rate of the warping by symmetric differences.
        let wb_d3 = (t.rod_warping(bx1, bx2, x3 + FD_STEP)
            - t.rod_warping(bx1, bx2, x3 - FD_STEP))
            / (2.0 * FD_STEP);
        let mut f = Matrix3::identity();
        f[(0, 0)] += dk1 * (g[(0, 0)] - x3 / d * h[(0, 0)]) + ek1 * swg[(0, 0)];
        f[(0, 1)] += dk1 * (g[(0, 1)] - x3 / d * h[(0, 1)]) - ek2 * q3 + ek1 * swg[(0, 1)];
        f[(0, 2)] += -dk2 * g[(2, 0)] + ek2 * (dw[0] - x2 * dq3) + ekp * wb_d3[0];
        f[(1, 0)] += dk1 * (g[(1, 0)] - x3 / d * h[(0, 1)]) + ek2 * q3 + ek1 * swg[(1, 0)];
        f[(1, 1)] += dk1 * (g[(1, 1)] - x3 / d * h[(1, 1)]) + ek1 * swg[(1, 1)];
        f[(1, 2)] += -dk2 * g[(2, 1)] + ek2 * (dw[1] + x1 * dq3) + ekp * wb_d3[1];
        f[(2, 0)] += dk2 * g[(2, 0)] - ek2 * dw[0] + ek1 * swg[(2, 0)];
        f[(2, 1)] += dk2 * g[(2, 1)] - ek2 * dw[1] + ek1 * swg[(2, 1)];
        f[(2, 2)] += ek1 * (dw[2] - bx1 * ddw[0] - bx2 * ddw[1] + eps * wb_d3[2]);
        f
    }

    /// Distance between the plate-side and rod-side expressions at a point
    /// (meaningful on the junction cylinder, where both are valid).
    pub fn junction_gap(&self, x: [f64; 3]) -> f64 {
        (self.plate_map(x) - self.rod_map(x)).norm()
    }

    /// Rescaled Green–St Venant tensor of the plate at a reference point
    /// `(x1, x2, X3)` of `omega x (-1, 1)`.
    pub fn rescaled_plate_tensor(&self, x1: f64, x2: f64, big_x3: f64) -> Matrix3<f64> {
        let r = &self.regime;
        let f = self.gradient([x1, x2, r.delta * big_x3]);
        (f.transpose() * f - Matrix3::identity()) / (2.0 * r.delta.powf(r.kappa - 1.0))
    }

    /// Rescaled Green–St Venant tensor of the rod at a reference point
    /// `(X1, X2, x3)` of `D x (0, L)`.
    pub fn rescaled_rod_tensor(&self, big_x1: f64, big_x2: f64, x3: f64) -> Matrix3<f64> {
        let r = &self.regime;
        let f = self.gradient([r.epsilon * big_x1, r.epsilon * big_x2, x3]);
        (f.transpose() * f - Matrix3::identity())
            / (2.0 * r.epsilon.powf(r.kappa_prime - 1.0))
    }

    /// `L^2` distances between the rescaled Green–St Venant tensors and the
    /// limit tensors of the mollified triple, on the reference plate and rod.
    pub fn gsv_errors(&self, res: &BridgeResolution) -> (f64, f64) {
        let t = self.triple;
        let g = t.geom;
        let plate_rule = Rule2d::composite_tensor(
            res.plate_gauss,
            -g.a,
            g.b,
            -g.c,
            g.d,
            res.plate_cells,
            res.plate_cells,
        );
        let thick = Rule1d::gauss(res.thickness_points, -1.0, 1.0);
        let plate: f64 = (0..plate_rule.points.len())
            .into_par_iter()
            .map(|i| {
                let [x1, x2] = plate_rule.points[i];
                let mut acc = 0.0;
                for (x3, w3) in thick.nodes.iter().zip(&thick.weights) {
                    let diff =
                        self.rescaled_plate_tensor(x1, x2, *x3) - t.plate_limit_tensor(x1, x2, *x3);
                    acc += w3 * diff.norm_squared();
                }
                plate_rule.weights[i] * acc
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let disc = Rule2d::disc(res.disc_radial, res.disc_angular, 1.0);
        let axial = Rule1d::composite_gauss(res.axial_gauss, 0.0, g.rod_length, res.axial_cells);
        let rod: f64 = (0..axial.nodes.len())
            .into_par_iter()
            .map(|k| {
                let x3 = axial.nodes[k];
                let mut acc = 0.0;
                for (p, w) in disc.points.iter().zip(&disc.weights) {
                    let diff =
                        self.rescaled_rod_tensor(p[0], p[1], x3) - t.rod_limit_tensor(p[0], p[1], x3);
                    acc += w * diff.norm_squared();
                }
                axial.weights[k] * acc
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        (plate.max(0.0).sqrt(), rod.max(0.0).sqrt())
    }
}

impl Deformation for RecoveryDeformation<'_> {
    fn value(&self, x: [f64; 3]) -> Vector3<f64> {
        if x[2] <= self.regime.delta {
            self.plate_map(x)
        } else {
            self.rod_map(x)
        }
    }

    fn gradient(&self, x: [f64; 3]) -> Matrix3<f64> {
        if x[2] <= self.regime.delta {
            self.plate_gradient(x)
        } else {
            self.rod_gradient(x)
        }
    }
}

/// Quadrature resolution of the 3D bridge. The plate thickness and the rod
/// cross-section are parametrised by reference coordinates, so the point
/// counts below resolve the physical `delta`- and `eps`-scale variation
/// independently of the regime; the defaults keep the relative quadrature
/// error of a study below 1e-6.
#[derive(Debug, Clone, Copy)]
pub struct BridgeResolution {
    /// Composite cells per in-plane axis of the mid-surface.
    pub plate_cells: usize,
    /// Gauss points per cell per in-plane axis.
    pub plate_gauss: usize,
    /// Gauss points through the (reference) plate thickness.
    pub thickness_points: usize,
    /// Radial Gauss points of the cross-section rule.
    pub disc_radial: usize,
    /// Angular points of the cross-section rule.
    pub disc_angular: usize,
    /// Composite cells along the rod axis.
    pub axial_cells: usize,
    /// Gauss points per axial cell.
    pub axial_gauss: usize,
}

impl Default for BridgeResolution {
    fn default() -> Self {
        BridgeResolution {
            plate_cells: 16,
            plate_gauss: 3,
            thickness_points: 6,
            disc_radial: 6,
            disc_angular: 12,
            axial_cells: 24,
            axial_gauss: 4,
        }
    }
}

/// Strain energy and load work of a 3D deformation.
#[derive(Debug, Clone, Copy)]
pub struct Energy3d {
    /// `int_S What_eps(grad v)` (`+inf` when some quadrature point has
    /// `det grad v <= 0`).
    pub strain: f64,
    /// `int_S f_delta . (v - id)`.
    pub work: f64,
}

impl Energy3d {
    /// Orientation is preserved at every quadrature point.
    pub fn admissible(&self) -> bool {
        self.strain.is_finite()
    }

    /// `J_delta(v) = strain - work`, `+inf` for non-admissible deformations.
    pub fn total(&self) -> f64 {
        if self.admissible() {
            self.strain - self.work
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluate the 3D energy of a deformation of the physical structure: the
/// plate slab `omega x (-delta, delta)` (junction cylinder included) carries
/// the plate material, the rod `D(O, eps) x (delta, L)` carries the rod
/// material weighted by `q_eps^2`. The body force vanishes on the junction
/// band of the rod, so the load integral starts at `x3 = delta` there.
pub fn energy_3d(
    v: &dyn Deformation,
    mats: Materials,
    regime: &ScalingRegime,
    geom: &Geometry,
    forces: &ForceData,
    res: &BridgeResolution,
) -> Result<Energy3d> {
    let plate_rule = Rule2d::composite_tensor(
        res.plate_gauss,
        -geom.a,
        geom.b,
        -geom.c,
        geom.d,
        res.plate_cells,
        res.plate_cells,
    );
    let thick = Rule1d::gauss(res.thickness_points, -regime.delta, regime.delta);
    let plate: Vec<(f64, f64)> = (0..plate_rule.points.len())
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let [x1, x2] = plate_rule.points[i];
            let w = plate_rule.weights[i];
            let mut strain = 0.0;
            let mut work = 0.0;
            for (x3, w3) in thick.nodes.iter().zip(&thick.weights) {
                let x = [x1, x2, *x3];
                strain += w * w3 * svk_density(mats.plate, &v.gradient(x));
                let bf = body_force(regime, geom, forces, x)?;
                if bf != Vector3::zeros() {
                    let u = v.value(x) - Vector3::new(x1, x2, *x3);
                    work += w * w3 * bf.dot(&u);
                }
            }
            Ok((strain, work))
        })
        .collect::<Result<_>>()?;
    let disc = Rule2d::disc(res.disc_radial, res.disc_angular, regime.epsilon);
    let axial = Rule1d::composite_gauss(
        res.axial_gauss,
        regime.delta,
        geom.rod_length,
        res.axial_cells,
    );
    let q2 = regime.q_eps * regime.q_eps;
    let rod: Vec<(f64, f64)> = (0..axial.nodes.len())
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let x3 = axial.nodes[k];
            let w3 = axial.weights[k];
            let mut strain = 0.0;
            let mut work = 0.0;
            for (p, w) in disc.points.iter().zip(&disc.weights) {
                let x = [p[0], p[1], x3];
                strain += w * w3 * q2 * svk_density(mats.rod, &v.gradient(x));
                let bf = body_force(regime, geom, forces, x)?;
                if bf != Vector3::zeros() {
                    let u = v.value(x) - Vector3::new(p[0], p[1], x3);
                    work += w * w3 * bf.dot(&u);
                }
            }
            Ok((strain, work))
        })
        .collect::<Result<_>>()?;
    let mut strain = 0.0;
    let mut work = 0.0;
    for (s, l) in plate.iter().chain(rod.iter()) {
        strain += s;
        work += l;
    }
    if strain.is_nan() || !work.is_finite() {
        return Err(Error::Numeric(
            "3D energy quadrature produced a non-finite value".into(),
        ));
    }
    Ok(Energy3d { strain, work })
}

/// One regime of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub epsilon: f64,
    pub q_eps: f64,
    /// `J_delta(v_delta) / delta^(2 kappa - 1)`.
    pub j3d_rescaled: f64,
    /// Limit energy of the mollified triple (the same for every row).
    pub limit_j3: f64,
    /// `|j3d_rescaled - limit_j3|`.
    pub gap: f64,
    /// `L^2(Omega)` distance of the rescaled plate tensor from its limit.
    pub gsv_plate_err: f64,
    /// `L^2(B)` distance of the rescaled rod tensor from its limit.
    pub gsv_rod_err: f64,
}

/// Result of a convergence study: one row per usable `delta`, plus warnings
/// for the rows that had to be skipped.
pub struct StudyOutcome {
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
}

/// Run the recovery family through a list of thicknesses: for each `delta`
/// derive the regime (`eps = delta^(1/theta)`), build the recovery
/// deformation, and record the rescaled 3D energy, its gap to the limit
/// energy of the mollified triple, and the `L^2` errors of the rescaled
/// strain tensors. Thicknesses that violate the junction matching condition
/// and deformations that lose admissibility are skipped with a warning.
pub fn convergence_study(
    triple: &MollifiedTriple<'_>,
    forces: &ForceData,
    kappa: f64,
    kappa_prime: f64,
    deltas: &[f64],
    res: &BridgeResolution,
) -> Result<StudyOutcome> {
    if kappa <= 2.0 {
        return Err(Error::Regime(format!("kappa must exceed 2, got {kappa}")));
    }
    let limit_j3 = triple.limit_energy(forces, res);
    let theta = (kappa_prime - 1.0) / (kappa - 2.0);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &delta in deltas {
        if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
            warnings.push(format!("delta = {delta} is not in (0, 1); row skipped"));
            continue;
        }
        let eps = delta.powf(1.0 / theta);
        let regime = derive_regime(kappa, kappa_prime, eps)?;
        let def = match build_recovery_deformation(triple, &regime) {
            Ok(d) => d,
            Err(e) => {
                warnings.push(format!("delta = {delta}: {e}; row skipped"));
                continue;
            }
        };
        let energy = energy_3d(&def, triple.mats, &regime, triple.geom, forces, res)?;
        if !energy.admissible() {
            warnings.push(format!(
                "delta = {delta}: recovery deformation loses orientation; row skipped"
            ));
            continue;
        }
        let j3d = energy.total() / regime.energy_scale();
        let (gsv_plate_err, gsv_rod_err) = def.gsv_errors(res);
        rows.push(ConvergenceRow {
            delta: regime.delta,
            epsilon: regime.epsilon,
            q_eps: regime.q_eps,
            j3d_rescaled: j3d,
            limit_j3,
            gap: (j3d - limit_j3).abs(),
            gsv_plate_err,
            gsv_rod_err,
        });
    }
    Ok(StudyOutcome { rows, warnings })
}
