//! The coupled plate/rod limit energy.
//!
//! The limit state is a triple: a mid-surface displacement
//! `U : omega -> R^3`, a rod axis displacement `W : (0,L) -> R^3` and a
//! rod twist `Q3 : (0,L) -> R`, subject to the junction conditions
//!
//! ```text
//! W_1(0) = W_2(0) = 0,   W_3(0) = U_3(0,0),
//! W_1'(0) = W_2'(0) = 0,  Q3(0) = 0,
//! ```
//!
//! and clamping of `U` (values and the gradient of `U_3`) on `gamma0`.
//!
//! The total energy is `J(U, W, Q3) = J_p(U) + J_r(W, Q3) - L(U, W, Q3)`
//! with the reduced plate density (per unit mid-surface area)
//!
//! ```text
//! psi_p = E/(3(1-nu^2)) [ (1-nu) |H|^2 + nu (tr H)^2 ]
//!       +  E/(1-nu^2)   [ (1-nu) |Z|^2 + nu (tr Z)^2 ],
//! ```
//!
//! where `H` is the Hessian of `U_3` and `Z` the membrane strain
//! (`Z_ab = gamma_ab(U) + 1/2 d_a U_3 d_b U_3` in the coupled regime
//! `kappa = 3`, the symmetric gradient alone otherwise), and the reduced rod
//! density (per unit axis length, unit disc section)
//!
//! ```text
//! psi_r = E pi/8 (W_1''^2 + W_2''^2) + E pi/2 (W_3' + F_33)^2 + mu pi/4 Q3'^2,
//! ```
//!
//! with the quadratic correction `F = 1/2 (|Q|^2 I - Q x Q)`,
//! `Q = (-W_2', W_1', Q3)`, present only in the coupled regime
//! `kappa' = 3`. Both densities are the exact minimum of the
//! three-dimensional quadratic density `Q(2 E)` over the cross-section
//! warping, a fact this module also verifies numerically
//! ([`plate_reduced_density_numeric`], [`rod_reduced_density_numeric`]).

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Matrix3x2, Vector3};

use crate::error::{Error, Result};
use crate::model::{derived_moduli, quadratic_form, ForceData, LameParams};
use crate::quadrature::{Rule1d, Rule2d};

/// Plate and rod may be made of different materials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Materials {
    pub plate: LameParams,
    pub rod: LameParams,
}

/// A mid-surface displacement field with the derivatives the energy needs.
/// (`Sync` so that quadrature loops over fields can run in parallel.)
pub trait PlateField: Sync {
    /// `U(x1, x2)`.
    fn value(&self, x1: f64, x2: f64) -> Vector3<f64>;
    /// `dU_i / dx_a`, a 3x2 matrix (row = component, column = direction).
    fn gradient(&self, x1: f64, x2: f64) -> Matrix3x2<f64>;
    /// Hessian of the transverse component `U_3`.
    fn hessian3(&self, x1: f64, x2: f64) -> Matrix2<f64>;
}

/// A rod axis displacement/twist field with the derivatives the energy needs.
/// (`Sync` so that quadrature loops over fields can run in parallel.)
pub trait RodField: Sync {
    /// `W(x3)`.
    fn value(&self, x3: f64) -> Vector3<f64>;
    /// `W'(x3)`.
    fn derivative(&self, x3: f64) -> Vector3<f64>;
    /// `(W_1''(x3), W_2''(x3))`.
    fn second_derivative(&self, x3: f64) -> [f64; 2];
    /// `Q3(x3)`.
    fn twist(&self, x3: f64) -> f64;
    /// `Q3'(x3)`.
    fn twist_rate(&self, x3: f64) -> f64;
}

/// Plate field given by closures (analytic/manufactured states).
pub struct AnalyticPlate {
    value: Box<dyn Fn(f64, f64) -> Vector3<f64> + Send + Sync>,
    gradient: Box<dyn Fn(f64, f64) -> Matrix3x2<f64> + Send + Sync>,
    hessian3: Box<dyn Fn(f64, f64) -> Matrix2<f64> + Send + Sync>,
}

impl AnalyticPlate {
    pub fn new(
        value: impl Fn(f64, f64) -> Vector3<f64> + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> Matrix3x2<f64> + Send + Sync + 'static,
        hessian3: impl Fn(f64, f64) -> Matrix2<f64> + Send + Sync + 'static,
    ) -> Self {
        AnalyticPlate {
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian3: Box::new(hessian3),
        }
    }

    pub fn zero() -> Self {
        AnalyticPlate::new(
            |_, _| Vector3::zeros(),
            |_, _| Matrix3x2::zeros(),
            |_, _| Matrix2::zeros(),
        )
    }
}

impl PlateField for AnalyticPlate {
    fn value(&self, x1: f64, x2: f64) -> Vector3<f64> {
        (self.value)(x1, x2)
    }
    fn gradient(&self, x1: f64, x2: f64) -> Matrix3x2<f64> {
        (self.gradient)(x1, x2)
    }
    fn hessian3(&self, x1: f64, x2: f64) -> Matrix2<f64> {
        (self.hessian3)(x1, x2)
    }
}

/// Rod field given by closures (analytic/manufactured states).
pub struct AnalyticRod {
    value: Box<dyn Fn(f64) -> Vector3<f64> + Send + Sync>,
    derivative: Box<dyn Fn(f64) -> Vector3<f64> + Send + Sync>,
    second_derivative: Box<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    twist: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    twist_rate: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl AnalyticRod {
    pub fn new(
        value: impl Fn(f64) -> Vector3<f64> + Send + Sync + 'static,
        derivative: impl Fn(f64) -> Vector3<f64> + Send + Sync + 'static,
        second_derivative: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static,
        twist: impl Fn(f64) -> f64 + Send + Sync + 'static,
        twist_rate: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AnalyticRod {
            value: Box::new(value),
            derivative: Box::new(derivative),
            second_derivative: Box::new(second_derivative),
            twist: Box::new(twist),
            twist_rate: Box::new(twist_rate),
        }
    }

    pub fn zero() -> Self {
        AnalyticRod::new(
            |_| Vector3::zeros(),
            |_| Vector3::zeros(),
            |_| [0.0; 2],
            |_| 0.0,
            |_| 0.0,
        )
    }
}

impl RodField for AnalyticRod {
    fn value(&self, x3: f64) -> Vector3<f64> {
        (self.value)(x3)
    }
    fn derivative(&self, x3: f64) -> Vector3<f64> {
        (self.derivative)(x3)
    }
    fn second_derivative(&self, x3: f64) -> [f64; 2] {
        (self.second_derivative)(x3)
    }
    fn twist(&self, x3: f64) -> f64 {
        (self.twist)(x3)
    }
    fn twist_rate(&self, x3: f64) -> f64 {
        (self.twist_rate)(x3)
    }
}

/// Membrane strain `Z` of the mid-surface: the in-plane symmetric gradient,
/// plus the quadratic slope term `1/2 d_a U_3 d_b U_3` in the coupled plate
/// regime.
pub fn membrane_strain(vk_plate: bool, grad: &Matrix3x2<f64>) -> Matrix2<f64> {
    let mut z = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            z[(a, b)] = 0.5 * (grad[(a, b)] + grad[(b, a)]);
            if vk_plate {
                z[(a, b)] += 0.5 * grad[(2, a)] * grad[(2, b)];
            }
        }
    }
    z
}

/// The rod rotation vector `Q = (-W_2', W_1', Q3)`.
pub fn rod_rotation(dw: &Vector3<f64>, q3: f64) -> Vector3<f64> {
    Vector3::new(-dw[1], dw[0], q3)
}

/// Quadratic rod correction `F = 1/2 (|Q|^2 I - Q x Q)` in the coupled rod
/// regime, zero otherwise. In particular `F_33 = 1/2 (W_1'^2 + W_2'^2)`.
pub fn rod_correction(vk_rod: bool, dw: &Vector3<f64>, q3: f64) -> Matrix3<f64> {
    if !vk_rod {
        return Matrix3::zeros();
    }
    let q = rod_rotation(dw, q3);
    0.5 * (q.norm_squared() * Matrix3::identity() - q * q.transpose())
}

/// Pointwise plate state entering the reduced density: the Hessian `H` of
/// `U_3` and the membrane strain `Z`.
#[derive(Debug, Clone, Copy)]
pub struct PlateState {
    pub hess: Matrix2<f64>,
    pub membrane: Matrix2<f64>,
}

impl PlateState {
    pub fn at(field: &dyn PlateField, x1: f64, x2: f64, vk_plate: bool) -> PlateState {
        PlateState {
            hess: field.hessian3(x1, x2),
            membrane: membrane_strain(vk_plate, &field.gradient(x1, x2)),
        }
    }
}

/// Pointwise rod state entering the reduced density: curvatures
/// `(W_1'', W_2'')`, stretch `W_3'`, twist rate `Q3'` and the correction `F`.
#[derive(Debug, Clone, Copy)]
pub struct RodState {
    pub bend: [f64; 2],
    pub stretch: f64,
    pub twist_rate: f64,
    pub correction: Matrix3<f64>,
}

impl RodState {
    pub fn at(field: &dyn RodField, x3: f64, vk_rod: bool) -> RodState {
        let dw = field.derivative(x3);
        RodState {
            bend: field.second_derivative(x3),
            stretch: dw[2],
            twist_rate: field.twist_rate(x3),
            correction: rod_correction(vk_rod, &dw, field.twist(x3)),
        }
    }

    /// Axial strain `W_3' + F_33` including the quadratic correction.
    pub fn axial(&self) -> f64 {
        self.stretch + self.correction[(2, 2)]
    }
}

/// `Q(2E)`: the quadratic density evaluated at twice a (symmetric) strain,
/// i.e. `(lambda/2) (tr E)^2 + mu tr(E^2)`.
fn q2(p: LameParams, e: &Matrix3<f64>) -> f64 {
    quadratic_form(p, &(2.0 * e)).expect("strain tensors are symmetric by construction")
}

/// Reduced plate density `psi_p(H, Z)`; see the module docs.
pub fn plate_reduced_density(p: LameParams, s: &PlateState) -> f64 {
    let (e, nu) = derived_moduli(p);
    let cb = e / (3.0 * (1.0 - nu * nu));
    let cm = e / (1.0 - nu * nu);
    let h2 = s.hess.norm_squared();
    let th = s.hess.trace();
    let z2 = s.membrane.norm_squared();
    let tz = s.membrane.trace();
    cb * ((1.0 - nu) * h2 + nu * th * th) + cm * ((1.0 - nu) * z2 + nu * tz * tz)
}

/// Reduced rod density `psi_r`; see the module docs.
pub fn rod_reduced_density(p: LameParams, s: &RodState) -> f64 {
    let (e, _) = derived_moduli(p);
    let ax = s.axial();
    let bend2 = s.bend[0] * s.bend[0] + s.bend[1] * s.bend[1];
    e * std::f64::consts::PI / 8.0 * bend2
        + e * std::f64::consts::PI / 2.0 * ax * ax
        + p.mu * std::f64::consts::PI / 4.0 * s.twist_rate * s.twist_rate
}

/// Optimal through-thickness warping of the plate: the in-plane components
/// vanish and
/// `ubar_3(X3) = nu/(1-nu) [ (X3^2/2 - 1/6) tr H - X3 tr Z ]`
/// (the constant makes the thickness average zero).
pub fn plate_warping(nu: f64, s: &PlateState, x3: f64) -> f64 {
    nu / (1.0 - nu) * ((0.5 * x3 * x3 - 1.0 / 6.0) * s.hess.trace() - x3 * s.membrane.trace())
}

/// `d ubar_3 / d X3` of the optimal plate warping.
pub fn plate_warping_rate(nu: f64, s: &PlateState, x3: f64) -> f64 {
    nu / (1.0 - nu) * (x3 * s.hess.trace() - s.membrane.trace())
}

/// Optimal cross-section warping of the rod at `(X1, X2)` in the unit disc:
///
/// ```text
/// wbar_1 = -nu [ (X2^2-X1^2)/2 a - X1 X2 b + X1 (c + F_33) ] - X1 F_11 - X2 F_12
/// wbar_2 = -nu [ (X1^2-X2^2)/2 b - X1 X2 a + X2 (c + F_33) ] - X1 F_12 - X2 F_22
/// wbar_3 = -2 X1 F_13 - 2 X2 F_23
/// ```
///
/// with `a = W_1''`, `b = W_2''`, `c = W_3'`. Its in-plane strain is the
/// pure Poisson contraction `-nu M_33 I_2 - F_(in-plane)` and its axial
/// gradient cancels the constant shear carried by `F`, which is what makes
/// the reduced density exact.
pub fn rod_warping(nu: f64, s: &RodState, x1: f64, x2: f64) -> Vector3<f64> {
    let [a, b] = s.bend;
    let ax = s.axial();
    let f = &s.correction;
    Vector3::new(
        -nu * (0.5 * (x2 * x2 - x1 * x1) * a - x1 * x2 * b + x1 * ax)
            - x1 * f[(0, 0)]
            - x2 * f[(0, 1)],
        -nu * (0.5 * (x1 * x1 - x2 * x2) * b - x1 * x2 * a + x2 * ax)
            - x1 * f[(0, 1)]
            - x2 * f[(1, 1)],
        -2.0 * x1 * f[(0, 2)] - 2.0 * x2 * f[(1, 2)],
    )
}

/// In-plane gradient `d wbar_i / d X_a` (3x2) of the optimal rod warping.
pub fn rod_warping_gradient(nu: f64, s: &RodState, x1: f64, x2: f64) -> Matrix3x2<f64> {
    let [a, b] = s.bend;
    let ax = s.axial();
    let f = &s.correction;
    let m33 = ax - x1 * a - x2 * b;
    let mut g = Matrix3x2::zeros();
    g[(0, 0)] = -nu * m33 - f[(0, 0)];
    g[(0, 1)] = -nu * (x2 * a - x1 * b) - f[(0, 1)];
    g[(1, 0)] = -nu * (x1 * b - x2 * a) - f[(0, 1)];
    g[(1, 1)] = -nu * m33 - f[(1, 1)];
    g[(2, 0)] = -2.0 * f[(0, 2)];
    g[(2, 1)] = -2.0 * f[(1, 2)];
    g
}

/// Limit plate strain at thickness coordinate `X3 in (-1,1)`, with the
/// optimal warping substituted:
/// in-plane `-X3 H + Z`, zero shear, and the Poisson thickness strain
/// `E_33 = nu/(1-nu) (X3 tr H - tr Z)`.
pub fn plate_limit_strain(nu: f64, s: &PlateState, x3: f64) -> Matrix3<f64> {
    let mut e = Matrix3::zeros();
    for a in 0..2 {
        for b in 0..2 {
            e[(a, b)] = -x3 * s.hess[(a, b)] + s.membrane[(a, b)];
        }
    }
    e[(2, 2)] = plate_warping_rate(nu, s, x3);
    e
}

/// Limit rod strain at `(X1, X2)` in the unit disc, with the optimal warping
/// substituted: `E_33 = M_33 = W_3' + F_33 - X1 W_1'' - X2 W_2''`, torsion
/// shear `(-X2/2, X1/2) Q3'`, and in-plane Poisson contraction `-nu M_33 I`.
pub fn rod_limit_strain(nu: f64, s: &RodState, x1: f64, x2: f64) -> Matrix3<f64> {
    let m33 = s.axial() - x1 * s.bend[0] - x2 * s.bend[1];
    let mut e = Matrix3::zeros();
    e[(0, 0)] = -nu * m33;
    e[(1, 1)] = -nu * m33;
    e[(2, 2)] = m33;
    e[(0, 2)] = -0.5 * x2 * s.twist_rate;
    e[(2, 0)] = e[(0, 2)];
    e[(1, 2)] = 0.5 * x1 * s.twist_rate;
    e[(2, 1)] = e[(1, 2)];
    e
}

/// Through-thickness energy `int_{-1}^{1} Q(2 E) dX3` for an explicit
/// warping rate `X3 -> d ubar / d X3` (all three components).
pub fn plate_thickness_energy(
    p: LameParams,
    s: &PlateState,
    warp_rate: &dyn Fn(f64) -> Vector3<f64>,
    rule: &Rule1d,
) -> f64 {
    rule.integrate(|x3| {
        let dw = warp_rate(x3);
        let mut e = Matrix3::zeros();
        for a in 0..2 {
            for b in 0..2 {
                e[(a, b)] = -x3 * s.hess[(a, b)] + s.membrane[(a, b)];
            }
        }
        e[(0, 2)] = 0.5 * dw[0];
        e[(2, 0)] = e[(0, 2)];
        e[(1, 2)] = 0.5 * dw[1];
        e[(2, 1)] = e[(1, 2)];
        e[(2, 2)] = dw[2];
        q2(p, &e)
    })
}

/// Cross-section energy `int_D Q(2 E) dX` for an explicit warping gradient
/// `(X1, X2) -> d wbar_i / d X_a` over the unit disc.
pub fn rod_section_energy(
    p: LameParams,
    s: &RodState,
    warp_grad: &dyn Fn(f64, f64) -> Matrix3x2<f64>,
    rule: &Rule2d,
) -> f64 {
    let f = &s.correction;
    rule.integrate(|x1, x2| {
        let g = warp_grad(x1, x2);
        let mut e = Matrix3::zeros();
        e[(0, 0)] = g[(0, 0)] + f[(0, 0)];
        e[(1, 1)] = g[(1, 1)] + f[(1, 1)];
        e[(0, 1)] = 0.5 * (g[(0, 1)] + g[(1, 0)]) + f[(0, 1)];
        e[(1, 0)] = e[(0, 1)];
        e[(0, 2)] = -0.5 * x2 * s.twist_rate + 0.5 * g[(2, 0)] + f[(0, 2)];
        e[(2, 0)] = e[(0, 2)];
        e[(1, 2)] = 0.5 * x1 * s.twist_rate + 0.5 * g[(2, 1)] + f[(1, 2)];
        e[(2, 1)] = e[(1, 2)];
        e[(2, 2)] = s.stretch + f[(2, 2)] - x1 * s.bend[0] - x2 * s.bend[1];
        q2(p, &e)
    })
}

/// Numerically minimise the through-thickness energy over warping rates
/// sampled at `n` Gauss points (a dense quadratic programme solved by
/// Cholesky), without using the closed-form optimum.
pub fn plate_reduced_density_numeric(p: LameParams, s: &PlateState, n: usize) -> f64 {
    let rule = Rule1d::gauss(n, -1.0, 1.0);
    let dim = 3 * n;
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);
    let mut c = 0.0;
    for (k, (&x3, &w)) in rule.nodes.iter().zip(rule.weights.iter()).enumerate() {
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = -x3 * s.hess[(i, j)] + s.membrane[(i, j)];
            }
        }
        let t = m.trace();
        // Density in the nodal warping-rate variables p = (u1', u2', u3'):
        //   (lambda/2)(t + p3)^2 + mu (|m|^2 + p1^2/2 + p2^2/2 + p3^2).
        a[(3 * k, 3 * k)] = w * p.mu;
        a[(3 * k + 1, 3 * k + 1)] = w * p.mu;
        a[(3 * k + 2, 3 * k + 2)] = w * (p.lambda + 2.0 * p.mu);
        b[3 * k + 2] = w * p.lambda * t;
        c += w * (0.5 * p.lambda * t * t + p.mu * m.norm_squared());
    }
    let chol = a
        .clone()
        .cholesky()
        .expect("warping programme is positive definite");
    let x = chol.solve(&(-&b));
    c + b.dot(&x) + 0.5 * (&a * &x).dot(&x)
}

/// Numerically minimise the cross-section energy over polynomial warpings of
/// total degree `deg` (a rank-deficient quadratic programme solved by SVD),
/// without using the closed-form optimum. The true minimiser is polynomial
/// (degree 2 in-plane, degree 1 axially), so `deg >= 2` is exact.
pub fn rod_reduced_density_numeric(
    p: LameParams,
    s: &RodState,
    deg: usize,
    nr: usize,
    na: usize,
) -> f64 {
    let rule = Rule2d::disc(nr, na, 1.0);
    // Monomial basis x^i y^j, i + j <= deg.
    let mut monos = Vec::new();
    for i in 0..=deg {
        for j in 0..=(deg - i) {
            monos.push((i as i32, j as i32));
        }
    }
    let nm = monos.len();
    let dim = 3 * nm;
    let f = &s.correction;
    // Symmetric-strain vector ordering: (E11, E22, E33, E12, E13, E23) with
    // Q(2E) = (lambda/2)(E11+E22+E33)^2
    //         + mu (E11^2+E22^2+E33^2 + 2 E12^2 + 2 E13^2 + 2 E23^2).
    let mut g = nalgebra::SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j)] += 0.5 * p.lambda;
        }
        g[(i, i)] += p.mu;
        g[(i + 3, i + 3)] += 2.0 * p.mu;
    }
    let mut m = DMatrix::zeros(dim, dim);
    let mut r = DVector::zeros(dim);
    let mut k = 0.0;
    let mono = |e: i32, x: f64| -> f64 {
        if e < 0 {
            0.0
        } else {
            x.powi(e)
        }
    };
    for (pt, &w) in rule.points.iter().zip(rule.weights.iter()) {
        let (x, y) = (pt[0], pt[1]);
        let e0 = nalgebra::SVector::<f64, 6>::from([
            f[(0, 0)],
            f[(1, 1)],
            s.stretch + f[(2, 2)] - x * s.bend[0] - y * s.bend[1],
            f[(0, 1)],
            -0.5 * y * s.twist_rate + f[(0, 2)],
            0.5 * x * s.twist_rate + f[(1, 2)],
        ]);
        // Strain contribution of each warping dof (component comp, monomial q).
        let mut sm = DMatrix::zeros(6, dim);
        for (q, &(i, j)) in monos.iter().enumerate() {
            let dx = i as f64 * mono(i - 1, x) * mono(j, y);
            let dy = j as f64 * mono(i, x) * mono(j - 1, y);
            sm[(0, 3 * q)] = dx;
            sm[(3, 3 * q)] = 0.5 * dy;
            sm[(1, 3 * q + 1)] = dy;
            sm[(3, 3 * q + 1)] = 0.5 * dx;
            sm[(4, 3 * q + 2)] = 0.5 * dx;
            sm[(5, 3 * q + 2)] = 0.5 * dy;
        }
        let gs = g * sm.clone();
        m += w * sm.transpose() * &gs;
        r += w * gs.transpose() * e0;
        k += w * (g * e0).dot(&e0);
    }
    // Rigid cross-section motions are a genuine kernel; equilibrate by the
    // diagonal (the monomial basis is badly conditioned at degree 4), then
    // do an SVD least-squares solve with one refinement pass.
    let d = DVector::from_iterator(dim, (0..dim).map(|i| 1.0 / m[(i, i)].max(1e-300).sqrt()));
    let ms = DMatrix::from_fn(dim, dim, |i, j| m[(i, j)] * d[i] * d[j]);
    let svd = ms.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    let rs = DVector::from_fn(dim, |i, _| -r[i] * d[i]);
    let mut y = svd.solve(&rs, tol).expect("SVD least-squares solve cannot fail");
    for _ in 0..2 {
        let resid = &rs - &ms * &y;
        y += svd.solve(&resid, tol).expect("SVD least-squares solve cannot fail");
    }
    let x = DVector::from_fn(dim, |i, _| y[i] * d[i]);
    k + 2.0 * r.dot(&x) + (&m * &x).dot(&x)
}

/// Relative gap between the closed-form reduced plate density and its
/// numeric minimisation.
pub fn plate_reduced_identity_residual(p: LameParams, s: &PlateState) -> f64 {
    let closed = plate_reduced_density(p, s);
    let numeric = plate_reduced_density_numeric(p, s, 64);
    (closed - numeric).abs() / (1.0 + closed.abs())
}

/// Relative gap between the closed-form reduced rod density and its numeric
/// minimisation.
pub fn rod_reduced_identity_residual(p: LameParams, s: &RodState) -> f64 {
    let closed = rod_reduced_density(p, s);
    let numeric = rod_reduced_density_numeric(p, s, 4, 16, 32);
    (closed - numeric).abs() / (1.0 + closed.abs())
}

/// Plate contribution `J_p(U) = int psi_p` over the rule's domain.
pub fn plate_energy(
    p: LameParams,
    vk_plate: bool,
    field: &dyn PlateField,
    rule: &Rule2d,
) -> f64 {
    rule.integrate(|x1, x2| plate_reduced_density(p, &PlateState::at(field, x1, x2, vk_plate)))
}

/// Rod contribution `J_r(W, Q3) = int psi_r` over the rule's domain.
pub fn rod_energy(p: LameParams, vk_rod: bool, field: &dyn RodField, rule: &Rule1d) -> f64 {
    rule.integrate(|x3| rod_reduced_density(p, &RodState::at(field, x3, vk_rod)))
}

/// The limit load functional
///
/// ```text
/// L = 2 int_omega f_p . U
///   + pi int_0^L f_r . W
///   + (pi/2) int_0^L [ g_1 . (Q ^ e_1) + g_2 . (Q ^ e_2) ]
/// ```
///
/// with `Q ^ e_1 = (0, Q3, -W_1')` and `Q ^ e_2 = (-Q3, 0, -W_2')`.
pub fn load_functional(
    forces: &ForceData,
    plate: &dyn PlateField,
    rod: &dyn RodField,
    plate_rule: &Rule2d,
    rod_rule: &Rule1d,
) -> f64 {
    let plate_term = plate_rule.integrate(|x1, x2| {
        let f = forces.fp_at(x1, x2);
        let u = plate.value(x1, x2);
        f[0] * u[0] + f[1] * u[1] + f[2] * u[2]
    });
    let rod_term = rod_rule.integrate(|x3| {
        let f = forces.fr_at(x3);
        let w = rod.value(x3);
        f[0] * w[0] + f[1] * w[1] + f[2] * w[2]
    });
    let moment_term = rod_rule.integrate(|x3| {
        let g1 = forces.g_at(1, x3);
        let g2 = forces.g_at(2, x3);
        let dw = rod.derivative(x3);
        let q3 = rod.twist(x3);
        g1[1] * q3 - g1[2] * dw[0] - g2[0] * q3 - g2[2] * dw[1]
    });
    2.0 * plate_term + std::f64::consts::PI * rod_term + 0.5 * std::f64::consts::PI * moment_term
}

/// Largest violation of the junction conditions linking the plate and rod
/// fields at the origin.
pub fn junction_residual(plate: &dyn PlateField, rod: &dyn RodField) -> f64 {
    let u = plate.value(0.0, 0.0);
    let w0 = rod.value(0.0);
    let dw0 = rod.derivative(0.0);
    [
        w0[0].abs(),
        w0[1].abs(),
        (w0[2] - u[2]).abs(),
        dw0[0].abs(),
        dw0[1].abs(),
        rod.twist(0.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Total limit energy `J_p + J_r - L`, after checking the junction
/// conditions (tolerance `1e-10` relative to the junction field magnitudes).
#[allow(clippy::too_many_arguments)]
pub fn total_energy(
    mats: Materials,
    vk_plate: bool,
    vk_rod: bool,
    plate: &dyn PlateField,
    rod: &dyn RodField,
    forces: &ForceData,
    plate_rule: &Rule2d,
    rod_rule: &Rule1d,
) -> Result<f64> {
    let res = junction_residual(plate, rod);
    let scale = 1.0
        + plate.value(0.0, 0.0).norm()
        + rod.value(0.0).norm()
        + rod.derivative(0.0).norm()
        + rod.twist(0.0).abs();
    if res > 1e-10 * scale {
        return Err(Error::Constraint(format!(
            "junction conditions violated at the origin (residual {res:.3e})"
        )));
    }
    Ok(plate_energy(mats.plate, vk_plate, plate, plate_rule)
        + rod_energy(mats.rod, vk_rod, rod, rod_rule)
        - load_functional(forces, plate, rod, plate_rule, rod_rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Profile;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn lame(l: f64, m: f64) -> LameParams {
        LameParams::new(l, m).unwrap()
    }

    /// U = (0, 0, x1^2): pure cylindrical bending, H = diag(2, 0).
    fn bending_plate() -> AnalyticPlate {
        AnalyticPlate::new(
            |x1, _| Vector3::new(0.0, 0.0, x1 * x1),
            |x1, _| {
                let mut g = Matrix3x2::zeros();
                g[(2, 0)] = 2.0 * x1;
                g
            },
            |_, _| Matrix2::new(2.0, 0.0, 0.0, 0.0),
        )
    }

    #[test]
    fn plate_energy_reference_values() {
        let rule = Rule2d::composite_tensor(5, 0.0, 1.0, 0.0, 1.0, 4, 4);
        let p = lame(1.0, 1.0);
        // Decoupled regime: pure bending of U3 = x1^2 over a unit square.
        let j = plate_energy(p, false, &bending_plate(), &rule);
        assert_relative_eq!(j, 32.0 / 9.0, max_relative = 1e-12);
        // Coupled regime adds the membrane term from the slope:
        // Z11 = 2 x1^2, integral (8/3) * 4 * int x1^4 = 32/15.
        let j = plate_energy(p, true, &bending_plate(), &rule);
        assert_relative_eq!(j, 32.0 / 9.0 + 32.0 / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn rod_energy_reference_values() {
        let rule = Rule1d::composite_gauss(6, 0.0, 1.0, 4);
        let p = lame(1.0, 1.0); // E = 5/2
        let stretch = AnalyticRod::new(
            |x3| Vector3::new(0.0, 0.0, x3),
            |_| Vector3::new(0.0, 0.0, 1.0),
            |_| [0.0; 2],
            |_| 0.0,
            |_| 0.0,
        );
        assert_relative_eq!(
            rod_energy(p, false, &stretch, &rule),
            5.0 * PI / 4.0,
            max_relative = 1e-12
        );
        let twist = AnalyticRod::new(
            |_| Vector3::zeros(),
            |_| Vector3::zeros(),
            |_| [0.0; 2],
            |x3| x3,
            |_| 1.0,
        );
        assert_relative_eq!(
            rod_energy(p, true, &twist, &rule),
            PI / 4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn load_functional_reference_values() {
        let plate_rule = Rule2d::composite_tensor(4, -0.5, 0.5, -0.5, 0.5, 2, 2);
        let rod_rule = Rule1d::composite_gauss(4, 0.0, 1.0, 2);
        // f_p = e3 against U3 = 1 on a unit-area mid-surface: L = 2.
        let fd = ForceData {
            fp: Profile::from_exprs(&["0".into(), "0".into(), "1".into()], &["x1", "x2"])
                .unwrap(),
            fr: Profile::Zero,
            g1: Profile::Zero,
            g2: Profile::Zero,
        };
        let lift = AnalyticPlate::new(
            |_, _| Vector3::new(0.0, 0.0, 1.0),
            |_, _| Matrix3x2::zeros(),
            |_, _| Matrix2::zeros(),
        );
        let l = load_functional(&fd, &lift, &AnalyticRod::zero(), &plate_rule, &rod_rule);
        assert_relative_eq!(l, 2.0, max_relative = 1e-13);
        // g_1 = e2 against Q3 = 1: L = pi/2.
        let fd = ForceData {
            fp: Profile::Zero,
            fr: Profile::Zero,
            g1: Profile::from_exprs(&["0".into(), "1".into(), "0".into()], &["x3"]).unwrap(),
            g2: Profile::Zero,
        };
        let spin = AnalyticRod::new(
            |_| Vector3::zeros(),
            |_| Vector3::zeros(),
            |_| [0.0; 2],
            |_| 1.0,
            |_| 0.0,
        );
        let l = load_functional(&fd, &AnalyticPlate::zero(), &spin, &plate_rule, &rod_rule);
        assert_relative_eq!(l, PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn warping_reference_values() {
        let s = PlateState {
            hess: Matrix2::new(2.0, 0.0, 0.0, 1.0), // tr H = 3
            membrane: Matrix2::zeros(),
        };
        assert_relative_eq!(plate_warping(0.25, &s, 1.0), 1.0 / 3.0, max_relative = 1e-14);
        let s = RodState {
            bend: [0.0; 2],
            stretch: 1.0,
            twist_rate: 0.0,
            correction: Matrix3::zeros(),
        };
        assert_relative_eq!(rod_warping(0.25, &s, 1.0, 0.0)[0], -0.25, max_relative = 1e-14);
    }

    #[test]
    fn junction_check_guards_total_energy() {
        let plate_rule = Rule2d::composite_tensor(3, -1.0, 1.0, -1.0, 1.0, 2, 2);
        let rod_rule = Rule1d::composite_gauss(3, 0.0, 1.0, 2);
        let mats = Materials {
            plate: lame(1.0, 1.0),
            rod: lame(1.0, 1.0),
        };
        let fd = ForceData::zero();
        // W3(0) = 1 but U3(0,0) = 0: violated junction.
        let bad = AnalyticRod::new(
            |_| Vector3::new(0.0, 0.0, 1.0),
            |_| Vector3::zeros(),
            |_| [0.0; 2],
            |_| 0.0,
            |_| 0.0,
        );
        let err = total_energy(
            mats,
            true,
            true,
            &AnalyticPlate::zero(),
            &bad,
            &fd,
            &plate_rule,
            &rod_rule,
        );
        assert!(matches!(err, Err(Error::Constraint(_))));
        // W3 = x3^2 has W3(0) = 0 = U3(0,0) and W3'(0) = 0: admissible.
        let ok_rod = AnalyticRod::new(
            |x3| Vector3::new(0.0, 0.0, x3 * x3),
            |x3| Vector3::new(0.0, 0.0, 2.0 * x3),
            |_| [0.0; 2],
            |_| 0.0,
            |_| 0.0,
        );
        let j = total_energy(
            mats,
            true,
            true,
            &AnalyticPlate::zero(),
            &ok_rod,
            &fd,
            &plate_rule,
            &rod_rule,
        )
        .unwrap();
        // (E pi / 2) int_0^1 (2 x3)^2 = (5/4) pi (4/3).
        assert_relative_eq!(j, 5.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn strain_integrators_match_reduced_densities() {
        let p = lame(1.7, 0.9);
        let (_, nu) = derived_moduli(p);
        let s = PlateState {
            hess: Matrix2::new(1.2, -0.4, -0.4, 0.8),
            membrane: Matrix2::new(0.3, 0.1, 0.1, -0.5),
        };
        let rule = Rule1d::gauss(8, -1.0, 1.0);
        let direct = rule.integrate(|x3| q2(p, &plate_limit_strain(nu, &s, x3)));
        assert_relative_eq!(direct, plate_reduced_density(p, &s), max_relative = 1e-13);
        // Same through the explicit-warping path.
        let via_warping =
            plate_thickness_energy(p, &s, &|x3| Vector3::new(0.0, 0.0, plate_warping_rate(nu, &s, x3)), &rule);
        assert_relative_eq!(direct, via_warping, max_relative = 1e-13);

        let dw = Vector3::new(0.4, -0.3, 0.6);
        let q3 = 0.7;
        let s = RodState {
            bend: [0.9, -1.1],
            stretch: dw[2],
            twist_rate: -0.8,
            correction: rod_correction(true, &dw, q3),
        };
        let rule = Rule2d::disc(8, 16, 1.0);
        let direct = rule.integrate(|x1, x2| q2(p, &rod_limit_strain(nu, &s, x1, x2)));
        assert_relative_eq!(direct, rod_reduced_density(p, &s), max_relative = 1e-13);
        let via_warping =
            rod_section_energy(p, &s, &|x1, x2| rod_warping_gradient(nu, &s, x1, x2), &rule);
        assert_relative_eq!(direct, via_warping, max_relative = 1e-13);
    }

    #[test]
    fn reduced_identities_on_fixed_states() {
        let p = lame(2.3, 1.4);
        let s = PlateState {
            hess: Matrix2::new(1.0, 0.5, 0.5, -2.0),
            membrane: Matrix2::new(-0.7, 0.2, 0.2, 1.1),
        };
        assert!(plate_reduced_identity_residual(p, &s) < 1e-12);
        // Coupled rod state with every correction entry active.
        let dw = Vector3::new(0.6, -0.4, 0.3);
        let s = RodState {
            bend: [1.3, -0.8],
            stretch: dw[2],
            twist_rate: 0.9,
            correction: rod_correction(true, &dw, 0.5),
        };
        assert!(rod_reduced_identity_residual(p, &s) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        /// The closed-form reduced densities equal the numeric minima for
        /// arbitrary states and materials.
        #[test]
        fn reduced_identity_plate(
            h in proptest::array::uniform3(-2.0..2.0f64),
            z in proptest::array::uniform3(-2.0..2.0f64),
            l in 0.0..3.0f64,
            m in 0.2..3.0f64,
        ) {
            let s = PlateState {
                hess: Matrix2::new(h[0], h[1], h[1], h[2]),
                membrane: Matrix2::new(z[0], z[1], z[1], z[2]),
            };
            prop_assert!(plate_reduced_identity_residual(lame(l, m), &s) < 1e-10);
        }

        #[test]
        fn reduced_identity_rod(
            bend in proptest::array::uniform2(-2.0..2.0f64),
            dwa in proptest::array::uniform2(-1.0..1.0f64),
            c in -1.0..1.0f64,
            q3 in -1.0..1.0f64,
            dq3 in -2.0..2.0f64,
            l in 0.0..3.0f64,
            m in 0.2..3.0f64,
        ) {
            let dw = Vector3::new(dwa[0], dwa[1], c);
            let s = RodState {
                bend,
                stretch: c,
                twist_rate: dq3,
                correction: rod_correction(true, &dw, q3),
            };
            prop_assert!(rod_reduced_identity_residual(lame(l, m), &s) < 1e-10);
        }
    }

    #[test]
    fn optimal_warpings_beat_perturbations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let p = lame(1.9, 1.1);
        let (_, nu) = derived_moduli(p);
        let splate = PlateState {
            hess: Matrix2::new(0.8, -0.3, -0.3, 1.4),
            membrane: Matrix2::new(0.2, 0.6, 0.6, -0.9),
        };
        let dw = Vector3::new(0.5, 0.2, -0.4);
        let srod = RodState {
            bend: [1.0, -0.7],
            stretch: dw[2],
            twist_rate: 0.6,
            correction: rod_correction(true, &dw, -0.8),
        };
        let rule1 = Rule1d::gauss(12, -1.0, 1.0);
        let rule2 = Rule2d::disc(10, 20, 1.0);
        let best_p = plate_thickness_energy(
            p,
            &splate,
            &|x3| Vector3::new(0.0, 0.0, plate_warping_rate(nu, &splate, x3)),
            &rule1,
        );
        let best_r = rod_section_energy(
            p,
            &srod,
            &|x1, x2| rod_warping_gradient(nu, &srod, x1, x2),
            &rule2,
        );
        for _ in 0..50 {
            let a: [f64; 6] = std::array::from_fn(|_| rng.random_range(-0.5..0.5));
            let perturbed = plate_thickness_energy(
                p,
                &splate,
                &|x3| {
                    Vector3::new(
                        a[0] + a[1] * x3,
                        a[2] + a[3] * x3,
                        plate_warping_rate(nu, &splate, x3) + a[4] + a[5] * x3,
                    )
                },
                &rule1,
            );
            assert!(perturbed >= best_p - 1e-12 * (1.0 + best_p.abs()));
            let b: [f64; 6] = std::array::from_fn(|_| rng.random_range(-0.5..0.5));
            // Gradient of the warping perturbation
            // (b0 X1 + b1 X1 X2, b2 X2, b3 X1 + b4 X1^2/2 + b5 X2).
            let perturbed = rod_section_energy(
                p,
                &srod,
                &|x1, x2| {
                    let mut g = rod_warping_gradient(nu, &srod, x1, x2);
                    g[(0, 0)] += b[0] + b[1] * x2;
                    g[(0, 1)] += b[1] * x1;
                    g[(1, 1)] += b[2];
                    g[(2, 0)] += b[3] + b[4] * x1;
                    g[(2, 1)] += b[5];
                    g
                },
                &rule2,
            );
            assert!(perturbed >= best_r - 1e-12 * (1.0 + best_r.abs()));
        }
    }

    #[test]
    fn rod_correction_structure() {
        let dw = Vector3::new(0.3, -0.2, 0.9);
        let q3 = 0.4;
        let f = rod_correction(true, &dw, q3);
        // F_33 = (W1'^2 + W2'^2)/2 and F_12 = W1' W2' / 2.
        assert_relative_eq!(f[(2, 2)], 0.5 * (0.09 + 0.04), max_relative = 1e-14);
        assert_relative_eq!(f[(0, 1)], 0.5 * 0.3 * (-0.2), max_relative = 1e-14);
        assert_relative_eq!((f - f.transpose()).norm(), 0.0);
        assert_eq!(rod_correction(false, &dw, q3), Matrix3::zeros());
    }
}
