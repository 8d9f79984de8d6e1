//! Core model data: elastic moduli, the stored-energy density, the scaling
//! regime linking the plate thickness, rod radius and load magnitudes, the
//! reference geometry, and the applied force data.
//!
//! The structure is a plate
//!   `Omega_delta = omega x (-delta, delta)`,  `omega = (-a,b) x (-c,d)`,
//! clamped on `gamma0 x (-delta,delta)` (gamma0 a union of whole edges of
//! omega containing neither too little nor... simply nonempty), joined to a
//! vertical rod
//!   `B = D_eps x (-delta, L)`,  `D_eps` the disc of radius eps at the origin.
//! The junction cylinder `D_eps x (-delta,delta)` is counted as plate
//! material.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature::{Rule1d, Rule2d};

/// Isotropic Lame parameters (`lambda >= 0`, `mu > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameParams {
    pub lambda: f64,
    pub mu: f64,
}

impl LameParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite()) || lambda < 0.0 || mu <= 0.0 {
            return Err(Error::Domain(format!(
                "Lame parameters need lambda >= 0 and mu > 0, got lambda={lambda}, mu={mu}"
            )));
        }
        Ok(LameParams { lambda, mu })
    }
}

/// Young modulus and Poisson ratio derived from Lame parameters:
/// `E = mu (3 lambda + 2 mu) / (lambda + mu)`, `nu = lambda / (2 (lambda + mu))`.
pub fn derived_moduli(p: LameParams) -> (f64, f64) {
    let e = p.mu * (3.0 * p.lambda + 2.0 * p.mu) / (p.lambda + p.mu);
    let nu = p.lambda / (2.0 * (p.lambda + p.mu));
    (e, nu)
}

/// Quadratic form of the stored energy,
/// `Q(E) = (lambda/8) (tr E)^2 + (mu/4) tr(E^2)`,
/// taken on symmetric matrices (the argument is the unhalved Green tensor
/// `F^T F - I`, so `Q(2 E_lin)` is the classical small-strain density).
pub fn quadratic_form(p: LameParams, e: &Matrix3<f64>) -> Result<f64> {
    let asym = (e - e.transpose()).norm();
    if asym > 1e-12 * (1.0 + e.norm()) {
        return Err(Error::Domain(format!(
            "quadratic form needs a symmetric argument (asymmetry {asym:.3e})"
        )));
    }
    let tr = e.trace();
    let tr2 = (e * e).trace();
    Ok(p.lambda / 8.0 * tr * tr + p.mu / 4.0 * tr2)
}

/// St Venant–Kirchhoff stored energy density
/// `W(F) = Q(F^T F - I)` for orientation-preserving `F`, `+inf` otherwise.
pub fn svk_density(p: LameParams, f: &Matrix3<f64>) -> f64 {
    if f.determinant() <= 0.0 {
        return f64::INFINITY;
    }
    let c = f.transpose() * f - Matrix3::identity();
    // c is symmetric by construction.
    quadratic_form(p, &c).expect("Green tensor is symmetric")
}

/// Frobenius distance from `F` to the rotation group, via the singular
/// values: `dist^2 = sum (sigma_i - 1)^2`, with the smallest singular value
/// reflected when `det F < 0`.
pub fn distance_to_rotations(f: &Matrix3<f64>) -> f64 {
    let svd = f.svd(false, false);
    let mut s = [
        svd.singular_values[0],
        svd.singular_values[1],
        svd.singular_values[2],
    ];
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let flip = if f.determinant() < 0.0 { -1.0 } else { 1.0 };
    ((s[0] - 1.0).powi(2) + (s[1] - 1.0).powi(2) + (flip * s[2] - 1.0).powi(2)).sqrt()
}

/// The scaling regime. Thickness and radius are slaved to a single small
/// parameter `eps` (the rod radius) through
///   `delta = eps^theta`,   `q_eps = eps^eta`,
/// with the exponents chosen so that the two coupling identities
///   `delta^(kappa - 1/2) = q_eps * eps^kappa'`   and
///   `delta^(kappa - 2)   = eps^(kappa' - 1)`
/// hold, which forces
///   `theta = (kappa' - 1)/(kappa - 2)`,  `eta = 3 theta / 2 - 1`,
/// and in particular `delta^3 = q_eps^2 * eps^2` with `eta > -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRegime {
    pub kappa: f64,
    pub kappa_prime: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub eta: f64,
    pub delta: f64,
    pub q_eps: f64,
}

/// Derive the full regime from the user-facing knobs.
pub fn derive_regime(kappa: f64, kappa_prime: f64, epsilon: f64) -> Result<ScalingRegime> {
    if !(kappa.is_finite() && kappa_prime.is_finite() && epsilon.is_finite()) {
        return Err(Error::Regime("non-finite regime parameters".into()));
    }
    if kappa < 3.0 || kappa_prime < 3.0 {
        return Err(Error::Regime(format!(
            "need kappa >= 3 and kappa' >= 3, got kappa={kappa}, kappa'={kappa_prime}"
        )));
    }
    if epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::Regime(format!(
            "need 0 < epsilon < 1, got epsilon={epsilon}"
        )));
    }
    let theta = (kappa_prime - 1.0) / (kappa - 2.0);
    let eta = 1.5 * theta - 1.0;
    Ok(ScalingRegime {
        kappa,
        kappa_prime,
        epsilon,
        theta,
        eta,
        delta: epsilon.powf(theta),
        q_eps: epsilon.powf(eta),
    })
}

impl ScalingRegime {
    /// Membrane strain keeps its quadratic slope coupling only at kappa = 3.
    pub fn vk_plate(&self) -> bool {
        (self.kappa - 3.0).abs() < 1e-12
    }

    /// The rod correction tensor F is present only at kappa' = 3.
    pub fn vk_rod(&self) -> bool {
        (self.kappa_prime - 3.0).abs() < 1e-12
    }

    /// `delta^(2 kappa - 1)`, the energy normalisation of the 3D functional.
    pub fn energy_scale(&self) -> f64 {
        self.delta.powf(2.0 * self.kappa - 1.0)
    }
}

/// Edges of the plate mid-surface rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// x1 = -a
    Left,
    /// x1 = b
    Right,
    /// x2 = -c
    Bottom,
    /// x2 = d
    Top,
}

/// Reference geometry: plate mid-surface `(-a,b) x (-c,d)` with the junction
/// at the origin (interior by construction), clamped edge set `gamma0`, and
/// rod length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub rod_length: f64,
    pub gamma0: Vec<Edge>,
}

impl Geometry {
    pub fn new(a: f64, b: f64, c: f64, d: f64, rod_length: f64, gamma0: Vec<Edge>) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d), ("L", rod_length)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "geometry parameter {name} must be positive, got {v}"
                )));
            }
        }
        if gamma0.is_empty() {
            return Err(Error::Domain(
                "clamped edge set gamma0 must not be empty".into(),
            ));
        }
        let mut uniq = gamma0.clone();
        uniq.sort_by_key(|e| *e as u8);
        uniq.dedup();
        if uniq.len() != gamma0.len() {
            return Err(Error::Domain("gamma0 lists an edge twice".into()));
        }
        Ok(Geometry {
            a,
            b,
            c,
            d,
            rod_length,
            gamma0,
        })
    }

    pub fn x1_range(&self) -> (f64, f64) {
        (-self.a, self.b)
    }

    pub fn x2_range(&self) -> (f64, f64) {
        (-self.c, self.d)
    }

    pub fn contains_midsurface(&self, x1: f64, x2: f64) -> bool {
        x1 > -self.a && x1 < self.b && x2 > -self.c && x2 < self.d
    }

    pub fn clamped(&self, edge: Edge) -> bool {
        self.gamma0.contains(&edge)
    }
}

/// Linear-interpolation table over one abscissa, vector-valued.
#[derive(Debug, Clone)]
pub struct Table1d {
    xs: Vec<f64>,
    vals: Vec<[f64; 3]>,
}

impl Table1d {
    pub fn new(xs: Vec<f64>, vals: Vec<[f64; 3]>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != vals.len() {
            return Err(Error::ForceData(format!(
                "table needs >= 2 rows and matching lengths (got {} / {})",
                xs.len(),
                vals.len()
            )));
        }
        if xs.windows(2).any(|w| w[1] <= w[0] || w[0].is_nan() || w[1].is_nan()) {
            return Err(Error::ForceData(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        if xs.iter().any(|v| !v.is_finite())
            || vals.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::ForceData(
                "table contains a non-finite entry (not integrable)".into(),
            ));
        }
        Ok(Table1d { xs, vals })
    }

    pub fn eval(&self, x: f64) -> [f64; 3] {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.vals[0];
        }
        if x >= self.xs[n - 1] {
            return self.vals[n - 1];
        }
        let i = match self
            .xs
            .binary_search_by(|p| p.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.vals[i],
            Err(i) => i,
        };
        let t = (x - self.xs[i - 1]) / (self.xs[i] - self.xs[i - 1]);
        std::array::from_fn(|k| (1.0 - t) * self.vals[i - 1][k] + t * self.vals[i][k])
    }
}

/// One vector-valued force profile: either identically zero, closed-form
/// expressions per component, or a sampled table.
#[derive(Debug, Clone)]
pub enum Profile {
    Zero,
    Exprs(Box<[Expr; 3]>),
    Table(Table1d),
}

impl Profile {
    /// Evaluate with the variable slice matching the expressions' parse-time
    /// variable list; tables use `vars[0]` (rod profiles).
    pub fn eval(&self, vars: &[f64]) -> [f64; 3] {
        match self {
            Profile::Zero => [0.0; 3],
            Profile::Exprs(es) => [es[0].eval(vars), es[1].eval(vars), es[2].eval(vars)],
            Profile::Table(t) => t.eval(vars[0]),
        }
    }

    pub fn from_exprs(srcs: &[String; 3], variables: &[&str]) -> Result<Profile> {
        if srcs.iter().all(|s| s.trim() == "0") {
            return Ok(Profile::Zero);
        }
        let e0 = Expr::parse(&srcs[0], variables)?;
        let e1 = Expr::parse(&srcs[1], variables)?;
        let e2 = Expr::parse(&srcs[2], variables)?;
        Ok(Profile::Exprs(Box::new([e0, e1, e2])))
    }
}

/// Applied force data of the limit model:
/// `f_p(x1,x2)` on the mid-surface, `f_r(x3)`, and the first-moment
/// densities `g_1(x3)`, `g_2(x3)` on the rod axis.
#[derive(Debug, Clone)]
pub struct ForceData {
    pub fp: Profile,
    pub fr: Profile,
    pub g1: Profile,
    pub g2: Profile,
}

impl ForceData {
    pub fn zero() -> Self {
        ForceData {
            fp: Profile::Zero,
            fr: Profile::Zero,
            g1: Profile::Zero,
            g2: Profile::Zero,
        }
    }

    pub fn fp_at(&self, x1: f64, x2: f64) -> [f64; 3] {
        self.fp.eval(&[x1, x2])
    }

    pub fn fr_at(&self, x3: f64) -> [f64; 3] {
        self.fr.eval(&[x3])
    }

    pub fn g_at(&self, alpha: usize, x3: f64) -> [f64; 3] {
        match alpha {
            1 => self.g1.eval(&[x3]),
            2 => self.g2.eval(&[x3]),
            _ => panic!("g index must be 1 or 2"),
        }
    }
}

/// The scaled 3D body force. Plate points carry
/// `(delta^(kappa-1) f_p1, delta^(kappa-1) f_p2, delta^kappa f_p3)`;
/// rod points above the plate carry
/// `q^2 eps^kappa' [f_r1 e1 + f_r2 e2 + f_r3/eps e3 + x1/eps^2 g1 + x2/eps^2 g2]`;
/// rod points inside the junction band `x3 in (-delta, delta]` carry no load.
pub fn body_force(
    regime: &ScalingRegime,
    geom: &Geometry,
    fd: &ForceData,
    x: [f64; 3],
) -> Result<Vector3<f64>> {
    let [x1, x2, x3] = x;
    let delta = regime.delta;
    let eps = regime.epsilon;
    let in_plate = geom.contains_midsurface(x1, x2) && x3.abs() < delta;
    if in_plate {
        let fp = fd.fp_at(x1, x2);
        let s = delta.powf(regime.kappa - 1.0);
        return Ok(Vector3::new(
            s * fp[0],
            s * fp[1],
            s * delta * fp[2],
        ));
    }
    let in_rod = x1 * x1 + x2 * x2 < eps * eps && x3 > -delta && x3 < geom.rod_length;
    if in_rod {
        if x3 <= delta {
            return Ok(Vector3::zeros());
        }
        let fr = fd.fr_at(x3);
        let g1 = fd.g_at(1, x3);
        let g2 = fd.g_at(2, x3);
        let s = regime.q_eps.powi(2) * eps.powf(regime.kappa_prime);
        let mut v = Vector3::new(fr[0], fr[1], fr[2] / eps);
        for k in 0..3 {
            v[k] += x1 / (eps * eps) * g1[k] + x2 / (eps * eps) * g2[k];
        }
        return Ok(s * v);
    }
    Err(Error::Domain(format!(
        "point ({x1}, {x2}, {x3}) lies outside the structure"
    )))
}

/// Force magnitudes entering solver diagnostics:
/// `N(f_p) = ||f_p||_{L2(omega)}` and
/// `N(f_r) = ||f_r||_{L2(0,L)} + ||g_1||_{L2(0,L)} + ||g_2||_{L2(0,L)}`.
pub fn force_norms(
    fd: &ForceData,
    geom: &Geometry,
    plate_rule: &Rule2d,
    rod_rule: &Rule1d,
) -> (f64, f64) {
    let sq = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let np = plate_rule
        .integrate(|x1, x2| sq(fd.fp_at(x1, x2)))
        .max(0.0)
        .sqrt();
    let _ = geom;
    let l2 = |p: &Profile| {
        rod_rule
            .integrate(|x3| sq(p.eval(&[x3])))
            .max(0.0)
            .sqrt()
    };
    let nr = l2(&fd.fr) + l2(&fd.g1) + l2(&fd.g2);
    (np, nr)
}
