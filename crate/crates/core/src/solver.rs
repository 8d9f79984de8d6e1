//! Minimization of the discrete energy: direct solve in the decoupled
//! regimes, damped Newton with Hessian shifting in the coupled ones, and a
//! load-continuation driver for states far from the small-load range.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::fem::{assemble_energy, assemble_gradient, assemble_hessian, Discretization};
use crate::limit::Materials;
use crate::{Error, Result};

/// The discrete total energy `J(x) = E(x) - load . x` over the reduced
/// (constraint-free) dof vector.
pub struct Objective {
    pub disc: Discretization,
    pub mats: Materials,
    pub vk_plate: bool,
    pub vk_rod: bool,
    /// Load vector in full dof indices.
    pub load: DVector<f64>,
    /// `(N(f_p), N(f_r))` of the driving forces, quoted in diagnostics when
    /// the solve leaves the range where the minimizer is unique.
    pub force_norms: Option<(f64, f64)>,
}

impl Objective {
    pub fn new(
        disc: Discretization,
        mats: Materials,
        vk_plate: bool,
        vk_rod: bool,
        load: DVector<f64>,
    ) -> Objective {
        Objective {
            disc,
            mats,
            vk_plate,
            vk_rod,
            load,
            force_norms: None,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.disc.dofs.n_reduced
    }

    /// Load reduced to the free dofs.
    pub fn reduced_load(&self) -> DVector<f64> {
        self.disc.dofs.reduce_gradient(&self.load)
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let full = self.disc.dofs.expand(x);
        assemble_energy(&self.disc, self.mats, self.vk_plate, self.vk_rod, &full)
            - self.load.dot(&full)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let full = self.disc.dofs.expand(x);
        let g = assemble_gradient(&self.disc, self.mats, self.vk_plate, self.vk_rod, &full);
        self.disc.dofs.reduce_gradient(&(g - &self.load))
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let full = self.disc.dofs.expand(x);
        assemble_hessian(&self.disc, self.mats, self.vk_plate, self.vk_rod, &full)
            .reduce(&self.disc.dofs)
    }

    /// Copy with the load multiplied by `s` (used by continuation).
    fn scaled(&self, s: f64) -> Objective {
        Objective {
            disc: self.disc.clone(),
            mats: self.mats,
            vk_plate: self.vk_plate,
            vk_rod: self.vk_rod,
            load: s * &self.load,
            force_norms: self.force_norms,
        }
    }

    fn force_advisory(&self) -> String {
        match self.force_norms {
            Some((np, nr)) => format!(
                " (plate force norm {np:.6e}, rod force norm {nr:.6e}; reduce the amplitudes \
                 or drive the solve through continuation)"
            ),
            None => String::new(),
        }
    }
}

/// Outcome of a converged solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Euclidean norm of the reduced gradient at the solution.
    pub gradient_norm: f64,
    /// Absolute tolerance the norm was tested against.
    pub tolerance: f64,
    /// Total energy `E - load . x` at the solution.
    pub energy: f64,
    /// Elastic part `E`.
    pub internal_energy: f64,
    /// Work of the loads `load . x`.
    pub work: f64,
    /// Number of Hessian diagonal shifts applied across all iterations.
    pub shift_escalations: usize,
}

fn report(obj: &Objective, x: &DVector<f64>, iterations: usize, gn: f64, tol: f64, shifts: usize) -> SolveReport {
    let full = obj.disc.dofs.expand(x);
    let internal = assemble_energy(&obj.disc, obj.mats, obj.vk_plate, obj.vk_rod, &full);
    let work = obj.load.dot(&full);
    SolveReport {
        iterations,
        gradient_norm: gn,
        tolerance: tol,
        energy: internal - work,
        internal_energy: internal,
        work,
        shift_escalations: shifts,
    }
}

/// Absolute residual tolerance: `rel_tol` scaled by the load magnitude.
fn residual_tolerance(obj: &Objective, rel_tol: f64) -> f64 {
    rel_tol * (1.0 + obj.reduced_load().amax())
}

/// One-shot solve for the decoupled scalings, where the energy is a
/// positive definite quadratic form and the minimizer solves a single
/// linear system.
pub fn solve_linear(obj: &Objective) -> Result<(DVector<f64>, SolveReport)> {
    if obj.vk_plate || obj.vk_rod {
        return Err(Error::Regime(
            "the direct solve only applies to the decoupled scalings (kappa > 3 and \
             kappa' > 3); the coupled energy is quartic, use the Newton solver"
                .into(),
        ));
    }
    let x0 = DVector::zeros(obj.n_dofs());
    let h = obj.hessian(&x0);
    let l = obj.reduced_load();
    let chol = Cholesky::new(h).ok_or_else(|| {
        Error::Indefinite(format!(
            "stiffness matrix is not positive definite{}",
            obj.force_advisory()
        ))
    })?;
    let x = chol.solve(&l);
    let gn = obj.gradient(&x).norm();
    let tol = residual_tolerance(obj, 1e-10);
    Ok((x.clone(), report(obj, &x, 1, gn, tol, 0)))
}

/// Damped Newton iteration with Armijo backtracking and diagonal Hessian
/// shifts.
///
/// Convergence is declared when the reduced gradient norm drops below
/// `rel_tol * (1 + |load|_inf)`. In the decoupled regimes the energy is
/// quadratic and the iteration terminates after one step; in the coupled
/// regimes each iteration factors the state-dependent Hessian, shifting the
/// diagonal (escalating by 10x) whenever the factorization fails, so every
/// step is a descent step.
pub fn solve_newton(
    obj: &Objective,
    x0: Option<&DVector<f64>>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, SolveReport)> {
    let mut x = match x0 {
        Some(v) => {
            if v.len() != obj.n_dofs() {
                return Err(Error::Domain(format!(
                    "initial guess has {} dofs, the reduced space has {}",
                    v.len(),
                    obj.n_dofs()
                )));
            }
            v.clone()
        }
        None => DVector::zeros(obj.n_dofs()),
    };
    let tol = residual_tolerance(obj, rel_tol);
    let mut shifts_total = 0usize;
    for it in 0..max_iter {
        let g = obj.gradient(&x);
        let gn = g.norm();
        if gn <= tol {
            return Ok((x.clone(), report(obj, &x, it, gn, tol, shifts_total)));
        }
        let h = obj.hessian(&x);
        let diag_scale = 1.0 + (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
        let mut shift = 0.0;
        let step = loop {
            let candidate = if shift == 0.0 {
                Cholesky::new(h.clone())
            } else {
                let mut hs = h.clone();
                for i in 0..hs.nrows() {
                    hs[(i, i)] += shift;
                }
                Cholesky::new(hs)
            };
            if let Some(chol) = candidate {
                break chol.solve(&(-&g));
            }
            shift = if shift == 0.0 {
                1e-10 * diag_scale
            } else {
                10.0 * shift
            };
            shifts_total += 1;
            if shift > 1e12 * diag_scale {
                return Err(Error::Indefinite(format!(
                    "energy Hessian stayed indefinite through the entire shift escalation \
                     at iteration {it} (residual {gn:.3e}); the load is outside the range \
                     where the iteration can certify descent{}",
                    obj.force_advisory()
                )));
            }
        };
        let slope = g.dot(&step);
        if !slope.is_finite() || slope >= 0.0 {
            return Err(Error::Numeric(format!(
                "Newton direction is not a descent direction (slope {slope:.3e})"
            )));
        }
        let j0 = obj.value(&x);
        let mut t = 1.0;
        loop {
            let trial = &x + t * &step;
            let jt = obj.value(&trial);
            if jt.is_finite() && jt <= j0 + 1e-4 * t * slope {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-14 {
                return Err(Error::NonConvergence(format!(
                    "line search stalled at iteration {it} (residual {gn:.3e}, \
                     energy {j0:.6e}){}",
                    obj.force_advisory()
                )));
            }
        }
    }
    let gn = obj.gradient(&x).norm();
    Err(Error::NonConvergence(format!(
        "residual {gn:.3e} above tolerance {tol:.3e} after {max_iter} iterations{}",
        obj.force_advisory()
    )))
}

/// Newton driven by a linear ramp of the load: `steps` equal increments,
/// each solve warm-started from the previous one. The reports are returned
/// in ramp order; the last one belongs to the full load.
pub fn continuation(
    obj: &Objective,
    steps: usize,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, Vec<SolveReport>)> {
    if steps == 0 {
        return Err(Error::Domain("continuation needs at least one step".into()));
    }
    let mut x = DVector::zeros(obj.n_dofs());
    let mut reports = Vec::with_capacity(steps);
    for k in 1..=steps {
        let stage = obj.scaled(k as f64 / steps as f64);
        let (xk, rep) = solve_newton(&stage, Some(&x), rel_tol, max_iter)?;
        x = xk;
        reports.push(rep);
    }
    Ok((x, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{PlateMesh, RodMesh};
    use crate::model::{Edge, ForceData, Geometry, LameParams, Profile};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn setup(fp3: &str) -> Objective {
        let geom = Geometry::new(1.0, 1.0, 1.0, 1.0, 1.0, vec![Edge::Left]).unwrap();
        let pm = PlateMesh::new(&geom, 4, 4).unwrap();
        let rm = RodMesh::new(geom.rod_length, 3).unwrap();
        let disc = Discretization::new(&geom, pm, rm, 5, 6);
        let mats = Materials {
            plate: LameParams::new(1.2, 0.8).unwrap(),
            rod: LameParams::new(0.9, 1.1).unwrap(),
        };
        let forces = ForceData {
            fp: Profile::from_exprs(
                &["0".into(), "0".into(), fp3.into()],
                &["x1", "x2"],
            )
            .unwrap(),
            fr: Profile::from_exprs(&["0.02".into(), "0".into(), "0.01".into()], &["x3"])
                .unwrap(),
            g1: Profile::Zero,
            g2: Profile::Zero,
        };
        let load = crate::fem::assemble_load(&disc, &forces);
        Objective::new(disc, mats, false, false, load)
    }

    #[test]
    fn quadratic_energy_solves_in_one_newton_step() {
        let obj = setup("0.05");
        let (x, rep) = solve_newton(&obj, None, 1e-10, 50).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.gradient_norm <= rep.tolerance);
        // Restarting from a random point is again a single step.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x0 = DVector::from_fn(obj.n_dofs(), |_, _| rng.random_range(-0.1..0.1));
        let (x2, rep2) = solve_newton(&obj, Some(&x0), 1e-10, 50).unwrap();
        assert_eq!(rep2.iterations, 1);
        assert_relative_eq!(x, x2, epsilon = 1e-8);
    }

    #[test]
    fn direct_and_newton_solutions_agree() {
        let obj = setup("0.05");
        let (xl, _) = solve_linear(&obj).unwrap();
        let (xn, _) = solve_newton(&obj, None, 1e-12, 50).unwrap();
        assert_relative_eq!(xl, xn, epsilon = 1e-10);
    }

    #[test]
    fn decoupled_solution_is_linear_in_the_load() {
        let obj = setup("0.05");
        let (x1, _) = solve_linear(&obj).unwrap();
        let mut doubled = obj.scaled(2.0);
        doubled.force_norms = None;
        let (x2, _) = solve_linear(&doubled).unwrap();
        assert_relative_eq!(2.0 * &x1, x2, epsilon = 1e-12);
    }

    #[test]
    fn direct_solve_rejects_coupled_regimes() {
        let mut obj = setup("0.05");
        obj.vk_plate = true;
        let err = solve_linear(&obj).unwrap_err();
        assert!(matches!(err, Error::Regime(_)), "got {err:?}");
    }

    #[test]
    fn coupled_solve_reaches_a_minimum() {
        let mut obj = setup("0.08");
        obj.vk_plate = true;
        obj.vk_rod = true;
        let (x, rep) = solve_newton(&obj, None, 1e-10, 50).unwrap();
        assert!(rep.gradient_norm <= rep.tolerance);
        assert!(rep.energy < 0.0, "loaded minimizer must do negative work");
        // Random perturbations only increase the energy.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let j = obj.value(&x);
        for _ in 0..5 {
            let d = DVector::from_fn(obj.n_dofs(), |_, _| rng.random_range(-1.0..1.0f64));
            let jp = obj.value(&(&x + 1e-4 * &d));
            assert!(jp > j, "perturbed energy {jp} not above minimum {j}");
        }
    }

    #[test]
    fn transverse_load_drags_in_plane_dofs_only_when_coupled() {
        let decoupled = setup("0.08");
        let (xd, _) = solve_newton(&decoupled, None, 1e-12, 50).unwrap();
        let mut coupled = setup("0.08");
        coupled.vk_plate = true;
        coupled.vk_rod = true;
        let (xc, _) = solve_newton(&coupled, None, 1e-10, 50).unwrap();
        let l = &decoupled.disc.layout;
        let map = &decoupled.disc.dofs;
        let in_plane_norm = |x: &DVector<f64>| -> f64 {
            let full = map.expand(x);
            (0..decoupled.disc.plate.n_nodes())
                .map(|n| full[l.u1(n)].abs() + full[l.u2(n)].abs())
                .fold(0.0, f64::max)
        };
        // Pure transverse plate load: the membrane only engages through the
        // slope terms.
        assert!(in_plane_norm(&xd) < 1e-13);
        assert!(in_plane_norm(&xc) > 1e-6);
    }

    #[test]
    fn continuation_matches_direct_newton() {
        let mut obj = setup("0.08");
        obj.vk_plate = true;
        obj.vk_rod = true;
        let (xn, _) = solve_newton(&obj, None, 1e-11, 50).unwrap();
        let (xc, reports) = continuation(&obj, 4, 1e-11, 50).unwrap();
        assert_eq!(reports.len(), 4);
        assert_relative_eq!(xn, xc, epsilon = 1e-7);
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let mut obj = setup("0.5");
        obj.vk_plate = true;
        obj.force_norms = Some((1.0, 0.5));
        let err = solve_newton(&obj, None, 1e-12, 1).unwrap_err();
        match err {
            Error::NonConvergence(msg) => {
                assert!(msg.contains("plate force norm"), "advisory missing: {msg}")
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }
}
