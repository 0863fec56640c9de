//! One convex-splitting step of the Cahn-Hilliard pair
//!
//! ```text
//! (phi - phi^n)/dt + div(v phi^n) - div(b(phi^n) grad mu) = 0
//! mu = psi_+'(phi)/eps + psi_-'(phi^n)/eps - eps lap phi
//!      + (c/2) f'(phi^n)(F:F - d) + delta (phi - phi^n)/dt
//! ```
//!
//! solved by damped Newton on the cubic `psi_+'`. The first equation is
//! linear, so every Newton update keeps the discrete mass exactly.

use faer::sparse::linalg::solvers::SymbolicLu;

use crate::constitutive::{mobility_b, neo_hookean_dphi, psi_minus_prime, psi_plus_prime, psi_plus_second, psi_prime};
use crate::error::{Error, Result};
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;
use crate::linsolve::SparseFactor;
use crate::ops::sparse::{assemble_laplacian, Layout, OperatorMatrix, TripletBuilder};
use crate::ops::{advect_scalar_with, laplacian_neumann, AdvectionScheme};
use crate::params::ModelParams;

/// `psi'(phi)/eps - eps lap phi + (c/2) f'(phi)(F:F - d) + delta dphi_dt`.
pub fn static_chemical_potential(
    phi: &ScalarField,
    f: &TensorField,
    dphi_dt: Option<&ScalarField>,
    params: &ModelParams,
) -> ScalarField {
    let eps = params.eps;
    let lap = laplacian_neumann(phi, None).expect("unit coefficient is positive");
    let mut mu = ScalarField::zeros(phi.grid);
    for k in 0..phi.grid.n_cells() {
        let s = phi.values[k];
        mu.values[k] = psi_prime(s) / eps - eps * lap.values[k] + neo_hookean_dphi(s, &f.get(k), params);
        if let Some(rate) = dphi_dt {
            mu.values[k] += params.delta * rate.values[k];
        }
    }
    mu
}

/// Cellwise mobility `b(phi)`.
pub fn mobility_field(phi: &ScalarField, params: &ModelParams) -> ScalarField {
    phi.map(|s| mobility_b(s, &params.mobility, &params.stiffness))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChOptions {
    pub tol_newton: f64,
    pub max_iters: usize,
    pub tol_lin: f64,
    pub scheme: AdvectionScheme,
}

impl Default for ChOptions {
    fn default() -> Self {
        Self { tol_newton: 1e-11, max_iters: 50, tol_lin: 1e-9, scheme: AdvectionScheme::default() }
    }
}

#[derive(Clone, Debug)]
pub struct ChStepResult {
    pub phi: ScalarField,
    pub mu: ScalarField,
    /// Residual evaluations, counting the initial guess; a state that is
    /// already a root reports 1.
    pub newton_iters: usize,
}

/// Newton solver for one grid; the symbolic LU analysis of the Jacobian
/// pattern is computed once and reused for every step.
pub struct CahnHilliardSolver {
    grid: GridSpec,
    symbolic: SymbolicLu<usize>,
    options: ChOptions,
}

/// Data frozen at `phi^n` for one time step. The Jacobian depends only on
/// this data and the iterate, not on `F` or `v`, so one factorization can
/// serve every Picard sweep of the step.
pub struct ChStep<'a> {
    solver: &'a CahnHilliardSolver,
    phi_n: ScalarField,
    lap: OperatorMatrix,
    lap_b: OperatorMatrix,
    dt: f64,
    eps: f64,
    delta: f64,
    params: ModelParams,
    factor: Option<SparseFactor>,
}

struct Explicit {
    advection: Vec<f64>,
    mu: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

impl ChStep<'_> {
    /// `[R1; R2]` at `(phi, mu)`.
    fn residual(&self, ex: &Explicit, phi: &[f64], mu: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lb_mu = self.lap_b.matvec(mu);
        let l_phi = self.lap.matvec(phi);
        let n = phi.len();
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        for k in 0..n {
            let dphi = phi[k] - self.phi_n.values[k];
            r1[k] = dphi / self.dt + ex.advection[k] - lb_mu[k];
            r2[k] = mu[k] - psi_plus_prime(phi[k]) / self.eps + self.eps * l_phi[k]
                - self.delta * dphi / self.dt
                - ex.mu[k];
        }
        (r1, r2)
    }

    fn factorize(&mut self, phi: &[f64]) -> Result<()> {
        let jac = jacobian(&self.lap, &self.lap_b, phi, self.dt, self.eps, self.delta);
        self.factor = Some(SparseFactor::lu_with_symbolic(jac, &self.solver.symbolic)?);
        Ok(())
    }

    /// Solves the step for the given deformation and velocity. `guess` is a
    /// starting `(phi, mu)`; without one Newton starts from `phi^n`.
    pub fn solve(
        &mut self,
        f: &TensorField,
        v: &StaggeredVectorField,
        guess: Option<(&ScalarField, &ScalarField)>,
    ) -> Result<ChStepResult> {
        let grid = self.solver.grid;
        if f.grid != grid || v.grid != grid {
            return Err(Error::Precondition("fields live on different grids".into()));
        }
        let opts = self.solver.options;
        let n = grid.n_cells();
        let eps = self.eps;
        let dt = self.dt;
        let ex = Explicit {
            advection: advect_scalar_with(v, &self.phi_n, opts.scheme).values,
            mu: (0..n)
                .map(|k| {
                    let s = self.phi_n.values[k];
                    psi_minus_prime(s) / eps + neo_hookean_dphi(s, &f.get(k), &self.params)
                })
                .collect(),
        };
        let (mut phi, mut mu) = match guess {
            Some((p, m)) => (p.values.clone(), m.values.clone()),
            None => {
                // phi^n with the mu that makes the second equation exact
                let phi = self.phi_n.values.clone();
                let l_phi = self.lap.matvec(&phi);
                let mu = (0..n).map(|k| psi_plus_prime(phi[k]) / eps - eps * l_phi[k] + ex.mu[k]).collect();
                (phi, mu)
            }
        };
        let (mut r1, mut r2) = self.residual(&ex, &phi, &mu);
        let mut iters = 1;
        let merit = |r1: &[f64], r2: &[f64]| -> f64 {
            r1.iter().map(|x| (dt * x) * (dt * x)).sum::<f64>() + r2.iter().map(|x| x * x).sum::<f64>()
        };
        // true when the cached factorization was built at the current iterate
        let mut fresh = false;
        loop {
            let mu_scale = inf_norm(&mu).max(1.0);
            let res1 = dt * inf_norm(&r1);
            let res2 = inf_norm(&r2);
            if res1 <= opts.tol_newton && res2 <= opts.tol_newton * mu_scale {
                break;
            }
            if !(res1.is_finite() && res2.is_finite()) || iters >= opts.max_iters {
                return Err(Error::NewtonDivergence { iterations: iters, residual: res1.max(res2 / mu_scale) });
            }
            if self.factor.is_none() {
                self.factorize(&phi)?;
                fresh = true;
            }
            let rhs: Vec<f64> = r1.iter().chain(&r2).map(|x| -x).collect();
            let dx = self.factor.as_ref().unwrap().solve(&rhs, opts.tol_lin)?;
            let m0 = merit(&r1, &r2);
            let mut alpha = 1.0;
            loop {
                let trial_phi: Vec<f64> = (0..n).map(|k| phi[k] + alpha * dx[k]).collect();
                let trial_mu: Vec<f64> = (0..n).map(|k| mu[k] + alpha * dx[n + k]).collect();
                let (t1, t2) = self.residual(&ex, &trial_phi, &trial_mu);
                let m1 = merit(&t1, &t2);
                if !fresh && !(m1 < 0.25 * m0) {
                    // the reused Jacobian is too stale: rebuild it here and retry
                    self.factor = None;
                    break;
                }
                if m1 < m0 || alpha < 1e-3 {
                    phi = trial_phi;
                    mu = trial_mu;
                    r1 = t1;
                    r2 = t2;
                    fresh = false;
                    break;
                }
                alpha *= 0.5;
            }
            iters += 1;
        }
        Ok(ChStepResult {
            phi: ScalarField { grid, values: phi },
            mu: ScalarField { grid, values: mu },
            newton_iters: iters,
        })
    }
}

/// `[[I/dt, -L_b], [eps L - diag(psi_+''(phi)/eps + delta/dt), I]]`.
fn jacobian(
    lap: &OperatorMatrix,
    lap_b: &OperatorMatrix,
    phi: &[f64],
    dt: f64,
    eps: f64,
    delta: f64,
) -> OperatorMatrix {
    let n = phi.len();
    let mut b = TripletBuilder::new(2 * n, 2 * n);
    for k in 0..n {
        b.push(k, k, 1.0 / dt);
        b.push(n + k, n + k, 1.0);
        b.push(n + k, k, -psi_plus_second(phi[k]) / eps - delta / dt);
    }
    b.push_block(lap_b, 0, n, -1.0);
    b.push_block(lap, n, 0, eps);
    b.build(Layout::Mixed, Layout::Mixed)
}

impl CahnHilliardSolver {
    pub fn new(grid: GridSpec, options: ChOptions) -> Result<Self> {
        // the pattern depends only on the grid
        let lap = assemble_laplacian(&grid, None);
        let jac = jacobian(&lap, &lap, &vec![0.0; grid.n_cells()], 1.0, 1.0, 0.0);
        let symbolic = SparseFactor::symbolic_lu(&jac)?;
        Ok(Self { grid, symbolic, options })
    }

    pub fn options(&self) -> &ChOptions {
        &self.options
    }

    /// Freezes `phi^n`, `dt` and the parameters for one time step.
    pub fn begin(&self, phi_n: &ScalarField, dt: f64, params: &ModelParams) -> Result<ChStep<'_>> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        if phi_n.grid != self.grid {
            return Err(Error::Precondition("phase field lives on a different grid".into()));
        }
        let b = mobility_field(phi_n, params);
        Ok(ChStep {
            solver: self,
            phi_n: phi_n.clone(),
            lap: assemble_laplacian(&self.grid, None),
            lap_b: assemble_laplacian(&self.grid, Some(&b.values)),
            dt,
            eps: params.eps,
            delta: params.delta,
            params: *params,
            factor: None,
        })
    }

    pub fn step(
        &self,
        phi_n: &ScalarField,
        f: &TensorField,
        v: &StaggeredVectorField,
        dt: f64,
        params: &ModelParams,
    ) -> Result<ChStepResult> {
        self.begin(phi_n, dt, params)?.solve(f, v, None)
    }
}

pub fn step_cahn_hilliard(
    phi_n: &ScalarField,
    f: &TensorField,
    v: &StaggeredVectorField,
    dt: f64,
    params: &ModelParams,
) -> Result<ChStepResult> {
    CahnHilliardSolver::new(phi_n.grid, ChOptions::default())?.step(phi_n, f, v, dt, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::psi;
    use crate::ops::{grad_cc, velocity_from_stream_function};
    use crate::params::StiffnessSpec;
    use crate::tensor::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ch_energy(phi: &ScalarField, eps: f64) -> f64 {
        let g = grad_cc(phi);
        let a = phi.grid.cell_area();
        phi.values.iter().map(|&s| psi(s) / eps).sum::<f64>() * a + 0.5 * eps * g.dot(&g)
    }

    #[test]
    fn static_mu_examples() {
        let g = GridSpec::unit_square(6).unwrap();
        let p = ModelParams::default();
        let id = TensorField::identity(g, 2);
        let at_well = static_chemical_potential(&ScalarField::constant(g, 1.0), &id, None, &p);
        assert_eq!(at_well.max_abs(), 0.0);
        let half = static_chemical_potential(&ScalarField::constant(g, 0.5), &id, None, &p);
        assert!(half.values.iter().all(|&m| (m + 0.375).abs() < 1e-15));
    }

    #[test]
    fn well_state_converges_in_one_iteration() {
        let g = GridSpec::unit_square(8).unwrap();
        let p = ModelParams::default();
        let phi = ScalarField::constant(g, 1.0);
        let out =
            step_cahn_hilliard(&phi, &TensorField::identity(g, 2), &StaggeredVectorField::zeros(g), 0.1, &p).unwrap();
        assert_eq!(out.newton_iters, 1);
        assert_eq!(out.phi.values, phi.values);
        assert_eq!(out.mu.max_abs(), 0.0);
    }

    #[test]
    fn conserves_mass_with_flow() {
        let g = GridSpec::unit_square(16).unwrap();
        let mut p = ModelParams::default();
        p.eps = 0.05;
        p.mobility.b0 = 0.01;
        p.mobility.b1 = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = ScalarField::from_values(g, (0..g.n_cells()).map(|_| rng.random_range(-0.5..0.5)).collect()).unwrap();
        let f = TensorField::from_fn(g, 2, |x, y| Tensor::from_row_major(&[1.0 + 0.1 * x, 0.05 * y, 0.0, 1.0]));
        let v = velocity_from_stream_function(g, |x, y| 0.1 * (PI * x).sin().powi(2) * (PI * y).sin().powi(2));
        let out = step_cahn_hilliard(&phi, &f, &v, 1e-3, &p).unwrap();
        assert!((out.phi.integral() - phi.integral()).abs() < 1e-13);
        assert!(out.newton_iters > 1);
    }

    #[test]
    fn linear_mode_matches_backward_euler_symbol() {
        let g = GridSpec::new(64, 4, 1.0, 1.0).unwrap();
        let mut p = ModelParams::default();
        p.eps = 0.1;
        p.stiffness = StiffnessSpec::uniform();
        let amp = 1e-7;
        let phi = ScalarField::from_fn(g, |x, _| amp * (2.0 * PI * x).cos());
        let dt = 1e-4;
        let out =
            step_cahn_hilliard(&phi, &TensorField::identity(g, 2), &StaggeredVectorField::zeros(g), dt, &p).unwrap();
        let h = g.hx();
        let k2 = (2.0 - 2.0 * (2.0 * PI * h).cos()) / (h * h);
        let b0 = p.mobility.b0;
        let symbol = (1.0 + dt * b0 * k2 / p.eps) / (1.0 + dt * b0 * k2 * p.eps * k2);
        let ratio = out.phi.values[0] / phi.values[0];
        assert!((ratio - symbol).abs() < 1e-6, "{ratio} vs {symbol}");
    }

    #[test]
    fn decoupled_energy_never_increases() {
        let g = GridSpec::unit_square(16).unwrap();
        let mut p = ModelParams::default();
        p.eps = 0.08;
        p.stiffness = StiffnessSpec::uniform();
        let solver = CahnHilliardSolver::new(g, ChOptions::default()).unwrap();
        let id = TensorField::identity(g, 2);
        let zero = StaggeredVectorField::zeros(g);
        for (seed, dt) in [(1, 1e-3), (2, 1e-2), (3, 1e-1)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut phi =
                ScalarField::from_values(g, (0..g.n_cells()).map(|_| rng.random_range(-0.3..0.3)).collect()).unwrap();
            let mut e = ch_energy(&phi, p.eps);
            for _ in 0..10 {
                phi = solver.step(&phi, &id, &zero, dt, &p).unwrap().phi;
                let e_new = ch_energy(&phi, p.eps);
                assert!(e_new <= e + 1e-10 * e.abs(), "dt {dt}: {e} -> {e_new}");
                e = e_new;
            }
        }
    }
}
