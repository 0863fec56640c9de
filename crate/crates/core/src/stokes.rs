//! Quasi-static Stokes problem `-nu lap v + grad q = force`, `div v = 0`,
//! no-slip walls, mean-zero pressure.

use crate::constitutive::{eulerian_elastic_stress, neo_hookean_dphi, psi_difference_quotient, psi_prime};
use crate::error::{Error, Result};
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;
use crate::linsolve::SparseFactor;
use crate::ops::sparse::{assemble_grad, assemble_vector_laplacian, Layout, OperatorMatrix, TripletBuilder};
use crate::ops::{div_fc, face_average, grad_cc, tensor_divergence};
use crate::params::ModelParams;

/// Face-staggered right-hand side of the momentum equation.
pub type ForceField = StaggeredVectorField;

/// Which algorithm solves the saddle-point system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StokesMethod {
    /// Sparse LU of the saddle matrix with one pressure value pinned.
    #[default]
    Direct,
    /// Conjugate gradients on the pressure Schur complement, with a Cholesky
    /// factorization of the velocity block.
    SchurCg,
}

/// Capillary plus elastic forcing
/// `mu grad phi - (c/2) f'(phi) (F:F - d) grad phi + div(c f(phi) F F^T)`.
///
/// Cell scalars are averaged onto faces, except that the double-well part of
/// `mu` is sampled through the exact difference quotient of `psi`, so that
/// part of the force is an exact discrete gradient. The elastic term uses
/// [`tensor_divergence`], the adjoint of the discrete velocity gradient.
pub fn assemble_force(phi: &ScalarField, mu: &ScalarField, f: &TensorField, params: &ModelParams) -> ForceField {
    let g = phi.grid;
    let eps = params.eps;
    let coupling: Vec<f64> = (0..g.n_cells())
        .map(|c| {
            let p = phi.values[c];
            mu.values[c] - psi_prime(p) / eps - neo_hookean_dphi(p, &f.get(c), params)
        })
        .collect();
    let coupling = ScalarField { grid: g, values: coupling };
    let face = face_average(&coupling);
    let grad = grad_cc(phi);
    let mut force = StaggeredVectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let k = g.u_index(i, j);
            let bulk = psi_difference_quotient(phi.at(i - 1, j), phi.at(i, j)) / eps;
            force.u[k] = (face.u[k] + bulk) * grad.u[k];
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.w_index(i, j);
            let bulk = psi_difference_quotient(phi.at(i, j - 1), phi.at(i, j)) / eps;
            force.w[k] = (face.w[k] + bulk) * grad.w[k];
        }
    }
    let sigma = elastic_stress_field(phi, f, params);
    let div_sigma = tensor_divergence(&sigma);
    force.axpy(1.0, &div_sigma)
}

/// Cellwise `c f(phi) F F^T`.
pub fn elastic_stress_field(phi: &ScalarField, f: &TensorField, params: &ModelParams) -> TensorField {
    let mut sigma = TensorField::zeros(phi.grid, f.d);
    for c in 0..phi.grid.n_cells() {
        sigma.set(c, &eulerian_elastic_stress(phi.values[c], &f.get(c), params));
    }
    sigma
}

/// Max-norm of the discrete divergence.
pub fn div_residual(v: &StaggeredVectorField) -> f64 {
    div_fc(v).max_abs()
}

/// Saddle-point solver for one `(grid, nu)` pair; the factorization is built
/// once and reused for every right-hand side.
pub struct StokesSolver {
    grid: GridSpec,
    nu: f64,
    tol: f64,
    method: StokesMethod,
    system: OperatorMatrix,
    factor: SparseFactor,
    grad: OperatorMatrix,
}

impl StokesSolver {
    pub fn new(grid: GridSpec, nu: f64) -> Result<Self> {
        Self::with_method(grid, nu, StokesMethod::Direct, 1e-10)
    }

    pub fn with_method(grid: GridSpec, nu: f64, method: StokesMethod, tol: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::Precondition(format!("viscosity must be positive, got {nu}")));
        }
        let system = assemble_saddle_system(&grid, nu);
        let grad = assemble_grad(&grid);
        let factor = match method {
            StokesMethod::Direct => SparseFactor::lu(pinned_system(&grid, &system))?,
            StokesMethod::SchurCg => SparseFactor::cholesky(velocity_block(&grid, nu))?,
        };
        Ok(Self { grid, nu, tol, method, system, factor, grad })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// The assembled saddle matrix `[nu A, G, 0; G^T, 0, 1; 0, 1^T, 0]`.
    pub fn system(&self) -> &OperatorMatrix {
        &self.system
    }

    pub fn solve(&self, force: &ForceField) -> Result<(StaggeredVectorField, ScalarField)> {
        if force.grid != self.grid {
            return Err(Error::Precondition("force lives on a different grid".into()));
        }
        let (mut v, mut q) = match self.method {
            StokesMethod::Direct => self.solve_direct(force)?,
            StokesMethod::SchurCg => self.solve_schur(force)?,
        };
        v.enforce_no_slip();
        let mean = q.mean();
        q.values.iter_mut().for_each(|x| *x -= mean);
        Ok((v, q))
    }

    /// Factorizes the pinned equivalent of [`Self::system`]; the caller
    /// shifts the pressure to mean zero afterwards.
    fn solve_direct(&self, force: &ForceField) -> Result<(StaggeredVectorField, ScalarField)> {
        let nv = self.grid.n_u() + self.grid.n_w();
        let mut rhs = vec![0.0; self.system.nrows - 1];
        let mut f = force.clone();
        f.enforce_no_slip();
        rhs[..nv].copy_from_slice(&f.to_vec());
        let x = self.factor.solve(&rhs, self.tol)?;
        let v = StaggeredVectorField::from_vec(self.grid, &x[..nv]);
        let q = ScalarField::from_values(self.grid, x[nv..nv + self.grid.n_cells()].to_vec())?;
        Ok((v, q))
    }

    /// Uzawa-type CG on `S q = G^T A^{-1} f` with `S = G^T A^{-1} G`, posed
    /// on mean-zero pressures. `A = -nu lap` (boundary rows identity).
    fn solve_schur(&self, force: &ForceField) -> Result<(StaggeredVectorField, ScalarField)> {
        let n = self.grid.n_cells();
        let mut f = force.clone();
        f.enforce_no_slip();
        let fv = f.to_vec();
        let gt = self.grad.transpose();
        let inner_tol = 1e-13;
        let apply_s = |p: &[f64]| -> Result<Vec<f64>> {
            let gp = self.grad.matvec(p);
            let y = self.factor.solve(&gp, inner_tol)?;
            Ok(gt.matvec(&y))
        };
        let project = |x: &mut Vec<f64>| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter_mut().for_each(|v| *v -= m);
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

        let a_inv_f = self.factor.solve(&fv, inner_tol)?;
        let mut r = gt.matvec(&a_inv_f);
        project(&mut r);
        let mut q = vec![0.0; n];
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let r0 = rr.sqrt();
        let target = self.tol * r0.max(f64::MIN_POSITIVE);
        let max_iter = 10 * n;
        let mut converged = r0 == 0.0;
        for _ in 0..max_iter {
            if converged {
                break;
            }
            let mut sp = apply_s(&p)?;
            project(&mut sp);
            let alpha = rr / dot(&p, &sp);
            q.iter_mut().zip(&p).for_each(|(qi, pi)| *qi += alpha * pi);
            r.iter_mut().zip(&sp).for_each(|(ri, si)| *ri -= alpha * si);
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= target {
                converged = true;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        }
        if !converged {
            return Err(Error::LinearSolve { residual: rr.sqrt() / r0, tolerance: self.tol });
        }
        // v = A^{-1} (f - G q)
        let gq = self.grad.matvec(&q);
        let rhs: Vec<f64> = fv.iter().zip(&gq).map(|(a, b)| a - b).collect();
        let v = self.factor.solve(&rhs, inner_tol)?;
        Ok((StaggeredVectorField::from_vec(self.grid, &v), ScalarField::from_values(self.grid, q)?))
    }
}

/// `-nu lap` on interior faces, identity on boundary faces.
fn velocity_block(grid: &GridSpec, nu: f64) -> OperatorMatrix {
    let lap = assemble_vector_laplacian(grid);
    let nv = lap.nrows;
    let mut b = TripletBuilder::new(nv, nv);
    b.push_block(&lap, 0, 0, -nu);
    for_each_boundary_face(grid, |k| b.push(k, k, 1.0));
    b.build(Layout::Face, Layout::Face)
}

fn for_each_boundary_face(grid: &GridSpec, mut f: impl FnMut(usize)) {
    let nu = grid.n_u();
    for j in 0..grid.ny {
        f(grid.u_index(0, j));
        f(grid.u_index(grid.nx, j));
    }
    for i in 0..grid.nx {
        f(nu + grid.w_index(i, 0));
        f(nu + grid.w_index(i, grid.ny));
    }
}

/// The saddle system without the multiplier, with the first pressure
/// unknown fixed to zero by a symmetric identity row and column.
///
/// The dense multiplier row makes the sparse LU fill in badly; the pinned
/// matrix has the same velocity solution, and its pressure differs from the
/// mean-zero one by a constant. The continuity equation of the pinned cell is
/// implied by the others because the divergence of a no-slip field sums to
/// zero.
fn pinned_system(grid: &GridSpec, system: &OperatorMatrix) -> OperatorMatrix {
    let nv = grid.n_u() + grid.n_w();
    let n = nv + grid.n_cells();
    let mut b = TripletBuilder::new(n, n);
    for r in 0..n {
        for (c, v) in system.row(r) {
            if c < n && r != nv && c != nv {
                b.push(r, c, v);
            }
        }
    }
    b.push(nv, nv, 1.0);
    b.build(Layout::Mixed, Layout::Mixed)
}

/// Symmetric saddle matrix over `[u; w; q; lagrange]`.
fn assemble_saddle_system(grid: &GridSpec, nu: f64) -> OperatorMatrix {
    let block = velocity_block(grid, nu);
    let grad = assemble_grad(grid);
    let nv = block.nrows;
    let np = grid.n_cells();
    let n = nv + np + 1;
    let mut b = TripletBuilder::new(n, n);
    b.push_block(&block, 0, 0, 1.0);
    b.push_block(&grad, 0, nv, 1.0);
    b.push_block(&grad.transpose(), nv, 0, 1.0);
    for k in 0..np {
        b.push(nv + k, nv + np, 1.0);
        b.push(nv + np, nv + k, 1.0);
    }
    b.build(Layout::Mixed, Layout::Mixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::max_abs_diff;
    use crate::ops::vector_laplacian_dirichlet;
    use crate::tensor::Tensor;
    use std::f64::consts::PI;

    #[test]
    fn zero_force_gives_zero_solution() {
        let g = GridSpec::unit_square(8).unwrap();
        let s = StokesSolver::new(g, 1.0).unwrap();
        let (v, q) = s.solve(&StaggeredVectorField::zeros(g)).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        assert_eq!(q.max_abs(), 0.0);
    }

    #[test]
    fn gradient_forcing_goes_into_pressure() {
        let g = GridSpec::new(16, 12, 1.0, 0.8).unwrap();
        let p_star = ScalarField::from_fn(g, |x, y| (PI * x / g.lx).cos() * (PI * y / g.ly).cos());
        let s = StokesSolver::new(g, 0.7).unwrap();
        let (v, q) = s.solve(&grad_cc(&p_star)).unwrap();
        assert!(v.max_abs() < 1e-10, "{}", v.max_abs());
        let mean = p_star.mean();
        let expected = p_star.map(|p| p - mean);
        assert!(max_abs_diff(&q.values, &expected.values) < 1e-9);
        assert!(q.mean().abs() < 1e-14);
    }

    #[test]
    fn energy_identity_and_divergence_free() {
        let g = GridSpec::unit_square(12).unwrap();
        let s = StokesSolver::new(g, 2.0).unwrap();
        let force = StaggeredVectorField::from_fn(g, |x, y| (5.0 * x * y).sin(), |x, y| x - y * y);
        let (v, _) = s.solve(&force).unwrap();
        assert!(div_residual(&v) < 1e-10);
        assert!(v.boundary_is_zero());
        let dissipation = -2.0 * vector_laplacian_dirichlet(&v).dot(&v);
        let work = force.dot(&v);
        assert!((dissipation - work).abs() < 1e-8 * work.abs());
    }

    #[test]
    fn schur_cg_agrees_with_direct() {
        let g = GridSpec::unit_square(10).unwrap();
        let force = StaggeredVectorField::from_fn(g, |x, y| (3.0 * y).cos() * x, |x, _| x.sin());
        let direct = StokesSolver::new(g, 1.0).unwrap().solve(&force).unwrap();
        let schur = StokesSolver::with_method(g, 1.0, StokesMethod::SchurCg, 1e-12).unwrap().solve(&force).unwrap();
        assert!(max_abs_diff(&direct.0.to_vec(), &schur.0.to_vec()) < 1e-9);
        assert!(max_abs_diff(&direct.1.values, &schur.1.values) < 1e-8);
    }

    #[test]
    fn uniform_state_has_no_force() {
        let g = GridSpec::unit_square(8).unwrap();
        let p = ModelParams::default();
        let phi = ScalarField::constant(g, 0.3);
        let mu = ScalarField::constant(g, 1.7);
        let f = TensorField::uniform(g, &Tensor::from_row_major(&[1.2, 0.1, -0.3, 0.9]));
        assert!(assemble_force(&phi, &mu, &f, &p).max_abs() < 1e-12);
    }

    #[test]
    fn identity_stress_force_is_a_gradient() {
        let g = GridSpec::unit_square(8).unwrap();
        let p = ModelParams::default();
        let phi = ScalarField::from_fn(g, |x, y| (4.0 * x).sin() * y);
        let f = TensorField::identity(g, 2);
        let sigma = elastic_stress_field(&phi, &f, &p);
        let cf = phi.map(|s| p.c_elastic * p.stiffness.value(s));
        let expected = grad_cc(&cf);
        let got = tensor_divergence(&sigma);
        assert!(max_abs_diff(&got.to_vec(), &expected.to_vec()) < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_viscosity() {
        let g = GridSpec::unit_square(4).unwrap();
        assert!(StokesSolver::new(g, 0.0).is_err());
    }
}
