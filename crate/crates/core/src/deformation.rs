//! One time step of the regularized deformation-gradient transport
//! `F_t + (v.grad)F - (grad v)F - lambda lap(f(phi) F) = 0`.
//!
//! Advection and stretching are explicit. Diffusion is implicit in the
//! product `G = f(phi^n) F^{n+1}`, which turns each component into the SPD
//! system `(diag(1 / (f dt)) - lambda L) G = rhs`.

use crate::error::{Error, Result};
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;
use crate::linsolve::SparseFactor;
use crate::ops::sparse::{assemble_laplacian, Layout, TripletBuilder};
use crate::ops::{advect_tensor_with, tensor_product_field, velocity_gradient, AdvectionScheme};
use crate::params::ModelParams;

/// Factorized transport operator for frozen `(phi^n, dt, lambda)`.
pub struct TransportSystem {
    grid: GridSpec,
    dt: f64,
    lambda: f64,
    f: Vec<f64>,
    factor: SparseFactor,
    tol: f64,
}

impl TransportSystem {
    pub fn new(phi_n: &ScalarField, dt: f64, params: &ModelParams) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        if !(params.lambda >= 0.0) {
            return Err(Error::Precondition(format!("lambda must be >= 0, got {}", params.lambda)));
        }
        let grid = phi_n.grid;
        let f: Vec<f64> = phi_n.values.iter().map(|&s| params.stiffness.value(s)).collect();
        let lap = assemble_laplacian(&grid, None);
        let n = grid.n_cells();
        let mut b = TripletBuilder::new(n, n);
        b.push_block(&lap, 0, 0, -params.lambda);
        for (k, fk) in f.iter().enumerate() {
            b.push(k, k, 1.0 / (fk * dt));
        }
        let factor = SparseFactor::cholesky(b.build(Layout::Cell, Layout::Cell))?;
        Ok(Self { grid, dt, lambda: params.lambda, f, factor, tol: 1e-10 })
    }

    /// True when this factorization is valid for the given frozen data.
    pub fn matches(&self, phi_n: &ScalarField, dt: f64, params: &ModelParams) -> bool {
        phi_n.grid == self.grid
            && dt == self.dt
            && params.lambda == self.lambda
            && phi_n.values.iter().zip(&self.f).all(|(&s, &fk)| params.stiffness.value(s) == fk)
    }

    /// Advances `f_n` given the explicit transport terms: `advection` is
    /// `div(v F^n)` and `grad_v` the velocity gradient multiplying `F^n`.
    pub fn step_with_terms(
        &self,
        f_n: &TensorField,
        advection: &TensorField,
        grad_v: &TensorField,
    ) -> Result<TensorField> {
        if f_n.grid != self.grid {
            return Err(Error::Precondition("deformation field lives on a different grid".into()));
        }
        let stretch = tensor_product_field(grad_v, f_n);
        let n = self.grid.n_cells();
        let mut out = TensorField::zeros(self.grid, f_n.d);
        for comp in 0..f_n.d * f_n.d {
            let rhs: Vec<f64> = (0..n)
                .map(|k| f_n.comps[comp][k] / self.dt - advection.comps[comp][k] + stretch.comps[comp][k])
                .collect();
            let g = self.factor.solve(&rhs, self.tol)?;
            out.comps[comp] = g.iter().zip(&self.f).map(|(gk, fk)| gk / fk).collect();
        }
        Ok(out)
    }

    pub fn step(&self, f_n: &TensorField, v: &StaggeredVectorField, scheme: AdvectionScheme) -> Result<TensorField> {
        if f_n.d != 2 {
            return Err(Error::Precondition("transport is two-dimensional: F must be 2x2".into()));
        }
        let adv = advect_tensor_with(v, f_n, scheme);
        let grad_v = velocity_gradient(v);
        self.step_with_terms(f_n, &adv, &grad_v)
    }
}

pub fn step_deformation(
    f_n: &TensorField,
    v: &StaggeredVectorField,
    phi_n: &ScalarField,
    dt: f64,
    params: &ModelParams,
) -> Result<TensorField> {
    step_deformation_with(f_n, v, phi_n, dt, params, AdvectionScheme::default())
}

pub fn step_deformation_with(
    f_n: &TensorField,
    v: &StaggeredVectorField,
    phi_n: &ScalarField,
    dt: f64,
    params: &ModelParams,
    scheme: AdvectionScheme,
) -> Result<TensorField> {
    TransportSystem::new(phi_n, dt, params)?.step(f_n, v, scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::velocity_from_stream_function;
    use crate::params::StiffnessSpec;
    use crate::tensor::Tensor;
    use std::f64::consts::PI;

    #[test]
    fn uniform_state_is_stationary() {
        let g = GridSpec::unit_square(8).unwrap();
        let p = ModelParams::default();
        let f = TensorField::uniform(g, &Tensor::from_row_major(&[1.1, 0.2, -0.1, 0.95]));
        let phi = ScalarField::constant(g, 0.4);
        let v = StaggeredVectorField::zeros(g);
        let out = step_deformation(&f, &v, &phi, 0.01, &p).unwrap();
        assert!(out.max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn cosine_mode_decays_with_backward_euler_factor() {
        let g = GridSpec::new(128, 4, 1.0, 1.0).unwrap();
        let p = ModelParams { lambda: 0.05, ..ModelParams::default() };
        let phi = ScalarField::constant(g, 0.2);
        let cf = p.stiffness.value(0.2);
        let amp = 1e-2;
        let f = TensorField::from_fn(g, 2, |x, _| Tensor::from_row_major(&[1.0 + amp * (PI * x).cos(), 0.0, 0.0, 1.0]));
        let dt = 0.01;
        let out = step_deformation(&f, &StaggeredVectorField::zeros(g), &phi, dt, &p).unwrap();
        // discrete symbol of the Neumann Laplacian for the first cosine mode
        let h = g.hx();
        let k2 = (2.0 - 2.0 * (PI * h).cos()) / (h * h);
        let factor = 1.0 / (1.0 + p.lambda * cf * k2 * dt);
        let exact_continuous = 1.0 / (1.0 + p.lambda * cf * PI * PI * dt);
        for c in 0..g.n_cells() {
            let (x, _) = g.cell_center(c % g.nx, c / g.nx);
            let pert = out.comps[0][c] - 1.0;
            assert!((pert - factor * amp * (PI * x).cos()).abs() < 1e-12);
        }
        assert!((factor - exact_continuous).abs() < 1e-3);
    }

    #[test]
    fn linear_in_initial_deformation() {
        let g = GridSpec::unit_square(8).unwrap();
        let p = ModelParams::default();
        let phi = ScalarField::from_fn(g, |x, y| (3.0 * x - y).sin());
        let v = velocity_from_stream_function(g, |x, y| (PI * x).sin().powi(2) * (PI * y).sin().powi(2));
        let a = TensorField::from_fn(g, 2, |x, y| Tensor::from_row_major(&[x, y, 1.0, x * y]));
        let b = TensorField::from_fn(g, 2, |x, y| Tensor::from_row_major(&[y, 2.0, x - y, 1.0]));
        let mut mix = TensorField::zeros(g, 2);
        for c in 0..4 {
            mix.comps[c] = a.comps[c].iter().zip(&b.comps[c]).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        }
        let sys = TransportSystem::new(&phi, 0.003, &p).unwrap();
        let s = AdvectionScheme::Centered;
        let (sa, sb, sm) = (sys.step(&a, &v, s).unwrap(), sys.step(&b, &v, s).unwrap(), sys.step(&mix, &v, s).unwrap());
        for c in 0..4 {
            for k in 0..g.n_cells() {
                let expect = 2.0 * sa.comps[c][k] - 0.5 * sb.comps[c][k];
                assert!((sm.comps[c][k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skew_gradient_rotates_at_first_order() {
        let g = GridSpec::unit_square(4).unwrap();
        let p = ModelParams { lambda: 0.0, stiffness: StiffnessSpec::uniform(), ..ModelParams::default() };
        let phi = ScalarField::constant(g, 0.0);
        let w = Tensor::from_row_major(&[0.0, 1.0, -1.0, 0.0]);
        let grad_v = TensorField::uniform(g, &w);
        let zero = TensorField::zeros(g, 2);
        let t_end = 0.5;
        let mut errs = Vec::new();
        for steps in [50, 100, 200] {
            let dt = t_end / steps as f64;
            let sys = TransportSystem::new(&phi, dt, &p).unwrap();
            let mut f = TensorField::identity(g, 2);
            for _ in 0..steps {
                f = sys.step_with_terms(&f, &zero, &grad_v).unwrap();
            }
            let (c, s) = (t_end.cos(), t_end.sin());
            let exact = Tensor::from_row_major(&[c, s, -s, c]);
            errs.push((f.get(0) - exact).max_abs());
        }
        for pair in errs.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let g = GridSpec::unit_square(4).unwrap();
        let phi = ScalarField::zeros(g);
        assert!(TransportSystem::new(&phi, 0.0, &ModelParams::default()).is_err());
    }
}
