//! Capillary force in stress form, `-eps div(grad phi (x) grad phi)`, and
//! its equivalence with the `mu grad phi` form used by the solver.
//!
//! The stress lives at cell centers (normal components, from cell-averaged
//! gradients) and at cell corners (shear, from the two adjacent face
//! gradients averaged onto the corner). With these locations the two forms
//! differ by the discrete gradient of `psi/eps + (eps/2)|grad phi|^2`, where
//! `|grad phi|^2` is averaged from the four faces of each cell.

use crate::cahn_hilliard::static_chemical_potential;
use crate::constitutive::psi;
use crate::error::Result;
use crate::field::{max_abs_diff, ScalarField, StaggeredVectorField, TensorField};
use crate::ops::{grad_cc, tensor_divergence};
use crate::params::ModelParams;
use crate::stokes::{assemble_force, elastic_stress_field, StokesSolver};

/// Stress-form force `-eps div(T) + div(c f F F^T)`.
pub fn korteweg_force(phi: &ScalarField, f: &TensorField, params: &ModelParams) -> StaggeredVectorField {
    let g = phi.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (hx, hy) = (g.hx(), g.hy());
    let grad = grad_cc(phi);
    let gx = |i: usize, j: usize| grad.u[g.u_index(i, j)];
    let gy = |i: usize, j: usize| grad.w[g.w_index(i, j)];

    let txx: Vec<f64> = (0..g.n_cells())
        .map(|c| {
            let (i, j) = (c % nx, c / nx);
            (0.5 * (gx(i, j) + gx(i + 1, j))).powi(2)
        })
        .collect();
    let tyy: Vec<f64> = (0..g.n_cells())
        .map(|c| {
            let (i, j) = (c % nx, c / nx);
            (0.5 * (gy(i, j) + gy(i, j + 1))).powi(2)
        })
        .collect();
    // corner (I, J) sits at (I hx, J hy); faces outside the grid carry no gradient
    let txy = |ci: usize, cj: usize| -> f64 {
        let gy_left = if ci > 0 { gy(ci - 1, cj) } else { 0.0 };
        let gy_right = if ci < nx { gy(ci, cj) } else { 0.0 };
        let gx_below = if cj > 0 { gx(ci, cj - 1) } else { 0.0 };
        let gx_above = if cj < ny { gx(ci, cj) } else { 0.0 };
        0.25 * (gy_left + gy_right) * (gx_below + gx_above)
    };

    let eps = params.eps;
    let mut out = StaggeredVectorField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            let dxx = (txx[g.cell(i, j)] - txx[g.cell(i - 1, j)]) / hx;
            let dxy = (txy(i, j + 1) - txy(i, j)) / hy;
            out.u[g.u_index(i, j)] = -eps * (dxx + dxy);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let dxy = (txy(i + 1, j) - txy(i, j)) / hx;
            let dyy = (tyy[g.cell(i, j)] - tyy[g.cell(i, j - 1)]) / hy;
            out.w[g.w_index(i, j)] = -eps * (dxy + dyy);
        }
    }
    out.axpy(1.0, &tensor_divergence(&elastic_stress_field(phi, f, params)))
}

/// `psi/eps + (eps/2)|grad phi|^2` with the squared gradient averaged from
/// the four faces of each cell.
pub fn korteweg_potential(phi: &ScalarField, params: &ModelParams) -> ScalarField {
    let g = phi.grid;
    let grad = grad_cc(phi);
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let sq = grad.u[g.u_index(i, j)].powi(2)
                + grad.u[g.u_index(i + 1, j)].powi(2)
                + grad.w[g.w_index(i, j)].powi(2)
                + grad.w[g.w_index(i, j + 1)].powi(2);
            let c = g.cell(i, j);
            out.values[c] = psi(phi.values[c]) / params.eps + 0.5 * params.eps * 0.5 * sq;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct KortewegReport {
    /// Largest face-velocity difference between the two Stokes solutions.
    pub velocity_difference: f64,
    /// Largest deviation of the force difference from the potential gradient.
    pub force_gap: f64,
    /// Largest deviation of the pressure difference from the mean-free potential.
    pub pressure_gap: f64,
    /// Largest velocity, for scale.
    pub velocity_scale: f64,
}

/// Solves Stokes with both force forms and compares.
pub fn korteweg_identity_check(phi: &ScalarField, f: &TensorField, params: &ModelParams) -> Result<KortewegReport> {
    let mu = static_chemical_potential(phi, f, None, params);
    let chemical = assemble_force(phi, &mu, f, params);
    let stress = korteweg_force(phi, f, params);
    let potential = korteweg_potential(phi, params);
    let expected = grad_cc(&potential);
    let force_gap = max_abs_diff(&chemical.axpy(-1.0, &stress).to_vec(), &expected.to_vec());

    let solver = StokesSolver::with_method(phi.grid, params.nu, Default::default(), 1e-13)?;
    let (va, qa) = solver.solve(&chemical)?;
    let (vb, qb) = solver.solve(&stress)?;
    let mean = potential.mean();
    let pressure_gap = max_abs_diff(&qa.axpy(-1.0, &qb).values, &potential.map(|p| p - mean).values);
    Ok(KortewegReport {
        velocity_difference: max_abs_diff(&va.to_vec(), &vb.to_vec()),
        force_gap,
        pressure_gap,
        velocity_scale: va.max_abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::tensor::Tensor;

    #[test]
    fn uniform_phase_has_no_capillary_force() {
        let g = GridSpec::unit_square(8).unwrap();
        let p = ModelParams::default();
        let phi = ScalarField::constant(g, 0.2);
        let f = TensorField::identity(g, 2);
        assert_eq!(korteweg_force(&phi, &f, &p).max_abs(), 0.0);
    }

    #[test]
    fn forms_differ_by_a_gradient_on_a_rectangle() {
        let g = GridSpec::new(14, 10, 1.3, 0.8).unwrap();
        let p = ModelParams { eps: 0.1, ..ModelParams::default() };
        let phi = ScalarField::from_fn(g, |x, y| (3.0 * x - 2.0 * y + 0.3).sin() * (x * y).cos());
        let f = TensorField::from_fn(g, 2, |x, y| Tensor::from_row_major(&[1.0 + 0.1 * x, 0.2 * y, -0.1, 1.0]));
        let r = korteweg_identity_check(&phi, &f, &p).unwrap();
        assert!(r.force_gap < 1e-10, "{r:?}");
        assert!(r.velocity_difference < 1e-10, "{r:?}");
        assert!(r.pressure_gap < 1e-8, "{r:?}");
    }
}
