//! Finite-difference checks of analytic derivatives.

use crate::cahn_hilliard::static_chemical_potential;
use crate::constitutive::{mooney_rivlin_piola, mooney_rivlin_w, neo_hookean_piola, neo_hookean_w};
use crate::diagnostics::total_energy;
use crate::error::Result;
use crate::field::{ScalarField, TensorField};
use crate::params::ModelParams;
use crate::tensor::{cofactor, determinant, frobenius, Tensor};

/// Errors of a finite-difference sequence and the observed convergence order.
#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(step)`.
    pub order: f64,
    /// Smallest error in the sequence.
    pub plateau: f64,
}

impl FdReport {
    fn new(steps: Vec<f64>, errors: Vec<f64>) -> Self {
        let order = fitted_order(&steps, &errors);
        let plateau = errors.iter().copied().fold(f64::INFINITY, f64::min);
        Self { steps, errors, order, plateau }
    }
}

/// Least-squares slope of `log e` against `log h`; NaN when fewer than two
/// positive errors are available.
pub fn fitted_order(steps: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        steps.iter().zip(errors).filter(|(_, e)| **e > 0.0).map(|(h, e)| (h.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Compares `<mu(phi, F), eta>` with central differences of the discrete
/// free energy along `eta`, one error per step in `h_list`.
pub fn fd_check_chemical_potential(
    phi: &ScalarField,
    f: &TensorField,
    eta: &ScalarField,
    params: &ModelParams,
    h_list: &[f64],
) -> FdReport {
    let mu = static_chemical_potential(phi, f, None, params);
    let analytic = mu.dot(eta);
    let errors = h_list
        .iter()
        .map(|&h| {
            let plus = total_energy(&phi.axpy(h, eta), f, params).total;
            let minus = total_energy(&phi.axpy(-h, eta), f, params).total;
            ((plus - minus) / (2.0 * h) - analytic).abs()
        })
        .collect();
    FdReport::new(h_list.to_vec(), errors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElasticModel {
    NeoHookean,
    MooneyRivlin,
}

/// Largest relative error of the analytic Piola stress against central
/// differences of the energy density.
#[derive(Clone, Debug, PartialEq)]
pub struct StressReport {
    pub samples: usize,
    pub max_rel_error: f64,
}

fn density(model: ElasticModel, phi: f64, f: &Tensor, params: &ModelParams) -> Result<f64> {
    match model {
        ElasticModel::NeoHookean => Ok(neo_hookean_w(phi, f, params)),
        ElasticModel::MooneyRivlin => mooney_rivlin_w(phi, f, params),
    }
}

fn stress(model: ElasticModel, phi: f64, f: &Tensor, params: &ModelParams) -> Result<Tensor> {
    match model {
        ElasticModel::NeoHookean => Ok(neo_hookean_piola(phi, f, params)),
        ElasticModel::MooneyRivlin => mooney_rivlin_piola(phi, f, params),
    }
}

pub fn fd_check_elastic_stress(
    phi: f64,
    samples: &[Tensor],
    params: &ModelParams,
    model: ElasticModel,
) -> Result<StressReport> {
    let mut max_rel_error = 0.0_f64;
    for f in samples {
        let d = f.dim();
        let analytic = stress(model, phi, f, params)?;
        let h = 1e-5 * f.max_abs().max(1.0);
        let numeric = Tensor::from_fn(d, |a, b| {
            let mut plus = *f;
            plus.set(a, b, f.get(a, b) + h);
            let mut minus = *f;
            minus.set(a, b, f.get(a, b) - h);
            match (density(model, phi, &plus, params), density(model, phi, &minus, params)) {
                (Ok(p), Ok(m)) => (p - m) / (2.0 * h),
                _ => f64::NAN,
            }
        });
        let diff = numeric - analytic;
        let scale = frobenius(&analytic, &analytic).sqrt().max(f64::MIN_POSITIVE);
        let rel = frobenius(&diff, &diff).sqrt() / scale;
        max_rel_error = if rel.is_nan() { f64::NAN } else { max_rel_error.max(rel) };
    }
    Ok(StressReport { samples: samples.len(), max_rel_error })
}

/// `d/ds det(F + s E)` at `s = 0` against `cof F : E`, one error per step.
pub fn fd_check_det_cofactor(f: &Tensor, direction: &Tensor, h_list: &[f64]) -> FdReport {
    let analytic = frobenius(&cofactor(f), direction);
    let errors = h_list
        .iter()
        .map(|&h| {
            let plus = determinant(&(*f + direction.scale(h)));
            let minus = determinant(&(*f - direction.scale(h)));
            ((plus - minus) / (2.0 * h) - analytic).abs()
        })
        .collect();
    FdReport::new(h_list.to_vec(), errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn fitted_order_of_exact_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((fitted_order(&h, &e) - 2.0).abs() < 1e-12);
        assert!(fitted_order(&[0.1], &[1.0]).is_nan());
    }

    #[test]
    fn well_state_has_zero_derivative_both_ways() {
        let g = GridSpec::unit_square(8).unwrap();
        let p = ModelParams::default();
        let phi = ScalarField::constant(g, 1.0);
        let eta = ScalarField::zeros(g);
        let r = fd_check_chemical_potential(&phi, &TensorField::identity(g, 2), &eta, &p, &[0.1, 0.05]);
        assert!(r.errors.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn identity_neo_hookean_stress_is_exact() {
        let p = ModelParams::default();
        let r = fd_check_elastic_stress(0.3, &[Tensor::identity(3)], &p, ElasticModel::NeoHookean).unwrap();
        assert!(r.max_rel_error < 1e-9, "{}", r.max_rel_error);
    }

    #[test]
    fn planar_determinant_is_quadratic() {
        // central differences of a quadratic are exact
        let f = Tensor::from_row_major(&[1.2, 0.3, -0.4, 0.9]);
        let e = Tensor::from_row_major(&[0.5, -1.0, 0.25, 2.0]);
        let r = fd_check_det_cofactor(&f, &e, &[0.1, 0.01]);
        assert!(r.errors.iter().all(|x| *x < 1e-13));
    }
}
