//! Closed-form constitutive functions: the double-well potential and its
//! convex split, stiffness `f`, mobility `b`, and the Neo-Hookean and
//! Mooney-Rivlin energy densities with their stresses.

use crate::error::{Error, Result};
use crate::params::{smoothstep, MobilityProfile, MobilitySpec, ModelParams, StiffnessSpec};
use crate::tensor::{cofactor, determinant, frobenius, Tensor};

/// The quartic double well `psi(s) = (s^2 - 1)^2 / 4`, wells at `+-1`.
#[inline]
pub fn psi(s: f64) -> f64 {
    let a = s * s - 1.0;
    0.25 * a * a
}

#[inline]
pub fn psi_prime(s: f64) -> f64 {
    s * s * s - s
}

/// Convex part `(s^4 + 1) / 4`.
#[inline]
pub fn psi_plus(s: f64) -> f64 {
    0.25 * (s * s * s * s + 1.0)
}

#[inline]
pub fn psi_plus_prime(s: f64) -> f64 {
    s * s * s
}

#[inline]
pub fn psi_plus_second(s: f64) -> f64 {
    3.0 * s * s
}

/// Concave part `-s^2 / 2`.
#[inline]
pub fn psi_minus(s: f64) -> f64 {
    -0.5 * s * s
}

#[inline]
pub fn psi_minus_prime(s: f64) -> f64 {
    -s
}

#[inline]
pub fn psi_minus_second(_s: f64) -> f64 {
    -1.0
}

/// Exact difference quotient `(psi(b) - psi(a)) / (b - a)`, continuous
/// across `a = b` where it equals `psi'(a)`.
#[inline]
pub fn psi_difference_quotient(a: f64, b: f64) -> f64 {
    0.25 * (a + b) * (a * a + b * b) - 0.5 * (a + b)
}

#[inline]
pub fn stiffness_f(s: f64, spec: &StiffnessSpec) -> f64 {
    spec.value(s)
}

#[inline]
pub fn stiffness_f_prime(s: f64, spec: &StiffnessSpec) -> f64 {
    spec.derivative(s)
}

/// Mobility `b(s)`; the smoothstep profile shares the stiffness window.
#[inline]
pub fn mobility_b(s: f64, spec: &MobilitySpec, window: &StiffnessSpec) -> f64 {
    match spec.profile {
        MobilityProfile::Constant => spec.b0,
        MobilityProfile::Smoothstep => {
            let x = (s - window.phi_lo) / (window.phi_hi - window.phi_lo);
            spec.b0 + (spec.b1 - spec.b0) * smoothstep(x)
        }
    }
}

/// `w = (c/2) f(phi) (F : F - d)` with `d` the tensor dimension of `F`.
pub fn neo_hookean_w(phi: f64, f: &Tensor, params: &ModelParams) -> f64 {
    let d = f.dim() as f64;
    0.5 * params.c_elastic * params.stiffness.value(phi) * (frobenius(f, f) - d)
}

/// `dw/dF = c f(phi) F`.
pub fn neo_hookean_piola(phi: f64, f: &Tensor, params: &ModelParams) -> Tensor {
    f.scale(params.c_elastic * params.stiffness.value(phi))
}

/// `dw/dphi = (c/2) f'(phi) (F : F - d)`.
pub fn neo_hookean_dphi(phi: f64, f: &Tensor, params: &ModelParams) -> f64 {
    let d = f.dim() as f64;
    0.5 * params.c_elastic * params.stiffness.derivative(phi) * (frobenius(f, f) - d)
}

/// Volumetric penalty `h(J) = J^2/2 - ln J`: convex, singular as `J -> 0+`,
/// stress free at `J = 1`.
#[inline]
pub fn volumetric_h(j: f64) -> f64 {
    0.5 * j * j - j.ln()
}

#[inline]
pub fn volumetric_h_prime(j: f64) -> f64 {
    j - 1.0 / j
}

fn require_positive_det(f: &Tensor) -> Result<f64> {
    if f.dim() != 3 {
        return Err(Error::Precondition(format!("Mooney-Rivlin needs a 3x3 tensor, got {}x{}", f.dim(), f.dim())));
    }
    let det = determinant(f);
    if !(det > 0.0) {
        return Err(Error::Domain { det });
    }
    Ok(det)
}

/// Mooney-Rivlin density with `g = f`:
/// `(c1/2) f (F:F - 3) + (c2/2) f (cof F : cof F - 3) + c3 h(det F)`.
pub fn mooney_rivlin_w(phi: f64, f: &Tensor, params: &ModelParams) -> Result<f64> {
    let det = require_positive_det(f)?;
    let fs = params.stiffness.value(phi);
    let cof = cofactor(f);
    Ok(0.5 * params.c_elastic * fs * (frobenius(f, f) - 3.0)
        + 0.5 * params.c2 * fs * (frobenius(&cof, &cof) - 3.0)
        + params.c3 * volumetric_h(det))
}

/// First Piola stress of [`mooney_rivlin_w`]:
/// `c1 f F + c2 g [(cof:cof) F^{-T} - cof cof^T F^{-T}] + c3 h'(J) J F^{-T}`.
pub fn mooney_rivlin_piola(phi: f64, f: &Tensor, params: &ModelParams) -> Result<Tensor> {
    let det = require_positive_det(f)?;
    let fs = params.stiffness.value(phi);
    let cof = cofactor(f);
    let f_inv_t = cof.scale(1.0 / det);
    let cof_sq = frobenius(&cof, &cof);
    let cofactor_term = f_inv_t.scale(cof_sq) - cof.matmul(&cof.transpose()).matmul(&f_inv_t);
    Ok(f.scale(params.c_elastic * fs)
        + cofactor_term.scale(params.c2 * fs)
        + f_inv_t.scale(params.c3 * volumetric_h_prime(det) * det))
}

/// Eulerian stress `c f(phi) F F^T` whose divergence drives the flow.
pub fn eulerian_elastic_stress(phi: f64, f: &Tensor, params: &ModelParams) -> Tensor {
    f.matmul(&f.transpose()).scale(params.c_elastic * params.stiffness.value(phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_stiffness() -> ModelParams {
        ModelParams { stiffness: StiffnessSpec::uniform(), ..ModelParams::default() }
    }

    #[test]
    fn double_well_values() {
        assert_eq!(psi(1.0), 0.0);
        assert_eq!(psi(-1.0), 0.0);
        assert_eq!(psi(0.0), 0.25);
        assert_eq!(psi_prime(0.5), -0.375);
        for &s in &[-2.3, -0.7, 0.0, 0.4, 1.9] {
            assert!((psi_prime(s) - psi_plus_prime(s) - psi_minus_prime(s)).abs() < 1e-15);
            assert!((psi(s) - psi_plus(s) - psi_minus(s)).abs() < 1e-14);
            assert!((psi_difference_quotient(s, s) - psi_prime(s)).abs() < 1e-14);
            let b = s + 0.37;
            let q = (psi(b) - psi(s)) / 0.37;
            assert!((psi_difference_quotient(s, b) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn stiffness_clamps_at_window_edges() {
        let spec = StiffnessSpec::default();
        assert_eq!(stiffness_f(-1.0, &spec), spec.f_min);
        assert_eq!(stiffness_f(1.0, &spec), 1.0);
        assert_eq!(stiffness_f(-3.0, &spec), spec.f_min);
        assert_eq!(stiffness_f_prime(2.0, &spec), 0.0);
        assert_eq!(stiffness_f_prime(-2.0, &spec), 0.0);
    }

    #[test]
    fn mobility_profiles() {
        let window = StiffnessSpec::default();
        let constant = MobilitySpec { b0: 0.3, b1: 2.0, profile: MobilityProfile::Constant };
        assert_eq!(mobility_b(0.7, &constant, &window), 0.3);
        let variable = MobilitySpec { profile: MobilityProfile::Smoothstep, ..constant };
        assert_eq!(mobility_b(window.phi_hi, &variable, &window), 2.0);
        assert_eq!(mobility_b(window.phi_lo, &variable, &window), 0.3);
    }

    #[test]
    fn neo_hookean_examples() {
        let p = unit_stiffness();
        assert_eq!(neo_hookean_w(0.3, &Tensor::identity(2), &p), 0.0);
        assert_eq!(neo_hookean_w(0.3, &Tensor::identity(3), &p), 0.0);
        assert_eq!(neo_hookean_w(1.0, &Tensor::diag(&[2.0, 1.0]), &p), 1.5);
    }

    #[test]
    fn mooney_rivlin_examples() {
        let mut p = unit_stiffness();
        p.c2 = 0.0;
        p.c3 = 1.0;
        let w = mooney_rivlin_w(0.1, &Tensor::identity(3), &p).unwrap();
        assert_eq!(w, 0.5);

        p.c3 = 0.0;
        let w = mooney_rivlin_w(1.0, &Tensor::diag(&[2.0, 1.0, 1.0]), &p).unwrap();
        assert_eq!(w, 1.5);

        let s = mooney_rivlin_piola(1.0, &Tensor::identity(3), &p).unwrap();
        assert_eq!(s, Tensor::identity(3));

        p.c_elastic = 0.0;
        p.c3 = 1.0;
        let s = mooney_rivlin_piola(0.0, &Tensor::identity(3), &p).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn mooney_rivlin_rejects_inverted_elements() {
        let p = ModelParams::default();
        let flipped = Tensor::diag(&[1.0, 1.0, -1.0]);
        assert!(matches!(mooney_rivlin_w(0.0, &flipped, &p), Err(Error::Domain { .. })));
        assert!(mooney_rivlin_piola(0.0, &Tensor::zeros(3), &p).is_err());
        assert!(mooney_rivlin_w(0.0, &Tensor::identity(2), &p).is_err());
    }

    #[test]
    fn eulerian_stress_is_symmetric_psd() {
        let p = ModelParams::default();
        let f = Tensor::from_row_major(&[1.3, -0.4, 0.7, 0.2]);
        let s = eulerian_elastic_stress(0.2, &f, &p);
        assert_eq!(s.get(0, 1), s.get(1, 0));
        let tr = s.trace();
        let det = determinant(&s);
        assert!(tr >= 0.0 && det >= -1e-14);
        let id = eulerian_elastic_stress(0.2, &Tensor::identity(2), &p);
        let fval = p.stiffness.value(0.2);
        assert!((id - Tensor::identity(2).scale(fval)).max_abs() < 1e-15);
    }
}
