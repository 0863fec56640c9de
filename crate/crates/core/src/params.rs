//! Physical and regularization constants of the model.

use crate::error::{Error, Result};

/// Clamped cubic smoothstep: 0 for `x <= 0`, `3x^2 - 2x^3` on `[0, 1]`, 1 for `x >= 1`.
#[inline]
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

#[inline]
pub fn smoothstep_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        6.0 * x * (1.0 - x)
    }
}

/// Phase-dependent stiffness `f`, rising from `f_min` at `phi_lo` to 1 at `phi_hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiffnessSpec {
    pub f_min: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl Default for StiffnessSpec {
    fn default() -> Self {
        Self { f_min: 0.05, phi_lo: -1.0, phi_hi: 1.0 }
    }
}

impl StiffnessSpec {
    /// Uniform stiffness `f = 1`, so `f' = 0` everywhere.
    pub fn uniform() -> Self {
        Self { f_min: 1.0, ..Self::default() }
    }

    #[inline]
    fn window(&self) -> f64 {
        self.phi_hi - self.phi_lo
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.f_min + (1.0 - self.f_min) * smoothstep((s - self.phi_lo) / self.window())
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        (1.0 - self.f_min) * smoothstep_prime((s - self.phi_lo) / self.window()) / self.window()
    }

    /// Lipschitz bound on `f`: `sup |f'| = 1.5 (1 - f_min) / (phi_hi - phi_lo)`.
    pub fn derivative_bound(&self) -> f64 {
        1.5 * (1.0 - self.f_min) / self.window()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MobilityProfile {
    Constant,
    /// `b0 + (b1 - b0) S((s - phi_lo) / (phi_hi - phi_lo))` with the stiffness window.
    Smoothstep,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobilitySpec {
    pub b0: f64,
    pub b1: f64,
    pub profile: MobilityProfile,
}

impl Default for MobilitySpec {
    fn default() -> Self {
        Self { b0: 1.0, b1: 1.0, profile: MobilityProfile::Constant }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Viscosity.
    pub nu: f64,
    /// Diffusive regularization of the deformation-gradient transport.
    pub lambda: f64,
    /// Viscous regularization of the chemical potential.
    pub delta: f64,
    /// Interface width parameter.
    pub eps: f64,
    /// Elastic modulus (`c1` in the Mooney-Rivlin form).
    pub c_elastic: f64,
    /// Tensor dimension used for `F : F - d`.
    pub d_dim: usize,
    pub stiffness: StiffnessSpec,
    pub mobility: MobilitySpec,
    /// Mooney-Rivlin cofactor modulus.
    pub c2: f64,
    /// Mooney-Rivlin volumetric modulus.
    pub c3: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 1e-3,
            delta: 0.0,
            eps: 1.0,
            c_elastic: 1.0,
            d_dim: 2,
            stiffness: StiffnessSpec::default(),
            mobility: MobilitySpec::default(),
            c2: 0.0,
            c3: 0.0,
        }
    }
}

impl ModelParams {
    /// Checks the bounds every constitutive evaluation relies on.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.nu > 0.0) {
            problems.push(format!("viscosity nu must be positive, got {}", self.nu));
        }
        if !(self.eps > 0.0) {
            problems.push(format!("interface parameter eps must be positive, got {}", self.eps));
        }
        if !(self.c_elastic > 0.0) {
            problems.push(format!("elastic modulus c must be positive, got {}", self.c_elastic));
        }
        if !(self.lambda >= 0.0) {
            problems.push(format!("regularization lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.delta >= 0.0) {
            problems.push(format!("regularization delta must be >= 0, got {}", self.delta));
        }
        if self.d_dim != 2 && self.d_dim != 3 {
            problems.push(format!("tensor dimension must be 2 or 3, got {}", self.d_dim));
        }
        let s = &self.stiffness;
        if !(s.f_min > 0.0 && s.f_min <= 1.0) {
            problems.push(format!(
                "stiffness bound violated: need 0 < f_min <= 1 so that f_min <= f(s) <= 1, got f_min = {}",
                s.f_min
            ));
        }
        if !(s.phi_hi > s.phi_lo) {
            problems.push(format!("stiffness window must satisfy phi_lo < phi_hi, got [{}, {}]", s.phi_lo, s.phi_hi));
        }
        let m = &self.mobility;
        if !(m.b0 > 0.0 && m.b0 <= m.b1) {
            problems.push(format!("mobility bound violated: need 0 < b0 <= b1, got b0 = {}, b1 = {}", m.b0, m.b1));
        }
        if !(self.c2 >= 0.0 && self.c3 >= 0.0) {
            problems.push(format!("Mooney-Rivlin moduli must be >= 0, got c2 = {}, c3 = {}", self.c2, self.c3));
        }
        let finite = [self.nu, self.lambda, self.delta, self.eps, self.c_elastic, self.c2, self.c3];
        if finite.iter().any(|v| !v.is_finite()) {
            problems.push("all parameters must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }

    /// Extra requirement of the time-stepped solver.
    pub fn validate_for_solver(&self) -> Result<()> {
        self.validate()?;
        if self.d_dim != 2 {
            return Err(Error::Validation("the time-stepped solver is two-dimensional: d_dim must be 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ModelParams::default().validate_for_solver().unwrap();
    }

    #[test]
    fn rejects_zero_f_min() {
        let mut p = ModelParams::default();
        p.stiffness.f_min = 0.0;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("f_min"), "{msg}");
    }

    #[test]
    fn rejects_inverted_mobility_bounds() {
        let mut p = ModelParams::default();
        p.mobility.b0 = 2.0;
        p.mobility.b1 = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(-0.5), 0.0);
        assert_eq!(smoothstep(0.5), 0.5);
        assert_eq!(smoothstep(1.5), 1.0);
        assert_eq!(smoothstep_prime(0.5), 1.5);
    }
}
