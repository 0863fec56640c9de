//! Determinant drift of the deformation transport under a prescribed
//! solenoidal vortex. Without diffusion the exact flow keeps `det F = 1`, so
//! the drift is pure discretization error.

use crate::deformation::TransportSystem;
use crate::error::Result;
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;
use crate::ops::{velocity_from_stream_function, AdvectionScheme};
use crate::params::{ModelParams, StiffnessSpec};
use crate::tensor::determinant;

/// Compactly supported vortex on the unit square: stream function
/// `amplitude (1 - r^2/R^2)^4` inside radius `R = 0.35` around the center.
pub fn interior_vortex(grid: GridSpec, amplitude: f64) -> StaggeredVectorField {
    let r0 = 0.35 * grid.lx.min(grid.ly);
    let (cx, cy) = (0.5 * grid.lx, 0.5 * grid.ly);
    velocity_from_stream_function(grid, move |x, y| {
        let s = 1.0 - ((x - cx).powi(2) + (y - cy).powi(2)) / (r0 * r0);
        if s > 0.0 {
            amplitude * s.powi(4)
        } else {
            0.0
        }
    })
}

/// `max |det F(T) - 1|` after transporting `F = I` through the vortex on an
/// `n x n` grid with fixed step `dt` up to `t_end`.
pub fn determinant_drift(n: usize, dt: f64, t_end: f64, lambda: f64) -> Result<f64> {
    let grid = GridSpec::unit_square(n)?;
    let params = ModelParams { lambda, stiffness: StiffnessSpec::uniform(), ..ModelParams::default() };
    let phi = ScalarField::constant(grid, 1.0);
    let v = interior_vortex(grid, 0.05);
    let system = TransportSystem::new(&phi, dt, &params)?;
    let steps = (t_end / dt).round() as usize;
    let mut f = TensorField::identity(grid, 2);
    for _ in 0..steps {
        f = system.step(&f, &v, AdvectionScheme::default())?;
    }
    Ok((0..grid.n_cells()).map(|c| (determinant(&f.get(c)) - 1.0).abs()).fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminantStudy {
    /// `(n, dt, drift)` per level.
    pub levels: Vec<(usize, f64, f64)>,
    /// Drift ratio between consecutive levels.
    pub ratios: Vec<f64>,
    /// `(lambda, drift)` on the finest level with diffusion switched on.
    pub diffusive: Vec<(f64, f64)>,
}

/// Halves `h` and `dt` together for `levels` levels starting from `n0`,
/// `dt0`, then repeats the finest level with each of `lambdas`.
pub fn determinant_study(n0: usize, dt0: f64, levels: usize, t_end: f64, lambdas: &[f64]) -> Result<DeterminantStudy> {
    let mut rows = Vec::new();
    for l in 0..levels {
        let n = n0 << l;
        let dt = dt0 / (1u64 << l) as f64;
        rows.push((n, dt, determinant_drift(n, dt, t_end, 0.0)?));
    }
    let ratios = rows.windows(2).map(|w| w[0].2 / w[1].2).collect();
    let (n, dt, _) = *rows.last().expect("at least one level");
    let diffusive = lambdas.iter().map(|&l| Ok((l, determinant_drift(n, dt, t_end, l)?))).collect::<Result<_>>()?;
    Ok(DeterminantStudy { levels: rows, ratios, diffusive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::div_fc;

    #[test]
    fn vortex_is_solenoidal_and_vanishes_near_walls() {
        let g = GridSpec::unit_square(24).unwrap();
        let v = interior_vortex(g, 0.1);
        assert!(div_fc(&v).max_abs() < 1e-14);
        assert!(v.max_abs() > 0.0);
        for j in 0..g.ny {
            assert_eq!(v.u[g.u_index(1, j)], 0.0);
        }
    }

    #[test]
    fn no_flow_keeps_identity() {
        let d = determinant_drift(8, 0.1, 0.0, 0.0).unwrap();
        assert_eq!(d, 0.0);
    }
}
