//! Manufactured Stokes solution from the stream function
//! `sin^2(kx x) sin^2(ky y)` with pressure `sin(kx x) sin(ky y)`,
//! `kx = pi / lx`, `ky = pi / ly`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::field::{ScalarField, StaggeredVectorField};
use crate::grid::GridSpec;
use crate::stokes::StokesSolver;

/// Exact velocity, pressure and forcing for one box and viscosity.
#[derive(Clone, Copy, Debug)]
pub struct StokesMms {
    pub lx: f64,
    pub ly: f64,
    pub nu: f64,
}

impl StokesMms {
    fn k(&self) -> (f64, f64) {
        (PI / self.lx, PI / self.ly)
    }

    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let (kx, ky) = self.k();
        let (a, b) = (kx * x, ky * y);
        (ky * a.sin().powi(2) * (2.0 * b).sin(), -kx * (2.0 * a).sin() * b.sin().powi(2))
    }

    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        let (kx, ky) = self.k();
        (kx * x).sin() * (ky * y).sin()
    }

    /// `-nu lap v + grad q`.
    pub fn force(&self, x: f64, y: f64) -> (f64, f64) {
        let (kx, ky) = self.k();
        let (a, b) = (kx * x, ky * y);
        let lap_u = ky * (2.0 * b).sin() * (2.0 * kx * kx * (2.0 * a).cos() - 4.0 * ky * ky * a.sin().powi(2));
        let lap_w = -kx * (2.0 * a).sin() * (2.0 * ky * ky * (2.0 * b).cos() - 4.0 * kx * kx * b.sin().powi(2));
        let qx = kx * a.cos() * b.sin();
        let qy = ky * a.sin() * b.cos();
        (-self.nu * lap_u + qx, -self.nu * lap_w + qy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsRow {
    pub n: usize,
    pub velocity_l2: f64,
    pub pressure_l2: f64,
    pub div_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsReport {
    pub rows: Vec<MmsRow>,
    /// Observed orders between consecutive levels.
    pub velocity_orders: Vec<f64>,
    pub pressure_orders: Vec<f64>,
}

impl MmsReport {
    pub fn min_velocity_order(&self) -> f64 {
        self.velocity_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_pressure_order(&self) -> f64 {
        self.pressure_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Solves the manufactured problem on `n x n` unit-square grids, one row per
/// entry of `levels`. Errors are discrete L2 norms over interior faces and
/// cells.
pub fn stokes_mms(levels: &[usize], nu: f64) -> Result<MmsReport> {
    let mms = StokesMms { lx: 1.0, ly: 1.0, nu };
    let mut rows = Vec::new();
    for &n in levels {
        let grid = GridSpec::unit_square(n)?;
        rows.push(mms_level(&mms, grid)?);
    }
    let orders = |e: &dyn Fn(&MmsRow) -> f64| -> Vec<f64> {
        rows.windows(2).map(|w| (e(&w[0]) / e(&w[1])).ln() / (w[1].n as f64 / w[0].n as f64).ln()).collect()
    };
    let velocity_orders = orders(&|r| r.velocity_l2);
    let pressure_orders = orders(&|r| r.pressure_l2);
    Ok(MmsReport { rows, velocity_orders, pressure_orders })
}

pub fn mms_level(mms: &StokesMms, grid: GridSpec) -> Result<MmsRow> {
    let force = StaggeredVectorField::from_fn(grid, |x, y| mms.force(x, y).0, |x, y| mms.force(x, y).1);
    let (v, q) = StokesSolver::new(grid, mms.nu)?.solve(&force)?;
    let exact = StaggeredVectorField::from_fn(grid, |x, y| mms.velocity(x, y).0, |x, y| mms.velocity(x, y).1);
    let err = v.axpy(-1.0, &exact);
    let q_exact = ScalarField::from_fn(grid, |x, y| mms.pressure(x, y));
    let mean = q_exact.mean();
    let q_err = q.axpy(-1.0, &q_exact.map(|p| p - mean));
    Ok(MmsRow {
        n: grid.nx,
        velocity_l2: err.dot(&err).sqrt(),
        pressure_l2: q_err.dot(&q_err).sqrt(),
        div_max: crate::stokes::div_residual(&v),
    })
}
