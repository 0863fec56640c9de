//! Free energy, dissipation, mass and the discrete energy budget.
//!
//! Every quadratic form uses the same discrete operators as the time steps,
//! so the budget `(E^{n+1} - E^n)/dt + D^{n+1}` only measures the splitting
//! error.

use crate::cahn_hilliard::mobility_field;
use crate::constitutive::{neo_hookean_w, psi};
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::ops::{face_average, grad_cc, vector_laplacian_dirichlet};
use crate::params::ModelParams;
use crate::state::SimState;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub interface: f64,
    pub bulk: f64,
    pub total: f64,
}

/// `int (c/2) f (F:F - d) + (eps/2)|grad phi|^2 + psi(phi)/eps`, midpoint
/// quadrature with the gradient term summed over faces.
pub fn total_energy(phi: &ScalarField, f: &TensorField, params: &ModelParams) -> EnergyBreakdown {
    let area = phi.grid.cell_area();
    let mut elastic = 0.0;
    let mut bulk = 0.0;
    for k in 0..phi.grid.n_cells() {
        let s = phi.values[k];
        elastic += neo_hookean_w(s, &f.get(k), params);
        bulk += psi(s);
    }
    let g = grad_cc(phi);
    let elastic = elastic * area;
    let bulk = bulk * area / params.eps;
    let interface = 0.5 * params.eps * g.dot(&g);
    EnergyBreakdown { elastic, interface, bulk, total: elastic + interface + bulk }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DissipationBreakdown {
    /// `nu int |grad v|^2`
    pub viscous: f64,
    /// `c lambda int |grad(f F)|^2`
    pub transport: f64,
    /// `int b |grad mu|^2`
    pub mobility: f64,
    /// `delta int |dphi/dt|^2`
    pub relaxation: f64,
    pub total: f64,
}

pub fn dissipation_breakdown(
    v: &StaggeredVectorField,
    mu: &ScalarField,
    phi: &ScalarField,
    f: &TensorField,
    dphi_dt: Option<&ScalarField>,
    params: &ModelParams,
) -> DissipationBreakdown {
    let grid = phi.grid;
    let viscous = -params.nu * vector_laplacian_dirichlet(v).dot(v);

    let fs: Vec<f64> = phi.values.iter().map(|&s| params.stiffness.value(s)).collect();
    let mut transport = 0.0;
    for comp in &f.comps {
        let g_comp = ScalarField { grid, values: comp.iter().zip(&fs).map(|(a, b)| a * b).collect() };
        let gr = grad_cc(&g_comp);
        transport += gr.dot(&gr);
    }
    transport *= params.c_elastic * params.lambda;

    let bf = face_average(&mobility_field(phi, params));
    let gm = grad_cc(mu);
    let weighted = StaggeredVectorField {
        grid,
        u: gm.u.iter().zip(&bf.u).map(|(g, b)| g * b).collect(),
        w: gm.w.iter().zip(&bf.w).map(|(g, b)| g * b).collect(),
    };
    let mobility = weighted.dot(&gm);

    let relaxation = dphi_dt.map_or(0.0, |r| params.delta * r.dot(r));
    DissipationBreakdown {
        viscous,
        transport,
        mobility,
        relaxation,
        total: viscous + transport + mobility + relaxation,
    }
}

pub fn dissipation(
    v: &StaggeredVectorField,
    mu: &ScalarField,
    phi: &ScalarField,
    f: &TensorField,
    dphi_dt: Option<&ScalarField>,
    params: &ModelParams,
) -> f64 {
    dissipation_breakdown(v, mu, phi, f, dphi_dt, params).total
}

pub fn total_mass(phi: &ScalarField) -> f64 {
    phi.integral()
}

/// `(E^{n+1} - E^n)/dt + D^{n+1}` with `D` evaluated on the end-of-step fields.
pub fn energy_budget_residual(state_n: &SimState, state_np1: &SimState, dt: f64, params: &ModelParams) -> f64 {
    let e0 = total_energy(&state_n.phi, &state_n.f, params).total;
    let e1 = total_energy(&state_np1.phi, &state_np1.f, params).total;
    let rate = state_np1.phi.axpy(-1.0, &state_n.phi).map(|x| x / dt);
    let d = dissipation(&state_np1.v, &state_np1.mu, &state_np1.phi, &state_np1.f, Some(&rate), params);
    (e1 - e0) / dt + d
}

/// One line of the diagnostics stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub energy: EnergyBreakdown,
    pub dissipation: f64,
    pub mass: f64,
    pub div_v_max: f64,
    pub picard_iters: usize,
    pub newton_iters: usize,
    pub budget_residual: f64,
}

impl DiagnosticsRow {
    pub const CSV_HEADER: &'static str = "step,t,dt,E_total,E_elastic,E_interface,E_bulk,dissipation,mass,div_v_max,picard_iters,newton_iters,budget_residual";

    /// CSV record with every float printed to 17 significant digits.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
            self.step,
            self.t,
            self.dt,
            self.energy.total,
            self.energy.elastic,
            self.energy.interface,
            self.energy.bulk,
            self.dissipation,
            self.mass,
            self.div_v_max,
            self.picard_iters,
            self.newton_iters,
            self.budget_residual
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.dt,
            self.energy.total,
            self.energy.elastic,
            self.energy.interface,
            self.energy.bulk,
            self.dissipation,
            self.mass,
            self.div_v_max,
            self.budget_residual,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}
