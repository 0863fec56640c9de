//! Named groups of verification checks with pass/fail outcomes, as run by
//! the `verify` subcommand.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cahn_hilliard::{CahnHilliardSolver, ChOptions};
use crate::diagnostics::total_energy;
use crate::driver::config::CouplingSpec;
use crate::driver::run::{coupled_step, Solvers};
use crate::error::Result;
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;
use crate::ops::grad_cc;
use crate::params::{ModelParams, StiffnessSpec};
use crate::state::SimState;
use crate::stokes::StokesSolver;
use crate::tensor::{determinant, Tensor};

use super::dense::dense_oracle_compare;
use super::fd::{fd_check_chemical_potential, fd_check_det_cofactor, fd_check_elastic_stress, ElasticModel};
use super::korteweg::korteweg_identity_check;
use super::mms::stokes_mms;
use super::transport::determinant_study;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<4} {:<30} {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Constitutive,
    Operators,
    Stokes,
    Chemical,
    Korteweg,
    Transport,
    Stationary,
    /// Everything except the Stokes refinement study and the transport study.
    Quick,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 9] =
        ["constitutive", "operators", "stokes", "chemical", "korteweg", "transport", "stationary", "quick", "all"];
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "constitutive" => Self::Constitutive,
            "operators" => Self::Operators,
            "stokes" => Self::Stokes,
            "chemical" => Self::Chemical,
            "korteweg" => Self::Korteweg,
            "transport" => Self::Transport,
            "stationary" => Self::Stationary,
            "quick" => Self::Quick,
            "all" => Self::All,
            other => return Err(format!("unknown suite '{other}', expected one of {}", Self::NAMES.join(", "))),
        })
    }
}

/// Runs every check of `suite`. Errors inside a check become failures.
pub fn run_suite(suite: Suite) -> Vec<CheckOutcome> {
    let groups: &[fn() -> Result<Vec<CheckOutcome>>] = match suite {
        Suite::Constitutive => &[constitutive_checks],
        Suite::Operators => &[operator_checks],
        Suite::Stokes => &[stokes_checks],
        Suite::Chemical => &[chemical_checks],
        Suite::Korteweg => &[korteweg_checks],
        Suite::Transport => &[transport_checks],
        Suite::Stationary => &[stationary_checks],
        Suite::Quick => &[constitutive_checks, operator_checks, chemical_checks, korteweg_checks, stationary_checks],
        Suite::All => &[
            constitutive_checks,
            operator_checks,
            stokes_checks,
            chemical_checks,
            korteweg_checks,
            transport_checks,
            stationary_checks,
        ],
    };
    groups.iter().flat_map(|g| g().unwrap_or_else(|e| vec![CheckOutcome::new("error", false, e.to_string())])).collect()
}

/// `count` random tensors `I + U(-spread, spread)` with `det >= min_det`.
pub fn random_deformations(d: usize, count: usize, spread: f64, min_det: f64, seed: u64) -> Vec<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = Tensor::from_fn(d, |a, b| f64::from(u8::from(a == b)) + rng.random_range(-spread..spread));
        if determinant(&t) >= min_det {
            out.push(t);
        }
    }
    out
}

pub fn constitutive_checks() -> Result<Vec<CheckOutcome>> {
    let params = ModelParams { c_elastic: 1.3, c2: 0.7, c3: 0.4, ..ModelParams::default() };
    let phi = 0.2;
    let mut out = Vec::new();
    for (name, model, d) in [
        ("stress neo-hookean 2d", ElasticModel::NeoHookean, 2),
        ("stress neo-hookean 3d", ElasticModel::NeoHookean, 3),
        ("stress mooney-rivlin 3d", ElasticModel::MooneyRivlin, 3),
    ] {
        let samples = random_deformations(d, 50, 0.4, 0.2, 11 + d as u64);
        let r = fd_check_elastic_stress(phi, &samples, &params, model)?;
        out.push(CheckOutcome::new(
            name,
            r.max_rel_error <= 1e-6,
            format!("max rel err {:.2e} over {} samples (tol 1e-6)", r.max_rel_error, r.samples),
        ));
    }
    let f = random_deformations(3, 1, 0.4, 0.2, 5).remove(0);
    let dir = random_deformations(3, 1, 1.0, f64::NEG_INFINITY, 6).remove(0);
    let r = fd_check_det_cofactor(&f, &dir, &[0.1, 0.05, 0.025, 0.0125]);
    out.push(CheckOutcome::new(
        "det derivative = cofactor",
        (1.9..=2.1).contains(&r.order),
        format!("fd order {:.3} (want 2)", r.order),
    ));
    Ok(out)
}

pub fn operator_checks() -> Result<Vec<CheckOutcome>> {
    let r = dense_oracle_compare(GridSpec::unit_square(8)?)?;
    Ok(vec![
        CheckOutcome::new(
            "dense operator oracle",
            r.operator_error <= 1e-12,
            format!("max deviation {:.2e} over {} samples (tol 1e-12)", r.operator_error, r.samples),
        ),
        CheckOutcome::new(
            "grad/div adjointness",
            r.grad_div_adjointness <= 1e-13 && r.tensor_adjointness <= 1e-13,
            format!("{:.2e} scalar, {:.2e} tensor (tol 1e-13)", r.grad_div_adjointness, r.tensor_adjointness),
        ),
        CheckOutcome::new(
            "laplacian null space",
            r.kernel_dimension == 1 && r.constant_residual <= 1e-12,
            format!("kernel dim {}, |L 1| {:.1e}", r.kernel_dimension, r.constant_residual),
        ),
        CheckOutcome::new(
            "dense stokes solve",
            r.stokes_velocity_error <= 1e-10,
            format!("velocity deviation {:.2e} (tol 1e-10)", r.stokes_velocity_error),
        ),
    ])
}

pub fn stokes_checks() -> Result<Vec<CheckOutcome>> {
    let r = stokes_mms(&[32, 64, 128], 1.0)?;
    let orders: Vec<String> = r.velocity_orders.iter().map(|o| format!("{o:.3}")).collect();
    let grid = GridSpec::unit_square(64)?;
    let solver = StokesSolver::new(grid, 1.0)?;
    let (v0, _) = solver.solve(&StaggeredVectorField::zeros(grid))?;
    let p = ScalarField::from_fn(grid, |x, y| (3.0 * x).cos() * (2.0 * y).sin() + x * y);
    let (vg, _) = solver.solve(&grad_cc(&p))?;
    let vg_norm = vg.dot(&vg).sqrt();
    Ok(vec![
        CheckOutcome::new(
            "stokes mms velocity order",
            r.min_velocity_order() >= 1.9,
            format!("orders [{}] over 32-64-128 (want >= 1.9)", orders.join(", ")),
        ),
        CheckOutcome::new("stokes zero force", v0.max_abs() <= 1e-12, format!("|v| {:.1e}", v0.max_abs())),
        CheckOutcome::new("stokes gradient forcing", vg_norm <= 1e-10, format!("|v|_2 {vg_norm:.1e} (tol 1e-10)")),
    ])
}

/// Phase field inside the stiffness window and a non-identity deformation,
/// so every term of the chemical potential is active.
pub fn chemical_test_fields(grid: GridSpec) -> (ScalarField, TensorField, ScalarField) {
    let phi = ScalarField::from_fn(grid, |x, y| 0.2 + 0.5 * (2.0 * x + 0.5).sin() * (3.0 * y).cos());
    let f = TensorField::from_fn(grid, 2, |x, y| {
        Tensor::from_row_major(&[1.2 + 0.1 * x, 0.3 * y, -0.2 * x * y, 0.9 + 0.1 * y])
    });
    let eta = ScalarField::from_fn(grid, |x, y| (3.0 * x).cos() * (1.0 + y * y));
    (phi, f, eta)
}

pub fn chemical_checks() -> Result<Vec<CheckOutcome>> {
    let grid = GridSpec::unit_square(32)?;
    let params = ModelParams { eps: 0.1, c_elastic: 2.0, ..ModelParams::default() };
    let (phi, f, eta) = chemical_test_fields(grid);
    let steps = [0.2, 0.1, 0.05, 0.025];
    let r = fd_check_chemical_potential(&phi, &f, &eta, &params, &steps);
    let ri = fd_check_chemical_potential(&phi, &TensorField::identity(grid, 2), &eta, &params, &steps);
    Ok(vec![
        CheckOutcome::new(
            "chemical potential fd order",
            (1.9..=2.1).contains(&r.order),
            format!("order {:.3} with elastic term, plateau {:.1e}", r.order, r.plateau),
        ),
        CheckOutcome::new(
            "chemical potential fd, F = I",
            (1.9..=2.1).contains(&ri.order),
            format!("order {:.3}", ri.order),
        ),
    ])
}

pub fn korteweg_checks() -> Result<Vec<CheckOutcome>> {
    let grid = GridSpec::unit_square(64)?;
    let params = ModelParams { eps: 0.05, ..ModelParams::default() };
    let phi = ScalarField::from_fn(grid, |x, y| {
        let r = ((x - 0.45).powi(2) + (y - 0.55).powi(2)).sqrt();
        ((0.25 - r) / (2f64.sqrt() * params.eps)).tanh()
    });
    let r = korteweg_identity_check(&phi, &TensorField::identity(grid, 2), &params)?;
    Ok(vec![CheckOutcome::new(
        "korteweg form equivalence",
        r.velocity_difference <= 1e-8,
        format!(
            "|v_a - v_b| {:.1e} (|v| {:.1e}, tol 1e-8), pressure gap {:.1e}",
            r.velocity_difference, r.velocity_scale, r.pressure_gap
        ),
    )])
}

pub fn transport_checks() -> Result<Vec<CheckOutcome>> {
    let s = determinant_study(32, 0.02, 3, 0.5, &[1e-4, 1e-3, 1e-2])?;
    let ratios: Vec<String> = s.ratios.iter().map(|r| format!("{r:.3}")).collect();
    let finest = s.levels.last().map_or(f64::NAN, |l| l.2);
    let sweep: Vec<String> = s.diffusive.iter().map(|(l, d)| format!("{l:.0e}: {d:.3e}")).collect();
    let strongest = s.diffusive.last().map_or(f64::NAN, |d| d.1);
    Ok(vec![
        CheckOutcome::new(
            "det F drift convergence",
            s.ratios.iter().all(|r| (1.6..=2.4).contains(r)),
            format!("ratios [{}] (want 1.6-2.4), finest drift {finest:.3e}", ratios.join(", ")),
        ),
        CheckOutcome::new(
            "det F drift grows with lambda",
            strongest > finest,
            format!("lambda 0: {finest:.3e}, {}", sweep.join(", ")),
        ),
    ])
}

/// Largest change of any field after `steps` coupled steps from the well
/// state `phi = 1`, `F = I` on an `n x n` grid.
pub fn well_state_change(n: usize, steps: usize, dt: f64) -> Result<f64> {
    let grid = GridSpec::unit_square(n)?;
    let params = ModelParams::default();
    let coupling = CouplingSpec::default();
    let solvers = Solvers::new(grid, &params, &coupling)?;
    let start = SimState::at_rest(ScalarField::constant(grid, 1.0), dt);
    let mut state = start.clone();
    for _ in 0..steps {
        state = coupled_step(&state, dt, &params, &coupling, &solvers)?.state;
    }
    Ok(state.max_change(&start))
}

/// Number of energy increases of the Cahn-Hilliard step alone (`v = 0`,
/// uniform stiffness) over `steps` steps from seeded noise, for each `dt`.
pub fn decoupled_energy_violations(n: usize, steps: usize, dts: &[f64]) -> Result<Vec<usize>> {
    let grid = GridSpec::unit_square(n)?;
    let params = ModelParams { eps: 0.05, stiffness: StiffnessSpec::uniform(), ..ModelParams::default() };
    let ch = CahnHilliardSolver::new(grid, ChOptions::default())?;
    let f = TensorField::identity(grid, 2);
    let v = StaggeredVectorField::zeros(grid);
    dts.iter()
        .map(|&dt| {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut phi =
                ScalarField { grid, values: (0..grid.n_cells()).map(|_| rng.random_range(-0.3..0.3)).collect() };
            let mut e = total_energy(&phi, &f, &params).total;
            let mut violations = 0;
            for _ in 0..steps {
                phi = ch.step(&phi, &f, &v, dt, &params)?.phi;
                let e_new = total_energy(&phi, &f, &params).total;
                if e_new > e {
                    violations += 1;
                }
                e = e_new;
            }
            Ok(violations)
        })
        .collect()
}

pub fn stationary_checks() -> Result<Vec<CheckOutcome>> {
    let change = well_state_change(16, 100, 1e-3)?;
    let dts = [1e-3, 1e-2, 1e-1];
    let violations: usize = decoupled_energy_violations(32, 20, &dts)?.iter().sum();
    Ok(vec![
        CheckOutcome::new(
            "well state is stationary",
            change <= 1e-12,
            format!("max change {change:.1e} after 100 steps (tol 1e-12)"),
        ),
        CheckOutcome::new(
            "decoupled energy decay",
            violations == 0,
            format!("{violations} increases over dt 1e-3, 1e-2, 1e-1"),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert!(name.parse::<Suite>().is_ok());
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn random_deformations_respect_the_floor() {
        let t = random_deformations(3, 20, 0.6, 0.3, 1);
        assert_eq!(t.len(), 20);
        assert!(t.iter().all(|f| determinant(f) >= 0.3));
    }
}
