//! The coupled time loop: Stokes, then deformation transport, then
//! Cahn-Hilliard, repeated as Picard sweeps inside each step.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cahn_hilliard::{static_chemical_potential, CahnHilliardSolver, ChOptions};
use crate::deformation::TransportSystem;
use crate::diagnostics::{dissipation, energy_budget_residual, total_energy, total_mass, DiagnosticsRow};
use crate::driver::config::{ConfigSpec, CouplingSpec, FInit, PhiInit};
use crate::driver::io::{read_restart, restart_name, snapshot_name, write_restart, write_vtk, CsvWriter};
use crate::error::{Error, Result};
use crate::field::{max_abs_diff, ScalarField, TensorField};
use crate::grid::GridSpec;
use crate::ops::laplacian_neumann;
use crate::params::ModelParams;
use crate::state::SimState;
use crate::stokes::{assemble_force, div_residual, StokesMethod, StokesSolver};
use crate::tensor::Tensor;

/// Solvers whose factorizations or symbolic analyses live for a whole run.
pub struct Solvers {
    pub stokes: StokesSolver,
    pub ch: CahnHilliardSolver,
}

impl Solvers {
    pub fn new(grid: GridSpec, params: &ModelParams, coupling: &CouplingSpec) -> Result<Self> {
        let stokes = StokesSolver::with_method(grid, params.nu, StokesMethod::Direct, coupling.tol_lin)?;
        let ch = CahnHilliardSolver::new(
            grid,
            ChOptions {
                tol_newton: coupling.tol_newton,
                max_iters: coupling.max_newton,
                tol_lin: coupling.tol_lin,
                scheme: coupling.advection,
            },
        )?;
        Ok(Self { stokes, ch })
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: SimState,
    pub picard_iters: usize,
    pub newton_iters: usize,
}

/// Advances `state` by `dt`. The input state is never modified, so a failed
/// or rejected step can be retried from identical data.
pub fn coupled_step(
    state: &SimState,
    dt: f64,
    params: &ModelParams,
    coupling: &CouplingSpec,
    solvers: &Solvers,
) -> Result<StepOutcome> {
    let phi_n = &state.phi;
    let f_n = &state.f;
    let transport = TransportSystem::new(phi_n, dt, params)?;
    let rate = phi_n.axpy(-1.0, &state.phi_prev).map(|x| x / dt);
    let mut mu = static_chemical_potential(phi_n, f_n, Some(&rate), params);
    let mut phi = phi_n.clone();
    let mut f = f_n.clone();
    let mut v = state.v.clone();
    let mut q = state.q.clone();
    let mut ch_step = solvers.ch.begin(phi_n, dt, params)?;
    let mut newton_iters = 0;
    let mut sweeps = 0;
    while sweeps < coupling.picard_max as usize {
        sweeps += 1;
        let force = assemble_force(&phi, &mu, &f, params);
        let (v_new, q_new) = solvers.stokes.solve(&force)?;
        let f_new = transport.step(f_n, &v_new, coupling.advection)?;
        let guess = (sweeps > 1).then_some((&phi, &mu));
        let ch = ch_step.solve(&f_new, &v_new, guess)?;
        newton_iters += ch.newton_iters;
        let change = [
            max_abs_diff(&ch.phi.values, &phi.values),
            f_new.max_abs_diff(&f),
            max_abs_diff(&v_new.to_vec(), &v.to_vec()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        phi = ch.phi;
        mu = ch.mu;
        f = f_new;
        v = v_new;
        q = q_new;
        if change <= coupling.picard_tol {
            break;
        }
    }
    let next = SimState {
        phi,
        phi_prev: phi_n.clone(),
        mu,
        f,
        v,
        q,
        t: state.t + dt,
        dt: state.dt,
        step_index: state.step_index + 1,
    };
    if !next.is_finite() {
        return Err(Error::NewtonDivergence { iterations: newton_iters, residual: f64::NAN });
    }
    Ok(StepOutcome { state: next, picard_iters: sweeps, newton_iters })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptRules {
    pub dt_min: f64,
    pub dt_max: f64,
    pub n_grow: u32,
    pub grow_factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected,
}

/// Halves `dt` on rejection and grows it by `grow_factor` after `n_grow`
/// consecutive accepted steps, clamped to `[dt_min, dt_max]`. `streak`
/// counts accepted steps since the last change.
pub fn adapt_dt(verdict: Verdict, dt: f64, streak: &mut u32, rules: &AdaptRules) -> Result<f64> {
    match verdict {
        Verdict::Rejected => {
            *streak = 0;
            let next = 0.5 * dt;
            if next < rules.dt_min {
                return Err(Error::DtUnderflow { dt: next, dt_min: rules.dt_min });
            }
            Ok(next)
        }
        Verdict::Accepted => {
            *streak += 1;
            if *streak >= rules.n_grow {
                *streak = 0;
                Ok((dt * rules.grow_factor).clamp(rules.dt_min, rules.dt_max))
            } else {
                Ok(dt.clamp(rules.dt_min, rules.dt_max))
            }
        }
    }
}

/// Initial phase field described by the config.
pub fn initial_phi(config: &ConfigSpec) -> ScalarField {
    let g = config.grid;
    match config.initial.phi {
        PhiInit::Uniform { value } => ScalarField::constant(g, value),
        PhiInit::Random { mean, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.initial.seed);
            let values = (0..g.n_cells())
                .map(|_| mean + if amplitude > 0.0 { rng.random_range(-amplitude..=amplitude) } else { 0.0 })
                .collect();
            let phi = ScalarField { grid: g, values };
            let lap = laplacian_neumann(&phi, None).expect("unit coefficient is positive");
            let w = 1.0 / (4.0 * (1.0 / (g.hx() * g.hx()) + 1.0 / (g.hy() * g.hy())));
            phi.axpy(w, &lap)
        }
        PhiInit::Disk { radius, cx, cy, width } => ScalarField::from_fn(g, |x, y| {
            let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            ((radius - r) / width).tanh()
        }),
    }
}

pub fn initial_deformation(config: &ConfigSpec) -> TensorField {
    match config.initial.f {
        FInit::Identity => TensorField::identity(config.grid, 2),
        FInit::Stretch { amount } => {
            TensorField::uniform(config.grid, &Tensor::diag(&[1.0 + amount, 1.0 / (1.0 + amount)]))
        }
    }
}

/// A run in memory: state, solvers and adaptive-step bookkeeping.
pub struct Simulation {
    config: ConfigSpec,
    solvers: Solvers,
    state: SimState,
    streak: u32,
    rejected: u64,
    restarted: bool,
}

impl Simulation {
    /// Builds the initial state (or loads the configured restart file).
    pub fn new(config: &ConfigSpec) -> Result<Self> {
        config.validate()?;
        let grid = GridSpec::new(config.grid.nx, config.grid.ny, config.grid.lx, config.grid.ly)?;
        let params = &config.params;
        let solvers = Solvers::new(grid, params, &config.coupling)?;
        let (state, streak, restarted) = match &config.initial.restart {
            Some(path) => {
                let (state, streak) = read_restart(path)?;
                if state.grid() != grid {
                    return Err(Error::Validation(format!(
                        "restart grid {:?} does not match config grid {:?}",
                        state.grid(),
                        grid
                    )));
                }
                (state, streak, true)
            }
            None => {
                let phi = initial_phi(config);
                let f = initial_deformation(config);
                let mu = static_chemical_potential(&phi, &f, None, params);
                let (v, q) = solvers.stokes.solve(&assemble_force(&phi, &mu, &f, params))?;
                let state =
                    SimState { phi_prev: phi.clone(), phi, mu, f, v, q, t: 0.0, dt: config.time.dt0, step_index: 0 };
                (state, 0, false)
            }
        };
        Ok(Self { config: config.clone(), solvers, state, streak, rejected: 0, restarted })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn config(&self) -> &ConfigSpec {
        &self.config
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn accept_streak(&self) -> u32 {
        self.streak
    }

    pub fn is_restarted(&self) -> bool {
        self.restarted
    }

    pub fn is_finished(&self) -> bool {
        self.config.time.t_end - self.state.t <= 1e-9 * self.state.dt
    }

    /// Diagnostics of the current state with no step behind it.
    pub fn current_row(&self) -> DiagnosticsRow {
        let p = &self.config.params;
        let s = &self.state;
        DiagnosticsRow {
            step: s.step_index,
            t: s.t,
            dt: s.dt,
            energy: total_energy(&s.phi, &s.f, p),
            dissipation: dissipation(&s.v, &s.mu, &s.phi, &s.f, None, p),
            mass: total_mass(&s.phi),
            div_v_max: div_residual(&s.v),
            picard_iters: 0,
            newton_iters: 0,
            budget_residual: 0.0,
        }
    }

    /// Takes one accepted step, retrying with smaller `dt` after rejections.
    pub fn advance(&mut self) -> Result<DiagnosticsRow> {
        let rules = AdaptRules {
            dt_min: self.config.time.dt_min,
            dt_max: self.config.time.dt_max,
            n_grow: self.config.time.n_grow,
            grow_factor: self.config.time.grow_factor,
        };
        let p = &self.config.params;
        loop {
            let remaining = self.config.time.t_end - self.state.t;
            let dt = self.state.dt.min(remaining);
            let attempt = coupled_step(&self.state, dt, p, &self.config.coupling, &self.solvers);
            let verdict = match attempt {
                Ok(out) => {
                    let e_n = total_energy(&self.state.phi, &self.state.f, p).total;
                    let budget = energy_budget_residual(&self.state, &out.state, dt, p);
                    let too_large = self.config.time.budget_reject.is_some_and(|r| budget > r * e_n.abs());
                    if !too_large {
                        let mut next = out.state;
                        next.dt = adapt_dt(Verdict::Accepted, self.state.dt, &mut self.streak, &rules)?;
                        let rate = next.phi.axpy(-1.0, &self.state.phi).map(|x| x / dt);
                        let row = DiagnosticsRow {
                            step: next.step_index,
                            t: next.t,
                            dt,
                            energy: total_energy(&next.phi, &next.f, p),
                            dissipation: dissipation(&next.v, &next.mu, &next.phi, &next.f, Some(&rate), p),
                            mass: total_mass(&next.phi),
                            div_v_max: div_residual(&next.v),
                            picard_iters: out.picard_iters,
                            newton_iters: out.newton_iters,
                            budget_residual: budget,
                        };
                        self.state = next;
                        return Ok(row);
                    }
                    Verdict::Rejected
                }
                Err(Error::NewtonDivergence { .. }) | Err(Error::LinearSolve { .. }) => Verdict::Rejected,
                Err(e) => return Err(e),
            };
            debug_assert_eq!(verdict, Verdict::Rejected);
            self.rejected += 1;
            self.state.dt = adapt_dt(Verdict::Rejected, dt, &mut self.streak, &rules)?;
        }
    }

    /// Advances until `t_end` or `max_steps` accepted steps, collecting rows.
    pub fn run_in_memory(&mut self, max_steps: Option<u64>) -> Result<Vec<DiagnosticsRow>> {
        let mut rows = vec![self.current_row()];
        let mut taken = 0;
        while !self.is_finished() && max_steps.is_none_or(|m| taken < m) {
            rows.push(self.advance()?);
            taken += 1;
        }
        Ok(rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    MaxSteps,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub rejected: u64,
    pub wall_time: f64,
    pub final_energy: f64,
    pub final_mass: f64,
    pub final_t: f64,
    pub termination: Termination,
}

impl RunSummary {
    pub fn is_success(&self) -> bool {
        !matches!(self.termination, Termination::Failed(_))
    }
}

/// Runs a validated config, writing diagnostics, snapshots and restart files
/// into `config.output.dir`. Validation and I/O setup problems are returned
/// as errors; failures during time stepping end the run with
/// [`Termination::Failed`].
pub fn run_simulation(config: &ConfigSpec) -> Result<RunSummary> {
    let start = Instant::now();
    let mut sim = Simulation::new(config)?;
    let out = &config.output;
    std::fs::create_dir_all(&out.dir)?;
    let mut csv = CsvWriter::create(&out.dir.join("diagnostics.csv"))?;
    if !sim.is_restarted() {
        csv.write_row(&sim.current_row())?;
        write_vtk(&out.dir.join(snapshot_name(0)), sim.state())?;
    }
    let mut steps = 0u64;
    let mut last_snapshot = sim.state().step_index;
    let mut last_restart = u64::MAX;
    let termination = loop {
        if sim.is_finished() {
            break Termination::Completed;
        }
        if config.time.max_steps.is_some_and(|m| steps >= m) {
            break Termination::MaxSteps;
        }
        match sim.advance() {
            Ok(row) => {
                steps += 1;
                if row.step % out.diagnostics_every == 0 {
                    csv.write_row(&row)?;
                }
                if out.snapshot_every > 0 && row.step % out.snapshot_every == 0 {
                    write_vtk(&out.dir.join(snapshot_name(row.step)), sim.state())?;
                    last_snapshot = row.step;
                }
                if out.restart_every > 0 && row.step % out.restart_every == 0 {
                    write_restart(&out.dir.join(restart_name(row.step)), sim.state(), sim.accept_streak())?;
                    last_restart = row.step;
                }
            }
            Err(e) => break Termination::Failed(e.to_string()),
        }
    };
    csv.flush()?;
    let step = sim.state().step_index;
    if step != last_snapshot {
        write_vtk(&out.dir.join(snapshot_name(step)), sim.state())?;
    }
    if step != last_restart {
        write_restart(&out.dir.join(restart_name(step)), sim.state(), sim.accept_streak())?;
    }
    let s = sim.state();
    Ok(RunSummary {
        steps,
        rejected: sim.rejected(),
        wall_time: start.elapsed().as_secs_f64(),
        final_energy: total_energy(&s.phi, &s.f, &config.params).total,
        final_mass: total_mass(&s.phi),
        final_t: s.t,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> AdaptRules {
        AdaptRules { dt_min: 1e-4, dt_max: 1e-2, n_grow: 3, grow_factor: 1.2 }
    }

    #[test]
    fn adapt_dt_rules() {
        let r = rules();
        let mut streak = 0;
        assert_eq!(adapt_dt(Verdict::Accepted, 1e-3, &mut streak, &r).unwrap(), 1e-3);
        assert_eq!(adapt_dt(Verdict::Accepted, 1e-3, &mut streak, &r).unwrap(), 1e-3);
        assert_eq!(adapt_dt(Verdict::Accepted, 1e-3, &mut streak, &r).unwrap(), 1.2e-3);
        assert_eq!(streak, 0);
        assert_eq!(adapt_dt(Verdict::Rejected, 1e-3, &mut streak, &r).unwrap(), 5e-4);
        streak = 2;
        assert_eq!(adapt_dt(Verdict::Accepted, 1e-2, &mut streak, &r).unwrap(), 1e-2);
        assert!(matches!(adapt_dt(Verdict::Rejected, 1.5e-4, &mut streak, &r), Err(Error::DtUnderflow { .. })));
    }

    #[test]
    fn well_state_is_a_fixed_point() {
        let mut c = ConfigSpec::default();
        c.grid = GridSpec::unit_square(8).unwrap();
        c.initial.phi = PhiInit::Uniform { value: 1.0 };
        c.time.t_end = 1.0;
        c.time.dt0 = 1e-2;
        let mut sim = Simulation::new(&c).unwrap();
        let start = sim.state().clone();
        sim.run_in_memory(Some(20)).unwrap();
        assert!(sim.state().max_change(&start) <= 1e-12);
    }

    #[test]
    fn random_initial_data_is_seeded() {
        let mut c = ConfigSpec::default();
        c.grid = GridSpec::unit_square(8).unwrap();
        let a = initial_phi(&c);
        let b = initial_phi(&c);
        assert_eq!(a, b);
        c.initial.seed = 2;
        assert_ne!(initial_phi(&c), a);
        assert!(a.max_abs() <= 0.05);
    }
}
