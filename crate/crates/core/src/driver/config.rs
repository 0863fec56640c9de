//! Run description and its strict `key = value` file format.
//!
//! ```text
//! [grid]
//! nx = 64
//! ny = 64
//! [params]
//! eps = 0.03
//! [initial]
//! phi = random
//! amplitude = 0.05
//! seed = 1
//! ```
//!
//! Comments start with `#`. Unknown sections, unknown keys and repeated keys
//! are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ops::AdvectionScheme;
use crate::params::{MobilityProfile, ModelParams};

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSpec {
    pub t_end: f64,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Consecutive accepted steps before `dt` grows.
    pub n_grow: u32,
    pub grow_factor: f64,
    /// Reject a step when the budget residual exceeds this multiple of `|E^n|`.
    pub budget_reject: Option<f64>,
    pub max_steps: Option<u64>,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            t_end: 0.01,
            dt0: 1e-4,
            dt_min: 1e-8,
            dt_max: 1e-2,
            n_grow: 10,
            grow_factor: 1.2,
            budget_reject: None,
            max_steps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSpec {
    pub picard_max: u32,
    pub picard_tol: f64,
    pub advection: AdvectionScheme,
    pub tol_newton: f64,
    pub max_newton: usize,
    pub tol_lin: f64,
}

impl Default for CouplingSpec {
    fn default() -> Self {
        Self {
            picard_max: 1,
            picard_tol: 1e-10,
            advection: AdvectionScheme::default(),
            tol_newton: 1e-11,
            max_newton: 50,
            tol_lin: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhiInit {
    Uniform {
        value: f64,
    },
    /// `mean` plus i.i.d. uniform noise in `[-amplitude, amplitude]`, then one
    /// smoothing pass.
    Random {
        mean: f64,
        amplitude: f64,
    },
    /// `tanh` disk of `+1` inside `-1`.
    Disk {
        radius: f64,
        cx: f64,
        cy: f64,
        width: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum FInit {
    Identity,
    /// `diag(1 + a, 1 / (1 + a))`, unit determinant.
    Stretch {
        amount: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialSpec {
    pub phi: PhiInit,
    pub f: FInit,
    pub seed: u64,
    pub restart: Option<PathBuf>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self { phi: PhiInit::Random { mean: 0.0, amplitude: 0.05 }, f: FInit::Identity, seed: 1, restart: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Snapshot cadence in steps; 0 writes only the initial and final states.
    pub snapshot_every: u64,
    pub diagnostics_every: u64,
    pub restart_every: u64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("output"), snapshot_every: 0, diagnostics_every: 1, restart_every: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigSpec {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub time: TimeSpec,
    pub coupling: CouplingSpec,
    pub initial: InitialSpec,
    pub output: OutputSpec,
}

impl Default for ConfigSpec {
    fn default() -> Self {
        Self {
            grid: GridSpec { nx: 32, ny: 32, lx: 1.0, ly: 1.0 },
            params: ModelParams::default(),
            time: TimeSpec::default(),
            coupling: CouplingSpec::default(),
            initial: InitialSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["nx", "ny", "lx", "ly"]),
    ("params", &["nu", "lambda", "delta", "eps", "c", "f_min", "phi_lo", "phi_hi", "b0", "b1", "mobility", "c2", "c3"]),
    ("time", &["t_end", "dt0", "dt_min", "dt_max", "n_grow", "grow_factor", "budget_reject", "max_steps"]),
    ("coupling", &["picard_max", "picard_tol", "advection", "tol_newton", "max_newton", "tol_lin"]),
    (
        "initial",
        &["phi", "value", "mean", "amplitude", "radius", "cx", "cy", "width", "F", "stretch", "seed", "restart"],
    ),
    ("output", &["dir", "snapshot_every", "diagnostics_every", "restart_every"]),
];

struct Entry {
    value: String,
    line: usize,
}

struct Table {
    entries: BTreeMap<(String, String), Entry>,
}

impl Table {
    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn parse<T: std::str::FromStr>(&mut self, section: &str, key: &str, target: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(e) = self.take(section, key) {
            *target = e.value.parse::<T>().map_err(|err| Error::ConfigParse {
                line: e.line,
                message: format!("[{section}] {key} = '{}': {err}", e.value),
            })?;
        }
        Ok(())
    }

    fn optional<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| Error::ConfigParse {
                line: e.line,
                message: format!("[{section}] {key} = '{}': {err}", e.value),
            }),
        }
    }
}

fn tokenize(text: &str) -> Result<Table> {
    let mut entries = BTreeMap::new();
    let mut section: Option<&str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            let known = SECTIONS.iter().find(|(s, _)| *s == name);
            section =
                Some(known.ok_or_else(|| Error::ConfigParse { line, message: format!("unknown section [{name}]") })?.0);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::ConfigParse { line, message: format!("expected 'key = value', got '{content}'") })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .ok_or_else(|| Error::ConfigParse { line, message: format!("key '{key}' appears before any [section]") })?;
        let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(Error::ConfigParse { line, message: format!("unknown key '{key}' in [{sec}]") });
        }
        let slot = (sec.to_string(), key.to_string());
        if let Some(prev) = entries.get(&slot) {
            let prev: &Entry = prev;
            return Err(Error::ConfigParse {
                line,
                message: format!("duplicate key '{key}' in [{sec}] (first set on line {})", prev.line),
            });
        }
        entries.insert(slot, Entry { value: value.to_string(), line });
    }
    Ok(Table { entries })
}

impl ConfigSpec {
    /// Parses and validates a config file body.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = tokenize(text)?;
        let mut c = ConfigSpec::default();

        let g = &mut c.grid;
        t.parse("grid", "nx", &mut g.nx)?;
        t.parse("grid", "ny", &mut g.ny)?;
        t.parse("grid", "lx", &mut g.lx)?;
        t.parse("grid", "ly", &mut g.ly)?;

        let p = &mut c.params;
        t.parse("params", "nu", &mut p.nu)?;
        t.parse("params", "lambda", &mut p.lambda)?;
        t.parse("params", "delta", &mut p.delta)?;
        t.parse("params", "eps", &mut p.eps)?;
        t.parse("params", "c", &mut p.c_elastic)?;
        t.parse("params", "f_min", &mut p.stiffness.f_min)?;
        t.parse("params", "phi_lo", &mut p.stiffness.phi_lo)?;
        t.parse("params", "phi_hi", &mut p.stiffness.phi_hi)?;
        t.parse("params", "b0", &mut p.mobility.b0)?;
        t.parse("params", "b1", &mut p.mobility.b1)?;
        t.parse("params", "c2", &mut p.c2)?;
        t.parse("params", "c3", &mut p.c3)?;
        if let Some(e) = t.take("params", "mobility") {
            p.mobility.profile = match e.value.as_str() {
                "constant" => MobilityProfile::Constant,
                "smoothstep" => MobilityProfile::Smoothstep,
                other => {
                    return Err(Error::ConfigParse {
                        line: e.line,
                        message: format!("mobility must be 'constant' or 'smoothstep', got '{other}'"),
                    })
                }
            };
        }

        let tm = &mut c.time;
        t.parse("time", "t_end", &mut tm.t_end)?;
        t.parse("time", "dt0", &mut tm.dt0)?;
        t.parse("time", "dt_min", &mut tm.dt_min)?;
        t.parse("time", "dt_max", &mut tm.dt_max)?;
        t.parse("time", "n_grow", &mut tm.n_grow)?;
        t.parse("time", "grow_factor", &mut tm.grow_factor)?;
        tm.budget_reject = t.optional("time", "budget_reject")?;
        tm.max_steps = t.optional("time", "max_steps")?;

        let cp = &mut c.coupling;
        t.parse("coupling", "picard_max", &mut cp.picard_max)?;
        t.parse("coupling", "picard_tol", &mut cp.picard_tol)?;
        t.parse("coupling", "tol_newton", &mut cp.tol_newton)?;
        t.parse("coupling", "max_newton", &mut cp.max_newton)?;
        t.parse("coupling", "tol_lin", &mut cp.tol_lin)?;
        if let Some(e) = t.take("coupling", "advection") {
            cp.advection = e.value.parse().map_err(|message| Error::ConfigParse { line: e.line, message })?;
        }

        let mut value = 0.0;
        let mut mean = 0.0;
        let mut amplitude = 0.05;
        let mut radius = 0.25;
        let (mut cx, mut cy) = (0.5 * c.grid.lx, 0.5 * c.grid.ly);
        let mut width = 0.02;
        let mut stretch = 0.0;
        t.parse("initial", "value", &mut value)?;
        t.parse("initial", "mean", &mut mean)?;
        t.parse("initial", "amplitude", &mut amplitude)?;
        t.parse("initial", "radius", &mut radius)?;
        t.parse("initial", "cx", &mut cx)?;
        t.parse("initial", "cy", &mut cy)?;
        t.parse("initial", "width", &mut width)?;
        t.parse("initial", "stretch", &mut stretch)?;
        t.parse("initial", "seed", &mut c.initial.seed)?;
        c.initial.restart = t.optional::<PathBuf>("initial", "restart")?;
        if let Some(e) = t.take("initial", "phi") {
            c.initial.phi = match e.value.as_str() {
                "uniform" => PhiInit::Uniform { value },
                "random" => PhiInit::Random { mean, amplitude },
                "disk" => PhiInit::Disk { radius, cx, cy, width },
                other => {
                    return Err(Error::ConfigParse {
                        line: e.line,
                        message: format!("phi must be 'uniform', 'random' or 'disk', got '{other}'"),
                    })
                }
            };
        } else {
            c.initial.phi = PhiInit::Random { mean, amplitude };
        }
        if let Some(e) = t.take("initial", "F") {
            c.initial.f = match e.value.as_str() {
                "identity" => FInit::Identity,
                "stretch" => FInit::Stretch { amount: stretch },
                other => {
                    return Err(Error::ConfigParse {
                        line: e.line,
                        message: format!("F must be 'identity' or 'stretch', got '{other}'"),
                    })
                }
            };
        }

        let o = &mut c.output;
        t.parse("output", "dir", &mut o.dir)?;
        t.parse("output", "snapshot_every", &mut o.snapshot_every)?;
        t.parse("output", "diagnostics_every", &mut o.diagnostics_every)?;
        t.parse("output", "restart_every", &mut o.restart_every)?;

        debug_assert!(t.entries.is_empty(), "every allowed key is consumed");
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Checks every bound the solver relies on and reports all violations.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(Error::Validation(m)) = GridSpec::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly) {
            problems.push(m);
        }
        if let Err(Error::Validation(m)) = self.params.validate_for_solver() {
            problems.push(m);
        }
        if !(self.params.lambda > 0.0) {
            problems.push(format!("the coupled solver requires lambda > 0, got {}", self.params.lambda));
        }
        let tm = &self.time;
        if !(tm.t_end >= 0.0 && tm.t_end.is_finite()) {
            problems.push(format!("t_end must be finite and >= 0, got {}", tm.t_end));
        }
        if !(tm.dt_min > 0.0 && tm.dt_min <= tm.dt0 && tm.dt0 <= tm.dt_max && tm.dt_max.is_finite()) {
            problems.push(format!(
                "need 0 < dt_min <= dt0 <= dt_max, got dt_min = {}, dt0 = {}, dt_max = {}",
                tm.dt_min, tm.dt0, tm.dt_max
            ));
        }
        if tm.n_grow == 0 || !(tm.grow_factor >= 1.0) {
            problems.push("n_grow must be >= 1 and grow_factor >= 1".into());
        }
        if let Some(r) = tm.budget_reject {
            if !(r > 0.0) {
                problems.push(format!("budget_reject must be positive, got {r}"));
            }
        }
        let cp = &self.coupling;
        if cp.picard_max == 0 || !(cp.picard_tol >= 0.0) {
            problems.push("picard_max must be >= 1 and picard_tol >= 0".into());
        }
        if !(cp.tol_newton > 0.0 && cp.tol_lin > 0.0) || cp.max_newton == 0 {
            problems.push("solver tolerances must be positive and max_newton >= 1".into());
        }
        match &self.initial.phi {
            PhiInit::Random { amplitude, .. } if !(*amplitude >= 0.0) => {
                problems.push(format!("amplitude must be >= 0, got {amplitude}"))
            }
            PhiInit::Disk { radius, width, .. } if !(*radius > 0.0 && *width > 0.0) => {
                problems.push("disk radius and width must be positive".into())
            }
            _ => {}
        }
        if let FInit::Stretch { amount } = self.initial.f {
            if !(amount > -1.0) {
                problems.push(format!("stretch must exceed -1, got {amount}"));
            }
        }
        if self.output.diagnostics_every == 0 {
            problems.push("diagnostics_every must be >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let text = "\
# spinodal
[grid]
nx = 16
ny = 8
lx = 2.0
[params]
eps = 0.05   # interface
mobility = smoothstep
b1 = 2
[time]
t_end = 0.1
dt0 = 1e-3
dt_min = 1e-3
dt_max = 1e-3
budget_reject = 5
[coupling]
picard_max = 4
advection = centered
[initial]
phi = disk
radius = 0.3
F = stretch
stretch = 0.1
seed = 7
[output]
dir = out/run1
snapshot_every = 10
";
        let c = ConfigSpec::parse(text).unwrap();
        assert_eq!((c.grid.nx, c.grid.ny, c.grid.lx), (16, 8, 2.0));
        assert_eq!(c.params.eps, 0.05);
        assert_eq!(c.params.mobility.profile, MobilityProfile::Smoothstep);
        assert_eq!(c.time.budget_reject, Some(5.0));
        assert_eq!(c.coupling.advection, AdvectionScheme::Centered);
        assert_eq!(c.coupling.picard_max, 4);
        assert!(matches!(c.initial.phi, PhiInit::Disk { radius, cx, .. } if radius == 0.3 && cx == 1.0));
        assert_eq!(c.initial.f, FInit::Stretch { amount: 0.1 });
        assert_eq!(c.initial.seed, 7);
        assert_eq!(c.output.dir, PathBuf::from("out/run1"));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ConfigSpec::parse("[grid]\nnx = 8\nnz = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 3, .. }), "{err}");
        assert!(ConfigSpec::parse("[mesh]\n").is_err());
        assert!(ConfigSpec::parse("nx = 3\n").is_err());
        assert!(ConfigSpec::parse("[grid]\nnx = 8\nnx = 9\n").is_err());
        assert!(ConfigSpec::parse("[grid]\nnx = eight\n").is_err());
    }

    #[test]
    fn rejects_zero_f_min_with_bound_message() {
        let err = ConfigSpec::parse("[params]\nf_min = 0\n").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("stiffness bound"), "{err}");
    }

    #[test]
    fn rejects_inconsistent_time_steps() {
        let err = ConfigSpec::parse("[time]\ndt0 = 1\ndt_max = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("dt_min <= dt0 <= dt_max"));
    }
}
