//! Diagnostics CSV, legacy VTK snapshots and the binary restart format.
//!
//! Restart layout (all little-endian):
//!
//! ```text
//! b"CHVE1"
//! u64 nx, u64 ny, f64 lx, f64 ly
//! u64 step_index, f64 t, f64 dt, u64 accept_streak
//! f64 phi[nx*ny], phi_prev[nx*ny], mu[nx*ny], q[nx*ny]
//! f64 u[(nx+1)*ny], w[nx*(ny+1)]
//! f64 F_xx[nx*ny], F_xy[nx*ny], F_yx[nx*ny], F_yy[nx*ny]
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;
use crate::state::SimState;

pub const RESTART_MAGIC: &[u8; 5] = b"CHVE1";

/// Streams diagnostics rows to a CSV file.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(DiagnosticsRow::CSV_HEADER.as_bytes())?;
        out.write_all(b"\n")?;
        Ok(Self { out })
    }

    pub fn write_row(&mut self, row: &DiagnosticsRow) -> Result<()> {
        self.out.write_all(row.to_csv().as_bytes())?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:08}.vtk")
}

pub fn restart_name(step: u64) -> String {
    format!("restart_{step:08}.bin")
}

/// Legacy ASCII VTK with cell data `phi`, `mu`, `q`, `velocity`, `F`.
pub fn write_vtk(path: &Path, state: &SimState) -> Result<()> {
    let g = state.grid();
    let n = g.n_cells();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "chve step {} t {:.16e}", state.step_index, state.t)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} 1", g.nx + 1, g.ny + 1)?;
    writeln!(out, "ORIGIN 0 0 0")?;
    writeln!(out, "SPACING {:.16e} {:.16e} 1", g.hx(), g.hy())?;
    writeln!(out, "CELL_DATA {n}")?;
    for (name, field) in [("phi", &state.phi), ("mu", &state.mu), ("q", &state.q)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in &field.values {
            writeln!(out, "{v:.16e}")?;
        }
    }
    let (ux, wy) = state.v.cell_averages();
    writeln!(out, "VECTORS velocity double")?;
    for k in 0..n {
        writeln!(out, "{:.16e} {:.16e} 0", ux[k], wy[k])?;
    }
    writeln!(out, "TENSORS F double")?;
    let d = state.f.d;
    for k in 0..n {
        let t = state.f.get(k);
        for r in 0..3 {
            let row: Vec<String> = (0..3)
                .map(|c| if r < d && c < d { format!("{:.16e}", t.get(r, c)) } else { "0".to_string() })
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn put_u64(out: &mut impl Write, v: u64) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn put_f64s(out: &mut impl Write, vs: &[f64]) -> std::io::Result<()> {
    for v in vs {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Writes a lossless restart file; `accept_streak` is the adaptive-step counter.
pub fn write_restart(path: &Path, state: &SimState, accept_streak: u32) -> Result<()> {
    let g = state.grid();
    if state.f.d != 2 {
        return Err(Error::Precondition("restart files hold 2x2 deformation fields".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(RESTART_MAGIC)?;
    put_u64(&mut out, g.nx as u64)?;
    put_u64(&mut out, g.ny as u64)?;
    put_f64s(&mut out, &[g.lx, g.ly])?;
    put_u64(&mut out, state.step_index)?;
    put_f64s(&mut out, &[state.t, state.dt])?;
    put_u64(&mut out, accept_streak as u64)?;
    for f in [&state.phi, &state.phi_prev, &state.mu, &state.q] {
        put_f64s(&mut out, &f.values)?;
    }
    put_f64s(&mut out, &state.v.u)?;
    put_f64s(&mut out, &state.v.w)?;
    for c in &state.f.comps {
        put_f64s(&mut out, c)?;
    }
    out.flush()?;
    Ok(())
}

struct Reader<R: Read> {
    inner: R,
    path: PathBuf,
}

impl<R: Read> Reader<R> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Restart { path: self.path.clone(), message: message.into() }
    }

    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| self.err(format!("truncated file: {e}")))?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes::<8>()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes::<8>()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Reads a restart file, returning the state and the accept streak.
pub fn read_restart(path: &Path) -> Result<(SimState, u32)> {
    let file = File::open(path).map_err(|e| Error::Restart { path: path.into(), message: e.to_string() })?;
    let mut r = Reader { inner: BufReader::new(file), path: path.into() };
    if &r.bytes::<5>()? != RESTART_MAGIC {
        return Err(r.err("bad magic, not a CHVE1 restart file"));
    }
    let nx = r.u64()? as usize;
    let ny = r.u64()? as usize;
    let (lx, ly) = (r.f64()?, r.f64()?);
    let grid = GridSpec::new(nx, ny, lx, ly).map_err(|e| r.err(e.to_string()))?;
    let step_index = r.u64()?;
    let (t, dt) = (r.f64()?, r.f64()?);
    let streak = r.u64()? as u32;
    let n = grid.n_cells();
    let mut scalars = Vec::with_capacity(4);
    for _ in 0..4 {
        scalars.push(ScalarField { grid, values: r.f64s(n)? });
    }
    let u = r.f64s(grid.n_u())?;
    let w = r.f64s(grid.n_w())?;
    let mut f = TensorField::zeros(grid, 2);
    for c in 0..4 {
        f.comps[c] = r.f64s(n)?;
    }
    let mut probe = [0u8; 1];
    if r.inner.read(&mut probe).map_err(|e| r.err(e.to_string()))? != 0 {
        return Err(r.err("trailing bytes after the last field"));
    }
    let q = scalars.pop().unwrap();
    let mu = scalars.pop().unwrap();
    let phi_prev = scalars.pop().unwrap();
    let phi = scalars.pop().unwrap();
    let state = SimState { phi, phi_prev, mu, f, v: StaggeredVectorField { grid, u, w }, q, t, dt, step_index };
    if !state.is_finite() {
        return Err(r.err("non-finite values in restart data"));
    }
    Ok((state, streak))
}

/// Parses a diagnostics CSV produced by [`CsvWriter`].
pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let file = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (idx, line) in file.lines().enumerate() {
        let line = line?;
        let bad = |message: String| Error::ConfigParse { line: idx + 1, message };
        if idx == 0 {
            if line.trim() != DiagnosticsRow::CSV_HEADER {
                return Err(bad("unexpected diagnostics header".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(bad(format!("expected 13 columns, got {}", cols.len())));
        }
        let f = |i: usize| cols[i].trim().parse::<f64>().map_err(|e| bad(format!("column {}: {e}", i + 1)));
        let u = |i: usize| cols[i].trim().parse::<u64>().map_err(|e| bad(format!("column {}: {e}", i + 1)));
        rows.push(DiagnosticsRow {
            step: u(0)?,
            t: f(1)?,
            dt: f(2)?,
            energy: crate::diagnostics::EnergyBreakdown { total: f(3)?, elastic: f(4)?, interface: f(5)?, bulk: f(6)? },
            dissipation: f(7)?,
            mass: f(8)?,
            div_v_max: f(9)?,
            picard_iters: u(10)? as usize,
            newton_iters: u(11)? as usize,
            budget_residual: f(12)?,
        });
    }
    Ok(rows)
}

/// Summary statistics printed by the `energy-report` command.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub rows: usize,
    pub e_initial: f64,
    pub e_final: f64,
    /// Largest `E^{n+1} - E^n` over consecutive rows.
    pub max_increase: f64,
    pub increases: usize,
    pub mass_drift: f64,
    pub max_div: f64,
    pub mean_abs_budget: f64,
}

pub fn energy_report(rows: &[DiagnosticsRow]) -> Option<EnergyReport> {
    let first = rows.first()?;
    let last = rows.last()?;
    let mut max_increase = f64::NEG_INFINITY;
    let mut increases = 0;
    for pair in rows.windows(2) {
        let d = pair[1].energy.total - pair[0].energy.total;
        max_increase = max_increase.max(d);
        if d > 0.0 {
            increases += 1;
        }
    }
    let stepped: Vec<&DiagnosticsRow> = rows.iter().filter(|r| r.step > 0).collect();
    let mean_abs_budget = if stepped.is_empty() {
        0.0
    } else {
        stepped.iter().map(|r| r.budget_residual.abs()).sum::<f64>() / stepped.len() as f64
    };
    Some(EnergyReport {
        rows: rows.len(),
        e_initial: first.energy.total,
        e_final: last.energy.total,
        max_increase: if rows.len() > 1 { max_increase } else { 0.0 },
        increases,
        mass_drift: rows.iter().map(|r| (r.mass - first.mass).abs()).fold(0.0, f64::max),
        max_div: rows.iter().map(|r| r.div_v_max).fold(0.0, f64::max),
        mean_abs_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn sample_state() -> SimState {
        let g = GridSpec::new(5, 4, 1.3, 0.9).unwrap();
        let mut s = SimState::at_rest(ScalarField::from_fn(g, |x, y| (x * 7.0).sin() + y / 3.0), 1e-3);
        s.mu = ScalarField::from_fn(g, |x, y| x * y - 0.1);
        s.q = ScalarField::from_fn(g, |x, _| x.cos());
        s.v = StaggeredVectorField::from_fn(g, |x, y| x * y, |x, y| (x - y) / 7.0);
        s.f = TensorField::from_fn(g, 2, |x, y| Tensor::from_row_major(&[1.0 + x, y, -y, 1.0 / 3.0]));
        s.t = 0.123456789;
        s.step_index = 42;
        s
    }

    #[test]
    fn restart_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(restart_name(42));
        let s = sample_state();
        write_restart(&path, &s, 3).unwrap();
        let (back, streak) = read_restart(&path).unwrap();
        assert_eq!(streak, 3);
        assert_eq!(back, s);
    }

    #[test]
    fn restart_rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        std::fs::write(&path, b"CHVE2....").unwrap();
        assert!(matches!(read_restart(&path), Err(Error::Restart { .. })));
        write_restart(&path, &sample_state(), 0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(read_restart(&path).is_err());
    }

    #[test]
    fn vtk_has_expected_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(snapshot_name(7));
        assert!(path.ends_with("snap_00000007.vtk"));
        write_vtk(&path, &sample_state()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for needle in [
            "DATASET STRUCTURED_POINTS",
            "DIMENSIONS 6 5 1",
            "CELL_DATA 20",
            "SCALARS phi double 1",
            "SCALARS mu double 1",
            "SCALARS q double 1",
            "VECTORS velocity double",
            "TENSORS F double",
        ] {
            assert!(text.contains(needle), "missing {needle}");
        }
        assert!(!text.contains('\r'));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let row = DiagnosticsRow {
            step: 1,
            t: 0.1 + 0.2,
            dt: 1.0 / 3.0,
            energy: crate::diagnostics::EnergyBreakdown { elastic: 1e-300, interface: 2.5, bulk: 3.0, total: 5.5 },
            dissipation: 0.7,
            mass: -0.0,
            div_v_max: 1e-17,
            picard_iters: 3,
            newton_iters: 9,
            budget_residual: -2e-5,
        };
        let mut w = CsvWriter::create(&path).unwrap();
        w.write_row(&row).unwrap();
        w.flush().unwrap();
        let back = read_diagnostics(&path).unwrap();
        assert_eq!(back, vec![row]);
    }
}
