//! Grid-sampled containers for the unknowns.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::tensor::Tensor;

/// One real per cell center (phase field, chemical potential, pressure).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self { grid, values: vec![value; grid.n_cells()] }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Precondition(format!(
                "scalar field expects {} values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.cell(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Area-weighted integral with midpoint quadrature.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn axpy(&self, alpha: f64, other: &ScalarField) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect(),
        }
    }

    /// Cell-weighted inner product `sum a_i b_i |cell|`.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        dot(&self.values, &other.values) * self.grid.cell_area()
    }
}

/// Face-staggered velocity: `u` on vertical faces, `w` on horizontal faces.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredVectorField {
    pub grid: GridSpec,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl StaggeredVectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, u: vec![0.0; grid.n_u()], w: vec![0.0; grid.n_w()] }
    }

    /// Samples both components at their face positions; boundary-normal faces
    /// are forced to zero.
    pub fn from_fn(grid: GridSpec, fu: impl Fn(f64, f64) -> f64, fw: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                let (x, y) = grid.u_position(i, j);
                v.u[grid.u_index(i, j)] = fu(x, y);
            }
        }
        for j in 1..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.w_position(i, j);
                v.w[grid.w_index(i, j)] = fw(x, y);
            }
        }
        v
    }

    /// Zeroes every boundary-normal face entry.
    pub fn enforce_no_slip(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.u[g.u_index(0, j)] = 0.0;
            self.u[g.u_index(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.w[g.w_index(i, 0)] = 0.0;
            self.w[g.w_index(i, g.ny)] = 0.0;
        }
    }

    pub fn boundary_is_zero(&self) -> bool {
        let g = self.grid;
        (0..g.ny).all(|j| self.u[g.u_index(0, j)] == 0.0 && self.u[g.u_index(g.nx, j)] == 0.0)
            && (0..g.nx).all(|i| self.w[g.w_index(i, 0)] == 0.0 && self.w[g.w_index(i, g.ny)] == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.u).max(max_abs(&self.w))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.w).all(|v| v.is_finite())
    }

    /// Face-weighted inner product; every face control volume has area `hx hy`.
    pub fn dot(&self, other: &StaggeredVectorField) -> f64 {
        (dot(&self.u, &other.u) + dot(&self.w, &other.w)) * self.grid.cell_area()
    }

    pub fn axpy(&self, alpha: f64, other: &StaggeredVectorField) -> StaggeredVectorField {
        StaggeredVectorField {
            grid: self.grid,
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + alpha * b).collect(),
            w: self.w.iter().zip(&other.w).map(|(a, b)| a + alpha * b).collect(),
        }
    }

    /// Packs `[u; w]` into one vector (solver layout).
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.u.clone();
        out.extend_from_slice(&self.w);
        out
    }

    pub fn from_vec(grid: GridSpec, data: &[f64]) -> Self {
        let nu = grid.n_u();
        Self { grid, u: data[..nu].to_vec(), w: data[nu..nu + grid.n_w()].to_vec() }
    }

    /// Face values averaged to cell centers.
    pub fn cell_averages(&self) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid;
        let mut ux = Vec::with_capacity(g.n_cells());
        let mut wy = Vec::with_capacity(g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                ux.push(0.5 * (self.u[g.u_index(i, j)] + self.u[g.u_index(i + 1, j)]));
                wy.push(0.5 * (self.w[g.w_index(i, j)] + self.w[g.w_index(i, j + 1)]));
            }
        }
        (ux, wy)
    }
}

/// `d x d` tensor per cell center, stored component-major:
/// component `(a, b)` occupies `comps[a * d + b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub grid: GridSpec,
    pub d: usize,
    pub comps: Vec<Vec<f64>>,
}

impl TensorField {
    pub fn zeros(grid: GridSpec, d: usize) -> Self {
        Self { grid, d, comps: vec![vec![0.0; grid.n_cells()]; d * d] }
    }

    pub fn uniform(grid: GridSpec, t: &Tensor) -> Self {
        let d = t.dim();
        let comps = (0..d * d).map(|k| vec![t.get(k / d, k % d); grid.n_cells()]).collect();
        Self { grid, d, comps }
    }

    pub fn identity(grid: GridSpec, d: usize) -> Self {
        Self::uniform(grid, &Tensor::identity(d))
    }

    pub fn from_fn(grid: GridSpec, d: usize, f: impl Fn(f64, f64) -> Tensor) -> Self {
        let mut out = Self::zeros(grid, d);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                out.set(grid.cell(i, j), &f(x, y));
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, cell: usize) -> Tensor {
        Tensor::from_fn(self.d, |a, b| self.comps[a * self.d + b][cell])
    }

    #[inline]
    pub fn set(&mut self, cell: usize, t: &Tensor) {
        debug_assert_eq!(t.dim(), self.d);
        for a in 0..self.d {
            for b in 0..self.d {
                self.comps[a * self.d + b][cell] = t.get(a, b);
            }
        }
    }

    pub fn component(&self, a: usize, b: usize) -> &[f64] {
        &self.comps[a * self.d + b]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| max_abs(c)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &TensorField) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_integral_of_constant() {
        let g = GridSpec::unit_square(8).unwrap();
        let f = ScalarField::constant(g, 0.3);
        assert!((f.integral() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sampled_velocity_respects_no_slip() {
        let g = GridSpec::unit_square(6).unwrap();
        let v = StaggeredVectorField::from_fn(g, |_, _| 1.0, |_, _| -2.0);
        assert!(v.boundary_is_zero());
        assert_eq!(v.u[g.u_index(3, 2)], 1.0);
    }

    #[test]
    fn tensor_field_roundtrip() {
        let g = GridSpec::unit_square(4).unwrap();
        let t = Tensor::from_row_major(&[1.0, 2.0, 3.0, 4.0]);
        let mut f = TensorField::zeros(g, 2);
        f.set(5, &t);
        assert_eq!(f.get(5), t);
        assert_eq!(f.component(1, 0)[5], 3.0);
    }
}
