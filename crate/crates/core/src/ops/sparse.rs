//! Assembled sparse forms of the staggered-grid operators.
//!
//! Assembly walks each row's stencil directly instead of probing the
//! matrix-free kernels, so the two paths check each other.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Which field layout a row or column index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Cell-center scalar.
    Cell,
    /// Face vector `[u; w]`.
    Face,
    /// One component of a cell-centered tensor.
    TensorComponent,
    /// Anything else (saddle systems, block systems).
    Mixed,
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_layout: Layout,
    pub col_layout: Layout,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, val));
    }

    /// Appends every entry of `m` shifted by `(row_off, col_off)`, scaled by `s`.
    pub fn push_block(&mut self, m: &OperatorMatrix, row_off: usize, col_off: usize, s: f64) {
        for r in 0..m.nrows {
            for (c, v) in m.row(r) {
                self.push(r + row_off, c + col_off, s * v);
            }
        }
    }

    pub fn build(mut self, row_layout: Layout, col_layout: Layout) -> OperatorMatrix {
        // stable sort keeps duplicate summation order deterministic
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        OperatorMatrix { nrows: self.nrows, ncols: self.ncols, row_layout, col_layout, row_ptr, col_idx, vals }
    }
}

impl OperatorMatrix {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec: dimension mismatch");
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn transpose(&self) -> OperatorMatrix {
        let mut b = TripletBuilder::new(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                b.push(c, r, v);
            }
        }
        b.build(self.col_layout, self.row_layout)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut m = 0.0_f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m = m.max((v - t.get(r, c)).abs());
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] += v;
            }
        }
        d
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v))).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Factorization(format!("matrix conversion failed: {e:?}")))
    }
}

/// Cell-to-face gradient with homogeneous Neumann data: rows of boundary
/// faces are empty. Face rows are ordered `[u; w]`.
pub fn assemble_grad(grid: &GridSpec) -> OperatorMatrix {
    let (nx, ny) = (grid.nx, grid.ny);
    let nu = grid.n_u();
    let mut b = TripletBuilder::new(nu + grid.n_w(), grid.n_cells());
    let (rhx, rhy) = (1.0 / grid.hx(), 1.0 / grid.hy());
    for j in 0..ny {
        for i in 1..nx {
            let row = j * (nx + 1) + i;
            b.push(row, j * nx + i, rhx);
            b.push(row, j * nx + i - 1, -rhx);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let row = nu + j * nx + i;
            b.push(row, j * nx + i, rhy);
            b.push(row, (j - 1) * nx + i, -rhy);
        }
    }
    b.build(Layout::Face, Layout::Cell)
}

/// Face-to-cell divergence over all faces (boundary faces included).
pub fn assemble_div(grid: &GridSpec) -> OperatorMatrix {
    let (nx, ny) = (grid.nx, grid.ny);
    let nu = grid.n_u();
    let mut b = TripletBuilder::new(grid.n_cells(), nu + grid.n_w());
    let (rhx, rhy) = (1.0 / grid.hx(), 1.0 / grid.hy());
    for j in 0..ny {
        for i in 0..nx {
            let row = j * nx + i;
            b.push(row, j * (nx + 1) + i + 1, rhx);
            b.push(row, j * (nx + 1) + i, -rhx);
            b.push(row, nu + (j + 1) * nx + i, rhy);
            b.push(row, nu + j * nx + i, -rhy);
        }
    }
    b.build(Layout::Cell, Layout::Face)
}

/// Neumann Laplacian `div(c grad .)` with face coefficients taken as the
/// arithmetic mean of the cell coefficients (all ones when `coeff` is `None`).
pub fn assemble_laplacian(grid: &GridSpec, coeff: Option<&[f64]>) -> OperatorMatrix {
    let (nx, ny) = (grid.nx, grid.ny);
    let n = grid.n_cells();
    let c = |k: usize| coeff.map_or(1.0, |c| c[k]);
    let mut b = TripletBuilder::new(n, n);
    let (rhx2, rhy2) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let mut neighbors = Vec::with_capacity(4);
            if i > 0 {
                neighbors.push((k - 1, rhx2));
            }
            if i + 1 < nx {
                neighbors.push((k + 1, rhx2));
            }
            if j > 0 {
                neighbors.push((k - nx, rhy2));
            }
            if j + 1 < ny {
                neighbors.push((k + nx, rhy2));
            }
            for (m, r2) in neighbors {
                let face = 0.5 * (c(k) + c(m)) * r2;
                b.push(k, m, face);
                b.push(k, k, -face);
            }
        }
    }
    b.build(Layout::Cell, Layout::Cell)
}

/// Component-wise velocity Laplacian on `[u; w]` with no-slip walls.
/// Boundary-face rows and columns are empty.
pub fn assemble_vector_laplacian(grid: &GridSpec) -> OperatorMatrix {
    let (nx, ny) = (grid.nx, grid.ny);
    let nu = grid.n_u();
    let n = nu + grid.n_w();
    let (rhx2, rhy2) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let mut b = TripletBuilder::new(n, n);
    for j in 0..ny {
        for i in 1..nx {
            let row = j * (nx + 1) + i;
            b.push(row, row, -2.0 * rhx2 - 2.0 * rhy2);
            if i > 1 {
                b.push(row, row - 1, rhx2);
            }
            if i + 1 < nx {
                b.push(row, row + 1, rhx2);
            }
            // tangential walls: ghost = -interior value
            if j > 0 {
                b.push(row, row - (nx + 1), rhy2);
            } else {
                b.push(row, row, -rhy2);
            }
            if j + 1 < ny {
                b.push(row, row + (nx + 1), rhy2);
            } else {
                b.push(row, row, -rhy2);
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let row = nu + j * nx + i;
            b.push(row, row, -2.0 * rhx2 - 2.0 * rhy2);
            if j > 1 {
                b.push(row, row - nx, rhy2);
            }
            if j + 1 < ny {
                b.push(row, row + nx, rhy2);
            }
            if i > 0 {
                b.push(row, row - 1, rhx2);
            } else {
                b.push(row, row, -rhx2);
            }
            if i + 1 < nx {
                b.push(row, row + 1, rhx2);
            } else {
                b.push(row, row, -rhx2);
            }
        }
    }
    b.build(Layout::Face, Layout::Face)
}
