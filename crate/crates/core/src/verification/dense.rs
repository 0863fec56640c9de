//! Dense reference operators built entry by entry from the stencil
//! definitions, compared against the matrix-free kernels and the sparse
//! assemblies.

use faer::linalg::solvers::Solve;
use faer::{Col, Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{max_abs_diff, ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;
use crate::ops::sparse::{assemble_div, assemble_grad, assemble_laplacian};
use crate::ops::{div_fc, grad_cc, laplacian_neumann, tensor_divergence, velocity_gradient};
use crate::stokes::StokesSolver;

/// Largest grid the dense oracle accepts in either direction.
pub const MAX_DENSE_CELLS: usize = 12;

/// Dense matrices for one small grid. Faces are ordered `u` then `w`, each
/// row-major with `x` fastest; the Stokes system is over
/// `[u; w; q; multiplier]`.
pub struct DenseOracle {
    pub grid: GridSpec,
    pub nu: f64,
    pub grad: Mat<f64>,
    pub div: Mat<f64>,
    pub laplacian: Mat<f64>,
    pub stokes: Mat<f64>,
}

struct Layout {
    nx: usize,
    ny: usize,
}

impl Layout {
    fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    fn u(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    fn w(&self, i: usize, j: usize) -> usize {
        (self.nx + 1) * self.ny + j * self.nx + i
    }
    fn faces(&self) -> usize {
        (self.nx + 1) * self.ny + self.nx * (self.ny + 1)
    }
    fn cells(&self) -> usize {
        self.nx * self.ny
    }
}

impl DenseOracle {
    pub fn new(grid: GridSpec, nu: f64) -> Result<Self> {
        if grid.nx > MAX_DENSE_CELLS || grid.ny > MAX_DENSE_CELLS {
            return Err(Error::Precondition(format!(
                "dense oracle supports at most {MAX_DENSE_CELLS}x{MAX_DENSE_CELLS} cells, got {}x{}",
                grid.nx, grid.ny
            )));
        }
        let l = Layout { nx: grid.nx, ny: grid.ny };
        let (hx, hy) = (grid.lx / grid.nx as f64, grid.ly / grid.ny as f64);
        let (nf, nc) = (l.faces(), l.cells());

        let mut grad = Mat::<f64>::zeros(nf, nc);
        for j in 0..l.ny {
            for i in 1..l.nx {
                grad[(l.u(i, j), l.cell(i - 1, j))] = -1.0 / hx;
                grad[(l.u(i, j), l.cell(i, j))] = 1.0 / hx;
            }
        }
        for j in 1..l.ny {
            for i in 0..l.nx {
                grad[(l.w(i, j), l.cell(i, j - 1))] = -1.0 / hy;
                grad[(l.w(i, j), l.cell(i, j))] = 1.0 / hy;
            }
        }

        let mut div = Mat::<f64>::zeros(nc, nf);
        for j in 0..l.ny {
            for i in 0..l.nx {
                let c = l.cell(i, j);
                div[(c, l.u(i + 1, j))] = 1.0 / hx;
                div[(c, l.u(i, j))] = -1.0 / hx;
                div[(c, l.w(i, j + 1))] = 1.0 / hy;
                div[(c, l.w(i, j))] = -1.0 / hy;
            }
        }

        // five-point stencil; a missing neighbor means zero flux
        let mut laplacian = Mat::<f64>::zeros(nc, nc);
        for j in 0..l.ny {
            for i in 0..l.nx {
                let c = l.cell(i, j);
                let mut link = |other: usize, w: f64| {
                    laplacian[(c, other)] += w;
                    laplacian[(c, c)] -= w;
                };
                if i > 0 {
                    link(l.cell(i - 1, j), 1.0 / (hx * hx));
                }
                if i + 1 < l.nx {
                    link(l.cell(i + 1, j), 1.0 / (hx * hx));
                }
                if j > 0 {
                    link(l.cell(i, j - 1), 1.0 / (hy * hy));
                }
                if j + 1 < l.ny {
                    link(l.cell(i, j + 1), 1.0 / (hy * hy));
                }
            }
        }

        let n = nf + nc + 1;
        let mut stokes = Mat::<f64>::zeros(n, n);
        let (ax, ay) = (nu / (hx * hx), nu / (hy * hy));
        for j in 0..l.ny {
            for i in 0..=l.nx {
                let r = l.u(i, j);
                if i == 0 || i == l.nx {
                    stokes[(r, r)] = 1.0;
                    continue;
                }
                stokes[(r, r)] = 2.0 * ax + 2.0 * ay;
                stokes[(r, l.u(i - 1, j))] -= ax;
                stokes[(r, l.u(i + 1, j))] -= ax;
                // tangential wall: the ghost is minus the interior value
                if j > 0 {
                    stokes[(r, l.u(i, j - 1))] -= ay;
                } else {
                    stokes[(r, r)] += ay;
                }
                if j + 1 < l.ny {
                    stokes[(r, l.u(i, j + 1))] -= ay;
                } else {
                    stokes[(r, r)] += ay;
                }
                stokes[(r, nf + l.cell(i, j))] += 1.0 / hx;
                stokes[(r, nf + l.cell(i - 1, j))] -= 1.0 / hx;
            }
        }
        for j in 0..=l.ny {
            for i in 0..l.nx {
                let r = l.w(i, j);
                if j == 0 || j == l.ny {
                    stokes[(r, r)] = 1.0;
                    continue;
                }
                stokes[(r, r)] = 2.0 * ax + 2.0 * ay;
                stokes[(r, l.w(i, j - 1))] -= ay;
                stokes[(r, l.w(i, j + 1))] -= ay;
                if i > 0 {
                    stokes[(r, l.w(i - 1, j))] -= ax;
                } else {
                    stokes[(r, r)] += ax;
                }
                if i + 1 < l.nx {
                    stokes[(r, l.w(i + 1, j))] -= ax;
                } else {
                    stokes[(r, r)] += ax;
                }
                stokes[(r, nf + l.cell(i, j))] += 1.0 / hy;
                stokes[(r, nf + l.cell(i, j - 1))] -= 1.0 / hy;
            }
        }
        for c in 0..nc {
            for f in 0..nf {
                stokes[(nf + c, f)] = -div[(c, f)];
            }
            stokes[(nf + c, n - 1)] = 1.0;
            stokes[(n - 1, nf + c)] = 1.0;
        }
        Ok(Self { grid, nu, grad, div, laplacian, stokes })
    }

    /// Dense Stokes solve; returns face velocities and mean-zero pressure.
    pub fn solve_stokes(&self, force: &StaggeredVectorField) -> (Vec<f64>, Vec<f64>) {
        let nf = self.grad.nrows();
        let nc = self.grad.ncols();
        let n = self.stokes.nrows();
        let mut force = force.clone();
        force.enforce_no_slip();
        let f = force.to_vec();
        let rhs = Col::<f64>::from_fn(n, |r| if r < nf { f[r] } else { 0.0 });
        let x = self.stokes.partial_piv_lu().solve(&rhs);
        ((0..nf).map(|r| x[r]).collect(), (0..nc).map(|r| x[nf + r]).collect())
    }
}

fn dense_apply(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)] * x[c]).sum()).collect()
}

/// Deviations of the production kernels from the dense oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseReport {
    pub samples: usize,
    /// Largest absolute deviation over grad, div and Laplacian, both for
    /// the matrix-free kernels and for the assembled sparse matrices.
    pub operator_error: f64,
    /// `|<grad phi, v> + <phi, div v>|` relative to `|grad phi| |v|`.
    pub grad_div_adjointness: f64,
    /// Same for the velocity gradient and the tensor divergence.
    pub tensor_adjointness: f64,
    /// Number of Laplacian eigenvalues below `1e-10` of the spectral radius.
    pub kernel_dimension: usize,
    /// `max |L 1|`: the kernel contains the constants.
    pub constant_residual: f64,
    pub stokes_velocity_error: f64,
}

impl DenseReport {
    pub fn passes(&self, tol: f64, adjoint_tol: f64) -> bool {
        self.operator_error <= tol
            && self.grad_div_adjointness <= adjoint_tol
            && self.tensor_adjointness <= adjoint_tol
            && self.kernel_dimension == 1
            && self.constant_residual <= tol
            && self.stokes_velocity_error <= 1e-10
    }
}

fn random_cells(grid: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField { grid, values: (0..grid.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect() }
}

fn random_faces(grid: GridSpec, rng: &mut ChaCha8Rng) -> StaggeredVectorField {
    let mut v = StaggeredVectorField {
        grid,
        u: (0..grid.n_u()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        w: (0..grid.n_w()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    v.enforce_no_slip();
    v
}

/// Applies the production kernels and the dense oracle to `samples` random
/// fields drawn from `seed`.
pub fn compare_with_oracle(oracle: &DenseOracle, samples: usize, seed: u64) -> Result<DenseReport> {
    let grid = oracle.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sparse_grad = assemble_grad(&grid);
    let sparse_div = assemble_div(&grid);
    let sparse_lap = assemble_laplacian(&grid, None);
    let stokes = StokesSolver::with_method(grid, oracle.nu, Default::default(), 1e-13)?;

    let mut operator_error = 0.0_f64;
    let mut grad_div_adjointness = 0.0_f64;
    let mut tensor_adjointness = 0.0_f64;
    let mut stokes_velocity_error = 0.0_f64;
    for _ in 0..samples {
        let phi = random_cells(grid, &mut rng);
        let v = random_faces(grid, &mut rng);

        let dense_g = dense_apply(&oracle.grad, &phi.values);
        operator_error = operator_error
            .max(max_abs_diff(&dense_g, &grad_cc(&phi).to_vec()))
            .max(max_abs_diff(&dense_g, &sparse_grad.matvec(&phi.values)));
        let dense_d = dense_apply(&oracle.div, &v.to_vec());
        operator_error = operator_error
            .max(max_abs_diff(&dense_d, &div_fc(&v).values))
            .max(max_abs_diff(&dense_d, &sparse_div.matvec(&v.to_vec())));
        let dense_l = dense_apply(&oracle.laplacian, &phi.values);
        operator_error = operator_error
            .max(max_abs_diff(&dense_l, &laplacian_neumann(&phi, None)?.values))
            .max(max_abs_diff(&dense_l, &sparse_lap.matvec(&phi.values)));

        let g = grad_cc(&phi);
        let gap = (g.dot(&v) + phi.dot(&div_fc(&v))).abs();
        grad_div_adjointness = grad_div_adjointness.max(gap / (g.dot(&g).sqrt() * v.dot(&v).sqrt()));

        let sigma = TensorField { grid, d: 2, comps: (0..4).map(|_| random_cells(grid, &mut rng).values).collect() };
        let gv = velocity_gradient(&v);
        let inner: f64 =
            (0..4).map(|k| gv.comps[k].iter().zip(&sigma.comps[k]).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()
                * grid.cell_area();
        let norm = |t: &TensorField| (t.comps.iter().flatten().map(|x| x * x).sum::<f64>() * grid.cell_area()).sqrt();
        let gap = (tensor_divergence(&sigma).dot(&v) + inner).abs();
        tensor_adjointness = tensor_adjointness.max(gap / (norm(&sigma) * v.dot(&v).sqrt()));

        let force = random_faces(grid, &mut rng);
        let (dense_v, _) = oracle.solve_stokes(&force);
        let (sparse_v, _) = stokes.solve(&force)?;
        stokes_velocity_error = stokes_velocity_error.max(max_abs_diff(&dense_v, &sparse_v.to_vec()));
    }

    let eig = oracle
        .laplacian
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Factorization(format!("dense eigensolver failed: {e:?}")))?;
    let radius = eig.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let kernel_dimension = eig.iter().filter(|x| x.abs() <= 1e-10 * radius).count();
    let ones = vec![1.0; grid.n_cells()];
    let constant_residual = dense_apply(&oracle.laplacian, &ones).iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    Ok(DenseReport {
        samples,
        operator_error,
        grad_div_adjointness,
        tensor_adjointness,
        kernel_dimension,
        constant_residual,
        stokes_velocity_error,
    })
}

/// Builds the oracle for `grid` and compares 50 random samples.
pub fn dense_oracle_compare(grid: GridSpec) -> Result<DenseReport> {
    let oracle = DenseOracle::new(grid, 1.0)?;
    compare_with_oracle(&oracle, 50, 7)
}
