//! Sparse direct solvers backed by faer (sequential, so results are
//! bitwise reproducible).

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::SparseColMat;
use faer::{Col, Side};

use crate::error::{Error, Result};
use crate::ops::sparse::OperatorMatrix;

fn to_col(b: &[f64]) -> Col<f64> {
    Col::from_fn(b.len(), |i| b[i])
}

fn from_col(x: &Col<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[i]).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Relative residual `|A x - b|_inf / max(|b|_inf, |A|_inf |x|_inf)`.
pub fn relative_residual(a: &OperatorMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let a_norm = (0..a.nrows).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let scale = inf_norm(b).max(a_norm * inf_norm(x));
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Lu,
    Cholesky,
}

/// A factorized sparse matrix with one step of iterative refinement on solve.
pub struct SparseFactor {
    matrix: OperatorMatrix,
    kind: Kind,
    lu: Option<Lu<usize, f64>>,
    llt: Option<Llt<usize, f64>>,
}

impl SparseFactor {
    /// LU with partial pivoting; works for indefinite and nonsymmetric systems.
    pub fn lu(matrix: OperatorMatrix) -> Result<Self> {
        let symbolic =
            SymbolicLu::try_new(matrix.to_faer()?.symbolic()).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Self::lu_with_symbolic(matrix, &symbolic)
    }

    /// LU reusing a symbolic analysis of the same sparsity pattern.
    pub fn lu_with_symbolic(matrix: OperatorMatrix, symbolic: &SymbolicLu<usize>) -> Result<Self> {
        let a: SparseColMat<usize, f64> = matrix.to_faer()?;
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), a.as_ref())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { matrix, kind: Kind::Lu, lu: Some(lu), llt: None })
    }

    pub fn symbolic_lu(matrix: &OperatorMatrix) -> Result<SymbolicLu<usize>> {
        SymbolicLu::try_new(matrix.to_faer()?.symbolic()).map_err(|e| Error::Factorization(format!("{e:?}")))
    }

    /// Cholesky for symmetric positive definite matrices.
    pub fn cholesky(matrix: OperatorMatrix) -> Result<Self> {
        let a: SparseColMat<usize, f64> = matrix.to_faer()?;
        let symbolic =
            SymbolicLlt::try_new(a.symbolic(), Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, a.as_ref(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("not positive definite: {e:?}")))?;
        Ok(Self { matrix, kind: Kind::Cholesky, lu: None, llt: Some(llt) })
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = to_col(b);
        let x = match self.kind {
            Kind::Lu => self.lu.as_ref().unwrap().solve(&rhs),
            Kind::Cholesky => self.llt.as_ref().unwrap().solve(&rhs),
        };
        from_col(&x)
    }

    /// Solves `A x = b`, applying one refinement sweep, and checks the
    /// relative residual against `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.matrix.nrows);
        if b.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.raw_solve(b);
        let ax = self.matrix.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = self.raw_solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        let res = relative_residual(&self.matrix, &x, b);
        if !(res <= tol) {
            return Err(Error::LinearSolve { residual: res, tolerance: tol });
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::sparse::{Layout, TripletBuilder};

    #[test]
    fn solves_small_indefinite_system() {
        // [[2, 1], [1, 0]] x = [3, 1] -> x = [1, 1]
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 2.0);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        let lu = SparseFactor::lu(b.build(Layout::Mixed, Layout::Mixed)).unwrap();
        let x = lu.solve(&[3.0, 1.0], 1e-14).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 1.0);
        b.push(1, 1, -1.0);
        assert!(SparseFactor::cholesky(b.build(Layout::Mixed, Layout::Mixed)).is_err());
    }

    #[test]
    fn zero_rhs_gives_exact_zero() {
        let mut b = TripletBuilder::new(3, 3);
        for i in 0..3 {
            b.push(i, i, 2.0);
        }
        let f = SparseFactor::cholesky(b.build(Layout::Mixed, Layout::Mixed)).unwrap();
        assert_eq!(f.solve(&[0.0; 3], 1e-14).unwrap(), vec![0.0; 3]);
    }
}
