//! Pointwise algebra on small square tensors (d = 2 or 3).

use std::ops::{Add, Mul, Sub};

/// A `d x d` real tensor stored row-major in a fixed 3x3 buffer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor {
    d: usize,
    a: [f64; 9],
}

impl Tensor {
    pub fn zeros(d: usize) -> Self {
        assert!(d == 2 || d == 3, "tensor dimension must be 2 or 3, got {d}");
        Self { d, a: [0.0; 9] }
    }

    pub fn identity(d: usize) -> Self {
        let mut t = Self::zeros(d);
        for i in 0..d {
            t.set(i, i, 1.0);
        }
        t
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut t = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            t.set(i, i, v);
        }
        t
    }

    /// Builds a tensor from row-major entries; `entries.len()` must be 4 or 9.
    pub fn from_row_major(entries: &[f64]) -> Self {
        let d = match entries.len() {
            4 => 2,
            9 => 3,
            n => panic!("expected 4 or 9 entries, got {n}"),
        };
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.set(i, j, entries[i * d + j]);
            }
        }
        t
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.set(i, j, f(i, j));
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[3 * i + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[3 * i + j] = v;
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.d;
        (0..d * d).map(|k| self.get(k / d, k % d)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.d, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.d, |i, j| s * self.get(i, j))
    }

    pub fn matmul(&self, other: &Tensor) -> Self {
        assert_eq!(self.d, other.d);
        Self::from_fn(self.d, |i, j| (0..self.d).map(|k| self.get(i, k) * other.get(k, j)).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|v| v.is_finite())
    }

    /// Inverse via the cofactor matrix; `None` when `det F == 0`.
    pub fn inverse(&self) -> Option<Self> {
        let det = determinant(self);
        if det == 0.0 {
            return None;
        }
        Some(cofactor(self).transpose().scale(1.0 / det))
    }
}

impl Add for Tensor {
    type Output = Tensor;
    fn add(self, rhs: Tensor) -> Tensor {
        assert_eq!(self.d, rhs.d);
        Tensor::from_fn(self.d, |i, j| self.get(i, j) + rhs.get(i, j))
    }
}

impl Sub for Tensor {
    type Output = Tensor;
    fn sub(self, rhs: Tensor) -> Tensor {
        assert_eq!(self.d, rhs.d);
        Tensor::from_fn(self.d, |i, j| self.get(i, j) - rhs.get(i, j))
    }
}

impl Mul for Tensor {
    type Output = Tensor;
    fn mul(self, rhs: Tensor) -> Tensor {
        self.matmul(&rhs)
    }
}

/// Frobenius scalar product `A : B = sum_ij A_ij B_ij`.
pub fn frobenius(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.d, b.d, "frobenius: dimension mismatch");
    let d = a.d;
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += a.get(i, j) * b.get(i, j);
        }
    }
    s
}

pub fn determinant(f: &Tensor) -> f64 {
    match f.d {
        2 => f.get(0, 0) * f.get(1, 1) - f.get(0, 1) * f.get(1, 0),
        _ => {
            f.get(0, 0) * (f.get(1, 1) * f.get(2, 2) - f.get(1, 2) * f.get(2, 1))
                - f.get(0, 1) * (f.get(1, 0) * f.get(2, 2) - f.get(1, 2) * f.get(2, 0))
                + f.get(0, 2) * (f.get(1, 0) * f.get(2, 1) - f.get(1, 1) * f.get(2, 0))
        }
    }
}

/// Cofactor matrix from signed minors. Equals `det(F) F^{-T}` when `F` is
/// invertible and is the gradient of `det` with respect to `F` everywhere.
pub fn cofactor(f: &Tensor) -> Tensor {
    match f.d {
        2 => Tensor::from_row_major(&[f.get(1, 1), -f.get(1, 0), -f.get(0, 1), f.get(0, 0)]),
        _ => Tensor::from_fn(3, |i, j| {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            // cyclic index choice absorbs the (-1)^(i+j) sign
            f.get(r0, c0) * f.get(r1, c1) - f.get(r0, c1) * f.get(r1, c0)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius(&Tensor::identity(2), &Tensor::identity(2)), 2.0);
        assert_eq!(frobenius(&Tensor::identity(3), &Tensor::identity(3)), 3.0);
        assert_eq!(frobenius(&Tensor::diag(&[2.0, 3.0]), &Tensor::diag(&[5.0, 7.0])), 31.0);
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(determinant(&Tensor::identity(2)), 1.0);
        assert_eq!(determinant(&Tensor::diag(&[2.0, 3.0])), 6.0);
        assert_eq!(determinant(&Tensor::diag(&[1.0, 2.0, 3.0])), 6.0);
        let t = Tensor::from_row_major(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(determinant(&t), -2.0);
    }

    #[test]
    fn cofactor_examples() {
        assert_eq!(cofactor(&Tensor::identity(2)), Tensor::identity(2));
        assert_eq!(cofactor(&Tensor::identity(3)), Tensor::identity(3));
        assert_eq!(cofactor(&Tensor::diag(&[2.0, 3.0])), Tensor::diag(&[3.0, 2.0]));
        let (a, b, c) = (2.0, 5.0, 7.0);
        assert_eq!(cofactor(&Tensor::diag(&[a, b, c])), Tensor::diag(&[b * c, a * c, a * b]));
    }

    #[test]
    fn cofactor_of_singular_matrix_is_defined() {
        let f = Tensor::from_row_major(&[1.0, 2.0, 2.0, 4.0]);
        let cof = cofactor(&f);
        assert!(cof.is_finite());
        assert_eq!(cof.matmul(&f.transpose()).max_abs(), 0.0);
    }

    #[test]
    fn inverse_roundtrip() {
        let f = Tensor::from_row_major(&[2.0, 1.0, 0.5, 0.0, 1.5, -0.3, 0.2, 0.1, 1.0]);
        let inv = f.inverse().unwrap();
        let err = (f.matmul(&inv) - Tensor::identity(3)).max_abs();
        assert!(err < 1e-14, "{err}");
        assert!(Tensor::zeros(2).inverse().is_none());
    }
}
