use crate::error::{Error, Result};

/// Uniform Cartesian grid on the box `[0, lx] x [0, ly]`.
///
/// Cell `(i, j)` has center `((i + 1/2) hx, (j + 1/2) hy)` and linear index
/// `j * nx + i`. Vertical faces carry the x-velocity `u` at `(i hx, (j + 1/2) hy)`
/// for `i in 0..=nx`; horizontal faces carry `w` at `((i + 1/2) hx, j hy)` for
/// `j in 0..=ny`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Validation(format!("grid needs at least 4 cells per direction, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Validation(format!("domain lengths must be positive and finite, got lx={lx}, ly={ly}")));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    #[inline]
    pub fn n_w(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn u_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn w_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn u_position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn w_position(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), j as f64 * self.hy())
    }

    #[inline]
    pub fn is_boundary_u(&self, i: usize) -> bool {
        i == 0 || i == self.nx
    }

    #[inline]
    pub fn is_boundary_w(&self, j: usize) -> bool {
        j == 0 || j == self.ny
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridSpec::new(3, 8, 1.0, 1.0).is_err());
        assert!(GridSpec::new(8, 8, 0.0, 1.0).is_err());
        assert!(GridSpec::new(4, 4, 1.0, 2.0).is_ok());
    }

    #[test]
    fn layout_counts() {
        let g = GridSpec::new(5, 7, 2.0, 1.0).unwrap();
        assert_eq!(g.n_cells(), 35);
        assert_eq!(g.n_u(), 6 * 7);
        assert_eq!(g.n_w(), 5 * 8);
        assert_eq!(g.hx(), 0.4);
        assert_eq!(g.cell_center(0, 0), (0.2, 1.0 / 14.0));
    }
}
