//! Staggered-grid (MAC) finite-difference kernels.
//!
//! Scalars live at cell centers, velocities on faces. `grad_cc` and `div_fc`
//! are exact negative adjoints under the cell/face inner products (every
//! control volume has area `hx hy`), which is what makes mass conservation
//! and the Stokes energy identity hold to rounding.
//!
//! Homogeneous Neumann data for scalars is built into `grad_cc` (boundary
//! faces get zero gradient). No-slip velocity uses reflection ghosts across
//! the walls, so tangential components vanish exactly on the wall.

pub mod sparse;

use crate::error::{Error, Result};
use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;

/// Face reconstruction used by the conservative advection operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AdvectionScheme {
    /// Fromm's second-order upwind-biased reconstruction.
    #[default]
    UpwindBiased,
    /// Arithmetic mean of the two adjacent cells.
    Centered,
}

impl std::str::FromStr for AdvectionScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "upwind" | "upwind_biased" => Ok(Self::UpwindBiased),
            "centered" => Ok(Self::Centered),
            other => Err(format!("unknown advection scheme '{other}'")),
        }
    }
}

pub fn grad_cc(phi: &ScalarField) -> StaggeredVectorField {
    let g = phi.grid;
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut out = StaggeredVectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            out.u[g.u_index(i, j)] = (phi.at(i, j) - phi.at(i - 1, j)) * rhx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out.w[g.w_index(i, j)] = (phi.at(i, j) - phi.at(i, j - 1)) * rhy;
        }
    }
    out
}

pub fn div_fc(v: &StaggeredVectorField) -> ScalarField {
    let g = v.grid;
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.values[g.cell(i, j)] = (v.u[g.u_index(i + 1, j)] - v.u[g.u_index(i, j)]) * rhx
                + (v.w[g.w_index(i, j + 1)] - v.w[g.w_index(i, j)]) * rhy;
        }
    }
    out
}

/// Arithmetic mean of cell values onto faces. Boundary faces take the value
/// of their single adjacent cell.
pub fn face_average(field: &ScalarField) -> StaggeredVectorField {
    let g = field.grid;
    let mut out = StaggeredVectorField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let l = field.at(i.saturating_sub(1), j);
            let r = field.at(i.min(g.nx - 1), j);
            out.u[g.u_index(i, j)] = 0.5 * (l + r);
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let b = field.at(i, j.saturating_sub(1));
            let t = field.at(i, j.min(g.ny - 1));
            out.w[g.w_index(i, j)] = 0.5 * (b + t);
        }
    }
    out
}

fn check_positive(coeff: &ScalarField) -> Result<()> {
    if let Some(bad) = coeff.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Precondition(format!("Laplacian coefficient must be strictly positive, found {bad}")));
    }
    Ok(())
}

/// `div(coeff grad phi)` with zero flux through the walls; `coeff` is averaged
/// arithmetically onto faces.
pub fn laplacian_neumann(phi: &ScalarField, coeff: Option<&ScalarField>) -> Result<ScalarField> {
    let mut flux = grad_cc(phi);
    if let Some(c) = coeff {
        check_positive(c)?;
        let cf = face_average(c);
        flux.u.iter_mut().zip(&cf.u).for_each(|(f, c)| *f *= c);
        flux.w.iter_mut().zip(&cf.w).for_each(|(f, c)| *f *= c);
    }
    Ok(div_fc(&flux))
}

/// Velocity at the reflection ghost: mirrors across a no-slip wall.
#[inline]
fn u_reflected(v: &StaggeredVectorField, i: usize, j: isize) -> f64 {
    let g = v.grid;
    if j < 0 {
        -v.u[g.u_index(i, 0)]
    } else if j as usize >= g.ny {
        -v.u[g.u_index(i, g.ny - 1)]
    } else {
        v.u[g.u_index(i, j as usize)]
    }
}

#[inline]
fn w_reflected(v: &StaggeredVectorField, i: isize, j: usize) -> f64 {
    let g = v.grid;
    if i < 0 {
        -v.w[g.w_index(0, j)]
    } else if i as usize >= g.nx {
        -v.w[g.w_index(g.nx - 1, j)]
    } else {
        v.w[g.w_index(i as usize, j)]
    }
}

/// `(grad v)_{ab} = d v_a / d x_b` at cell centers.
///
/// Diagonal entries are native face differences, so the trace equals
/// `div_fc(v)` exactly. Off-diagonal entries average the centered
/// cross-differences of the two faces bounding the cell.
pub fn velocity_gradient(v: &StaggeredVectorField) -> TensorField {
    let g = v.grid;
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut out = TensorField::zeros(g, 2);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            let ji = j as isize;
            let ii = i as isize;
            out.comps[0][c] = (v.u[g.u_index(i + 1, j)] - v.u[g.u_index(i, j)]) * rhx;
            out.comps[3][c] = (v.w[g.w_index(i, j + 1)] - v.w[g.w_index(i, j)]) * rhy;
            let mut dudy = 0.0;
            for face in [i, i + 1] {
                dudy += u_reflected(v, face, ji + 1) - u_reflected(v, face, ji - 1);
            }
            out.comps[1][c] = 0.25 * dudy * rhy;
            let mut dwdx = 0.0;
            for face in [j, j + 1] {
                dwdx += w_reflected(v, ii + 1, face) - w_reflected(v, ii - 1, face);
            }
            out.comps[2][c] = 0.25 * dwdx * rhx;
        }
    }
    out
}

/// Discrete `div(sigma)` on faces, defined as the negative adjoint of
/// [`velocity_gradient`]: `<div_h sigma, v> = -<sigma, grad_h v>` for every
/// no-slip `v`. Boundary faces are zero.
pub fn tensor_divergence(sigma: &TensorField) -> StaggeredVectorField {
    let g = sigma.grid;
    assert_eq!(sigma.d, 2, "tensor_divergence is two-dimensional");
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut out = StaggeredVectorField::zeros(g);
    let (sxx, sxy, syx, syy) = (&sigma.comps[0], &sigma.comps[1], &sigma.comps[2], &sigma.comps[3]);
    // scatter the transpose of each stencil entry
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            out.u[g.u_index(i + 1, j)] -= sxx[c] * rhx;
            out.u[g.u_index(i, j)] += sxx[c] * rhx;
            out.w[g.w_index(i, j + 1)] -= syy[c] * rhy;
            out.w[g.w_index(i, j)] += syy[c] * rhy;

            let s = 0.25 * sxy[c] * rhy;
            for face in [i, i + 1] {
                // + u(face, j+1)
                if j + 1 < g.ny {
                    out.u[g.u_index(face, j + 1)] -= s;
                } else {
                    out.u[g.u_index(face, g.ny - 1)] += s;
                }
                // - u(face, j-1)
                if j >= 1 {
                    out.u[g.u_index(face, j - 1)] += s;
                } else {
                    out.u[g.u_index(face, 0)] -= s;
                }
            }
            let s = 0.25 * syx[c] * rhx;
            for face in [j, j + 1] {
                if i + 1 < g.nx {
                    out.w[g.w_index(i + 1, face)] -= s;
                } else {
                    out.w[g.w_index(g.nx - 1, face)] += s;
                }
                if i >= 1 {
                    out.w[g.w_index(i - 1, face)] += s;
                } else {
                    out.w[g.w_index(0, face)] -= s;
                }
            }
        }
    }
    out.enforce_no_slip();
    out
}

/// Component-wise Laplacian of a no-slip velocity. Wall-normal neighbors
/// are zero; wall-tangential neighbors use the reflection ghost. Boundary
/// faces of the result are zero.
pub fn vector_laplacian_dirichlet(v: &StaggeredVectorField) -> StaggeredVectorField {
    let g = v.grid;
    let (rhx2, rhy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let mut out = StaggeredVectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let c = v.u[g.u_index(i, j)];
            let ji = j as isize;
            let lap_x = (v.u[g.u_index(i - 1, j)] - 2.0 * c + v.u[g.u_index(i + 1, j)]) * rhx2;
            let lap_y = (u_reflected(v, i, ji - 1) - 2.0 * c + u_reflected(v, i, ji + 1)) * rhy2;
            out.u[g.u_index(i, j)] = lap_x + lap_y;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let c = v.w[g.w_index(i, j)];
            let ii = i as isize;
            let lap_x = (w_reflected(v, ii - 1, j) - 2.0 * c + w_reflected(v, ii + 1, j)) * rhx2;
            let lap_y = (v.w[g.w_index(i, j - 1)] - 2.0 * c + v.w[g.w_index(i, j + 1)]) * rhy2;
            out.w[g.w_index(i, j)] = lap_x + lap_y;
        }
    }
    out
}

/// Fromm reconstruction on a face between `left` and `right` given the
/// far-upwind neighbors on each side.
#[inline]
fn reconstruct(scheme: AdvectionScheme, vel: f64, far_left: f64, left: f64, right: f64, far_right: f64) -> f64 {
    match scheme {
        AdvectionScheme::Centered => 0.5 * (left + right),
        AdvectionScheme::UpwindBiased => {
            if vel >= 0.0 {
                left + 0.25 * (right - far_left)
            } else {
                right + 0.25 * (left - far_right)
            }
        }
    }
}

/// Conservative transport `div(v phi)` of one cell-centered array.
fn advect_values(v: &StaggeredVectorField, phi: &[f64], scheme: AdvectionScheme) -> Vec<f64> {
    let g = v.grid;
    let (nx, ny) = (g.nx, g.ny);
    let at = |i: usize, j: usize| phi[g.cell(i, j)];
    let mut flux_u = vec![0.0; g.n_u()];
    for j in 0..ny {
        for i in 1..nx {
            let vel = v.u[g.u_index(i, j)];
            if vel == 0.0 {
                continue;
            }
            let far_l = at(i.saturating_sub(2), j);
            let far_r = at((i + 1).min(nx - 1), j);
            flux_u[g.u_index(i, j)] = vel * reconstruct(scheme, vel, far_l, at(i - 1, j), at(i, j), far_r);
        }
    }
    let mut flux_w = vec![0.0; g.n_w()];
    for j in 1..ny {
        for i in 0..nx {
            let vel = v.w[g.w_index(i, j)];
            if vel == 0.0 {
                continue;
            }
            let far_b = at(i, j.saturating_sub(2));
            let far_t = at(i, (j + 1).min(ny - 1));
            flux_w[g.w_index(i, j)] = vel * reconstruct(scheme, vel, far_b, at(i, j - 1), at(i, j), far_t);
        }
    }
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut out = vec![0.0; g.n_cells()];
    for j in 0..ny {
        for i in 0..nx {
            out[g.cell(i, j)] = (flux_u[g.u_index(i + 1, j)] - flux_u[g.u_index(i, j)]) * rhx
                + (flux_w[g.w_index(i, j + 1)] - flux_w[g.w_index(i, j)]) * rhy;
        }
    }
    out
}

pub fn advect_scalar(v: &StaggeredVectorField, phi: &ScalarField) -> ScalarField {
    advect_scalar_with(v, phi, AdvectionScheme::default())
}

pub fn advect_scalar_with(v: &StaggeredVectorField, phi: &ScalarField, scheme: AdvectionScheme) -> ScalarField {
    ScalarField { grid: phi.grid, values: advect_values(v, &phi.values, scheme) }
}

pub fn advect_tensor(v: &StaggeredVectorField, f: &TensorField) -> TensorField {
    advect_tensor_with(v, f, AdvectionScheme::default())
}

pub fn advect_tensor_with(v: &StaggeredVectorField, f: &TensorField, scheme: AdvectionScheme) -> TensorField {
    TensorField { grid: f.grid, d: f.d, comps: f.comps.iter().map(|c| advect_values(v, c, scheme)).collect() }
}

/// Cellwise `A B` for two tensor fields.
pub fn tensor_product_field(a: &TensorField, b: &TensorField) -> TensorField {
    let mut out = TensorField::zeros(a.grid, a.d);
    for c in 0..a.grid.n_cells() {
        out.set(c, &a.get(c).matmul(&b.get(c)));
    }
    out
}

/// Discretely divergence-free velocity from a stream function sampled at
/// cell corners: `u = d psi/dy`, `w = -d psi/dx`. `psi` must vanish on the
/// boundary for no-slip normal components.
pub fn velocity_from_stream_function(grid: GridSpec, psi: impl Fn(f64, f64) -> f64) -> StaggeredVectorField {
    let (hx, hy) = (grid.hx(), grid.hy());
    let corner = |i: usize, j: usize| psi(i as f64 * hx, j as f64 * hy);
    let mut v = StaggeredVectorField::zeros(grid);
    for j in 0..grid.ny {
        for i in 1..grid.nx {
            v.u[grid.u_index(i, j)] = (corner(i, j + 1) - corner(i, j)) / hy;
        }
    }
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            v.w[grid.w_index(i, j)] = -(corner(i + 1, j) - corner(i, j)) / hx;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{max_abs_diff, ScalarField};

    fn rng_field(grid: GridSpec, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::from_values(grid, values).unwrap()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = GridSpec::unit_square(8).unwrap();
        let v = grad_cc(&ScalarField::constant(g, 3.7));
        assert_eq!(v.max_abs(), 0.0);
        assert_eq!(div_fc(&v).max_abs(), 0.0);
    }

    #[test]
    fn gradient_of_linear_is_exact_in_interior() {
        let g = GridSpec::new(8, 6, 2.0, 1.0).unwrap();
        let v = grad_cc(&ScalarField::from_fn(g, |x, _| x));
        for j in 0..g.ny {
            for i in 1..g.nx {
                assert!((v.u[g.u_index(i, j)] - 1.0).abs() < 1e-13);
            }
        }
        assert_eq!(v.w.iter().fold(0.0_f64, |m, x| m.max(x.abs())), 0.0);
        assert!(v.boundary_is_zero());
    }

    #[test]
    fn divergence_telescopes_to_zero() {
        let g = GridSpec::unit_square(9).unwrap();
        let phi = rng_field(g, 3);
        let mut v = grad_cc(&phi);
        v.u.iter_mut().enumerate().for_each(|(k, x)| *x += (k as f64).sin());
        v.enforce_no_slip();
        let total = div_fc(&v).integral();
        assert!(total.abs() < 1e-12, "{total}");
    }

    #[test]
    fn laplacian_rejects_nonpositive_coefficient() {
        let g = GridSpec::unit_square(4).unwrap();
        let phi = ScalarField::zeros(g);
        let coeff = ScalarField::constant(g, 0.0);
        assert!(laplacian_neumann(&phi, Some(&coeff)).is_err());
    }

    #[test]
    fn laplacian_cosine_mode_converges_second_order() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let g = GridSpec::new(n, n, 2.0, 1.0).unwrap();
                let k = std::f64::consts::PI / g.lx;
                let phi = ScalarField::from_fn(g, |x, _| (k * x).cos());
                let lap = laplacian_neumann(&phi, None).unwrap();
                let exact = phi.map(|p| -k * k * p);
                max_abs_diff(&lap.values, &exact.values)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.05, "order {order}");
        }
    }

    #[test]
    fn velocity_gradient_trace_is_divergence() {
        let g = GridSpec::unit_square(10).unwrap();
        let v = StaggeredVectorField::from_fn(g, |x, y| (3.0 * x).sin() * y, |x, y| x * x - y);
        let gv = velocity_gradient(&v);
        let div = div_fc(&v);
        for c in 0..g.n_cells() {
            assert!((gv.comps[0][c] + gv.comps[3][c] - div.values[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_shear_gives_constant_gradient_inside() {
        let g = GridSpec::unit_square(16).unwrap();
        // u = 2 (y - 1/2) on a central band, zero elsewhere
        let mask = |x: f64| (0.25..=0.75).contains(&x);
        let v =
            StaggeredVectorField::from_fn(g, |x, y| if mask(x) && mask(y) { 2.0 * (y - 0.5) } else { 0.0 }, |_, _| 0.0);
        let gv = velocity_gradient(&v);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.cell_center(i, j);
                if (0.35..0.65).contains(&x) && (0.35..0.65).contains(&y) {
                    let c = g.cell(i, j);
                    assert!((gv.comps[1][c] - 2.0).abs() < 1e-12);
                    assert!(gv.comps[0][c].abs() < 1e-12 && gv.comps[3][c].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tensor_divergence_is_negative_adjoint_of_gradient() {
        let g = GridSpec::new(7, 9, 1.0, 1.3).unwrap();
        let mut sigma = TensorField::zeros(g, 2);
        for (k, comp) in sigma.comps.iter_mut().enumerate() {
            *comp = rng_field(g, 10 + k as u64).values;
        }
        let mut v = StaggeredVectorField::zeros(g);
        v.u = (0..g.n_u()).map(|k| ((k * 7) as f64).sin()).collect();
        v.w = (0..g.n_w()).map(|k| ((k * 3) as f64).cos()).collect();
        v.enforce_no_slip();
        let lhs = tensor_divergence(&sigma).dot(&v);
        let gv = velocity_gradient(&v);
        let rhs: f64 = -(0..4).map(|k| crate::field::dot(&sigma.comps[k], &gv.comps[k])).sum::<f64>() * g.cell_area();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn constant_stress_has_no_divergence() {
        let g = GridSpec::unit_square(8).unwrap();
        let sigma = TensorField::uniform(g, &crate::tensor::Tensor::from_row_major(&[2.0, 0.7, 0.7, -1.0]));
        assert!(tensor_divergence(&sigma).max_abs() < 1e-12);
    }

    #[test]
    fn advection_of_constant_vanishes_and_conserves() {
        let g = GridSpec::unit_square(12).unwrap();
        let v = velocity_from_stream_function(g, |x, y| {
            let s = (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
            s * s
        });
        assert!(div_fc(&v).max_abs() < 1e-12);
        let c = ScalarField::constant(g, 2.5);
        assert!(advect_scalar(&v, &c).max_abs() < 1e-12);
        let phi = rng_field(g, 1);
        for scheme in [AdvectionScheme::UpwindBiased, AdvectionScheme::Centered] {
            let a = advect_scalar_with(&v, &phi, scheme);
            assert!(a.integral().abs() < 1e-13);
        }
    }
}
