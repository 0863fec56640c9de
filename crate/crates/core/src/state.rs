use crate::field::{ScalarField, StaggeredVectorField, TensorField};
use crate::grid::GridSpec;

/// Everything the time loop carries from one accepted step to the next.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub phi: ScalarField,
    /// Accepted phase field of the previous step (feeds the delta term).
    pub phi_prev: ScalarField,
    pub mu: ScalarField,
    pub f: TensorField,
    pub v: StaggeredVectorField,
    pub q: ScalarField,
    pub t: f64,
    pub dt: f64,
    pub step_index: u64,
}

impl SimState {
    /// State with the given phase field, `F = I`, and everything else zero.
    pub fn at_rest(phi: ScalarField, dt: f64) -> Self {
        let grid = phi.grid;
        Self {
            phi_prev: phi.clone(),
            phi,
            mu: ScalarField::zeros(grid),
            f: TensorField::identity(grid, 2),
            v: StaggeredVectorField::zeros(grid),
            q: ScalarField::zeros(grid),
            t: 0.0,
            dt,
            step_index: 0,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.phi.grid
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite()
            && self.phi_prev.is_finite()
            && self.mu.is_finite()
            && self.f.is_finite()
            && self.v.is_finite()
            && self.q.is_finite()
            && self.t.is_finite()
            && self.dt.is_finite()
    }

    /// Largest pointwise change between two states in any field.
    pub fn max_change(&self, other: &SimState) -> f64 {
        use crate::field::max_abs_diff;
        [
            max_abs_diff(&self.phi.values, &other.phi.values),
            max_abs_diff(&self.mu.values, &other.mu.values),
            max_abs_diff(&self.q.values, &other.q.values),
            max_abs_diff(&self.v.to_vec(), &other.v.to_vec()),
            self.f.max_abs_diff(&other.f),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}
