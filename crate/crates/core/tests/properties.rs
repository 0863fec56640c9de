use chve_core::constitutive::{neo_hookean_piola, neo_hookean_w};
use chve_core::diagnostics::DiagnosticsRow;
use chve_core::driver::io::{read_restart, write_restart};
use chve_core::ops::{div_fc, grad_cc, laplacian_neumann, tensor_divergence, velocity_gradient};
use chve_core::state::SimState;
use chve_core::tensor::{cofactor, determinant, frobenius};
use chve_core::{GridSpec, ModelParams, ScalarField, StaggeredVectorField, Tensor, TensorField};
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = GridSpec> {
    (4usize..10, 4usize..10, 0.5f64..2.0, 0.5f64..2.0)
        .prop_map(|(nx, ny, lx, ly)| GridSpec::new(nx, ny, lx, ly).unwrap())
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn scalar_and_vector() -> impl Strategy<Value = (ScalarField, StaggeredVectorField)> {
    grid().prop_flat_map(|g| {
        (values(g.n_cells()), values(g.n_u()), values(g.n_w())).prop_map(move |(p, u, w)| {
            let mut v = StaggeredVectorField { grid: g, u, w };
            v.enforce_no_slip();
            (ScalarField { grid: g, values: p }, v)
        })
    })
}

fn tensor(d: usize) -> impl Strategy<Value = Tensor> {
    values(d * d).prop_map(|e| Tensor::from_row_major(&e))
}

proptest! {
    #[test]
    fn gradient_is_minus_divergence_adjoint((p, v) in scalar_and_vector()) {
        let lhs = grad_cc(&p).dot(&v);
        let rhs = -div_fc(&v).dot(&p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn tensor_divergence_is_minus_gradient_adjoint((p, v) in scalar_and_vector(), seed in values(4)) {
        let g = p.grid;
        let sigma = TensorField::from_fn(g, 2, |x, y| {
            Tensor::from_row_major(&[seed[0] * x, seed[1] * y * x, seed[2] + y, seed[3] * x * x])
        });
        let lhs = tensor_divergence(&sigma).dot(&v);
        let grad = velocity_gradient(&v);
        let rhs = -g.cell_area()
            * (0..g.n_cells()).map(|k| frobenius(&sigma.get(k), &grad.get(k))).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()), "{lhs} {rhs}");
    }

    #[test]
    fn laplacian_is_symmetric_nonpositive_and_kills_constants((p, _) in scalar_and_vector(), c in -5.0f64..5.0) {
        let g = p.grid;
        let lp = laplacian_neumann(&p, None).unwrap();
        prop_assert!(lp.dot(&p) <= 1e-12);
        let q = p.map(|x| x * x - 0.3);
        let asym = lp.dot(&q) - laplacian_neumann(&q, None).unwrap().dot(&p);
        prop_assert!(asym.abs() <= 1e-10 * (1.0 + lp.dot(&q).abs()));
        prop_assert!(laplacian_neumann(&ScalarField::constant(g, c), None).unwrap().max_abs() <= 1e-11);
        prop_assert!(lp.integral().abs() <= 1e-10);
    }

    #[test]
    fn gradient_is_linear((p, _) in scalar_and_vector(), a in -3.0f64..3.0) {
        let q = p.map(|x| x.sin());
        let combined = grad_cc(&p.axpy(a, &q));
        let (gp, gq) = (grad_cc(&p), grad_cc(&q));
        for (i, u) in combined.u.iter().enumerate() {
            prop_assert!((u - gp.u[i] - a * gq.u[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn cofactor_identity(f in tensor(3)) {
        let lhs = f.transpose().matmul(&cofactor(&f));
        let j = determinant(&f);
        for i in 0..3 {
            for k in 0..3 {
                let want = if i == k { j } else { 0.0 };
                prop_assert!((lhs.get(i, k) - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn frobenius_is_symmetric_and_bilinear(a in tensor(3), b in tensor(3), s in -2.0f64..2.0) {
        prop_assert!((frobenius(&a, &b) - frobenius(&b, &a)).abs() <= 1e-14);
        prop_assert!((frobenius(&a.scale(s), &b) - s * frobenius(&a, &b)).abs() <= 1e-13);
        prop_assert!(frobenius(&a, &a) >= 0.0);
    }

    #[test]
    fn neo_hookean_energy_is_frame_invariant(f in tensor(2), theta in 0.0f64..6.3, phi in -1.0f64..1.0) {
        let params = ModelParams::default();
        let r = Tensor::from_row_major(&[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let w0 = neo_hookean_w(phi, &f, &params);
        let w1 = neo_hookean_w(phi, &r.matmul(&f), &params);
        prop_assert!((w0 - w1).abs() <= 1e-12 * (1.0 + w0.abs()));
        prop_assert!(w0 >= -1e-15 || frobenius(&f, &f) < 2.0);
        prop_assert_eq!(neo_hookean_w(phi, &Tensor::identity(2), &params), 0.0);
        let p0 = neo_hookean_piola(phi, &f, &params);
        let p1 = neo_hookean_piola(phi, &r.matmul(&f), &params);
        prop_assert!((r.matmul(&p0) - p1).max_abs() <= 1e-12 * (1.0 + p0.max_abs()));
    }

    #[test]
    fn restart_round_trip_is_lossless((p, v) in scalar_and_vector(), t in 0.0f64..10.0, streak in 0u32..20) {
        let g = p.grid;
        let mut state = SimState::at_rest(p.clone(), 1e-3);
        state.mu = p.map(|x| x.exp());
        state.q = p.map(|x| -x);
        state.v = v;
        state.f = TensorField::from_fn(g, 2, |x, y| Tensor::from_row_major(&[1.0 + x, y, -y, 1.0 - 0.1 * x]));
        state.t = t;
        state.step_index = 17;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.bin");
        write_restart(&path, &state, streak).unwrap();
        let (back, s) = read_restart(&path).unwrap();
        prop_assert_eq!(back, state);
        prop_assert_eq!(s, streak);
    }

    #[test]
    fn csv_floats_round_trip(x in prop::num::f64::NORMAL) {
        let row = DiagnosticsRow {
            step: 1,
            t: x,
            dt: x.abs(),
            energy: Default::default(),
            dissipation: x,
            mass: -x,
            div_v_max: 0.0,
            picard_iters: 1,
            newton_iters: 2,
            budget_residual: x,
        };
        let line = row.to_csv();
        let t: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        prop_assert_eq!(t, x);
    }
}
