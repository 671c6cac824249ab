use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use ri_mech::el::{action, integrate_el, reparametrize, time_dilation_along, GaugeClosure};
use ri_mech::ext_hamiltonian::{
    ext_bracket, evolve, jacobi_residual, make_coordinate_time_h, make_proper_time_h, reversal_mismatch,
    BracketConvention, EvolveOptions, Observable,
};
use ri_mech::extended_phase::{make_minkowski, make_weak_field, ExtendedState, Metric, SignatureConvention};
use ri_mech::field::ScalarField;
use ri_mech::lagrangian::{hamiltonian_function, homogeneity_degree, LagrangianSpec};
use ri_mech::ode::uniform_grid;
use ri_mech::quantize::{apply_p0, synth_psi_coordinate, PhiField, UniformGrid, WaveFunction};
use ri_mech::rel_particle::{integrate_proper_time, proper_initial_state, BackgroundFields};

fn metric_strategy() -> impl Strategy<Value = Metric> {
    (
        prop::collection::vec((prop::bool::ANY, 0.5f64..2.0), 4),
        prop::collection::vec(-0.1f64..0.1, 6),
    )
        .prop_map(|(diag, off)| {
            let mut g = DMatrix::zeros(4, 4);
            for (i, (neg, m)) in diag.iter().enumerate() {
                g[(i, i)] = if *neg { -m } else { *m };
            }
            let mut k = 0;
            for i in 0..4 {
                for j in i + 1..4 {
                    g[(i, j)] = off[k];
                    g[(j, i)] = off[k];
                    k += 1;
                }
            }
            Metric::constant(g).unwrap()
        })
}

fn vec4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 4)
}

fn timelike() -> impl Strategy<Value = Vec<f64>> {
    (1.0f64..3.0, prop::collection::vec(-0.5f64..0.5, 3)).prop_map(|(t, s)| {
        let mut v = vec![t];
        v.extend(s.iter().map(|x| x * t));
        v
    })
}

/// Random cubic polynomial in the six coordinates of a 3-D extended state.
fn cubic() -> impl Strategy<Value = Observable> {
    prop::collection::vec((-1.0f64..1.0, prop::collection::vec(0u32..=1, 6)), 1..4).prop_map(|terms| {
        Observable::polynomial(
            terms
                .into_iter()
                .map(|(c, mut e)| {
                    // cap the total degree at 3
                    let mut deg = 0;
                    for ej in e.iter_mut() {
                        if deg == 3 {
                            *ej = 0;
                        }
                        deg += *ej;
                    }
                    (c, e)
                })
                .collect(),
        )
    })
}

fn state3() -> impl Strategy<Value = ExtendedState> {
    prop::collection::vec(-1.0f64..1.0, 6)
        .prop_map(|y| ExtendedState::new(y[..3].to_vec(), y[3..].to_vec(), 0.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raise_then_lower_is_identity(g in metric_strategy(), p in vec4()) {
        let x = [0.0; 4];
        let back = g.lower(&x, &g.raise(&x, &p).unwrap());
        let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn inner_product_is_symmetric(g in metric_strategy(), u in vec4(), v in vec4()) {
        let x = [0.0; 4];
        let (a, b) = (g.inner(&x, &u, &v), g.inner(&x, &v, &u));
        prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
    }

    #[test]
    fn first_order_lagrangians_are_homogeneous(
        v in timelike(),
        x in vec4(),
        u0 in -0.05f64..0.05,
        alpha in prop::sample::select(vec![0.5, 2.0, 3.0]),
    ) {
        let m = make_weak_field(move |x| u0 * (x[1] + 0.3 * x[2]).sin(), 1.0, SignatureConvention::PlusMinus);
        let l1 = LagrangianSpec::metric_length(m.clone());
        let n = homogeneity_degree(&l1, &x, &v, 1e-9).unwrap();
        prop_assert!((n - 1.0).abs() < 1e-6);
        let scaled: Vec<f64> = v.iter().map(|c| alpha * c).collect();
        let (a, b) = (l1.value(&x, &scaled), alpha * l1.value(&x, &v));
        prop_assert!((a - b).abs() < 1e-8 * b.abs());
        let h = hamiltonian_function(&l1, &x, &v).unwrap();
        prop_assert!(h.abs() < 1e-10 * (2.0 * l1.value(&x, &v).abs()));

        let l2 = LagrangianSpec::metric_quadratic(m);
        prop_assert!((homogeneity_degree(&l2, &x, &v, 1e-9).unwrap() - 2.0).abs() < 1e-6);
        let (a, b) = (l2.value(&x, &scaled), alpha * alpha * l2.value(&x, &v));
        prop_assert!((a - b).abs() < 1e-8 * b.abs());
    }

    #[test]
    fn exact_and_numerical_derivatives_agree(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..5),
        q in -1.0f64..1.0,
        v in 0.2f64..2.0,
    ) {
        let mut c = coeffs.clone();
        c[0] += 5.0;
        let l = LagrangianSpec::phi_velocity(ScalarField::polynomial(c));
        let (x, v) = ([q], [v]);
        let (dv_fd, dx_fd) = l.fd_derivatives(&x, &v).unwrap();
        let (dv, dx) = (l.dv(&x, &v).unwrap(), l.dx(&x, &v).unwrap());
        prop_assert!((dv[0] - dv_fd[0]).abs() <= 1e-6 * dv[0].abs().max(1.0));
        prop_assert!((dx[0] - dx_fd[0]).abs() <= 1e-6 * dx[0].abs().max(1.0));
    }

    #[test]
    fn bracket_is_antisymmetric_and_bilinear(f in cubic(), g in cubic(), h in cubic(), s in state3(), a in -2.0f64..2.0) {
        let tm = BracketConvention::TimeMinus;
        let fg = ext_bracket(&f, &g, &s, tm).unwrap();
        let gf = ext_bracket(&g, &f, &s, tm).unwrap();
        prop_assert!((fg + gf).abs() < 1e-10);
        let (fc, gc, hc) = (f.clone(), g.clone(), h.clone());
        let combo = Observable::new("g + a h", move |s| gc.value(s) + a * hc.value(s));
        let lhs = ext_bracket(&fc, &combo, &s, tm).unwrap();
        let rhs = fg + a * ext_bracket(&f, &h, &s, tm).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jacobi_identity_holds(f in cubic(), g in cubic(), h in cubic(), s in state3()) {
        for conv in [BracketConvention::TimeMinus, BracketConvention::AllPlus] {
            let r = jacobi_residual(&f, &g, &h, &s, conv).unwrap();
            prop_assert!(r.abs() < 1e-6, "{r}");
        }
    }

    #[test]
    fn proper_time_flow_keeps_constraint_and_reverses(
        base in 1.0f64..3.0,
        amp in 0.0f64..0.5,
        omega in 0.2f64..2.0,
        q in -1.0f64..1.0,
    ) {
        let phi = ScalarField::sinusoid(base, amp, omega, 0.0);
        let p0 = phi.value(0.0);
        let h = make_proper_time_h(phi, 1.0);
        let s0 = ExtendedState::new(vec![0.0, q], vec![p0, 0.0], 0.0).unwrap();
        let grid = uniform_grid(0.0, 2.0, 400);
        let t = evolve(&h, &s0, &grid, EvolveOptions::default()).unwrap();
        prop_assert!(t.max_residual() < 1e-7 * 2.0);
        let m = reversal_mismatch(&h, &s0, &grid, EvolveOptions::default()).unwrap();
        prop_assert!(m < 1e-9, "{m}");
    }

    #[test]
    fn coordinate_time_bracket_reduces_to_poisson(q in -1.0f64..1.0, p in -1.0f64..1.0, t in 0.0f64..2.0, k in 0.5f64..2.0) {
        // Hcl = p^2/2 + k q^2/2; f = q t.
        let hcl = Observable::polynomial(vec![(0.5, vec![0, 0, 0, 2]), (0.5 * k, vec![0, 2, 0, 0])]);
        let h = make_coordinate_time_h(hcl, 2, 1.0);
        let f = Observable::polynomial(vec![(1.0, vec![1, 1, 0, 0])]);
        let s = ExtendedState::new(vec![t, q], vec![0.0, p], 0.0).unwrap();
        let b = ext_bracket(&f, h.observable(), &s, h.convention).unwrap();
        // {q t, Hcl} + d(q t)/dt = t p + q
        prop_assert!((b - (t * p + q)).abs() < 1e-8);
    }

    #[test]
    fn action_is_reparametrization_invariant(
        a in 0.2f64..1.5,
        q0 in -0.5f64..0.5,
        v0 in 0.3f64..1.5,
        eps in 0.0f64..0.6,
        w in 0.5f64..3.0,
    ) {
        let phi = ScalarField::polynomial(vec![1.0, 0.0, a]);
        let l = LagrangianSpec::phi_velocity(phi);
        let grid = uniform_grid(0.0, 1.0, 20_000);
        let t = integrate_el(&l, &[q0], &[v0], &grid, Some(&GaugeClosure::ConservedLagrangian)).unwrap();
        let r = reparametrize(&t, &move |lam, _, _| 1.0 + eps * (w * lam).sin()).unwrap();
        let (s1, s2) = (action(&l, &t), action(&l, &r));
        prop_assert!((s1 - s2).abs() < 1e-8 * s1.abs(), "{s1} {s2}");
    }

    #[test]
    fn arrow_of_time_is_common(vx in -0.9f64..0.9, vy in -0.4f64..0.4, u0 in -0.05f64..0.05) {
        let m = make_weak_field(move |x| u0 * x[1].cos(), 1.0, SignatureConvention::PlusMinus);
        let l2 = LagrangianSpec::metric_quadratic(m.clone());
        let speed = (vx * vx + vy * vy).sqrt();
        prop_assume!(speed < 0.95);
        let t = integrate_el(&l2, &[0.0; 4], &[1.0, vx, vy, 0.0], &uniform_grid(0.0, 1.0, 200), None).unwrap();
        for d in time_dilation_along(&t, &m).unwrap() {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn proper_time_flow_moves_forward(vx in -0.8f64..0.8, bz in -1.0f64..1.0) {
        let flat = make_minkowski(4, SignatureConvention::MinusPlus).unwrap();
        let f = BackgroundFields::new(flat, move |x: &[f64]| [0.0, -0.5 * bz * x[2], 0.5 * bz * x[1], 0.0], 1.0, 1.0, 1.0).unwrap();
        let s0 = proper_initial_state(&f, &[0.0; 4], &[vx, 0.0, 0.0], 0.0).unwrap();
        let traj = integrate_proper_time(&f, &s0, &uniform_grid(0.0, 3.0, 300)).unwrap();
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].x[0] > w[0].x[0]);
        }
    }

    #[test]
    fn superposition_solves_schrodinger(re in -1.0f64..1.0, im in -1.0f64..1.0, p in 0.5f64..2.0) {
        let phi = PhiField::constant(p);
        let g = UniformGrid::new(0.0, 5.0, 4000).unwrap();
        let a = synth_psi_coordinate(&phi, &g, 1.0, 1.0).unwrap();
        let b = synth_psi_coordinate(&phi, &g, 1.0, 2.0).unwrap();
        let alpha = Complex64::new(re, im);
        let mix = WaveFunction {
            values: a.values.iter().zip(&b.values).map(|(x, y)| alpha * x + y).collect(),
            ..a.clone()
        };
        let d = apply_p0(&mix).unwrap();
        let bound = (p * g.step).powi(2) * p;
        for i in 1..g.len - 1 {
            prop_assert!((d.values[i] - mix.values[i] * p).norm() < bound * (alpha.norm() + 1.0));
        }
    }
}
