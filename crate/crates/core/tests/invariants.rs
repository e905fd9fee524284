use momentum_lmm::analysis::{magnitude_score, MagnitudeConfig};
use momentum_lmm::diffusion::{
    alpha_from_sigma_bar, guide, sigma_bar, sigma_tilde, GuidanceMode, GuidanceSpec, NoiseModel, SharedNoise,
};
use momentum_lmm::methods::{integrate_on_grid, simulate_form};
use momentum_lmm::poly::check_consistency;
use momentum_lmm::problems::{complex_test_equation, linear_system, test_equation, toy_2x2, Problem};
use momentum_lmm::stability::{closed_form_locus, find_roots, locus, theta_grid};
use momentum_lmm::{integrate, linear_multistep_form, make_aggregated, make_method, Complex64, Family, MethodSpec};
use nalgebra::DMatrix;
use ndarray::Array3;
use proptest::prelude::*;
use std::sync::Arc;

fn all_specs() -> Vec<MethodSpec> {
    let mut v = Vec::new();
    for r in 1..=5 {
        v.push(MethodSpec::ab(r));
        for beta in [0.2, 0.5, 0.8, 1.0] {
            v.push(MethodSpec::heavy_ball(r, beta));
            v.push(MethodSpec::ghvb(r, beta));
            v.push(MethodSpec::nesterov(r, beta));
            if r >= 2 {
                v.push(MethodSpec::interp_ab(r, beta));
            }
        }
    }
    v
}

fn matrix_strategy(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-1.0f64..1.0, n * n), prop::collection::vec(-2.0f64..2.0, n))
}

fn random_problem(entries: &[f64], x0: &[f64]) -> Problem {
    let n = x0.len();
    linear_system(DMatrix::from_row_slice(n, n, entries), x0.to_vec(), 0.0, 2.0).unwrap()
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff <= tol * scale.max(1.0)
}

#[test]
fn every_form_is_consistent() {
    for spec in all_specs() {
        let form = linear_multistep_form(&spec).unwrap();
        assert!(check_consistency(&form), "{}", spec.label());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unit_beta_reduces_to_ab((entries, x0) in matrix_strategy(3), r in 1usize..=5) {
        let p = random_problem(&entries, &x0);
        let base = integrate(&MethodSpec::ab(r), &p, 40).unwrap();
        let mut variants = vec![
            MethodSpec::heavy_ball(r, 1.0),
            MethodSpec::ghvb(r, 1.0),
            MethodSpec::nesterov(r, 1.0),
            MethodSpec::aggregated(r, vec![1.0, 1.0], vec![0.3, 0.7]),
        ];
        if r >= 2 {
            variants.push(MethodSpec::interp_ab(r, 1.0));
        }
        for spec in variants {
            let traj = integrate(&spec, &p, 40).unwrap();
            for (a, b) in traj.states.iter().zip(&base.states) {
                prop_assert!(rel_close(a, b, 1e-13), "{}: {:?} vs {:?}", spec.label(), a, b);
            }
        }
    }

    #[test]
    fn form_matches_stepper((entries, x0) in matrix_strategy(2), idx in 0usize..80) {
        let specs = all_specs();
        let spec = &specs[idx % specs.len()];
        let p = random_problem(&entries, &x0);
        let n = 30;
        let traj = integrate(spec, &p, n).unwrap();
        let form = linear_multistep_form(spec).unwrap();
        let warm = spec.order + 2;
        let delta = (p.t1 - p.t0) / n as f64;
        let sim = simulate_form(&form, &p, &traj.states[..warm], p.t0, delta, n).unwrap();
        for (i, (a, b)) in sim.iter().zip(&traj.states).enumerate() {
            prop_assert!(rel_close(a, b, 1e-12), "{} step {}: {:?} vs {:?}", spec.label(), i, a, b);
        }
    }

    #[test]
    fn superposition_holds(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        u in prop::collection::vec(-2.0f64..2.0, 3),
        w in prop::collection::vec(-2.0f64..2.0, 3),
        (a, b) in (-2.0f64..2.0, -2.0f64..2.0),
        idx in 0usize..80,
    ) {
        let specs = all_specs();
        let spec = &specs[idx % specs.len()];
        let combo: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let tu = integrate(spec, &random_problem(&entries, &u), 25).unwrap();
        let tw = integrate(spec, &random_problem(&entries, &w), 25).unwrap();
        let tc = integrate(spec, &random_problem(&entries, &combo), 25).unwrap();
        for ((xu, xw), xc) in tu.states.iter().zip(&tw.states).zip(&tc.states) {
            let lin: Vec<f64> = xu.iter().zip(xw).map(|(p, q)| a * p + b * q).collect();
            let scale = 1.0 + xu.iter().chain(xw).map(|v| v.abs()).fold(0.0, f64::max) * (a.abs() + b.abs());
            for (l, c) in lin.iter().zip(xc) {
                prop_assert!((l - c).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn first_step_is_euler((entries, x0) in matrix_strategy(3), idx in 0usize..80, delta in 0.01f64..0.5) {
        let specs = all_specs();
        let spec = &specs[idx % specs.len()];
        let p = random_problem(&entries, &x0);
        let mut s = make_method(spec).unwrap();
        let x1 = s.step(&p, 0.0, delta, &x0).unwrap();
        let f = momentum_lmm::VectorField::eval(&p, &x0, 0.0);
        let euler: Vec<f64> = x0.iter().zip(&f).map(|(x, v)| x + delta * v).collect();
        prop_assert!(rel_close(&x1, &euler, 1e-15));
    }

    #[test]
    fn roots_of_expanded_products(roots in prop::collection::vec(-1.5f64..1.5, 1..7)) {
        // ascending coefficients of Π (r - ρ_i)
        let mut c = vec![1.0];
        for rho in &roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= rho * ck;
            }
            c = next;
        }
        let mut sorted = roots.clone();
        sorted.sort_by(f64::total_cmp);
        let min_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        prop_assume!(min_gap > 0.05);
        let found = find_roots(&c).unwrap();
        for rho in &roots {
            let best = found.roots.iter().map(|z| (z - Complex64::new(*rho, 0.0)).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-9, "{rho} not found in {:?}", found.roots);
        }
    }

    #[test]
    fn sigma_bar_and_tilde_are_reciprocal(alpha in 1e-6f64..(1.0 - 1e-6)) {
        let sb = sigma_bar(alpha).unwrap();
        let st = sigma_tilde(alpha).unwrap();
        prop_assert!((sb * st - 1.0).abs() < 1e-12);
        prop_assert!((alpha_from_sigma_bar(sb) - alpha).abs() < 1e-12);
    }

    #[test]
    fn classifier_free_guidance_is_affine(
        s in -3.0f64..5.0,
        x in prop::collection::vec(-3.0f64..3.0, 3),
        sigma in 0.01f64..10.0,
    ) {
        let cond: SharedNoise = Arc::new(|x: &[f64], s: f64| x.iter().map(|v| v.sin() + s).collect());
        let uncond: SharedNoise = Arc::new(|x: &[f64], s: f64| x.iter().map(|v| v * v - s).collect());
        let g = guide(cond.clone(), GuidanceSpec { scale: s, mode: GuidanceMode::ClassifierFree, auxiliary: uncond.clone() });
        let out = g.predict(&x, sigma);
        let c = cond.predict(&x, sigma);
        let u = uncond.predict(&x, sigma);
        for i in 0..3 {
            let expect = (1.0 - s) * u[i] + s * c[i];
            prop_assert!((out[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn magnitude_score_is_monotone(
        values in prop::collection::vec(-5.0f64..5.0, 8 * 8 * 2),
        cell in 0usize..64,
        ch in 0usize..2,
        bump in 0.0f64..4.0,
    ) {
        let grid = Array3::from_shape_vec((8, 8, 2), values).unwrap();
        let cfg = MagnitudeConfig::standard(2.5, 4, 2);
        let before = magnitude_score(grid.view(), &cfg).unwrap();
        let mut g2 = grid.clone();
        let (i, j) = (cell / 8, cell % 8);
        let v = g2[[i, j, ch]];
        g2[[i, j, ch]] = v + bump * v.signum();
        if v == 0.0 {
            g2[[i, j, ch]] = bump;
        }
        let after = magnitude_score(g2.view(), &cfg).unwrap();
        prop_assert!(after >= before - 1e-12);
    }
}

#[test]
fn exact_solutions_satisfy_their_odes() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let problems = vec![
        toy_2x2(),
        test_equation(-1.3, 0.7, 0.0, 2.0),
        complex_test_equation(Complex64::new(-0.4, 2.0), Complex64::new(1.0, -0.5), 0.0, 3.0),
        linear_system(
            DMatrix::from_row_slice(3, 3, &[-1.0, 0.5, 0.0, -0.3, -0.2, 1.0, 0.0, -1.0, -0.5]),
            vec![1.0, 2.0, -1.0],
            0.0,
            2.0,
        )
        .unwrap(),
    ];
    for p in &problems {
        for _ in 0..20 {
            let t = rng.gen_range(p.t0 + 0.01..p.t1 - 0.01);
            let h = 1e-5;
            let fwd = p.exact(t + h).unwrap();
            let bwd = p.exact(t - h).unwrap();
            let fd: Vec<f64> = fwd.iter().zip(&bwd).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let f = momentum_lmm::VectorField::eval(p, &p.exact(t).unwrap(), t);
            let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
            for (a, b) in fd.iter().zip(&f) {
                assert!((a - b).abs() <= 1e-6 * scale, "{}: t={t}: {a} vs {b}", p.label);
            }
        }
    }
}

#[test]
fn locus_matches_closed_forms_at_odd_betas() {
    for beta in [0.15, 0.55, 0.95] {
        for r in 1..=4 {
            for (family, spec) in [
                (Family::Ab, MethodSpec::ab(r)),
                (Family::HeavyBall, MethodSpec::heavy_ball(r, beta)),
                (Family::Ghvb, MethodSpec::ghvb(r, beta)),
            ] {
                let curve = locus(&linear_multistep_form(&spec).unwrap(), 257).unwrap();
                for (i, th) in theta_grid(257).iter().enumerate() {
                    if !curve.is_valid(i) {
                        continue;
                    }
                    let z = closed_form_locus(family, r, spec.beta, *th).unwrap();
                    assert!((z - curve.values[i]).norm() < 1e-10, "{} at {th}", spec.label());
                }
            }
        }
    }
}

#[test]
fn single_velocity_aggregate_is_heavy_ball() {
    let p = toy_2x2();
    for r in 1..=5 {
        for beta in [0.3, 0.8] {
            let mut agg = make_aggregated(&[beta], &[1.0], r).unwrap();
            let hb = integrate(&MethodSpec::heavy_ball(r, beta), &p, 60).unwrap();
            let mut x = p.x0.clone();
            for (i, want) in hb.states.iter().enumerate().skip(1) {
                x = agg.step(&p, hb.times[i - 1], hb.times[i] - hb.times[i - 1], &x).unwrap();
                assert!(rel_close(&x, want, 1e-13), "r={r} beta={beta} step {i}");
            }
        }
    }
}

#[test]
fn two_velocity_aggregate_is_nesterov_euler() {
    let p = toy_2x2();
    for beta in [0.2, 0.5, 0.9] {
        let mut agg = make_aggregated(&[beta, 1.0], &[1.0 - beta, beta], 1).unwrap();
        let nag = integrate(&MethodSpec::nesterov(1, beta), &p, 60).unwrap();
        let mut x = p.x0.clone();
        for (i, want) in nag.states.iter().enumerate().skip(1) {
            x = agg.step(&p, nag.times[i - 1], nag.times[i] - nag.times[i - 1], &x).unwrap();
            assert!(rel_close(&x, want, 1e-12), "beta={beta} step {i}: {x:?} vs {want:?}");
        }
    }
}

#[test]
fn negative_steps_integrate_backward_in_time() {
    let field = |x: &[f64], _t: f64| vec![-0.5 * x[0]];
    let grid: Vec<f64> = (0..=1000).map(|i| 1.0 - i as f64 * 1e-3).collect();
    let down = integrate_on_grid(&MethodSpec::ab(3), &field, &[1.0], &grid).unwrap();
    let exact = (0.5f64).exp();
    assert!((down.final_state()[0] - exact).abs() < 1e-6);
}
