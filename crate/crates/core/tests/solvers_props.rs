use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rppm::manifold::*;
use rppm::problems::*;
use rppm::solvers::*;

fn f3_start(n: usize, seed: u64) -> SpdPoint {
    random_point(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn near_stationary_det(x: &SpdPoint, dets: &[f64], tol: f64) -> bool {
    dets.iter().any(|d| (x.det() - d).abs() <= tol)
}

#[test]
fn dcppa_matches_rppm_when_g2_vanishes() {
    let p = make_f3(5).unwrap();
    let lambda = 0.5;
    let rppm_cfg = RppmConfig { lambda0: lambda, ..Default::default() };
    let dcppa_cfg = DcppaConfig { lambda, ..Default::default() };
    for seed in 0..5 {
        let x0 = f3_start(5, seed);
        let mut a = SolverState::new(&p, x0.clone(), lambda);
        let mut b = SolverState::new(&p, x0, lambda);
        for _ in 0..30 {
            rppm_step(&p, &mut a, &rppm_cfg).unwrap();
            dcppa_step(&p, &mut b, &dcppa_cfg).unwrap();
            assert!(distance(&a.x, &b.x).unwrap() < 1e-12, "seed {seed} k {}", a.k);
        }
    }
}

#[test]
fn f3_runs_reach_a_stationary_level() {
    let dets = f3_stationary_dets();
    for n in [2usize, 5] {
        let p = make_f3(n).unwrap();
        let x0 = SpdPoint::scaled_identity(n, (n as f64).ln().max(0.5));
        let configs = [
            MethodConfig::Adap(AdapConfig { lambda0: 0.1, max_outer: 1000, ..Default::default() }),
            MethodConfig::Dcppa(DcppaConfig { lambda: 0.1, max_outer: 1000, ..Default::default() }),
            MethodConfig::Dca(DcaConfig { max_outer: 1000, ..Default::default() }),
        ];
        for cfg in configs {
            let run = run(&p, &x0, &cfg);
            assert_eq!(run.termination, Termination::StepTol, "{} n={n}", cfg.method());
            assert!(near_stationary_det(&run.x_final, &dets, 1e-3), "det {}", run.x_final.det());
            assert!(check_invariants(&p, &run, &cfg).is_empty());
        }
    }
}

#[test]
fn coarse_tolerance_runs_respect_complexity_caps() {
    let eps = 1e-3;
    let f1 = make_f1(6, 0.5, 0.01).unwrap();
    let x0 = SpdPoint::scaled_identity(6, 6f64.ln());
    let f_low = f1.f_low_hint().unwrap();
    for l0 in [1e-4, 1e-2, 1.0] {
        let cfg = MethodConfig::Adap(AdapConfig { lambda0: l0, eps_stop: eps, ..Default::default() });
        let run = run(&f1, &x0, &cfg);
        let cap = complexity_bound(Method::Adap, run.f0, f_low, l0, Some(1.0), eps).unwrap();
        assert!((large_step_count(&run, eps) as f64) < cap);
        assert!(check_invariants(&f1, &run, &cfg).is_empty());
    }
    let cfg = MethodConfig::Rppm(RppmConfig { lambda0: 1.01, eps_stop: eps, ..Default::default() });
    let run = run(&f1, &x0, &cfg);
    let cap = complexity_bound(Method::Rppm, run.f0, f_low, 1.01, Some(1.0), eps).unwrap();
    assert!((large_step_count(&run, eps) as f64) < cap);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rppm_decrease_and_summability_hold(seed in any::<u64>(), l0 in 0.05f64..1.0) {
        let p = make_f3(3).unwrap();
        let cfg = MethodConfig::Rppm(RppmConfig { lambda0: l0, max_outer: 40, ..Default::default() });
        let run = run(&p, &f3_start(3, seed), &cfg);
        let violations = check_invariants(&p, &run, &cfg);
        prop_assert!(violations.is_empty(), "{:?}", violations);
        for w in run.trace.windows(2) {
            prop_assert!(w[1].f_val <= w[0].f_val + 1e-9);
        }
    }

    #[test]
    fn adaptive_lambda_is_monotone(seed in any::<u64>(), l0 in 1e-2f64..1.0) {
        // much smaller λ₀ puts exp_x(w/λ) beyond f64 range on these starts
        let p = make_f3(3).unwrap();
        let cfg = MethodConfig::Adap(AdapConfig { lambda0: l0, max_outer: 40, ..Default::default() });
        let run = run(&p, &f3_start(3, seed), &cfg);
        prop_assert!(run.trace.windows(2).all(|w| w[1].lambda_k >= w[0].lambda_k));
        prop_assert!(check_invariants(&p, &run, &cfg).is_empty());
    }
}
