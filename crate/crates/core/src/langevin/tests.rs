use super::diagnostics::tuple_with_norm;
use super::*;
use crate::ncpoly::text::{parse_poly_auto, parse_word_auto};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quadratic_cfg(n: usize, m: usize, dt: f64, t_max: f64, seed: u64) -> SimConfig {
    let pot = Potential::quadratic(m, 1.0).unwrap();
    SimConfig::new(pot, n, dt, t_max, 5.0, seed)
}

fn quartic_potential(beta: f64) -> Potential {
    Potential::new(
        1,
        1.0,
        vec![(C64::new(beta, 0.0), parse_word_auto("x4").unwrap())],
        true,
    )
    .unwrap()
}

#[test]
fn increment_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let n = 10;
    let dt = 0.1;
    let draws = 100_000;
    let mut re_sum = 0.0;
    let mut re_sq = 0.0;
    for _ in 0..draws {
        let h = brownian_increment(n, 1, dt, &mut rng);
        // exact Hermiticity
        debug_assert_eq!(h[0][(2, 1)], h[0][(1, 2)].conj());
        let v = h[0][(0, 1)].re;
        re_sum += v;
        re_sq += v * v;
    }
    let mean = re_sum / draws as f64;
    let var = re_sq / draws as f64 - mean * mean;
    let expect = dt / (2.0 * n as f64); // 0.005
    // 3σ bands for mean and sample variance
    let se_mean = (expect / draws as f64).sqrt();
    assert!(mean.abs() < 3.0 * se_mean, "mean {mean}");
    let se_var = expect * (2.0 / draws as f64).sqrt();
    assert!((var - expect).abs() < 3.0 * se_var, "var {var} vs {expect}");
}

#[test]
fn increment_is_exactly_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = brownian_increment(6, 2, 0.3, &mut rng);
    for a in &h {
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a[(i, j)], a[(j, i)].conj());
            }
        }
    }
}

#[test]
fn scalar_ou_stationary_variance() {
    // N = 1, m = 1, V = x²/2: scalar Ornstein-Uhlenbeck with stationary
    // variance 1
    let cfg = quadratic_cfg(1, 1, 0.02, 4000.0, 11);
    let run = run_sampling(&cfg).unwrap();
    let m2 = run.mean(&Word::power(1, 2)).unwrap().re;
    let se = run.standard_error(&Word::power(1, 2)).unwrap();
    assert!((m2 - 1.0).abs() < 3.0 * se + 0.02, "m2 = {m2}, se = {se}");
}

#[test]
fn matrix_ou_trace_square() {
    let cfg = quadratic_cfg(32, 1, 0.01, 60.0, 12);
    let run = run_sampling(&cfg).unwrap();
    let m2 = run.mean(&Word::power(1, 2)).unwrap().re;
    assert!((m2 - 1.0).abs() < 0.05, "m2 = {m2}");
    // P = 1 is exactly 1, P = X1 is 0 within error
    let cfg2 = quadratic_cfg(16, 1, 0.01, 30.0, 13);
    let mut traj = Trajectory::new(cfg2).unwrap();
    traj.run_until(10.0).unwrap();
    assert_eq!(traj.trace(&Word::unit()).unwrap(), C64::ONE);
    let m1 = traj.trace(&Word::letter(1)).unwrap();
    assert!(m1.re.abs() < 0.5);
    assert!(m1.im.abs() < 1e-14);
}

#[test]
fn trajectories_are_deterministic() {
    let cfg = quadratic_cfg(8, 2, 0.01, 1.0, 99);
    let run = |cfg: &SimConfig| {
        let mut t = Trajectory::new(cfg.clone()).unwrap();
        t.run_until(1.0).unwrap();
        t.ensemble()
            .matrices()
            .iter()
            .flat_map(|a| {
                (0..8).flat_map(move |i| (0..8).map(move |j| (a[(i, j)].re, a[(i, j)].im)))
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(&cfg), run(&cfg));
}

#[test]
fn hermiticity_preserved_exactly() {
    let cfg = SimConfig::new(quartic_potential(0.05), 12, 0.01, 1.0, 0.0, 5);
    let mut traj = Trajectory::new(cfg).unwrap();
    for _ in 0..50 {
        traj.step().unwrap();
    }
    for a in traj.ensemble().matrices() {
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(a[(i, j)], a[(j, i)].conj());
            }
        }
    }
}

#[test]
fn validation_rejects_unstable_dt() {
    let pot = Potential::quadratic(1, 1.0).unwrap();
    let cfg = SimConfig::new(pot, 8, 3.0, 1.0, 0.0, 1);
    assert!(matches!(cfg.validate(), Err(LangevinError::Validation(_))));
}

#[test]
fn norm_cap_clamps_spectrum() {
    let mut cfg = quadratic_cfg(16, 1, 0.05, 1.0, 21);
    cfg.norm_cap = Some(0.5);
    let mut traj = Trajectory::new(cfg).unwrap();
    for _ in 0..40 {
        traj.step().unwrap();
    }
    let eigs = hermitian_eigenvalues(&traj.ensemble().matrices()[0]);
    assert!(eigs.iter().all(|l| l.abs() <= 0.5 + 1e-12));
}

#[test]
fn coupling_decay_quadratic_rate() {
    // V = ½ Σ x²: the difference decays exactly like exp(-t/2)
    let cfg = quadratic_cfg(24, 2, 0.01, 1.0, 31);
    let z = tuple_with_norm(2, 24, 1.0, 77);
    let decay = coupling_decay(&cfg, &z, 6.0, 20).unwrap();
    let fit = decay.log_fit.unwrap();
    assert!(
        (fit.slope + 0.5).abs() < 0.02,
        "slope {} (expected about -0.5)",
        fit.slope
    );

    // zero initial distance stays zero
    let zeros: Vec<CMat> = (0..2).map(|_| faer::Mat::zeros(24, 24)).collect();
    let trivial = coupling_decay(&cfg, &zeros, 0.5, 10).unwrap();
    assert!(trivial.points.iter().all(|(_, d)| *d == 0.0));
    assert!(trivial.log_fit.is_none());

    // doubling the initial data doubles the initial distance exactly
    let z2: Vec<CMat> = z.iter().map(|a| scale_mat(a, C64::new(2.0, 0.0))).collect();
    let d1 = coupling_decay(&cfg, &z, 0.1, 1000).unwrap().points[0].1;
    let d2 = coupling_decay(&cfg, &z2, 0.1, 1000).unwrap().points[0].1;
    assert!((d2 - 2.0 * d1).abs() < 1e-12);
}

#[test]
fn convexity_probe_examples() {
    // quadratic: the expression vanishes identically, in both readings
    let v = Potential::quadratic(2, 1.0).unwrap();
    let rep = convexity_probe(&v, 1.0, 2.0, 16, 8, 42).unwrap();
    assert!(rep.pass);
    assert!(rep.min_eigenvalue.abs() < 1e-12, "{}", rep.min_eigenvalue);
    assert!(rep.min_trace.abs() < 1e-13);

    // convex quartic passes the trace form for c = 1 at any radius; the
    // operator form picks up small negative directions (x³ is not operator
    // monotone) and is reported but not gated on
    let rep = convexity_probe(&quartic_potential(0.05), 1.0, 3.0, 32, 8, 43).unwrap();
    assert!(rep.pass, "min trace {}", rep.min_trace);
    assert!(rep.min_trace >= -1e-12);

    // concave quartic is refuted with a witness
    let w = Potential::new(
        1,
        1.0,
        vec![(C64::new(-0.5, 0.0), parse_word_auto("x4").unwrap())],
        true,
    )
    .unwrap();
    let rep = convexity_probe(&w, 1.0, 2.0, 32, 8, 44).unwrap();
    assert!(!rep.pass);
    assert!(rep.min_trace < -0.1);
    assert!(rep.min_eigenvalue < -0.1);
    assert!(rep.witness.is_some());
}

#[test]
fn gap_detector_on_synthetic_spectra() {
    let params = GapParams::default();
    // uniform grid: connected
    let uniform: Vec<f64> = (0..200).map(|i| i as f64 / 100.0).collect();
    let rep = spectral_report_from_eigenvalues("x".into(), uniform, &params);
    assert!(rep.connected);
    // two separated clusters: disconnected
    let mut clusters: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
    clusters.extend((0..100).map(|i| 4.0 + i as f64 / 100.0));
    let rep = spectral_report_from_eigenvalues("x".into(), clusters, &params);
    assert!(!rep.connected);
    assert!((rep.gap_location - 2.5).abs() < 0.6);
    assert!(rep.gap_width > 2.9);
}

#[test]
fn spectral_survey_requires_self_adjoint() {
    let cfg = quadratic_cfg(8, 2, 0.01, 0.2, 1);
    let bad = parse_poly_auto("X1X2").unwrap();
    assert!(matches!(
        spectral_survey(&cfg, &bad, 1, &GapParams::default()),
        Err(LangevinError::NotSelfAdjoint(_))
    ));
}

#[test]
fn checkpoint_round_trip_resumes_bit_exactly() {
    let dir = std::env::temp_dir().join("freedyson-ckpt-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("state.fdyn");

    let cfg = quadratic_cfg(10, 2, 0.01, 1.0, 7);
    let mut full = Trajectory::new(cfg.clone()).unwrap();
    for _ in 0..20 {
        full.step().unwrap();
    }
    checkpoint::write_checkpoint(&path, full.ensemble()).unwrap();
    for _ in 0..20 {
        full.step().unwrap();
    }

    let restored = checkpoint::read_checkpoint(&path).unwrap();
    assert!((restored.time() - (full.ensemble().time() - 0.2)).abs() < 1e-12);
    let mut resumed = Trajectory::from_ensemble(cfg, restored).unwrap();
    for _ in 0..20 {
        resumed.step().unwrap();
    }
    for (a, b) in full.ensemble().matrices().iter().zip(resumed.ensemble().matrices()) {
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(a[(i, j)], b[(i, j)]);
            }
        }
    }
    std::fs::remove_file(&path).ok();
}

#[test]
fn config_json_round_trip() {
    let src = r#"{
        "n": 16, "dt": 0.01, "t_max": 2.0, "burn_in": 1.0, "seed": 5,
        "potential": {"text": "0.5 x2 + 0.01 x4"},
        "observables": ["x", "x2"]
    }"#;
    let cfg = SimConfig::from_json(src).unwrap();
    assert_eq!(cfg.n, 16);
    assert_eq!(cfg.m, 1);
    assert_eq!(cfg.observables.len(), 2);
    assert_eq!(cfg.potential.quadratic_weight(), 1.0);
    let j = cfg.to_json();
    let cfg2 = SimConfig::from_json(&j.to_string()).unwrap();
    assert_eq!(cfg2.potential, cfg.potential);
    assert_eq!(cfg2.observables, cfg.observables);

    // malformed config is a validation error
    assert!(matches!(
        SimConfig::from_json("{\"n\": 4}"),
        Err(LangevinError::Validation(_))
    ));
}
