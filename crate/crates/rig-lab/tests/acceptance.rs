//! End-to-end acceptance suite. Each test covers one gate: it checks the
//! stated tolerances, enforces its runtime budget, and prints one summary
//! line (visible under --nocapture).
//!
//! Run with: cargo test -p rig-lab --test acceptance -- --nocapture --test-threads=1

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rig_core::bounds::{rate_schedule, BoundParams, CoverageConfig, ScheduleKind};
use rig_core::complexity::{
    baseline_ig_bound, beta_grid, effective_dimension, effective_dimension_matrix,
    information_gain, information_gain_matrix, relative_information_gain, rig_bound_exp,
    rig_bound_poly, rig_bound_split, scaled_rig, split_information_gain,
};
use rig_core::gibbs::{
    empirical_risk, gibbs_posterior, kl_gaussian, krr_fitted, NoiseFamily, NoiseSpec,
};
use rig_core::kernel::{
    eigenvalues_sym, DesignPoints, EigenSpectrum, KernelMatrix, KernelSpec, RkhsElement,
};
use rig_core::spectral::{delta_tail_bound, delta_tail_exact, make_spectrum, DecayParams};
use std::time::Instant;

fn random_spectrum(rng: &mut ChaCha8Rng) -> EigenSpectrum {
    let len = rng.random_range(1..=64);
    EigenSpectrum::new((0..len).map(|_| rng.random_range(0.0..10.0)).collect()).unwrap()
}

fn random_spd_kernel(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> KernelMatrix {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut g = &b * b.transpose();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g[(i, i)] += shift;
    }
    KernelMatrix::from_entries(g).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn identity_suite() {
    let budget = 10.0;
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97);
    let mut worst: f64 = 0.0;

    // Eigenvalue and matrix routes agree on 200 random spectra (via their
    // diagonal embedding) and 20 random SPD kernel matrices.
    for _ in 0..200 {
        let spectrum = random_spectrum(&mut rng);
        let k = KernelMatrix::from_entries(DMatrix::from_diagonal(&DVector::from_row_slice(
            spectrum.values(),
        )))
        .unwrap();
        let eta = rng.random_range(0.05..4.0);
        worst = worst.max(rel_err(
            effective_dimension(&spectrum, eta).unwrap(),
            effective_dimension_matrix(&k, eta).unwrap(),
        ));
        worst = worst.max(rel_err(
            information_gain(&spectrum, eta).unwrap(),
            information_gain_matrix(&k, eta).unwrap(),
        ));
        assert!(worst <= 1e-8, "diagonal embedding disagreement {worst}");
    }
    for _ in 0..20 {
        let n = rng.random_range(2..=64);
        let k = random_spd_kernel(&mut rng, n, 0.0);
        let spectrum = eigenvalues_sym(&k).unwrap();
        for &eta in &[0.05, 0.7, 3.0] {
            worst = worst.max(rel_err(
                effective_dimension(&spectrum, eta).unwrap(),
                effective_dimension_matrix(&k, eta).unwrap(),
            ));
            worst = worst.max(rel_err(
                information_gain(&spectrum, eta).unwrap(),
                information_gain_matrix(&k, eta).unwrap(),
            ));
        }
        assert!(worst <= 1e-8, "spd matrix disagreement {worst}");
    }

    // Split identity: low/high-frequency terms reassemble the dense gain.
    for (decay, m) in [
        (DecayParams::polynomial(1.0, 2.0).unwrap(), 48),
        (DecayParams::exponential(1.0, 1.0, 1.0).unwrap(), 32),
    ] {
        let spec = make_spectrum(decay, m).unwrap();
        for &n in &[8usize, 16] {
            let x = DesignPoints::grid_1d(n).unwrap();
            let full = rig_core::spectral::split_kernel_matrices(&spec, &x, m).unwrap().0;
            let dense = information_gain_matrix(&full, 1.3).unwrap();
            for &d in &[1usize, m / 2, m] {
                let (par, perp) = split_information_gain(&spec, &x, d, 1.3).unwrap();
                worst = worst.max(rel_err(par + perp, dense));
            }
        }
    }
    assert!(worst <= 1e-8, "split identity disagreement {worst}");

    // Posterior identities: covariance closed form, inverse relation,
    // log-det ratio, and the KL's log-det component.
    for seed in 0..5u64 {
        let mut irng = ChaCha8Rng::seed_from_u64(seed);
        let n = 16;
        let k = random_spd_kernel(&mut irng, n, 0.1);
        let y: Vec<f64> = (0..n).map(|_| irng.random_range(-1.0..1.0)).collect();
        let (eta, beta, alpha) = (1.0, 0.125, 0.9);
        let q_eta = gibbs_posterior(&k, &y, eta, alpha).unwrap();
        let q_beta = gibbs_posterior(&k, &y, beta, alpha).unwrap();
        let spectrum = eigenvalues_sym(&k).unwrap();

        // Σ solves (2ηαK + I)Σ = αK.
        let mut a = k.entries() * (2.0 * eta * alpha);
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        let direct = a.clone().lu().solve(&(k.entries() * alpha)).unwrap();
        let cov_err = (q_eta.covariance() - &direct).amax();
        assert!(cov_err <= 1e-8, "covariance closed form error {cov_err}");

        // αΣ⁻¹K = 2ηαK + I.
        let lhs = q_eta.covariance().clone().lu().solve(&(k.entries() * alpha)).unwrap();
        let inv_err = (&lhs - &a).amax() / a.amax();
        assert!(inv_err <= 1e-8, "inverse identity error {inv_err}");

        // ½ log ratio of covariance determinants is the relative gain; the
        // KL between the posteriors carries the same value.
        let rig = relative_information_gain(&spectrum, 2.0 * eta * alpha, 2.0 * beta * alpha).unwrap();
        let ld = |mm: &DMatrix<f64>| {
            mm.clone().cholesky().unwrap().l_dirty().diagonal().map(|v| v.ln()).sum() * 2.0
        };
        let half_ratio = 0.5 * (ld(q_beta.covariance()) - ld(q_eta.covariance()));
        worst = worst.max(rel_err(half_ratio, rig));
        let kl = kl_gaussian(&q_eta, &q_beta).unwrap();
        worst = worst.max(rel_err(kl.logdet_term, rig));
        assert!(worst <= 1e-8, "log-det identity disagreement {worst}");
    }

    let el = t0.elapsed().as_secs_f64();
    assert!(el < budget, "identity suite took {el:.1}s, budget {budget}s");
    println!("[PASS] identity suite: eigen/matrix, split and posterior identities agree (worst rel err {worst:.2e}, {el:.2}s)");
}

#[test]
fn inequality_suite() {
    let budget = 30.0;
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1E9);
    let slack = 1e-10;
    let mut halving_checks = 0usize;

    for case in 0..200 {
        let spectrum = random_spectrum(&mut rng);
        let eta = rng.random_range(0.05..4.0);
        let d = effective_dimension(&spectrum, eta).unwrap();
        let gain = information_gain(&spectrum, eta).unwrap();

        // Derivative link: d_n(η) = 2η·γ′(η), via central differences whose
        // error must shrink like h² when h is halved.
        let disc_at = |h: f64| {
            let rig = relative_information_gain(&spectrum, eta + h, eta - h).unwrap();
            (d - (eta / h) * rig).abs()
        };
        let h = 1e-4 * eta;
        let disc = disc_at(h);
        assert!(disc <= 1e-6 * d.max(1.0), "case {case}: derivative discrepancy {disc}");
        // Roundoff enters the difference at about ε·(η/h)·γ, so only steps
        // whose truncation error clearly dominates that noise can witness
        // the h² decay.
        let disc_half = disc_at(h / 2.0);
        let noise = f64::EPSILON * (eta / (h / 2.0)) * gain.max(1.0);
        if disc_half > 100.0 * noise {
            let ratio = disc / disc_half;
            assert!((3.0..=5.0).contains(&ratio), "case {case}: halving ratio {ratio}");
            halving_checks += 1;
        }

        // Two-sided wedge, monotonicity in β, the (η/β)d cap and the full
        // sandwich closure.
        let mut prev = f64::INFINITY;
        for &beta in &beta_grid(eta) {
            let s = scaled_rig(&spectrum, eta, beta).unwrap();
            assert!(d <= s + slack);
            assert!(s <= 2.0 * gain + slack);
            assert!(s <= prev + slack);
            if beta > 0.0 {
                assert!(s <= (eta / beta) * d + slack);
            }
            prev = s;
        }
        let cap = (1.0 + (eta * spectrum.max()).ln_1p()) * d;
        assert!(2.0 * gain <= cap + slack);
    }
    assert!(
        halving_checks >= 100,
        "h-halving decay witnessed on only {halving_checks} of 200 spectra"
    );

    // Posterior trace comparisons and empirical-risk monotonicity.
    let mut prng = ChaCha8Rng::seed_from_u64(0x7);
    for _ in 0..6 {
        let n = 16;
        let k = random_spd_kernel(&mut prng, n, 0.1);
        let y: Vec<f64> = (0..n).map(|_| prng.random_range(-1.0..1.0)).collect();
        for &(eta, beta, alpha) in &[(1.0, 0.125, 1.0), (0.6, 0.3, 0.5), (2.0, 0.02, 2.0)] {
            let q_eta = gibbs_posterior(&k, &y, eta, alpha).unwrap();
            let q_beta = gibbs_posterior(&k, &y, beta, alpha).unwrap();
            let ratio = q_beta.covariance().clone().lu().solve(q_eta.covariance()).unwrap();
            assert!(ratio.trace() <= n as f64 + slack, "trace comparison failed");
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..16 {
            let zeta = 1e-6 * (1e9f64).powf(i as f64 / 15.0);
            let fit = krr_fitted(&k, &y, zeta).unwrap();
            let risk = empirical_risk(&fit, &y).unwrap();
            assert!(risk >= prev - slack, "empirical risk not monotone in the ridge");
            prev = risk;
        }
    }

    let el = t0.elapsed().as_secs_f64();
    assert!(el < budget, "inequality suite took {el:.1}s, budget {budget}s");
    println!("[PASS] inequality suite: derivative link, sandwich, monotonicity and trace comparisons hold ({el:.2}s)");
}

#[test]
fn spectral_bound_suite() {
    let budget = 60.0;
    let t0 = Instant::now();
    let (eta, beta) = (1.0, 0.125);
    let slack = 1e-10;

    let suite: Vec<(DecayParams, usize)> = vec![
        (DecayParams::polynomial(1.0, 1.5).unwrap(), 2048),
        (DecayParams::polynomial(1.0, 2.0).unwrap(), 2048),
        (DecayParams::polynomial(1.0, 3.0).unwrap(), 2048),
        // β_e = 1 at C_e2 = 1 underflows past ~700 modes; 512 keeps the law
        // representable while the tail is already ~1e-222.
        (DecayParams::exponential(1.0, 1.0, 0.5).unwrap(), 2048),
        (DecayParams::exponential(1.0, 1.0, 1.0).unwrap(), 512),
    ];

    for (decay, m) in suite {
        let spec = make_spectrum(decay.clone(), m).unwrap();

        // Exact tail mass never exceeds its closed-form bound.
        let mut d_list: Vec<usize> = (1..=64).collect();
        let mut stride = 128;
        while stride < m {
            d_list.push(stride);
            stride *= 2;
        }
        d_list.push(m);
        for &d in &d_list {
            let exact = delta_tail_exact(&spec, d).unwrap().total();
            let bound = delta_tail_bound(&decay, spec.psi(), d).unwrap();
            assert!(
                exact <= bound + 1e-12,
                "tail bound failed at D = {d}: {exact} > {bound}"
            );
        }

        for &n in &[32usize, 128, 512] {
            let x = DesignPoints::grid_1d(n).unwrap();
            let k = rig_core::spectral::split_kernel_matrices(&spec, &x, m).unwrap().0;
            let spectrum = eigenvalues_sym(&k).unwrap();
            let rig = relative_information_gain(&spectrum, eta, beta).unwrap();
            let gain = information_gain(&spectrum, eta).unwrap();

            for d in 1..=64usize.min(m) {
                let tail = delta_tail_exact(&spec, d).unwrap().total();
                let split = rig_bound_split(d, eta, beta, n, tail).unwrap();
                assert!(rig <= split + slack, "split bound failed at n = {n}, D = {d}");
                let base = baseline_ig_bound(d, eta, n, k.sup_diag(), tail).unwrap();
                assert!(gain <= base + slack, "baseline bound failed at n = {n}, D = {d}");
            }

            let closed = match &decay {
                DecayParams::Polynomial { .. } => rig_bound_poly(n, eta, beta, &decay, spec.psi()).unwrap(),
                DecayParams::Exponential { .. } => rig_bound_exp(n, eta, beta, &decay, spec.psi()).unwrap(),
            };
            assert!(rig <= closed + slack, "closed-form decay bound failed at n = {n}");
        }
    }

    let el = t0.elapsed().as_secs_f64();
    assert!(el < budget, "spectral bound suite took {el:.1}s, budget {budget}s");
    println!("[PASS] spectral bound suite: split, closed-form decay and baseline bounds dominate on all decay families ({el:.2}s)");
}

#[test]
fn coverage_violation_rate() {
    let budget = 300.0;
    let t0 = Instant::now();
    let anchors = DesignPoints::new(vec![vec![0.2], vec![0.5], vec![0.8]]).unwrap();
    let cfg = CoverageConfig {
        kernel: KernelSpec::rbf(0.25, 1.0).unwrap(),
        x: DesignPoints::grid_1d(64).unwrap(),
        fstar: RkhsElement::new(anchors, vec![1.0, -1.0, 0.5]).unwrap(),
        noise: NoiseSpec::new(NoiseFamily::Gaussian, 0.5, 0).unwrap(),
        alpha: 1.0,
        delta: 0.1,
        trials: 1000,
        master_seed: 20260814,
    };
    let result = rig_core::bounds::coverage_experiment(&cfg).unwrap();
    assert!(
        result.violation_fraction <= 0.13,
        "violation fraction {} exceeds 0.13",
        result.violation_fraction
    );
    assert!(result.violation_fraction <= result.slack_threshold);

    let el = t0.elapsed().as_secs_f64();
    assert!(el < budget, "coverage took {el:.1}s, budget {budget}s");
    println!(
        "[PASS] coverage: {} violations in 1000 trials (fraction {} <= 0.13, {el:.2}s)",
        result.violations, result.violation_fraction
    );
}

fn rates_config(json: &str) -> rig_lab::config::ExperimentConfig {
    rig_lab::config::ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn polynomial_rate_reproduction() {
    let budget = 900.0;
    let t0 = Instant::now();
    let cfg = rates_config(
        r#"{
        "experiment": "rates",
        "kernel": {"spectral": {"decay": {"polynomial": {"c_p": 1.0, "beta_p": 2.0}}, "modes": 1024}},
        "n_grid": [128, 256, 512, 1024, 2048, 4096],
        "rate_policy": {"schedule": "poly"},
        "sigma": 0.5,
        "delta": 0.1,
        "trials": 50,
        "master_seed": 20260814,
        "noise_family": "gaussian",
        "fstar": {"anchors": [[0.2], [0.5], [0.8]], "coefficients": [1.0, -1.0, 0.5]},
        "output_path": "unused.csv"
    }"#,
    );
    let result = rig_lab::runner::rates_experiment(&cfg).unwrap();
    let bound_slope = result.bound_slope.expect("slope defined on a six-point grid");
    let risk_slope = result.risk_slope.expect("slope defined on a six-point grid");
    assert!(
        (-0.75..=-0.55).contains(&bound_slope),
        "bound slope {bound_slope} outside [-0.75, -0.55] (target -2/3)"
    );
    assert!(
        risk_slope <= bound_slope + 0.1,
        "risk slope {risk_slope} decays slower than bound slope {bound_slope} + 0.1"
    );

    let el = t0.elapsed().as_secs_f64();
    assert!(el < budget, "polynomial rates took {el:.1}s, budget {budget}s");
    println!("[PASS] polynomial rate: bound slope {bound_slope:.4} in [-0.75, -0.55], risk slope {risk_slope:.4} ({el:.2}s)");
}

#[test]
fn exponential_rate_reproduction() {
    let budget = 900.0;
    let t0 = Instant::now();
    let cfg = rates_config(
        r#"{
        "experiment": "rates",
        "kernel": {"spectral": {"decay": {"exponential": {"c_e1": 1.0, "c_e2": 1.0, "beta_e": 1.0}}, "modes": 512}},
        "n_grid": [128, 256, 512, 1024, 2048, 4096],
        "rate_policy": {"schedule": "exp"},
        "sigma": 0.5,
        "delta": 0.1,
        "trials": 50,
        "master_seed": 20260814,
        "noise_family": "gaussian",
        "fstar": {"anchors": [[0.2], [0.5], [0.8]], "coefficients": [1.0, -1.0, 0.5]},
        "output_path": "unused.csv"
    }"#,
    );
    let result = rig_lab::runner::rates_experiment(&cfg).unwrap();

    // risk should track log(n)/n: normalized values on the top half of the
    // grid stay within a factor 2 of each other.
    let normalized: Vec<f64> = result
        .rows
        .iter()
        .map(|r| r.mean_risk * r.n as f64 / (r.n as f64).ln())
        .collect();
    let top = &normalized[normalized.len() / 2..];
    let max = top.iter().cloned().fold(f64::MIN, f64::max);
    let min = top.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        max / min <= 2.0,
        "normalized risk ratio {} exceeds 2 on the top half of the grid",
        max / min
    );

    let el = t0.elapsed().as_secs_f64();
    assert!(el < budget, "exponential rates took {el:.1}s, budget {budget}s");
    println!(
        "[PASS] exponential rate: risk*n/log(n) ratio {:.3} <= 2 on the top half ({el:.2}s)",
        max / min
    );
}

#[test]
fn schedule_denominator_constant() {
    let decay = DecayParams::polynomial(1.0, 2.0).unwrap();
    for &sigma in &[0.25f64, 0.5, 1.0, 2.0] {
        let params = rate_schedule(ScheduleKind::Poly, 128, sigma, &decay, 2.0f64.sqrt(), 1.0, 0.1).unwrap();
        let expected = 47.0 / (512.0 * sigma * sigma);
        // Every term is a dyadic rational at these sigmas, so equality is
        // exact, not approximate.
        assert_eq!(params.denominator(), expected, "sigma = {sigma}");
        let n = 128.0;
        assert_eq!(n * params.denominator(), 47.0 * n / (512.0 * sigma * sigma));

        let direct = BoundParams::new(
            1.0 / (4.0 * sigma * sigma),
            1.0 / (32.0 * sigma * sigma),
            1.0,
            sigma,
            0.1,
            128,
        )
        .unwrap();
        assert_eq!(direct.denominator(), expected);
    }
    println!("[PASS] schedule denominator: equals 47/(512 sigma^2) bit-exactly for sigma in {{0.25, 0.5, 1, 2}}");
}

#[test]
fn cli_csv_determinism() {
    let t0 = Instant::now();
    let bin = env!("CARGO_BIN_EXE_rig-lab");
    let dir = tempfile::tempdir().unwrap();
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");

    let coverage_cfg = dir.path().join("coverage.json");
    std::fs::write(
        &coverage_cfg,
        r#"{
        "experiment": "coverage",
        "kernel": {"rbf": {"lengthscale": 0.25, "amplitude": 1.0}},
        "n_grid": [32],
        "rate_policy": {"explicit": {"alpha": 1.0}},
        "sigma": 0.5,
        "delta": 0.1,
        "trials": 50,
        "master_seed": 5,
        "fstar": {"anchors": [[0.2], [0.5], [0.8]], "coefficients": [1.0, -1.0, 0.5]},
        "output_path": "unused.csv"
    }"#,
    )
    .unwrap();
    let rates_cfg = dir.path().join("rates.json");
    std::fs::write(
        &rates_cfg,
        r#"{
        "experiment": "rates",
        "kernel": {"spectral": {"decay": {"polynomial": {"c_p": 1.0, "beta_p": 2.0}}, "modes": 64}},
        "n_grid": [32, 64, 128],
        "rate_policy": {"schedule": "poly"},
        "sigma": 0.5,
        "delta": 0.1,
        "trials": 5,
        "master_seed": 5,
        "fstar": {"anchors": [[0.2], [0.5], [0.8]], "coefficients": [1.0, -1.0, 0.5]},
        "output_path": "unused.csv"
    }"#,
    )
    .unwrap();

    let jobs: Vec<(&str, std::path::PathBuf)> = vec![
        ("complexity", root.join("configs/complexity.json")),
        ("coverage", coverage_cfg),
        ("rates", rates_cfg),
    ];
    for (sub, cfg_path) in jobs {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{sub}-{run}.csv"));
            let status = std::process::Command::new(bin)
                .args([
                    sub,
                    "--config",
                    cfg_path.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                    "--seed",
                    "99",
                    "--threads",
                    "1",
                ])
                .status()
                .unwrap();
            assert!(status.success(), "{sub} run {run} failed");
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{sub} reruns are not byte-identical");
        assert!(!outputs[0].is_empty());
    }

    let el = t0.elapsed().as_secs_f64();
    println!("[PASS] determinism: complexity, coverage and rates CLI reruns are byte-identical ({el:.2}s)");
}
