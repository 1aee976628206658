use bop_elites::benchmark::generate_problem;
use bop_elites::gp::{
    log_marginal_likelihood_and_gradient, rbf_kernel, train_hyperparams, GpModel, HyperBounds,
    KernelHyperparams, BASE_RELATIVE_JITTER, TRAINING_RELATIVE_JITTER,
};
use bop_elites::rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// One point per cell of width 10/n along the first axis, so no two inputs
/// nearly coincide.
fn random_inputs(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, &[1]);
    let cell = 10.0 / n as f64;
    (0..n)
        .map(|i| {
            let mut p = vec![(i as f64 + r.random_range(0.1..0.9)) * cell];
            p.extend((1..dim).map(|_| r.random_range(0.0..10.0)));
            p
        })
        .collect()
}

fn random_targets(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, &[2]);
    (0..n).map(|_| r.random_range(-5.0..5.0)).collect()
}

fn dense_kernel(x: &[Vec<f64>], hp: &KernelHyperparams, jitter: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        rbf_kernel(&x[i], &x[j], hp).unwrap() + if i == j { jitter } else { 0.0 }
    })
}

/// Posterior mean and variance through an explicit LU inverse.
fn lu_posterior(
    x: &[Vec<f64>],
    y: &[f64],
    hp: &KernelHyperparams,
    jitter: f64,
    mean0: f64,
    at: &[f64],
) -> (f64, f64) {
    let kinv = dense_kernel(x, hp, jitter)
        .lu()
        .try_inverse()
        .expect("invertible");
    let ks = DVector::from_iterator(x.len(), x.iter().map(|xi| rbf_kernel(xi, at, hp).unwrap()));
    let r = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean0));
    let mean = mean0 + ks.dot(&(&kinv * r));
    let var = hp.signal_variance - ks.dot(&(&kinv * &ks));
    (mean, var)
}

fn lu_lml(x: &[Vec<f64>], y: &[f64], hp: &KernelHyperparams, jitter: f64) -> f64 {
    let k = dense_kernel(x, hp, jitter);
    let lu = k.clone().lu();
    let r = DVector::from_column_slice(y);
    let quad = r.dot(&(lu.try_inverse().unwrap() * &r));
    let n = y.len() as f64;
    -0.5 * quad - 0.5 * lu.determinant().ln() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

#[test]
fn predictions_match_dense_lu_oracle() {
    for seed in 0..20 {
        let x = random_inputs(10, 1, seed);
        let y = random_targets(10, seed);
        let hp = KernelHyperparams::isotropic(0.3 + 0.06 * seed as f64, 0.5 + seed as f64);
        let jitter = BASE_RELATIVE_JITTER * hp.signal_variance;
        let mean0 = if seed % 2 == 0 { 0.0 } else { 1.5 };
        let model =
            GpModel::fit_with_prior_mean(x.clone(), y.clone(), hp.clone(), jitter, mean0).unwrap();
        for k in 0..25 {
            let at = [k as f64 * 0.41];
            let (m, v) = model.predict_unclamped(&at).unwrap();
            let (om, ov) = lu_posterior(&x, &y, &hp, model.jitter(), mean0, &at);
            assert!(
                (m - om).abs() <= 1e-8,
                "seed {seed} at {at:?}: mean {m} vs {om}"
            );
            assert!(
                (v - ov).abs() <= 1e-8,
                "seed {seed} at {at:?}: var {v} vs {ov}"
            );
        }
    }
}

#[test]
fn two_dimensional_ard_matches_oracle() {
    let x = random_inputs(10, 2, 7);
    let y = random_targets(10, 7);
    let hp = KernelHyperparams {
        lengthscales: vec![1.5, 0.7],
        signal_variance: 2.0,
    };
    let model = GpModel::fit(x.clone(), y.clone(), hp.clone(), 2e-8).unwrap();
    for at in [[1.0, 2.0], [5.5, 0.3], [9.0, 9.0]] {
        let (m, v) = model.predict_unclamped(&at).unwrap();
        let (om, ov) = lu_posterior(&x, &y, &hp, model.jitter(), 0.0, &at);
        assert!((m - om).abs() <= 1e-8);
        assert!((v - ov).abs() <= 1e-8);
    }
}

#[test]
fn interpolates_training_data_with_nonnegative_variance() {
    for seed in 0..10 {
        let problem = generate_problem(seed).unwrap();
        let x = random_inputs(10, 1, seed);
        let y: Vec<f64> = x
            .iter()
            .map(|xi| problem.eval_objective(xi).unwrap())
            .collect();
        let hp = train_hyperparams(
            &x,
            &y,
            &KernelHyperparams::isotropic(0.5, 0.01),
            &HyperBounds::default(),
            10,
            seed,
        )
        .unwrap();
        let model = GpModel::fit(
            x.clone(),
            y.clone(),
            hp.clone(),
            BASE_RELATIVE_JITTER * hp.signal_variance,
        )
        .unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (m, v) = model.predict_unclamped(xi).unwrap();
            assert!((m - yi).abs() <= 1e-6, "seed {seed}: mean {m} vs {yi}");
            assert!(v >= -1e-8, "variance {v}");
            let sd = model.predict(xi).unwrap().sd;
            assert!(sd <= 1e-3, "seed {seed}: sd {sd} with {hp:?}");
        }
        for k in 0..=100 {
            assert!(model.predict(&[k as f64 * 0.1]).unwrap().sd >= 0.0);
        }
    }
}

#[test]
fn lml_matches_dense_determinant() {
    for seed in 0..10 {
        let x = random_inputs(10, 1, seed);
        let y = random_targets(10, seed);
        let hp = KernelHyperparams::isotropic(0.2 + 0.15 * seed as f64, 3.0);
        let model =
            GpModel::fit(x.clone(), y.clone(), hp.clone(), BASE_RELATIVE_JITTER * 3.0).unwrap();
        let oracle = lu_lml(&x, &y, &hp, model.jitter());
        let cached = model.log_marginal_likelihood();
        assert!(
            (cached - oracle).abs() <= 1e-8 * oracle.abs().max(1.0),
            "{cached} vs {oracle}"
        );
        // Training evaluates the likelihood with its own, larger jitter.
        let (training, _) = log_marginal_likelihood_and_gradient(&x, &y, &hp).unwrap();
        let oracle = lu_lml(&x, &y, &hp, TRAINING_RELATIVE_JITTER * 3.0);
        assert!(
            (training - oracle).abs() <= 1e-8 * oracle.abs().max(1.0),
            "{training} vs {oracle}"
        );
    }
}

#[test]
fn lml_gradient_matches_central_differences() {
    let settings = [
        (0.1, 0.01),
        (0.3, 0.5),
        (0.5, 1.0),
        (0.8, 3.0),
        (1.0, 10.0),
        (1.3, 25.0),
        (1.7, 100.0),
        (2.0, 0.2),
        (0.05, 5.0),
        (0.6, 1e3),
    ];
    let x = random_inputs(10, 1, 3);
    let y = random_targets(10, 3);
    let h = 1e-5;
    for (l, s2) in settings {
        let hp = KernelHyperparams::isotropic(l, s2);
        let (_, grad) = log_marginal_likelihood_and_gradient(&x, &y, &hp).unwrap();
        let theta = [f64::ln(l), f64::ln(s2)];
        for p in 0..2 {
            let at = |delta: f64| {
                let mut t = theta;
                t[p] += delta;
                let hp = KernelHyperparams::isotropic(t[0].exp(), t[1].exp());
                log_marginal_likelihood_and_gradient(&x, &y, &hp).unwrap().0
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let rel = (fd - grad[p]).abs() / grad[p].abs().max(1.0);
            assert!(
                rel <= 1e-4,
                "ℓ={l} σ²={s2} component {p}: analytic {} vs fd {fd}",
                grad[p]
            );
        }
    }
}

#[test]
fn ard_gradient_matches_central_differences() {
    let x = random_inputs(12, 2, 11);
    let y = random_targets(12, 11);
    let hp = KernelHyperparams {
        lengthscales: vec![0.9, 2.5],
        signal_variance: 4.0,
    };
    let (_, grad) = log_marginal_likelihood_and_gradient(&x, &y, &hp).unwrap();
    let theta = [0.9f64.ln(), 2.5f64.ln(), 4.0f64.ln()];
    let h = 1e-5;
    for p in 0..3 {
        let at = |delta: f64| {
            let mut t = theta;
            t[p] += delta;
            let hp = KernelHyperparams {
                lengthscales: vec![t[0].exp(), t[1].exp()],
                signal_variance: t[2].exp(),
            };
            log_marginal_likelihood_and_gradient(&x, &y, &hp).unwrap().0
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        assert!((fd - grad[p]).abs() / grad[p].abs().max(1.0) <= 1e-4);
    }
}

#[test]
fn trained_optimum_is_a_local_maximum() {
    let x = random_inputs(20, 1, 5);
    let y: Vec<f64> = x
        .iter()
        .map(|v| (v[0] * 0.9).sin() * 3.0 + 0.2 * v[0])
        .collect();
    let bounds = HyperBounds::default();
    let hp = train_hyperparams(
        &x,
        &y,
        &KernelHyperparams::isotropic(0.5, 0.01),
        &bounds,
        20,
        9,
    )
    .unwrap();
    let (best, _) = log_marginal_likelihood_and_gradient(&x, &y, &hp).unwrap();
    let mut r = rng::stream(42, &[]);
    let (lo, hi) = (
        [bounds.lengthscale.0.ln(), bounds.signal_variance.0.ln()],
        [bounds.lengthscale.1.ln(), bounds.signal_variance.1.ln()],
    );
    for _ in 0..20 {
        let t0 = (hp.lengthscales[0].ln() + r.random_range(-0.01..0.01)).clamp(lo[0], hi[0]);
        let t1 = (hp.signal_variance.ln() + r.random_range(-0.01..0.01)).clamp(lo[1], hi[1]);
        let nearby = KernelHyperparams::isotropic(t0.exp(), t1.exp());
        let (v, _) = log_marginal_likelihood_and_gradient(&x, &y, &nearby).unwrap();
        assert!(
            v <= best + 1e-9,
            "perturbation raised LML from {best} to {v}"
        );
    }
}

#[test]
fn recovers_lengthscale_from_gp_samples() {
    let true_l = 0.8;
    let n = 200;
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 * 0.5]).collect();
    let hp = KernelHyperparams::isotropic(true_l, 1.0);
    let chol = dense_kernel(&x, &hp, 1e-8).cholesky().unwrap();
    let mut hits = 0;
    for sample in 0..20u64 {
        let mut r = rng::stream(1000 + sample, &[]);
        let z = DVector::from_iterator(n, (0..n).map(|_| r.sample::<f64, _>(StandardNormal)));
        let y: Vec<f64> = (chol.l() * z).iter().copied().collect();
        let fit = train_hyperparams(
            &x,
            &y,
            &KernelHyperparams::isotropic(0.5, 0.01),
            &HyperBounds::default(),
            4,
            sample,
        )
        .unwrap();
        if (0.5..=1.2).contains(&fit.lengthscales[0]) {
            hits += 1;
        }
    }
    assert!(hits >= 18, "only {hits}/20 lengthscales recovered");
}

#[test]
fn cholesky_factor_reconstructs_anchor_kernel() {
    for seed in 0..5 {
        let problem = generate_problem(seed).unwrap();
        let model = problem.objective().model();
        let l = model.chol_factor();
        let k = dense_kernel(model.train_x(), model.hyperparams(), model.jitter());
        let err = (&l * l.transpose() - k).abs().max();
        assert!(err <= 1e-8, "seed {seed}: reconstruction error {err}");
    }
}
