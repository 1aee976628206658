//! Closed-form acquisition pieces against brute-force sampling. Sample sizes
//! here are modest; the acceptance suite repeats these at full size.

use bop_elites::acquisition::{ejie, expected_improvement};
use bop_elites::archive::EliteArchive;
use bop_elites::benchmark::{default_grid, generate_problem};
use bop_elites::domain::{discretize, sample_initial, Problem};
use bop_elites::gp::{
    train_hyperparams, GpModel, HyperBounds, KernelHyperparams, Posterior, BASE_RELATIVE_JITTER,
};
use bop_elites::niche::NicheGrid;
use bop_elites::{normal, rng};
use rand::Rng;
use rand_distr::StandardNormal;

const DRAWS: usize = 200_000;

fn mean(samples: impl Iterator<Item = f64>) -> f64 {
    samples.sum::<f64>() / DRAWS as f64
}

/// z-test of a sample mean against the closed form, with the standard error
/// implied by the closed-form first and second moments. A sample SE would be
/// zero for rare events that never occur in the draws.
fn within(first: f64, second: f64, mc: f64) -> bool {
    let se = ((second - first * first).max(0.0) / DRAWS as f64).sqrt();
    (first - mc).abs() <= 3.0 * se + 1e-15
}

/// E[max(f − τ, 0)²] for f ~ N(m, s²).
fn ei_second_moment(post: &Posterior, incumbent: f64) -> f64 {
    let gap = post.mean - incumbent;
    if post.sd == 0.0 {
        return gap.max(0.0).powi(2);
    }
    let z = gap / post.sd;
    (gap * gap + post.sd * post.sd) * normal::cdf(z) + gap * post.sd * normal::pdf(z)
}

#[test]
fn expected_improvement_matches_sampling() {
    let mut r = rng::stream(1, &[]);
    for trial in 0..20u64 {
        let post = Posterior::new(r.random_range(-5.0..5.0), r.random_range(0.05..3.0));
        let incumbent = r.random_range(-5.0..5.0);
        let mut draws = rng::stream(2, &[trial]);
        let mc = mean((0..DRAWS).map(|_| {
            let f = post.mean + post.sd * draws.sample::<f64, _>(StandardNormal);
            (f - incumbent).max(0.0)
        }));
        let ei = expected_improvement(&post, incumbent);
        assert!(
            within(ei, ei_second_moment(&post, incumbent), mc),
            "trial {trial}: {post:?} vs {incumbent}: EI {ei}, MC {mc:?}"
        );
    }
}

#[test]
fn membership_probability_matches_sampling() {
    let mut r = rng::stream(3, &[]);
    for trial in 0..20u64 {
        let mut bounds: Vec<f64> = (0..r.random_range(1..6))
            .map(|_| r.random_range(-4.0..4.0))
            .collect();
        bounds.sort_by(f64::total_cmp);
        bounds.dedup();
        let grid = NicheGrid::new(vec![bounds]).unwrap();
        let post = Posterior::new(r.random_range(-4.0..4.0), r.random_range(0.05..3.0));
        let niche = grid.niche(r.random_range(0..grid.niche_count()));
        let p = grid
            .membership_probability(std::slice::from_ref(&post), &niche)
            .unwrap();
        let mut draws = rng::stream(4, &[trial]);
        let mc = mean((0..DRAWS).map(|_| {
            let g = post.mean + post.sd * draws.sample::<f64, _>(StandardNormal);
            f64::from(grid.classify(&[g]).unwrap().index == niche.index)
        }));
        assert!(within(p, p, mc), "trial {trial}: P {p}, MC {mc:?}");
        let total: f64 = grid
            .all_membership_probabilities(&[post])
            .unwrap()
            .iter()
            .sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }
}

fn fit(x: &[Vec<f64>], y: Vec<f64>, seed: u64) -> GpModel {
    let hp = train_hyperparams(
        x,
        &y,
        &KernelHyperparams::isotropic(0.5, 0.01),
        &HyperBounds::default(),
        5,
        seed,
    )
    .unwrap();
    let jitter = BASE_RELATIVE_JITTER * hp.signal_variance;
    GpModel::fit(x.to_vec(), y, hp, jitter).unwrap()
}

#[test]
fn ejie_matches_joint_sampling() {
    let grid = default_grid();
    for state in 0..3u64 {
        let problem = generate_problem(100 + state).unwrap();
        let candidates = discretize(problem.domain(), 200).unwrap();
        let mut r = rng::stream(5, &[state]);
        let mut archive = EliteArchive::new(grid.clone(), 0.0);
        let x = sample_initial(&candidates, 8, state).unwrap();
        for p in &x {
            archive.update(&problem.evaluate(p).unwrap()).unwrap();
        }
        let obj = fit(
            &x,
            x.iter()
                .map(|p| problem.eval_objective(p).unwrap())
                .collect(),
            state,
        );
        let feat = fit(
            &x,
            x.iter()
                .map(|p| problem.eval_feature(p).unwrap()[0])
                .collect(),
            state + 50,
        );

        for k in 0..5 {
            let at = candidates.get(r.random_range(0..candidates.len())).to_vec();
            let analytic = ejie(&at, &obj, std::slice::from_ref(&feat), &archive)
                .unwrap()
                .total;
            let (pf, pg) = (obj.predict(&at).unwrap(), feat.predict(&at).unwrap());
            let probs = grid
                .all_membership_probabilities(std::slice::from_ref(&pg))
                .unwrap();
            let second: f64 = probs
                .iter()
                .enumerate()
                .map(|(c, p)| p * ei_second_moment(&pf, archive.elite_value(c)))
                .sum();
            let mut draws = rng::stream(6, &[state, k]);
            let mc = mean((0..DRAWS).map(|_| {
                let f = pf.mean + pf.sd * draws.sample::<f64, _>(StandardNormal);
                let g = pg.mean + pg.sd * draws.sample::<f64, _>(StandardNormal);
                let niche = grid.classify(&[g]).unwrap().index;
                (f - archive.elite_value(niche)).max(0.0)
            }));
            assert!(
                within(analytic, second, mc),
                "state {state} at {at:?}: EJIE {analytic}, MC {mc:?}"
            );
        }
    }
}
