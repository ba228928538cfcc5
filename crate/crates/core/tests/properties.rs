use metacmi::environment::{Dataset, TaskEnvironment};
use metacmi::experiments::expected_gap_closed_form;
use metacmi::learners::{base_learn, meta_learn, BaseLearnerConfig, GrandMean, Hyperparameter};
use metacmi::losses::{meta_training_loss, true_avg_meta_gap_mc};
use metacmi::RandomStream;
use proptest::prelude::*;

fn datasets(max_n: usize, m: usize) -> impl Strategy<Value = Vec<Dataset>> {
    prop::collection::vec(prop::collection::vec(0u8..=1, m), 1..=max_n)
        .prop_map(|rows| rows.into_iter().map(|r| Dataset::new(r).unwrap()).collect())
}

fn environment() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|k| {
        (
            prop::collection::vec(0.01f64..1.0, k),
            prop::collection::vec(0.0f64..=1.0, k),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn meta_learn_is_permutation_invariant(data in datasets(6, 4), shift in 0usize..6) {
        let mut rotated = data.clone();
        rotated.rotate_left(shift % data.len());
        let a: Hyperparameter<f64> = meta_learn(&data).unwrap();
        let b: Hyperparameter<f64> = meta_learn(&rotated).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn base_learn_ignores_sample_order(samples in prop::collection::vec(0u8..=1, 1..10), alpha in 0.0f64..=1.0, u in 0.0f64..=1.0) {
        let cfg = BaseLearnerConfig::new(alpha).unwrap();
        let u = Hyperparameter::new(u).unwrap();
        let mut reversed = samples.clone();
        reversed.reverse();
        let w1 = base_learn(&cfg, &Dataset::new(samples).unwrap(), u).unwrap();
        let w2 = base_learn(&cfg, &Dataset::new(reversed).unwrap(), u).unwrap();
        prop_assert!((w1 - w2).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&w1));
    }

    #[test]
    fn meta_learn_matches_grid_search(data in datasets(5, 3), alpha in 0.0f64..0.95) {
        let cfg = BaseLearnerConfig::new(alpha).unwrap();
        let u: Hyperparameter<f64> = meta_learn(&data).unwrap();
        let (best, _) = (0..=200)
            .map(|k| k as f64 / 200.0)
            .map(|g| (g, meta_training_loss(Hyperparameter::new(g).unwrap(), &data, &cfg).unwrap()))
            .fold((f64::NAN, f64::INFINITY), |acc, (g, l)| if l < acc.1 { (g, l) } else { acc });
        prop_assert!((best - u.value()).abs() <= 0.0025 + 1e-12, "grid {} vs {}", best, u.value());
    }

    #[test]
    fn moments_match_direct_sums((raw, means) in environment()) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let env = TaskEnvironment::new(probs.clone(), means.clone()).unwrap();
        let mo = env.moments();
        let second: f64 = probs.iter().zip(&means).map(|(p, mu)| p * mu * mu).sum();
        let first: f64 = probs.iter().zip(&means).map(|(p, mu)| p * mu).sum();
        prop_assert!((mo.mean_of_means - first).abs() < 1e-12);
        prop_assert!((mo.var_of_means - (second - first * first)).abs() < 1e-12);
        prop_assert!((mo.mean_bernoulli_var - (first - second)).abs() < 1e-12);
        prop_assert!(mo.var_of_means >= 0.0 && mo.mean_bernoulli_var >= 0.0);
    }
}

#[test]
fn gap_closed_form_matches_monte_carlo() {
    let env = TaskEnvironment::reference();
    let root = RandomStream::from_seed(77);
    for (k, (n, m, alpha)) in [(1, 5, 0.5f64), (5, 2, 0.0), (10, 5, 1.0), (3, 3, 0.25)]
        .into_iter()
        .enumerate()
    {
        let cfg = BaseLearnerConfig::new(alpha).unwrap();
        let closed = expected_gap_closed_form(&env, n, m, alpha);
        let mc = true_avg_meta_gap_mc(
            &env,
            n,
            m,
            &cfg,
            &GrandMean,
            100_000,
            &root.substream(k as u64),
        )
        .unwrap();
        assert!(
            (closed - mc.mean).abs() <= 3.0 * mc.stderr,
            "N={n} M={m} α={alpha}: closed {closed}, MC {} ± {}",
            mc.mean,
            mc.stderr
        );
    }
}
