mod common;

use neighsel::lasso::{lambda_max, log_grid};
use neighsel::neighborhood::{
    cv_lambda, estimate_all_neighborhoods, estimate_neighborhood, lambda_alpha, CvConfig, PenaltySource,
};
use neighsel::synth::sample_gaussian;
use neighsel::{DataMatrix, Design, Error, PenaltyRule, PenaltyValue, SeedStream, SymMatrix};
use proptest::prelude::*;

fn design_from(sigma: &SymMatrix, n: usize, seed: SeedStream) -> Design {
    Design::new(sample_gaussian(sigma, n, seed).unwrap().standardize().unwrap()).unwrap()
}

#[test]
fn strong_pair_is_found_with_the_right_sign() {
    let sigma = SymMatrix::from_full(&[vec![1.0, -0.245], vec![-0.245, 1.0]]).unwrap();
    let hits = (0..100)
        .filter(|&r| {
            let design = design_from(&sigma, 10_000, SeedStream::new(3).derive("pair", r));
            let ne = estimate_neighborhood(&design, 0, &PenaltyValue::fixed(0.05)).unwrap();
            ne.members == [1] && ne.signs == [-1]
        })
        .count();
    assert!(hits >= 95, "{hits}");
}

#[test]
fn independence_gives_empty_neighborhoods() {
    let sigma = SymMatrix::identity(100);
    let rule = PenaltyRule::Alpha { alpha: 0.05 };
    let empty = (0..100)
        .filter(|&r| {
            let design = design_from(&sigma, 50, SeedStream::new(4).derive("null", r));
            let penalty = neighsel::neighborhood::penalty_for_node(&design, 0, &rule).unwrap();
            estimate_neighborhood(&design, 0, &penalty).unwrap().members.is_empty()
        })
        .count();
    assert!(empty >= 95, "{empty}");
}

#[test]
fn single_variable_has_an_empty_neighborhood() {
    let data = DataMatrix::from_columns(3, 1, vec![1.0, 2.0, 4.0]).unwrap().standardize().unwrap();
    let hoods = estimate_all_neighborhoods(&Design::new(data).unwrap(), &PenaltyRule::Alpha { alpha: 0.05 }, 1).unwrap();
    assert_eq!(hoods.len(), 1);
    assert!(hoods[0].members.is_empty());
}

#[test]
fn worker_count_does_not_change_results() {
    let design = Design::new(common::random_data(60, 40, 5)).unwrap();
    for rule in [
        PenaltyRule::Alpha { alpha: 0.3 },
        PenaltyRule::Fixed { lambda: 0.2 },
        PenaltyRule::Cv(CvConfig::with_seed(9)),
    ] {
        let one = serde_json::to_string(&estimate_all_neighborhoods(&design, &rule, 1).unwrap()).unwrap();
        let eight = serde_json::to_string(&estimate_all_neighborhoods(&design, &rule, 8).unwrap()).unwrap();
        assert_eq!(one, eight);
    }
}

#[test]
fn level_rule_is_certified_and_uses_unit_sigma() {
    let design = Design::new(common::random_data(80, 30, 6)).unwrap();
    for ne in estimate_all_neighborhoods(&design, &PenaltyRule::Alpha { alpha: 0.05 }, 1).unwrap() {
        assert!(ne.kkt_violation <= 1e-8);
        assert!((ne.penalty.sigma_hat - 1.0).abs() <= 1e-10);
        let z = ne.penalty.tail_quantile.unwrap();
        assert_eq!(ne.penalty.lambda, 2.0 * ne.penalty.sigma_hat / 80f64.sqrt() * z);
    }
}

#[test]
fn cross_validation_on_pure_noise_prefers_the_largest_penalty() {
    let sigma = SymMatrix::identity(10);
    let top = (0..100)
        .filter(|&r| {
            let design = design_from(&sigma, 100, SeedStream::new(7).derive("noise", r));
            let grid = log_grid(lambda_max(&design, 0, &(1..10).collect::<Vec<_>>()), 1000.0, 50);
            let pick = cv_lambda(&design, 0, 10, &grid, SeedStream::new(r)).unwrap();
            pick.lambda == grid[0]
        })
        .count();
    assert!(top > 50, "{top}");
}

#[test]
fn cross_validation_edge_cases() {
    let design = Design::new(common::random_data(40, 5, 8)).unwrap();
    let single = cv_lambda(&design, 0, 5, &[0.3], SeedStream::new(1)).unwrap();
    assert_eq!(single.lambda, 0.3);
    match single.source {
        PenaltySource::Cv { folds, grid, cv_error } => {
            assert_eq!((folds, grid.len(), cv_error.len()), (5, 1, 1));
        }
        other => panic!("unexpected source {other:?}"),
    }
    assert!(matches!(
        cv_lambda(&design, 0, 25, &[0.3], SeedStream::new(1)),
        Err(Error::FoldTooSmall { n: 40, folds: 25 })
    ));
    assert!(matches!(cv_lambda(&design, 0, 1, &[0.3], SeedStream::new(1)), Err(Error::Domain(_))));
}

#[test]
fn penalty_level_is_monotone() {
    let l = |n, p, alpha| lambda_alpha(n, p, 1.0, alpha).unwrap().lambda;
    let alphas: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    assert!(alphas.windows(2).all(|w| l(100, 50, w[1]) < l(100, 50, w[0])));
    assert!((2..200).all(|n| l(n + 1, 50, 0.05) < l(n, 50, 0.05)));
    assert!((1..200).all(|p| l(100, p + 1, 0.05) > l(100, p, 0.05)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relabeling_permutes_neighborhoods(seed in any::<u64>(), p in 2usize..15, shift in 1usize..14, alpha in 0.05f64..0.9) {
        let data = common::random_data(40, p, seed);
        let perm: Vec<usize> = (0..p).map(|j| (j + shift) % p).collect();
        let permuted = data.select_columns(&perm).unwrap();
        let rule = PenaltyRule::Alpha { alpha };
        let base = estimate_all_neighborhoods(&Design::new(data).unwrap(), &rule, 1).unwrap();
        let moved = estimate_all_neighborhoods(&Design::standardized(&permuted).unwrap(), &rule, 1).unwrap();
        for (new_a, ne) in moved.iter().enumerate() {
            let mut mapped: Vec<usize> = ne.members.iter().map(|&b| perm[b]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(&mapped, &base[perm[new_a]].members);
        }
    }
}
