mod common;

use neighsel::baseline::{
    forward_select, ipf_fit, maximal_cliques, random_guess_baseline, sample_covariance, IpfOptions, MleFit,
};
use neighsel::synth::sample_gaussian;
use neighsel::{EdgeRule, EdgeSet, Error, SeedStream, SymMatrix};
use proptest::prelude::*;

fn edges(p: usize, e: &[(usize, usize)]) -> EdgeSet {
    EdgeSet::new(p, e.iter().copied(), EdgeRule::Other).unwrap()
}

fn inv2(a: f64, b: f64, d: f64) -> [[f64; 2]; 2] {
    let det = a * d - b * b;
    [[d / det, -b / det], [-b / det, a / det]]
}

fn check_invariants(s: &SymMatrix, fit: &MleFit, tol: f64) {
    let p = s.dim();
    for i in 0..p {
        for j in 0..i {
            if !fit.graph.contains(j, i) {
                assert!(fit.fitted_precision.get(i, j).abs() <= 1e-8, "K[{i},{j}] = {}", fit.fitted_precision.get(i, j));
            } else {
                assert!((fit.fitted_cov.get(i, j) - s.get(i, j)).abs() <= 10.0 * tol);
            }
        }
        assert!((fit.fitted_cov.get(i, i) - s.get(i, i)).abs() <= 10.0 * tol);
    }
    assert!(fit.loglik_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", fit.loglik_trace);
}

#[test]
fn three_chain_matches_the_decomposable_closed_form() {
    let s = SymMatrix::from_full(&[vec![1.0, 0.4, 0.3], vec![0.4, 1.2, 0.5], vec![0.3, 0.5, 0.9]]).unwrap();
    let fit = ipf_fit(&s, &edges(3, &[(0, 1), (1, 2)]), &IpfOptions::default()).unwrap();
    let c01 = inv2(s.get(0, 0), s.get(0, 1), s.get(1, 1));
    let c12 = inv2(s.get(1, 1), s.get(1, 2), s.get(2, 2));
    let expected = [
        [c01[0][0], c01[0][1], 0.0],
        [c01[1][0], c01[1][1] + c12[0][0] - 1.0 / s.get(1, 1), c12[0][1]],
        [0.0, c12[1][0], c12[1][1]],
    ];
    for i in 0..3 {
        for j in 0..3 {
            assert!((fit.fitted_precision.get(i, j) - expected[i][j]).abs() <= 1e-8, "({i},{j})");
        }
    }
    check_invariants(&s, &fit, 1e-8);
}

#[test]
fn saturated_and_empty_models() {
    let s = sample_covariance(&common::random_data(30, 4, 3));
    let complete = edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    let fit = ipf_fit(&s, &complete, &IpfOptions::default()).unwrap();
    for i in 0..4 {
        for j in 0..=i {
            assert!((fit.fitted_cov.get(i, j) - s.get(i, j)).abs() <= 1e-10);
        }
    }
    let empty = ipf_fit(&s, &EdgeSet::empty(4, EdgeRule::Other), &IpfOptions::default()).unwrap();
    for i in 0..4 {
        for j in 0..i {
            assert_eq!(empty.fitted_precision.get(i, j), 0.0);
        }
        assert!((empty.fitted_cov.get(i, i) - s.get(i, i)).abs() <= 1e-12);
    }
}

#[test]
fn cyclic_graph_fit_satisfies_the_invariants() {
    // A 4-cycle is not decomposable, so IPF must iterate.
    let s = sample_covariance(&common::random_data(50, 5, 17));
    let g = edges(5, &[(0, 1), (1, 2), (2, 3), (0, 3), (3, 4)]);
    let fit = ipf_fit(&s, &g, &IpfOptions::default()).unwrap();
    assert!(fit.ipf_iterations > 1);
    check_invariants(&s, &fit, 1e-8);
}

#[test]
fn singular_clique_means_no_mle() {
    // Two identical columns: their 2×2 marginal is singular.
    let s = SymMatrix::from_full(&[vec![1.0, 1.0, 0.2], vec![1.0, 1.0, 0.2], vec![0.2, 0.2, 1.0]]).unwrap();
    assert!(matches!(
        ipf_fit(&s, &edges(3, &[(0, 1)]), &IpfOptions::default()),
        Err(Error::MleDoesNotExist(_))
    ));
}

#[test]
fn forward_selection_paths_are_nested() {
    let data = common::random_data(40, 8, 5);
    let s = sample_covariance(&data);
    let steps = forward_select(&s, 40, 6).unwrap();
    assert_eq!(steps.len(), 6);
    for (t, step) in steps.iter().enumerate() {
        assert_eq!(step.edges().len(), t + 1);
        if t > 0 {
            assert!(steps[t - 1].edges().is_subset_of(step.edges()));
        }
        assert!(step.gain >= 0.0);
    }
    assert!(matches!(forward_select(&SymMatrix::identity(51), 100, 1), Err(Error::Domain(_))));
}

#[test]
fn forward_selection_under_independence_gains_little() {
    let x = sample_gaussian(&SymMatrix::identity(6), 2000, SeedStream::new(4)).unwrap().standardize().unwrap();
    let steps = forward_select(&sample_covariance(&x), 2000, 1).unwrap();
    // n·Δℓ is about half a χ²₁ draw; far below what a real 0.245 partial correlation gives.
    assert!(steps[0].gain < 15.0, "{}", steps[0].gain);
}

#[test]
fn random_baseline_is_a_seeded_permutation() {
    assert_eq!(random_guess_baseline(2, SeedStream::new(1)).unwrap(), vec![(0, 1)]);
    assert!(matches!(random_guess_baseline(1, SeedStream::new(1)), Err(Error::Domain(_))));
    let a = random_guess_baseline(12, SeedStream::new(8)).unwrap();
    assert_eq!(a, random_guess_baseline(12, SeedStream::new(8)).unwrap());
    let mut sorted = a.clone();
    sorted.sort_unstable();
    let all: Vec<(usize, usize)> = (0..12).flat_map(|i| (i + 1..12).map(move |j| (i, j))).collect();
    assert_eq!(sorted, all);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ipf_invariants_on_random_graphs(seed in any::<u64>(), raw in prop::collection::vec((0usize..7, 0usize..7), 0..14)) {
        let p = 7;
        let s = sample_covariance(&common::random_data(40, p, seed));
        let g = EdgeSet::new(p, raw.into_iter().filter(|(a, b)| a != b), EdgeRule::Other).unwrap();
        let fit = ipf_fit(&s, &g, &IpfOptions::default()).unwrap();
        check_invariants(&s, &fit, 1e-8);
        for clique in maximal_cliques(&g) {
            for (i, &a) in clique.iter().enumerate() {
                for &b in &clique[i + 1..] {
                    prop_assert!(g.contains(a, b));
                }
            }
        }
    }
}
