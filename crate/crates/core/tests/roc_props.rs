use proptest::prelude::*;
use rand::seq::SliceRandom;
use spectral_subgraph::roc::{precision_at_recall, roc};
use spectral_subgraph::{RngSeed, VertexSubset};

/// Mann–Whitney estimate: fraction of (h0, h1) pairs ordered correctly, ties counting half.
fn pairwise_auc(h0: &[f64], h1: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &b in h1 {
        for &a in h0 {
            wins += if b > a {
                1.0
            } else if b == a {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (h0.len() * h1.len()) as f64
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

#[test]
fn interleaved_example() {
    let r = roc(&[0.0, 2.0], &[1.0, 3.0]).unwrap();
    assert!((r.auc - 0.75).abs() < 1e-15);
    assert!((pairwise_auc(&[0.0, 2.0], &[1.0, 3.0]) - 0.75).abs() < 1e-15);
    let perfect = roc(&[0.0, 1.0], &[2.0, 3.0]).unwrap();
    assert_eq!(perfect.auc, 1.0);
    assert_eq!(perfect.eer, 0.0);
    assert!(roc(&[], &[1.0]).is_err());
}

#[test]
fn random_ranking_matches_negative_hypergeometric() {
    // N candidates, K planted, recall level needing h hits: the depth D of the
    // h-th hit has P(D = d) = C(d−1, h−1) C(N−d, K−h) / C(N, K).
    let (n, k, h) = (40u64, 5u64, 2u64);
    let expected: f64 = (h..=n - k + h)
        .map(|d| {
            let ln_p = ln_choose(d - 1, h - 1) + ln_choose(n - d, k - h) - ln_choose(n, k);
            ln_p.exp() * h as f64 / d as f64
        })
        .sum();

    let truth = VertexSubset::new(0..k as usize, n as usize).unwrap();
    let mut rng = RngSeed::new(77, 0).rng();
    let trials = 40_000;
    let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        scores.shuffle(&mut rng);
        let p = precision_at_recall(&scores, &truth, h as f64 / k as f64).unwrap();
        sum += p;
        sum_sq += p * p;
    }
    let mean = sum / trials as f64;
    let se = ((sum_sq / trials as f64 - mean * mean) / trials as f64).sqrt();
    assert!(
        (mean - expected).abs() < 4.0 * se,
        "mean {mean}, expected {expected}, se {se}"
    );
}

proptest! {
    #[test]
    fn auc_matches_pairwise_count(
        h0 in prop::collection::vec(0u8..20, 1..40),
        h1 in prop::collection::vec(0u8..20, 1..40),
    ) {
        let h0: Vec<f64> = h0.into_iter().map(f64::from).collect();
        let h1: Vec<f64> = h1.into_iter().map(f64::from).collect();
        let r = roc(&h0, &h1).unwrap();
        prop_assert!((r.auc - pairwise_auc(&h0, &h1)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.eer));
    }

    #[test]
    fn swapping_hypotheses_reflects_auc(
        h0 in prop::collection::vec(-5.0f64..5.0, 1..40),
        h1 in prop::collection::vec(-5.0f64..5.0, 1..40),
    ) {
        let a = roc(&h0, &h1).unwrap().auc;
        let b = roc(&h1, &h0).unwrap().auc;
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_transforms_preserve_metrics(
        h0 in prop::collection::vec(-5.0f64..5.0, 1..40),
        h1 in prop::collection::vec(-5.0f64..5.0, 1..40),
        scores in prop::collection::vec(-5.0f64..5.0, 10..40),
        level in 0.1f64..=1.0,
    ) {
        let f = |x: &f64| (x * 0.7).exp() + 3.0;
        let a = roc(&h0, &h1).unwrap();
        let b = roc(&h0.iter().map(f).collect::<Vec<_>>(), &h1.iter().map(f).collect::<Vec<_>>()).unwrap();
        prop_assert!((a.auc - b.auc).abs() < 1e-12);
        prop_assert!((a.eer - b.eer).abs() < 1e-12);

        let truth = VertexSubset::new((0..scores.len()).step_by(3), scores.len()).unwrap();
        let p = precision_at_recall(&scores, &truth, level).unwrap();
        let q = precision_at_recall(&scores.iter().map(f).collect::<Vec<_>>(), &truth, level).unwrap();
        prop_assert_eq!(p, q);
        prop_assert!(p > 0.0 && p <= 1.0);
    }
}
