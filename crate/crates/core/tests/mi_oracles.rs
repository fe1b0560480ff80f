mod common;

use common::{entropy_of, mi_from_table, quantile_type7, random_discretized, rng, FullJoint};
use mifs::ingest::{quantile_bins, synth, ImageDataset, SynthSpec};
use mifs::mi::{entropy, importance, label_entropy, redundancy, PairHistogram};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn pairwise_histograms_match_full_joint_marginals() {
    for seed in 0..50u64 {
        let mut r = rng(1000 + seed);
        let n = r.gen_range(2..=6);
        let bins = r.gen_range(2..=4);
        let classes = r.gen_range(2..=3);
        let samples = r.gen_range(5..=50);
        let dd = random_discretized(seed, n, bins, classes, samples);
        let joint = FullJoint::new(&dd);
        let imp = importance(&dd);
        let red = redundancy(&dd);
        for i in 0..n {
            let oracle = mi_from_table(&joint.feature_label(i, bins, classes));
            assert!((imp.values[i] - oracle).abs() < 1e-12, "seed {seed} I[{i}]");
            for j in 0..n {
                if i == j {
                    continue;
                }
                let oracle = mi_from_table(&joint.feature_pair(i, j, bins));
                assert!(
                    (red.get(i, j) - oracle).abs() < 1e-12,
                    "seed {seed} R[{i},{j}]"
                );
            }
        }
    }
}

#[test]
fn redundancy_diagonal_is_entropy() {
    let dd = random_discretized(5, 6, 4, 3, 40);
    let red = redundancy(&dd);
    for i in 0..6 {
        let h = entropy_of(dd.column(i));
        assert!((red.get(i, i) - h).abs() < 1e-12);
        assert!((entropy(&dd, i).unwrap() - h).abs() < 1e-12);
    }
}

#[test]
fn entropy_rejects_bad_index() {
    let dd = random_discretized(1, 3, 2, 2, 10);
    assert!(entropy(&dd, 3).is_err());
}

fn tied_dataset(seed: u64, width: usize, samples: usize) -> ImageDataset {
    let mut r = rng(seed);
    let features = (0..samples * width * width)
        .map(|_| match r.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => (r.gen_range(0..50) as f32) / 50.0,
        })
        .collect();
    let labels = (0..samples).map(|_| r.gen_range(0..3)).collect();
    ImageDataset::new(width, features, labels, 3).unwrap()
}

#[test]
fn quantile_edges_match_type7_oracle() {
    for (seed, bins) in [(0u64, 2usize), (1, 4), (2, 7), (3, 20)] {
        let ds = tied_dataset(seed, 3, 61);
        let dd = quantile_bins(&ds, bins).unwrap();
        for f in 0..ds.num_features {
            let mut col: Vec<f64> = (0..ds.num_samples)
                .map(|s| ds.sample(s)[f] as f64)
                .collect();
            col.sort_by(f64::total_cmp);
            let max = *col.last().unwrap();
            let mut edges: Vec<f64> = (1..bins)
                .map(|j| quantile_type7(&col, j as f64 / bins as f64))
                .filter(|&e| e < max)
                .collect();
            edges.dedup();
            assert_eq!(dd.bin_edges[f], edges, "seed {seed} feature {f}");
            for s in 0..ds.num_samples {
                let v = ds.sample(s)[f] as f64;
                let expected = edges.iter().filter(|&&e| e < v).count();
                assert_eq!(dd.column(f)[s] as usize, expected);
            }
        }
    }
}

#[test]
fn constant_pixel_has_no_edges_and_zero_importance() {
    let mut ds = tied_dataset(9, 2, 30);
    for s in 0..ds.num_samples {
        ds.features[s * 4 + 1] = 0.3;
    }
    let dd = quantile_bins(&ds, 20).unwrap();
    assert!(dd.bin_edges[1].is_empty());
    assert!(dd.column(1).iter().all(|&b| b == 0));
    assert_eq!(importance(&dd).values[1], 0.0);
}

#[test]
fn planted_pixels_carry_the_most_information() {
    let planted = vec![3, 17, 40, 58];
    let ds = synth(&SynthSpec {
        num_samples: 600,
        width: 8,
        num_classes: 3,
        informative_pixels: planted.clone(),
        noise_std: 0.05,
        seed: 11,
    })
    .unwrap();
    let imp = importance(&quantile_bins(&ds, 10).unwrap());
    let mut ranked: Vec<usize> = (0..64).collect();
    ranked.sort_by(|&a, &b| imp.values[b].total_cmp(&imp.values[a]));
    let mut top: Vec<usize> = ranked[..4].to_vec();
    top.sort();
    assert_eq!(top, planted);
    // Label entropy of a near-uniform 3-class label bounds each planted pixel.
    let hy = label_entropy(&quantile_bins(&ds, 10).unwrap());
    assert!(planted.iter().all(|&p| imp.values[p] <= hy + 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mi_properties(seed in 0u64..10_000, n in 2usize..6, bins in 2usize..6, samples in 4usize..80) {
        let dd = random_discretized(seed, n, bins, 3, samples);
        let imp = importance(&dd);
        let red = redundancy(&dd);
        let hy = label_entropy(&dd);
        for i in 0..n {
            let hi = entropy(&dd, i).unwrap();
            prop_assert!(imp.values[i] >= 0.0);
            prop_assert!(imp.values[i] <= hi.min(hy) + 1e-9);
            for j in 0..n {
                prop_assert!(red.get(i, j) >= 0.0);
                prop_assert_eq!(red.get(i, j).to_bits(), red.get(j, i).to_bits());
                let hj = entropy(&dd, j).unwrap();
                prop_assert!(red.get(i, j) <= hi.min(hj) + 1e-9);
            }
        }
    }

    #[test]
    fn histogram_probabilities_sum_to_one(a in prop::collection::vec(0u8..5, 1..60), shift in 0u8..5) {
        let b: Vec<u8> = a.iter().map(|v| (v + shift) % 5).collect();
        let h = PairHistogram::from_columns(&a, 5, &b, 5);
        let total: f64 = h.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert_eq!(h.row_marginal().iter().sum::<u32>() as usize, a.len());
    }
}
