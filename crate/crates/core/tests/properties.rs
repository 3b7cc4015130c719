//! Property-based checks of the combinatorial and numeric invariants.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sr_sampler::dpp::{ElementarySymmetricTable, KdppModel, KernelMatrix};
use sr_sampler::isotropy::{
    build_copy_map, collapse_sample, lift_sample, subdivide_overestimates, MarginalOverestimates,
};
use sr_sampler::model::{
    enumerate_distribution, exact_marginals, k_subsets, tv_distance, ExactTable, Model,
    SubsetSample,
};
use sr_sampler::sparsifier::{draw_samples, SparsifierConfig};

proptest! {
    #[test]
    fn subset_sample_sorts_and_validates(raw in prop::collection::vec(0usize..30, 0..8)) {
        let n = 30;
        let mut unique = raw.clone();
        unique.sort_unstable();
        unique.dedup();
        let sorted = SubsetSample::new(unique.clone(), n).unwrap();
        prop_assert_eq!(sorted.indices(), unique.as_slice());
        prop_assert_eq!(sorted.k(), unique.len());

        let mut shuffled = unique.clone();
        shuffled.reverse();
        let from_unsorted = SubsetSample::from_unsorted(shuffled, n).unwrap();
        prop_assert_eq!(from_unsorted.indices(), unique.as_slice());
        for i in 0..n {
            prop_assert_eq!(from_unsorted.contains(i), unique.contains(&i));
        }
    }

    #[test]
    fn copy_map_partitions_and_bounds(
        q in prop::collection::vec(0.01f64..=1.0, 1..12),
    ) {
        let n = q.len();
        let q = MarginalOverestimates::new(q).unwrap();
        let map = build_copy_map(&q).unwrap();
        prop_assert!(map.u_size() <= 2 * n, "|U| = {} for n = {}", map.u_size(), n);

        // copy_range(i) over all i tiles [0, u_size) exactly once, and
        // original_of inverts it.
        let mut seen = 0;
        for i in 0..n {
            let range = map.copy_range(i);
            prop_assert_eq!(range.start, seen);
            prop_assert!(range.len() >= 1);
            for u in range.clone() {
                prop_assert_eq!(map.original_of(u), i);
            }
            seen = range.end;
        }
        prop_assert_eq!(seen, map.u_size());

        let q_sub = subdivide_overestimates(&q, &map);
        prop_assert_eq!(q_sub.len(), map.u_size());
        prop_assert!((q_sub.sum() - q.sum()).abs() <= 1e-9 * q.sum());
    }

    #[test]
    fn lift_collapse_round_trip(
        q in prop::collection::vec(0.05f64..=1.0, 2..10),
        k in 1usize..4,
        seed in 0u64..1000,
    ) {
        let n = q.len();
        let k = k.min(n);
        let q = MarginalOverestimates::new(q).unwrap();
        let map = build_copy_map(&q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut pool: Vec<usize> = (0..n).collect();
        pool.rotate_left(seed as usize % n);
        pool.truncate(k);
        let original = SubsetSample::from_unsorted(pool, n).unwrap();

        let lifted = lift_sample(&original, &map, &mut rng);
        prop_assert_eq!(lifted.k(), original.k());
        for &u in lifted.indices() {
            prop_assert!(original.contains(map.original_of(u)));
        }
        let back = collapse_sample(&lifted, &map).unwrap();
        prop_assert_eq!(back.indices(), original.indices());
    }

    #[test]
    fn tv_distance_is_a_metric(
        pa in prop::collection::vec(0.01f64..1.0, 10),
        pb in prop::collection::vec(0.01f64..1.0, 10),
        pc in prop::collection::vec(0.01f64..1.0, 10),
    ) {
        let (n, k) = (5, 2);
        let table = |probs: &[f64]| {
            let entries: Vec<(SubsetSample, f64)> = k_subsets(n, k)
                .zip(probs.iter())
                .map(|(s, &p)| (SubsetSample::new(s, n).unwrap(), p))
                .collect();
            ExactTable::from_probs(entries, n).unwrap()
        };
        let (a, b, c) = (table(&pa), table(&pb), table(&pc));

        prop_assert!(tv_distance(&a, &a).unwrap() <= 1e-15);
        let ab = tv_distance(&a, &b).unwrap();
        let ba = tv_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-15);
        prop_assert!((0.0..=1.0).contains(&ab));
        let (ac, cb) = (tv_distance(&a, &c).unwrap(), tv_distance(&c, &b).unwrap());
        prop_assert!(ab <= ac + cb + 1e-12, "triangle: {} > {} + {}", ab, ac, cb);
    }

    #[test]
    fn elementary_symmetric_table_matches_enumeration(
        lambda in prop::collection::vec(0.0f64..5.0, 1..8),
        k in 1usize..4,
    ) {
        let n = lambda.len();
        let k = k.min(n);
        let table = ElementarySymmetricTable::new(&lambda, k);

        // Brute force e_j(lambda_1..lambda_m) for the full prefix chain.
        for m in 0..=n {
            for j in 0..=k.min(m) {
                let mut e = 0.0f64;
                for s in k_subsets(m, j) {
                    e += s.iter().map(|&i| lambda[i]).product::<f64>();
                }
                let log = table.log_e(j, m);
                if e == 0.0 {
                    prop_assert!(log.is_infinite() && log < 0.0);
                } else {
                    prop_assert!(
                        (log - e.ln()).abs() <= 1e-9 * (1.0 + e.ln().abs()),
                        "e_{}({}) = {}, table log {}", j, m, e, log
                    );
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn identity_kdpp_marginals_are_uniform(n in 4usize..9, k in 1usize..4) {
        let k = k.min(n - 1);
        let model = KdppModel::new(KernelMatrix::<f64>::identity(n), k).unwrap();
        let oracle = enumerate_distribution(&model, 1 << 20).unwrap();
        let marginals = exact_marginals(&oracle);
        let expected = k as f64 / n as f64;
        for m in &marginals {
            prop_assert!((m - expected).abs() <= 1e-12);
        }
        let total: f64 = marginals.iter().sum();
        prop_assert!((total - k as f64).abs() <= 1e-12);
    }

    #[test]
    fn kernel_csv_round_trips_bitwise(seed in 0u64..500, n in 2usize..7) {
        let kernel = common::seeded_kernel(n, seed);
        let text = sr_sampler::io::write_kernel_csv(&kernel);
        let parsed = sr_sampler::io::parse_kernel::<f64>(&text).unwrap();
        prop_assert_eq!(parsed.n(), n);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(parsed.get(i, j).to_bits(), kernel.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn marginals_round_trip_bitwise(values in prop::collection::vec(0.0f64..=1.0, 1..20)) {
        let text = sr_sampler::io::write_marginals(&values);
        let parsed = sr_sampler::io::parse_marginals::<f64>(&text).unwrap();
        prop_assert_eq!(parsed.len(), values.len());
        for (a, b) in parsed.iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pipeline_samples_stay_in_law_support(seed in 0u64..100) {
        // Any sparsified sample must be a feasible subset of the original
        // model with positive weight, whatever the overestimates were.
        let model = common::seeded_dpp(7, 2, 401);
        let q = MarginalOverestimates::new(vec![0.9, 0.4, 0.77, 1.0, 0.35, 0.6, 0.5]).unwrap();
        let config = SparsifierConfig {
            seed,
            ..SparsifierConfig::default()
        };
        let samples = draw_samples(&model, &q, &config, 5).unwrap();
        prop_assert_eq!(samples.len(), 5);
        for s in &samples {
            prop_assert_eq!(s.k(), 2);
            prop_assert!(s.n() == 7);
            prop_assert!(model.log_weight(s.indices()).is_finite());
        }
    }
}
