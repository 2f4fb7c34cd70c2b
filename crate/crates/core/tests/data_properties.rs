use std::collections::BTreeSet;

use guava_core::data::{
    decode_feature_table, encode_feature_table, read_feature_file, stratified_split, undersample,
    write_feature_file, FeatureTable,
};
use guava_core::Dataset;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(rng: &mut ChaCha8Rng, max_n: usize, max_d: usize) -> Dataset {
    let n = rng.gen_range(0..=max_n);
    let d = rng.gen_range(1..=max_d);
    let k = rng.gen_range(1..=5);
    let features = (0..n * d).map(|_| rng.gen_range(-1e3f32..1e3)).collect();
    let labels = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let names = (0..k)
        .map(|c| format!("c{c}_{}", rng.gen_range(0..100)))
        .collect();
    Dataset::new(features, d, labels, names).unwrap()
}

fn imbalanced(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<usize> = (0..3).map(|_| rng.gen_range(1..40)).collect();
    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &m)| std::iter::repeat_n(c, m))
        .collect();
    labels.shuffle(&mut rng);
    let features = (0..labels.len() * 2).map(|_| rng.gen::<f32>()).collect();
    Dataset::new(
        features,
        2,
        labels,
        vec!["a".into(), "b".into(), "c".into()],
    )
    .unwrap()
}

#[test]
fn split_partitions_indices_for_every_seed() {
    let ds = imbalanced(11);
    let all: BTreeSet<usize> = (0..ds.n()).collect();
    for seed in 0..100 {
        let s = stratified_split(&ds, 0.8, seed).unwrap();
        let train: BTreeSet<usize> = s.train_indices.iter().copied().collect();
        let hold: BTreeSet<usize> = s.holdout_indices.iter().copied().collect();
        assert!(train.is_disjoint(&hold), "seed {seed}");
        assert_eq!(
            train.union(&hold).copied().collect::<BTreeSet<_>>(),
            all,
            "seed {seed}"
        );
        assert_eq!(s.train.n() + s.holdout.n(), ds.n());
    }
}

#[test]
fn shuffling_rows_keeps_split_class_counts() {
    let ds = imbalanced(5);
    let reference = stratified_split(&ds, 0.7, 1).unwrap();
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let shuffled = ds.subset(&order);
    let s = stratified_split(&shuffled, 0.7, 1).unwrap();
    assert_eq!(s.train.class_counts(), reference.train.class_counts());
    assert_eq!(s.holdout.class_counts(), reference.holdout.class_counts());
}

#[test]
fn undersampling_hits_the_minimum_and_is_idempotent_on_counts() {
    for seed in 0..50 {
        let ds = imbalanced(1000 + seed);
        let min = *ds.class_counts().iter().min().unwrap();
        let once = undersample(&ds, seed);
        assert!(once.class_counts().iter().all(|&c| c == min), "seed {seed}");
        assert_eq!(
            undersample(&once, seed + 7).class_counts(),
            once.class_counts()
        );
        assert_eq!(undersample(&ds, seed), once);
    }
}

#[test]
fn write_then_read_is_identity_on_random_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.fvec");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let ds = random_dataset(&mut rng, 64, 32);
        if i % 50 == 0 {
            write_feature_file(&ds, &path).unwrap();
            assert_eq!(read_feature_file(&path).unwrap(), ds);
        }
        let table = FeatureTable {
            n: ds.n(),
            d: ds.d(),
            features: ds.features().to_vec(),
            labels: Some(ds.labels().to_vec()),
            class_names: ds.class_names().to_vec(),
        };
        let bytes = encode_feature_table(&table).unwrap();
        assert_eq!(
            decode_feature_table(&bytes)
                .unwrap()
                .into_dataset()
                .unwrap(),
            ds
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_counts_follow_round_half_up(counts in prop::collection::vec(1usize..30, 2..5), ratio in 0.05f64..0.95, seed: u64) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c, m)).collect();
        let names = (0..counts.len()).map(|c| c.to_string()).collect();
        let ds = Dataset::new(vec![0.0; labels.len()], 1, labels, names).unwrap();
        let s = stratified_split(&ds, ratio, seed).unwrap();
        for (c, &m) in counts.iter().enumerate() {
            let expected = ((ratio * m as f64) + 0.5 + 1e-9).floor() as usize;
            prop_assert_eq!(s.train.class_counts()[c], expected.min(m));
        }
    }

    #[test]
    fn corrupted_tails_never_panic(seed: u64, cut in 0usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = random_dataset(&mut rng, 6, 4);
        let table = FeatureTable {
            n: ds.n(),
            d: ds.d(),
            features: ds.features().to_vec(),
            labels: Some(ds.labels().to_vec()),
            class_names: ds.class_names().to_vec(),
        };
        let bytes = encode_feature_table(&table).unwrap();
        let cut = cut.min(bytes.len().saturating_sub(1));
        prop_assert!(decode_feature_table(&bytes[..cut]).is_err());
    }
}
