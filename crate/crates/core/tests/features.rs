use ergoseg::features::{
    make_splits, read_features, synth_generate, synth_prototypes, to_bytes, write_features, Dataset, FeatureSequence,
    SynthConfig, MIN_SEGMENT_FRAMES,
};
use ergoseg::labels::{run_length_encode, LabelSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn large_random_matrix_round_trips_byte_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = (0..1000 * 256).map(|_| rng.random::<f64>() * 2e3 - 1e3).collect();
    let s = FeatureSequence::new("big", 29.97, 256, data).unwrap();
    let mut bytes = Vec::new();
    write_features(&s, &mut bytes).unwrap();
    let back = read_features(&bytes[..]).unwrap();
    assert_eq!(back, s);
    assert_eq!(to_bytes(&back), bytes);
}

fn sequence() -> impl Strategy<Value = FeatureSequence> {
    (1usize..20, 1usize..6, "[a-z0-9_]{0,12}", 0.5..120.0f64).prop_flat_map(|(t, d, id, fps)| {
        proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), t * d)
            .prop_map(move |data| FeatureSequence { video_id: id.clone(), fps, dims: d, data })
    })
}

proptest! {
    #[test]
    fn fseq_round_trip_is_bit_exact(s in sequence()) {
        let bytes = to_bytes(&s);
        let back = read_features(&bytes[..]).unwrap();
        prop_assert!(back.data.iter().zip(&s.data).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn splits_partition_the_ids(n in 2usize..40, k in 1usize..6, frac in 0.05..0.95f64, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let spec = make_splits(&ids, k, frac, seed).unwrap();
        prop_assert_eq!(spec.splits.len(), k);
        for s in &spec.splits {
            let mut all: Vec<String> = s.train.iter().chain(&s.test).cloned().collect();
            all.sort();
            let mut want = ids.clone();
            want.sort();
            prop_assert_eq!(all, want);
            prop_assert!(!s.test.is_empty() && !s.train.is_empty());
        }
    }

    #[test]
    fn synthetic_segments_respect_floor_and_alternate(seed in 0u64..200, classes in 2usize..6, mean in 5.0..60.0f64) {
        let cfg = SynthConfig { seed, n_classes: classes, mean_segment_frames: mean, n_videos: 2, frames_per_video: 200, ..Default::default() };
        let d = synth_generate(&cfg).unwrap();
        for v in &d.items {
            prop_assert_eq!(v.labels.len(), v.features.frames());
            let runs = run_length_encode(&v.labels).unwrap();
            prop_assert!(runs.runs.iter().all(|&(_, len)| len >= MIN_SEGMENT_FRAMES));
            prop_assert!(runs.runs.windows(2).all(|w| w[0].0 != w[1].0));
        }
    }
}

#[test]
fn synthetic_generation_is_deterministic() {
    let cfg = SynthConfig { seed: 11, ..Default::default() };
    assert_eq!(synth_generate(&cfg).unwrap(), synth_generate(&cfg).unwrap());
    let other = SynthConfig { seed: 12, ..cfg };
    assert_ne!(synth_generate(&cfg).unwrap(), synth_generate(&other).unwrap());
}

#[test]
fn segment_length_mean_is_close_to_requested() {
    let cfg = SynthConfig { seed: 5, n_videos: 40, frames_per_video: 2000, ..Default::default() };
    let d = synth_generate(&cfg).unwrap();
    let lens: Vec<usize> = d
        .items
        .iter()
        .flat_map(|v| run_length_encode(&v.labels).unwrap().runs.into_iter().map(|(_, l)| l).collect::<Vec<_>>())
        .collect();
    let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
    assert!((mean - 40.0).abs() < 3.0, "{mean}");
}

#[test]
fn nearest_prototype_oracle_is_almost_perfect_at_low_noise() {
    let cfg = SynthConfig { seed: 21, noise_sigma: 0.1, n_classes: 5, ..Default::default() };
    let d = synth_generate(&cfg).unwrap();
    let protos = synth_prototypes(&cfg);
    let (mut hit, mut n) = (0usize, 0usize);
    for v in &d.items {
        for (t, &c) in v.labels.iter().enumerate() {
            let row = v.features.row(t);
            let dist = |p: &Vec<f64>| p.iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..protos.len()).min_by(|&a, &b| dist(&protos[a]).total_cmp(&dist(&protos[b]))).unwrap();
            hit += usize::from(best == c);
            n += 1;
        }
    }
    assert!(hit as f64 / n as f64 > 0.99, "{hit}/{n}");
}

#[test]
fn dataset_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { n_videos: 3, frames_per_video: 90, ..Default::default() };
    let d = synth_generate(&cfg).unwrap();
    let manifest = d.save(dir.path()).unwrap();
    let labels = LabelSet::parse(&std::fs::read_to_string(dir.path().join("labels.txt")).unwrap()).unwrap();
    let back = Dataset::load(&manifest, labels).unwrap();
    assert_eq!(back, d);
}
