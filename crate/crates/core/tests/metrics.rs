mod common;

use ergoseg::labels::run_length_encode;
use ergoseg::metrics::{edit_score, evaluate, f1_overlap, frame_accuracy, levenshtein};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_sequences(max_len: usize, alphabet: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..alphabet {
                let mut t: Vec<usize> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn levenshtein_matches_recursion_exhaustively_up_to_four() {
    // The acceptance suite covers length six; this keeps the default run quick.
    let seqs = all_sequences(4, 3);
    for a in &seqs {
        for b in &seqs {
            assert_eq!(levenshtein(a, b), common::lev_recursive(a, b), "{a:?} {b:?}");
        }
    }
}

#[test]
fn random_pairs_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let classes = rng.random_range(1..=8);
        let truth = common::random_labels(&mut rng, 200, classes);
        let pred = common::perturb(&mut rng, &truth, classes);
        let r = evaluate(&pred, &truth, 0.1).unwrap();
        assert!((r.accuracy - common::accuracy(&pred, &truth)).abs() < 1e-9);
        assert!((r.edit_score - common::edit(&pred, &truth)).abs() < 1e-9);
        assert!((r.f1_overlap - common::f1(&pred, &truth, 0.1)).abs() < 1e-9);
        assert_eq!(r.accuracy, frame_accuracy(&pred, &truth).unwrap());
        assert_eq!(r.edit_score, edit_score(&pred, &truth).unwrap());
        assert_eq!(r.f1_overlap, f1_overlap(&pred, &truth, 0.1).unwrap());
    }
}

#[test]
fn perfect_prediction_scores_100() {
    let truth = [0, 0, 1, 1, 1, 2];
    let r = evaluate(&truth, &truth, 0.1).unwrap();
    assert_eq!((r.accuracy, r.edit_score, r.f1_overlap), (100.0, 100.0, 100.0));
}

#[test]
fn swapping_blocks_changes_edit_but_not_accuracy_under_shared_permutation() {
    let truth = [0, 0, 1, 1, 2, 2];
    let pred = [0, 0, 2, 2, 1, 1];
    let swapped_truth = [1, 1, 0, 0, 2, 2];
    let swapped_pred = [2, 2, 0, 0, 1, 1];
    assert_eq!(
        frame_accuracy(&pred, &truth).unwrap(),
        frame_accuracy(&swapped_pred, &swapped_truth).unwrap()
    );
    assert_ne!(edit_score(&[0, 1, 2], &[0, 1, 2]).unwrap(), edit_score(&[1, 0, 2], &[0, 1, 2]).unwrap());
}

fn labels() -> impl Strategy<Value = Vec<(usize, usize)>> {
    proptest::collection::vec((0usize..4, 1usize..30), 1..12)
}

fn expand(runs: &[(usize, usize)], scale: usize) -> Vec<usize> {
    runs.iter().flat_map(|&(c, n)| std::iter::repeat_n(c, n * scale)).collect()
}

proptest! {
    #[test]
    fn metrics_are_bounded(t in labels(), seed in any::<u64>()) {
        let truth = expand(&t, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = common::perturb(&mut rng, &truth, 4);
        let r = evaluate(&pred, &truth, 0.1).unwrap();
        for v in [r.accuracy, r.edit_score, r.f1_overlap] {
            prop_assert!((0.0..=100.0).contains(&v));
        }
    }

    #[test]
    fn all_100_iff_identical_runs(t in labels(), seed in any::<u64>()) {
        let truth = expand(&t, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = common::perturb(&mut rng, &truth, 4);
        let r = evaluate(&pred, &truth, 0.1).unwrap();
        let same = run_length_encode(&pred).unwrap() == run_length_encode(&truth).unwrap();
        prop_assert_eq!(same, r.accuracy == 100.0 && r.edit_score == 100.0 && r.f1_overlap == 100.0);
    }

    #[test]
    fn edit_is_invariant_to_uniform_rescaling(t in labels(), p in labels(), k in 2usize..5) {
        let (truth, pred) = (expand(&t, 1), expand(&p, 1));
        let n = truth.len().min(pred.len());
        let (truth, pred) = (&truth[..n], &pred[..n]);
        let up = |x: &[usize]| x.iter().flat_map(|&c| std::iter::repeat_n(c, k)).collect::<Vec<_>>();
        prop_assert_eq!(edit_score(pred, truth).unwrap(), edit_score(&up(pred), &up(truth)).unwrap());
    }

    #[test]
    fn f1_does_not_increase_with_tau(t in labels(), seed in any::<u64>(), a in 0.01..0.99f64, b in 0.01..0.99f64) {
        let truth = expand(&t, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = common::perturb(&mut rng, &truth, 4);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(f1_overlap(&pred, &truth, hi).unwrap() <= f1_overlap(&pred, &truth, lo).unwrap());
    }

    #[test]
    fn accuracy_is_invariant_under_shared_permutation(t in labels(), seed in any::<u64>()) {
        let truth = expand(&t, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = common::perturb(&mut rng, &truth, 4);
        let mut order: Vec<usize> = (0..truth.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let pt: Vec<usize> = order.iter().map(|&i| truth[i]).collect();
        let pp: Vec<usize> = order.iter().map(|&i| pred[i]).collect();
        prop_assert!((frame_accuracy(&pred, &truth).unwrap() - frame_accuracy(&pp, &pt).unwrap()).abs() < 1e-9);
    }
}
