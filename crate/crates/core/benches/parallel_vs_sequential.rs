use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ergoseg::kinematics::{sequence_angles, PostureAngles};
use ergoseg::par::Execution;
use ergoseg::pose::{kinect_sequence, PoseParams};
use ergoseg::reba::{Adjustments, Scorer};
use ergoseg::skeleton::JointLayout;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn poses(n: usize) -> Vec<PoseParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n)
        .map(|_| PoseParams {
            trunk_lean: rng.random_range(-20.0..90.0),
            trunk_side: rng.random_range(-30.0..30.0),
            trunk_twist: rng.random_range(-40.0..40.0),
            arm_raise: rng.random_range(-20.0..150.0),
            arm_abduction: rng.random_range(0.0..90.0),
            elbow_bend: rng.random_range(0.0..140.0),
            knee_bend: rng.random_range(0.0..100.0),
            neck_tilt: rng.random_range(-20.0..40.0),
        })
        .collect()
}

fn kinematics(c: &mut Criterion) {
    let seq = kinect_sequence(&poses(20_000), 30.0);
    let layout = JointLayout::kinect25();
    let mut g = c.benchmark_group("posture_angles");
    g.throughput(Throughput::Elements(seq.frame_count() as u64));
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sequence_angles(black_box(&seq), &layout, exec).unwrap())
        });
    }
    g.finish();
}

fn reba_scoring(c: &mut Criterion) {
    let seq = kinect_sequence(&poses(20_000), 30.0);
    let angles: Vec<PostureAngles> = sequence_angles(&seq, &JointLayout::kinect25(), Execution::Sequential).unwrap();
    let scorer = Scorer::default();
    let mut g = c.benchmark_group("reba_score_sequence");
    g.throughput(Throughput::Elements(angles.len() as u64));
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| scorer.score_sequence(black_box(&angles), |_| Adjustments::default(), exec))
        });
    }
    g.finish();
}

criterion_group!(benches, kinematics, reba_scoring);
criterion_main!(benches);
