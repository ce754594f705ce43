use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use roomprint::corpus::{CorpusPlan, Jitter};
use roomprint::dataset::{LabeledDataset, Sample};
use roomprint::features::{extract_batch, FeatureConfig};
use roomprint::mls::{generate_mls, DeconvPath, Deconvolver};
use roomprint::rir::Rir;
use roomprint::roomid::{joint_permutation_test, kfold_cv, ClassifierKind, PermutationConfig};
use roomprint::Exec;

const STRATEGIES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn corpus() -> (Vec<Rir>, LabeledDataset) {
    let plan = CorpusPlan {
        samples_per_position: 4,
        duration_s: 1.5,
        jitter: Jitter::default(),
        ..Default::default()
    };
    let data = plan.synthesize_all(Exec::default()).unwrap();
    let rirs: Vec<Rir> = data.iter().map(|(_, r)| r.clone()).collect();
    let cfg = FeatureConfig::with_window(1.2);
    let mut ds = LabeledDataset::new(cfg.feature_names());
    for ((it, _), f) in data.iter().zip(extract_batch(&rirs, &cfg, Exec::default())) {
        ds.push(Sample {
            features: f.unwrap().to_vec(),
            label: it.label.clone(),
            visit_id: it.visit_id,
            noise: it.noise_condition,
            position_id: it.position_id,
        })
        .unwrap();
    }
    (rirs, ds)
}

fn strategies(c: &mut Criterion) {
    let (rirs, ds) = corpus();
    let cfg = FeatureConfig::with_window(1.2);
    let mut g = c.benchmark_group("extract_batch");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| extract_batch(black_box(&rirs[..20]), &cfg, e))
        });
    }
    g.finish();

    let columns: Vec<Vec<f64>> = (0..ds.n_features()).map(|j| ds.column(j)).collect();
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let (_, y) = ds.class_indices();
    let pcfg = PermutationConfig {
        n_perm: 499,
        ..Default::default()
    };
    let mut g = c.benchmark_group("permutation_test");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| joint_permutation_test(black_box(&refs), &y, &pcfg, e).unwrap())
        });
    }
    g.finish();

    let all: Vec<usize> = (0..ds.n_features()).collect();
    let mut g = c.benchmark_group("kfold_cv");
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| {
                kfold_cv(black_box(&ds), 4, ClassifierKind::Knn { k: 5 }, &all, 0, e).unwrap()
            })
        });
    }
    g.finish();
}

fn deconvolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("cross_correlate");
    for order in [12u32, 15, 17] {
        let mls = generate_mls(order).unwrap();
        let d = Deconvolver::new(&mls);
        let y: Vec<f64> = (0..mls.len())
            .map(|i| ((i * 7919) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        for (name, path) in [("fht", DeconvPath::Fht), ("fft", DeconvPath::Fft)] {
            g.bench_with_input(BenchmarkId::new(name, order), &path, |b, &p| {
                b.iter(|| d.cross_correlate(black_box(&y), p).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, strategies, deconvolution);
criterion_main!(benches);
