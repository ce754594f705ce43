use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use roomprint::dataset::{LabeledDataset, NoiseCondition, RowFilter, Sample};
use roomprint::features::{
    c50, c50_from_d50, d50, edc, extract_features_with, naer_rt, population_kurtosis, rt_schroeder,
    spectral_kurtosis, ts, FeatureConfig, NaerParams,
};
use roomprint::mls::{
    average_periods, generate_mls, DeconvPath, Deconvolver, MeasurementConfig, Recording,
};
use roomprint::rir::{Rir, RirSource};
use roomprint::roomid::{
    fit, js_divergence, permutation_test, sffs_with, ConfusionMatrix, DiscreteDistribution,
    PermutationConfig, StepAction,
};
use roomprint::synth::{simulate_recording, synth_rir, RoomSpec};
use roomprint::Exec;

fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// A room response with a decaying noise tail, short enough for order-12 MLS at 8 kHz.
fn small_room(seed: u64, rt: f64, pnr: f64) -> Rir {
    let spec = RoomSpec::uniform("p", &[500, 1000, 2000], rt, -6.0, pnr).with_seed(seed);
    synth_rir(&spec, 0.45, 8000.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mls_autocorrelation_identity(order in 2u32..=20, lag_frac in 0.0f64..1.0) {
        let mls = generate_mls(order).unwrap();
        let n = mls.len();
        let lag = (1 + ((n - 1) as f64 * lag_frac) as usize).min(n - 1);
        prop_assert_eq!(mls.autocorrelation(0), n as i64);
        prop_assert_eq!(mls.autocorrelation(lag), -1);
    }

    #[test]
    fn deconvolution_is_linear(seed in any::<u64>(), a in -5.0f64..5.0, b in -5.0f64..5.0, order in 3u32..=11) {
        let mls = generate_mls(order).unwrap();
        let d = Deconvolver::new(&mls);
        let n = mls.len();
        let y1 = gaussian(seed, n);
        let y2 = gaussian(seed ^ 0xABCD, n);
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| a * p + b * q).collect();
        for path in [DeconvPath::Fft, DeconvPath::Fht] {
            let run = |y: &[f64]| d.deconvolve(&Recording { samples: y.to_vec(), sample_rate: 1.0 }, path).unwrap().samples;
            let (h1, h2, hm) = (run(&y1), run(&y2), run(&mix));
            let scale = hm.iter().chain(&h1).chain(&h2).fold(1.0f64, |m, v| m.max(v.abs()));
            for k in 0..n {
                prop_assert!((hm[k] - (a * h1[k] + b * h2[k])).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn noiseless_round_trip(seed in any::<u64>(), rt in 0.1f64..0.4, n_reps in 1usize..4) {
        let rir = small_room(seed, rt, f64::INFINITY);
        let cfg = MeasurementConfig { mls_order: 12, n_reps, sample_rate: 8000.0, discard_first_period: true };
        let mls = generate_mls(12).unwrap();
        let rec = simulate_recording(&rir, &mls, &cfg, 0.0, seed).unwrap();
        let avg = average_periods(&rec, &cfg).unwrap();
        let h = Deconvolver::new(&mls).deconvolve(&avg, DeconvPath::Fht).unwrap();
        prop_assert!(rel_l2(&h.samples[..rir.len()], &rir.samples) < 1e-6);
        prop_assert!(h.samples[rir.len()..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn synthesis_is_deterministic(seed in any::<u64>(), rt in 0.1f64..0.4) {
        let a = small_room(seed, rt, 30.0);
        let b = small_room(seed, rt, 30.0);
        prop_assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn direct_to_reverb_ratio_is_exact(seed in any::<u64>(), drr in -20.0f64..10.0, rt in 0.1f64..0.4) {
        let spec = RoomSpec::uniform("p", &[250, 1000, 2000], rt, drr, f64::INFINITY).with_seed(seed);
        let rir = synth_rir(&spec, 0.5, 8000.0).unwrap();
        let onset = (spec.onset_s * 8000.0).round() as usize;
        let direct = rir.samples[onset].powi(2);
        let reverb: f64 = rir.samples[onset + 1..].iter().map(|x| x * x).sum();
        prop_assert!((10.0 * (direct / reverb).log10() - drr).abs() < 0.5);
    }

    #[test]
    fn longer_band_rt_gives_longer_schroeder_rt(seed in any::<u64>(), rt in 0.15f64..0.5, step in 1.15f64..1.6) {
        let measure = |rt: f64| {
            let spec = RoomSpec::uniform("p", &[1000], rt, -20.0, f64::INFINITY).with_seed(seed);
            let rir = synth_rir(&spec, 1.0, 8000.0).unwrap();
            rt_schroeder(&edc(&rir).unwrap()).unwrap()
        };
        prop_assert!(measure(rt * step) > measure(rt));
    }

    #[test]
    fn edc_is_non_increasing(x in prop::collection::vec(-10.0f64..10.0, 2..400)) {
        let rir = Rir::new(x, 1000.0, RirSource::Deconvolved);
        if let Ok(curve) = edc(&rir) {
            prop_assert!(curve.linear.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(curve.db[curve.onset_index], 0.0);
        }
    }

    #[test]
    fn c50_d50_identity(seed in any::<u64>(), len in 500usize..3000, decay in 1.0f64..40.0) {
        let x: Vec<f64> = gaussian(seed, len).iter().enumerate()
            .map(|(i, v)| v * (-decay * i as f64 / 1000.0).exp()).collect();
        let rir = Rir::new(x, 1000.0, RirSource::Deconvolved);
        let d = d50(&rir).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        if d > 0.0 && d < 1.0 {
            let c = c50(&rir).unwrap();
            prop_assert!((c - 10.0 * (d / (1.0 - d)).log10()).abs() < 1e-9);
            prop_assert_eq!(c, c50_from_d50(d).unwrap());
        }
    }

    #[test]
    fn features_are_scale_invariant(seed in any::<u64>(), k in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0]) {
        let rir = small_room(seed, 0.3, 35.0);
        let cfg = FeatureConfig { t_window: 0.4, bands: vec![500.0, 1000.0, 2000.0], ..Default::default() };
        let scaled = rir.with_samples(rir.samples.iter().map(|v| k * v).collect());
        let a = extract_features_with(&rir, &cfg).unwrap();
        let b = extract_features_with(&scaled, &cfg).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
        prop_assert!(close(a.time_kurtosis, b.time_kurtosis));
        prop_assert!(close(a.c50, b.c50) && close(a.d50, b.d50) && close(a.ts, b.ts));
        for j in 0..3 {
            prop_assert!(close(a.spectral_kurtosis[j], b.spectral_kurtosis[j]));
            prop_assert!(close(a.spectral_std[j] * k.abs(), b.spectral_std[j]));
            // rounding of the rescaled energies may move the crossing by a sample
            prop_assert!((a.rt[j] - b.rt[j]).abs() <= 1.0 / 8000.0 + 1e-12);
        }
        let params = NaerParams::default();
        prop_assert!((naer_rt(&rir, &params).unwrap() - naer_rt(&scaled, &params).unwrap()).abs() <= 1.0 / 8000.0 + 1e-12);
        let clean = small_room(seed, 0.3, f64::INFINITY);
        let clean_scaled = clean.with_samples(clean.samples.iter().map(|v| k * v).collect());
        let s = rt_schroeder(&edc(&clean).unwrap()).unwrap();
        prop_assert!(close(s, rt_schroeder(&edc(&clean_scaled).unwrap()).unwrap()));
        prop_assert!(close(ts(&rir).unwrap(), ts(&scaled).unwrap()));
        let (ka, kb) = (spectral_kurtosis(&rir, 700.0, 1400.0).unwrap(), spectral_kurtosis(&scaled, 700.0, 1400.0).unwrap());
        prop_assert!(close(ka, kb));
        prop_assert!(close(population_kurtosis(&rir.samples).unwrap(), population_kurtosis(&scaled.samples).unwrap()));
    }

    #[test]
    fn js_non_negative_and_zero_on_equal(
        raw in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), 2..5),
        w in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let edges: Vec<f64> = (0..=8).map(f64::from).collect();
        let dists: Vec<DiscreteDistribution> = raw.iter()
            .map(|c| DiscreteDistribution::from_counts(edges.clone(), c, 1e-3).unwrap()).collect();
        let total: f64 = w[..dists.len()].iter().sum();
        let weights: Vec<f64> = w[..dists.len()].iter().map(|v| v / total).collect();
        let js = js_divergence(&dists, &weights).unwrap();
        prop_assert!(js >= 0.0);
        let same = vec![dists[0].clone(); dists.len()];
        prop_assert!(js_divergence(&same, &weights).unwrap().abs() < 1e-12);
        let differ = dists.iter().any(|d| d.probabilities.iter().zip(&dists[0].probabilities).any(|(a, b)| (a - b).abs() > 1e-6));
        if differ {
            prop_assert!(js > 0.0);
        }
    }

    #[test]
    fn p_values_in_range(seed in any::<u64>(), n_perm in 1usize..200, shift in 0.0f64..3.0) {
        let x: Vec<f64> = gaussian(seed, 60).iter().enumerate().map(|(i, v)| v + if i < 30 { shift } else { 0.0 }).collect();
        let y: Vec<usize> = (0..60).map(|i| usize::from(i >= 30)).collect();
        let cfg = PermutationConfig { n_perm, seed, ..Default::default() };
        let r = permutation_test(&x, &y, &cfg, Exec::Sequential).unwrap();
        prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        prop_assert!(r.p_value >= 1.0 / (n_perm + 1) as f64 - 1e-15);
        let k = (r.p_value * (n_perm + 1) as f64).round();
        prop_assert!((r.p_value - k / (n_perm + 1) as f64).abs() < 1e-15);
    }

    #[test]
    fn confusion_trace_matches_accuracy(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..300)) {
        let labels: Vec<String> = (0..4).map(|i| format!("c{i}")).collect();
        let cm = ConfusionMatrix::from_pairs(labels, pairs.iter().copied()).unwrap();
        let correct = pairs.iter().filter(|(t, p)| t == p).count();
        prop_assert!((cm.accuracy() - correct as f64 / pairs.len() as f64).abs() < 1e-12);
        prop_assert_eq!(cm.trace() as usize, correct);
        prop_assert_eq!(cm.total() as usize, pairs.len());
        for (c, &n) in cm.row_totals().iter().enumerate() {
            prop_assert_eq!(n as usize, pairs.iter().filter(|(t, _)| *t == c).count());
        }
    }

    #[test]
    fn knn_affine_invariance(
        seed in any::<u64>(),
        scale in prop::collection::vec(prop_oneof![-20.0f64..-0.05, 0.05f64..20.0], 3),
        offset in prop::collection::vec(-100.0f64..100.0, 3),
        k in 1usize..7,
    ) {
        let ds = blobs(seed, 3, 3, 15);
        let mut moved = ds.clone();
        let map = |r: &[f64]| -> Vec<f64> { r.iter().enumerate().map(|(j, v)| scale[j] * v + offset[j]).collect() };
        moved.rows.iter_mut().for_each(|r| r.features = map(&r.features));
        let kind = roomprint::roomid::ClassifierKind::Knn { k };
        let (a, b) = (fit(kind, &ds, &[0, 1, 2]).unwrap(), fit(kind, &moved, &[0, 1, 2]).unwrap());
        for q in gaussian(seed ^ 7, 90).chunks(3) {
            let q: Vec<f64> = q.iter().map(|v| 2.0 * v).collect();
            prop_assert_eq!(a.predict(&q).unwrap(), b.predict(&map(&q)).unwrap());
        }
    }

    #[test]
    fn partition_by_visit_and_noise_is_exact(seed in any::<u64>(), visit in 0u32..3, noisy in any::<bool>()) {
        let ds = blobs(seed, 2, 3, 20);
        let f = RowFilter {
            visit: Some(visit),
            noise: Some(if noisy { NoiseCondition::Noisy } else { NoiseCondition::Quiet }),
            ..RowFilter::all()
        };
        let (a, b) = ds.partition(&f);
        prop_assert_eq!(a.len() + b.len(), ds.len());
        prop_assert!(a.rows.iter().all(|r| f.matches(r)) && b.rows.iter().all(|r| !f.matches(r)));
        let mut seen: Vec<Vec<u64>> = a.rows.iter().chain(&b.rows).map(|r| r.features.iter().map(|v| v.to_bits()).collect()).collect();
        let mut orig: Vec<Vec<u64>> = ds.rows.iter().map(|r| r.features.iter().map(|v| v.to_bits()).collect()).collect();
        seen.sort();
        orig.sort();
        prop_assert_eq!(seen, orig);
    }

    #[test]
    fn sffs_steps_strictly_improve(table in prop::collection::vec(0.0f64..1.0, 64)) {
        // arbitrary criterion over subsets of six features
        let crit = |s: &[usize]| Ok(table[s.iter().fold(0usize, |m, &f| m | (1 << f))]);
        let r = sffs_with(6, 6, Exec::Sequential, crit).unwrap();
        let mut prev = f64::INFINITY;
        for step in &r.trace {
            prop_assert!(step.criterion < prev);
            prev = step.criterion;
            if step.action == StepAction::Remove {
                prop_assert!(!step.subset.contains(&step.feature));
            }
        }
        prop_assert_eq!(r.criterion, prev);
        let mut sorted = r.subset.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted, r.subset);
    }
}

/// Gaussian clusters with rows spread over visits and noise conditions.
fn blobs(seed: u64, n_classes: usize, n_features: usize, per_class: usize) -> LabeledDataset {
    let names: Vec<String> = ["c50", "ts", "d50", "time_kurtosis"][..n_features]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut ds = LabeledDataset::new(names);
    let noise = gaussian(seed, n_classes * per_class * n_features);
    let mut it = noise.into_iter();
    for c in 0..n_classes {
        for i in 0..per_class {
            let features = (0..n_features)
                .map(|j| it.next().unwrap() + 2.0 * ((c + j) % n_classes) as f64)
                .collect();
            ds.push(Sample {
                features,
                label: format!("room{c}"),
                visit_id: (i % 3) as u32,
                noise: if i % 4 == 0 {
                    NoiseCondition::Noisy
                } else {
                    NoiseCondition::Quiet
                },
                position_id: (i % 2) as u32,
            })
            .unwrap();
        }
    }
    ds
}
