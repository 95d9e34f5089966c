use std::hint::black_box;

use bellswitch_bench::sampled_tomography_counts;
use bellswitch_core::config::preset;
use bellswitch_core::interference::bsm_translation_scan;
use bellswitch_core::measurement::scan::{translation_scan, ScanRange, Sampling};
use bellswitch_core::measurement::MeasurementSetting;
use bellswitch_core::tomography::{bootstrap, mle_reconstruct, MleOptions};
use bellswitch_core::BellState;
use criterion::{criterion_group, criterion_main, Criterion};

fn tomography(c: &mut Criterion) {
    let counts = sampled_tomography_counts(3);
    let options = MleOptions::default();
    c.bench_function("mle_reconstruct", |b| b.iter(|| mle_reconstruct(black_box(&counts), &options).unwrap()));
    let fit = mle_reconstruct(&counts, &options).unwrap();
    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    group.bench_function("20_replicas", |b| {
        b.iter(|| bootstrap(black_box(&fit.rho), fit.intensity, counts.accidentals, BellState::PsiMinus, 20, 11, &options).unwrap())
    });
    group.finish();
}

fn scans(c: &mut Criterion) {
    let config = preset("fig3").unwrap();
    let range = ScanRange::new(-600.0, 600.0, 2.0).unwrap();
    let setting = MeasurementSetting::diagonal();
    c.bench_function("translation_scan_601_points", |b| {
        b.iter(|| {
            translation_scan(&range, &setting, black_box(&config.source), &config.counting, Sampling::Poisson { seed: 1 })
                .unwrap()
        })
    });
    let bsm = preset("fig10").unwrap();
    let bsm_range = ScanRange::new(0.0, 1220.0, 2.0).unwrap();
    let splitter = bsm.beam_splitter.model();
    c.bench_function("bsm_translation_scan_611_points", |b| {
        b.iter(|| {
            bsm_translation_scan(&bsm_range, black_box(&bsm.source), &splitter, &bsm.counting, Sampling::Poisson { seed: 1 })
                .unwrap()
        })
    });
}

criterion_group!(benches, tomography, scans);
criterion_main!(benches);
