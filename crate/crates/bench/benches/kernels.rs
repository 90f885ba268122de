use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use vtc_bench::{frames, recording, regression};
use vtc_core::dsp::mfcc;
use vtc_core::eval::studentized_range_cdf;
use vtc_core::model::fit_elastic_net;
use vtc_core::vtc::{evtc, fvtc};
use vtc_core::{DspConfig, ElasticNetParams, VtcConfig};

fn bench_mfcc(c: &mut Criterion) {
    let audio = recording(10.0);
    let cfg = DspConfig::default();
    c.bench_function("mfcc_10s", |b| {
        b.iter(|| mfcc(black_box(&audio), &cfg).unwrap())
    });
}

fn bench_vtc(c: &mut Criterion) {
    let m = frames(30.0);
    let cfg = VtcConfig::default();
    c.bench_function("fvtc_3000_frames", |b| {
        b.iter(|| fvtc(black_box(&m), &cfg).unwrap())
    });
    let t = fvtc(&m, &cfg).unwrap();
    c.bench_function("evtc_15ch_80_delays", |b| {
        b.iter(|| evtc(black_box(&t)).unwrap())
    });
}

fn bench_elastic_net(c: &mut Criterion) {
    let (rows, y) = regression(200, 75);
    let params = ElasticNetParams::default();
    c.bench_function("elastic_net_200x75", |b| {
        b.iter(|| fit_elastic_net(black_box(&rows), black_box(&y), &params).unwrap())
    });
}

fn bench_ptukey(c: &mut Criterion) {
    c.bench_function("ptukey_k3_df297", |b| {
        b.iter(|| studentized_range_cdf(black_box(3.3), 3, black_box(297.0)))
    });
}

criterion_group!(
    benches,
    bench_mfcc,
    bench_vtc,
    bench_elastic_net,
    bench_ptukey
);
criterion_main!(benches);
