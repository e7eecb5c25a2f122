use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use xzzx::decoder::{MatchingOptions, MwpmDecoder, RepetitionDecoder};
use xzzx::{BiasSpec, WeightParams};
use xzzx_bench::{syndromes, volumes};

// Decoders are built once; the timings cover decoding only.

fn decode_2d(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode-2d");
    for (d, eta) in [(9, 10.0), (15, 10.0), (15, 0.5)] {
        let spec = BiasSpec::new(0.1, eta);
        let (code, batch) = syndromes(d, &spec, 64);
        let decoder = MwpmDecoder::new(&code, WeightParams::from_bias(&spec).unwrap(), MatchingOptions::default()).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("eta={eta}"), d), &batch, |b, batch| {
            b.iter(|| batch.iter().for_each(|s| drop(black_box(decoder.decode(s).unwrap()))))
        });
    }
    group.finish();
}

fn decode_repetition(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode-infinite-bias");
    for d in [11, 19] {
        let (code, batch) = syndromes(d, &BiasSpec::new(0.3, f64::INFINITY), 64);
        let decoder = RepetitionDecoder::new(&code);
        group.bench_with_input(BenchmarkId::from_parameter(d), &batch, |b, batch| {
            b.iter(|| batch.iter().for_each(|s| drop(black_box(decoder.decode(s).unwrap()))))
        });
    }
    group.finish();
}

fn decode_3d(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode-3d");
    group.sample_size(10);
    for d in [8, 12] {
        let (code, noise, batch) = volumes(d, 0.05, f64::INFINITY, 16);
        let decoder =
            MwpmDecoder::new(&code, WeightParams::from_phenomenological(&noise).unwrap(), MatchingOptions::default())
                .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &batch, |b, batch| {
            b.iter(|| batch.iter().for_each(|v| drop(black_box(decoder.decode_volume(v).unwrap()))))
        });
    }
    group.finish();
}

criterion_group!(benches, decode_2d, decode_repetition, decode_3d);
criterion_main!(benches);
