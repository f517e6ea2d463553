use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use statebuddy_core::intent::{candidates_in_state, jaccard_distance, levenshtein, Granularity, Utterance};
use statebuddy_core::{Deployment, ManualClock, Session};
use std::sync::Arc;

fn metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("levenshtein");
    for (a, b) in [
        ("next state", "NextState"),
        ("start the full scan please", "begin full scan"),
        ("generate the part program for the impeller", "part program generator"),
    ] {
        g.bench_with_input(BenchmarkId::from_parameter(a.len()), &(a, b), |bench, (a, b)| {
            bench.iter(|| levenshtein(black_box(a), black_box(b)))
        });
    }
    g.finish();
    c.bench_function("jaccard_char", |b| {
        b.iter(|| jaccard_distance(black_box("start the full scan"), black_box("full scan"), Granularity::Char))
    });
}

fn decide(c: &mut Criterion) {
    let d = Deployment::demo();
    let env = d.env(Arc::new(ManualClock::new(0)));
    let s = Session::start(env, "bench", "preview", Vec::new()).unwrap();
    let candidates = candidates_in_state(s.state(), &d.catalog, &d.globals).unwrap();
    let mut g = c.benchmark_group("decide");
    for text in ["launch the studio", "next state", "something unrelated entirely"] {
        let q = Utterance::new(text);
        g.bench_with_input(BenchmarkId::from_parameter(text), &q, |b, q| {
            b.iter(|| d.matcher.decide(black_box(q), &candidates).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, metrics, decide);
criterion_main!(benches);
