use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ghosttrace::lang::{load, pretty_print};
use ghosttrace::runtime::{interpret, Mode};
use ghosttrace::transform::transform_program;
use ghosttrace_bench::{compute_loop, corpus, corpus_dir, sources};

fn frontend(c: &mut Criterion) {
    let files = sources(&corpus_dir());
    c.bench_function("parse corpus", |b| {
        b.iter(|| {
            for (name, src) in &files {
                black_box(load(src, name).unwrap());
            }
        })
    });
    let programs = corpus();
    c.bench_function("transform corpus", |b| {
        b.iter(|| {
            for (_, p) in &programs {
                black_box(transform_program(p).unwrap());
            }
        })
    });
    c.bench_function("print corpus", |b| {
        b.iter(|| {
            for (_, p) in &programs {
                black_box(pretty_print(p));
            }
        })
    });
}

fn interpretation(c: &mut Criterion) {
    let programs = corpus();
    let instrumented: Vec<_> = programs.iter().map(|(_, p)| transform_program(p).unwrap().0).collect();
    let mut group = c.benchmark_group("corpus");
    group.bench_function("original", |b| {
        b.iter(|| {
            for (_, p) in &programs {
                black_box(interpret(p, Mode::Original).unwrap());
            }
        })
    });
    group.bench_function("instrumented", |b| {
        b.iter(|| {
            for p in &instrumented {
                black_box(interpret(p, Mode::Instrumented).unwrap());
            }
        })
    });
    group.finish();

    let p = compute_loop(2_000);
    let q = transform_program(&p).unwrap().0;
    let mut group = c.benchmark_group("compute loop");
    group.bench_function("original", |b| b.iter(|| black_box(interpret(&p, Mode::Original).unwrap())));
    group.bench_function("instrumented", |b| b.iter(|| black_box(interpret(&q, Mode::Instrumented).unwrap())));
    group.finish();
}

criterion_group!(benches, frontend, interpretation);
criterion_main!(benches);
