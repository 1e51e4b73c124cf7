//! Parallel-vs-sequential comparison of the three exact routes on fixed
//! seeded instances.
//!
//! With the default `parallel` feature each route is timed under rayon
//! pools of 1, 2, 4 and 8 threads; compiled with `--no-default-features`
//! the same workloads register as `sequential`, so criterion baselines
//! from the two builds line up. The single-thread pool rows expose the
//! rayon overhead against the fallback path.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use chipfire::exact::{instability_by_strategies, SearchLimits};
use chipfire::extension::instability_by_extension;
use chipfire::game::instability_oracle;
use chipfire::multigraph::{random_strongly_connected, DirectedMultigraph};

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

fn run_modes<F>(c: &mut Criterion, group: &str, mut run: F)
where
    F: FnMut() + Send,
{
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    for threads in [1usize, 2, 4, 8] {
        g.bench_function(format!("threads/{threads}"), |b| {
            b.iter(|| with_pool(threads, &mut run))
        });
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function("sequential", |b| b.iter(&mut run));
    g.finish();
}

fn oracle_instance() -> DirectedMultigraph {
    // M = 23, c = 16: a configuration sweep of a few thousand games.
    random_strongly_connected(5, 2, 0.6, 9)
}

fn strategies_instance() -> DirectedMultigraph {
    // P = 17, 49 million primitive sequences, pruned to ~160k bound steps.
    random_strongly_connected(4, 2, 0.3, 35)
}

fn extension_instance() -> DirectedMultigraph {
    // P = 12, 138600 orderings, one transportation max-flow each.
    random_strongly_connected(4, 2, 0.35, 2)
}

fn bench_oracle(c: &mut Criterion) {
    let g = oracle_instance();
    run_modes(c, "oracle", || {
        black_box(instability_oracle(black_box(&g), None).unwrap());
    });
}

fn bench_strategies(c: &mut Criterion) {
    let g = strategies_instance();
    let limits = SearchLimits { max_sequences: u64::MAX, node_budget: u64::MAX };
    run_modes(c, "strategies", || {
        black_box(instability_by_strategies(black_box(&g), &limits).unwrap());
    });
}

fn bench_extension(c: &mut Criterion) {
    let g = extension_instance();
    let limits = SearchLimits { max_sequences: u64::MAX, node_budget: u64::MAX };
    run_modes(c, "extension", || {
        black_box(instability_by_extension(black_box(&g), &limits).unwrap());
    });
}

criterion_group!(benches, bench_oracle, bench_strategies, bench_extension);
criterion_main!(benches);
