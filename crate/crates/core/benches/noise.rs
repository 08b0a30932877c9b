use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use hhtab_core::domain::TableClass;
use hhtab_core::engine::{stacked_counts, GroupUniverse, NoiseMode};
use hhtab_core::exec::Execution;
use hhtab_core::io::{validate_inputs, RunConfig, ValidatedBundle};
use hhtab_core::mechanisms::rng::NoiseKey;
use hhtab_core::mechanisms::vector_discrete_gaussian_keyed;
use hhtab_core::synth::{generate, reference_level_configs, write_dataset, SynthParams};

const MODES: [(&str, Execution); 2] = [("serial", Execution::Serial), ("parallel", Execution::Parallel)];

fn bundle(households: usize) -> ValidatedBundle {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&SynthParams {
        households,
        states: 3,
        counties_per_state: 3,
        tracts_per_county: 3,
        ..SynthParams::default()
    });
    let cfg = write_dataset(dir.path(), &data, reference_level_configs(), 1).unwrap();
    let config = RunConfig::load(&cfg).unwrap();
    validate_inputs(&config, "config.toml").unwrap()
}

fn keyed_noise(c: &mut Criterion) {
    let mut g = c.benchmark_group("keyed_noise");
    for len in [1_000usize, 20_000] {
        let counts: Vec<i64> = (0..len as i64).collect();
        let labels: Vec<String> = (0..len).map(|i| format!("cell{i}")).collect();
        g.throughput(Throughput::Elements(len as u64));
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, len), &counts, |b, counts| {
                b.iter(|| {
                    vector_discrete_gaussian_keyed(black_box(counts), 0.14 / 9.0, exec, |i| {
                        NoiseKey {
                            level_index: 3,
                            class: TableClass::HouseholdType,
                            entity_id: "01001",
                            iteration_code: "A01",
                            cell_label: &labels[i],
                        }
                        .stream(7)
                    })
                    .unwrap()
                })
            });
        }
    }
    g.finish();
}

fn tabulation(c: &mut Criterion) {
    let b = bundle(50_000);
    let universe = GroupUniverse::build(&b.levels, &b.geo, &b.spec, &b.t01001);
    // Block-Regional: the level with the most groups
    let level = universe.levels.iter().max_by_key(|l| l.entries.len()).unwrap();
    let mut g = c.benchmark_group("stacked_counts");
    g.throughput(Throughput::Elements(b.records.len() as u64));
    for (name, exec) in MODES {
        g.bench_function(name, |bench| bench.iter(|| stacked_counts(black_box(&b.records), level, &b.spec, exec)));
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let b = bundle(20_000);
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |bench| bench.iter(|| b.run(NoiseMode::Seeded(1), exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, keyed_noise, tabulation, pipeline);
criterion_main!(benches);
