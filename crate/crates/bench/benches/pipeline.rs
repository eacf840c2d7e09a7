use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pipe_core::ebg::{explain, explain_all, Atom, FactSet, Limits, Theory};
use pipe_core::operationalizer::{cut, generalize, generate_model, ContentBinding, FrontierSpec};
use pipe_core::{evaluate_coverage, parse, serialize, specialize, specializes_to, Activity, Assignment};

const CONGRESS: &str = include_str!("../../core/fixtures/congress.ispace");
const DEMOCRATS: &str = include_str!("../../core/fixtures/congress-democrats.ispace");
const PIGMENTS: &str = include_str!("../../core/fixtures/pigments-mini.ispace");
const PIGMENT_ACTS: &str = include_str!("../../core/fixtures/pigments-mini.activities.json");
const THEORY: &str = include_str!("../../core/fixtures/politicalinfo.theory");
const NANCY: &str = include_str!("../../core/fixtures/nancy.facts");
const BINDINGS: &str = include_str!("../../core/fixtures/nancy.bindings.json");

fn ispace(c: &mut Criterion) {
    let congress = parse(CONGRESS).unwrap();
    let democrats = parse(DEMOCRATS).unwrap();
    let pigments = parse(PIGMENTS).unwrap();
    let dem = Assignment::parse_entries(["Party=Dem"]).unwrap();
    let acts: Vec<Activity> = serde_json::from_str(PIGMENT_ACTS).unwrap();

    let mut g = c.benchmark_group("ispace");
    g.bench_function("parse congress", |b| b.iter(|| parse(black_box(CONGRESS))));
    g.bench_function("serialize pigments", |b| b.iter(|| serialize(black_box(&pigments))));
    g.bench_function("specialize congress Party=Dem", |b| {
        b.iter(|| specialize(black_box(&congress), black_box(&dem)))
    });
    g.bench_function("specializes_to congress democrats", |b| {
        b.iter(|| specializes_to(black_box(&congress), black_box(&democrats), 10_000))
    });
    g.bench_function("coverage pigments", |b| b.iter(|| evaluate_coverage(black_box(&pigments), &acts)));
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let theory = Theory::parse(THEORY).unwrap();
    let facts = FactSet::parse(NANCY).unwrap();
    let goal = Atom::parse_ground("politicalinfo(x47)").unwrap();
    let bindings: ContentBinding = serde_json::from_str(BINDINGS).unwrap();
    let tree = explain(&theory, &facts, &goal, Limits::default()).unwrap().unwrap();
    let general = generalize(&tree, &theory).unwrap();
    let spec = FrontierSpec::predicates(["member", "aspect"]);

    let mut g = c.benchmark_group("pipeline");
    g.bench_function("explain nancy", |b| {
        b.iter(|| explain(&theory, &facts, black_box(&goal), Limits::default()))
    });
    g.bench_function("explain_all nancy", |b| {
        b.iter(|| explain_all(&theory, &facts, black_box(&goal), Limits::default()))
    });
    g.bench_function("generalize nancy", |b| b.iter(|| generalize(black_box(&tree), &theory)));
    g.bench_function("generate nancy model", |b| {
        b.iter_batched(
            || cut(&general, &spec).unwrap(),
            |op| generate_model(&theory, &[op], &bindings, false),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, ispace, pipeline);
criterion_main!(benches);
