use criterion::{black_box, criterion_group, criterion_main, Criterion};
use pmr_bench::graph_corpus;
use pmr_core::codecs::{encode, to_pme, PmrId};
use pmr_core::metrics::{length_stats, pme_similarity, MatcherConfig, TokenizerSpec};

fn metrics(c: &mut Criterion) {
    let bundles: Vec<_> = graph_corpus(40).iter().map(to_pme).collect();
    for (name, cfg) in [("similarity/exact", MatcherConfig::exact()), ("similarity/lexical", MatcherConfig::default())]
    {
        c.bench_function(name, |b| {
            b.iter(|| {
                bundles
                    .windows(2)
                    .map(|w| pme_similarity(black_box(&w[0]), black_box(&w[1]), &cfg).unwrap().overall)
                    .sum::<f64>()
            })
        });
    }
    let docs: Vec<String> = graph_corpus(40).iter().map(|m| encode(m, PmrId::Bpmn).unwrap().text).collect();
    c.bench_function("length/heuristic", |b| {
        b.iter(|| docs.iter().map(|d| length_stats(black_box(d), &TokenizerSpec::Heuristic).tokens).sum::<usize>())
    });
}

criterion_group!(benches, metrics);
criterion_main!(benches);
