//! Pretraining and benchmark drivers.

mod bench;
mod corpus;

pub use bench::{
    bench_demo, bench_normal, bench_scene, run_benchmark, scripted_demonstration, scripted_store,
    AttemptRecord, BenchConfig, BenchmarkReport, DemoBenchReport, HARD_CATEGORY_RATE,
    REPORT_VERSION,
};
pub use corpus::{
    evaluate_representation, generate_corpus, generate_holdout, pretrain, render_object_cloud,
    PretrainConfig, RepresentationReport,
};
