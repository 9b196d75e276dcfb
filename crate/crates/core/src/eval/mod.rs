//! Downstream checks: a small pixel classifier, accuracy metrics, covering
//! radius in the embedder space and the toy benchmark harness.

mod bench;
mod classifier;
mod covering;
mod metrics;

pub use bench::{embed_all, median, Benchmark, BenchmarkConfig, BenchmarkResult, RunResult};
pub use classifier::{train_classifier, Classifier, ClassifierConfig, INPUT_CENTER};
pub use covering::covering_radius;
pub use metrics::{evaluate, metrics_from_predictions, Metrics};
