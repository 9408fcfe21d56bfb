//! Timeline grounding and implicit temporal reasoning for evidence-based
//! claim verification.
//!
//! The pipeline: a rule-based temporal tagger extracts publication dates and
//! in-text time expressions, the timeline module grounds claims and evidence
//! on shared quantile time buckets, and a joint veracity-prediction /
//! evidence-ranking model fuses the resulting time embeddings into its text
//! representations either before (local) or after (global) encoding.
//! Training, evaluation, rank-correlation analysis, and integrated-gradients
//! attribution sit on top.
//!
//! Most capabilities have a runnable demo under `examples/`:
//!
//! ```bash
//! cargo run --release -p chronofact --example tag_documents
//! cargo run --release -p chronofact --example bucket_schemes
//! cargo run --release -p chronofact --example ground_timeline
//! cargo run --release -p chronofact --example synthesize_corpus
//! cargo run --release -p chronofact --example train_time_rule
//! cargo run --release -p chronofact --example sweep_fusion_weights
//! cargo run --release -p chronofact --example rank_correlation
//! cargo run --release -p chronofact --example attribute_prediction
//! ```
//!
//! The `chronofact` binary exposes the same pipeline as subcommands
//! (`tag`, `build-buckets`, `ground`, `train`, `evaluate`, `attribute`,
//! `sweep`, `synth`).

pub mod config;
pub mod corpus;
pub mod date;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod seed;
pub mod tagger;
pub mod timeline;
pub mod train;

pub use date::CalendarDate;
pub use error::{Error, Result};
