//! Evaluation: F1 metrics, rank-correlation analyses between model
//! variants, bucket/label-score correlation, and integrated-gradients
//! attribution.

pub mod attribution;
pub mod metrics;
pub mod rankings;
pub mod report;

pub use attribution::{integrated_gradients, riemann_scales, AttributionReport, IgBaseline};
pub use metrics::{micro_macro_f1, spearman};
pub use rankings::{
    bucket_label_correlation, bucket_score_correlation, compare_rankings, RankBy, ScoredDoc,
};
pub use report::{evaluate, EvalReport};
