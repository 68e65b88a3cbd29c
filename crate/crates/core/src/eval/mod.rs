//! Held-out scoring, top-N ranking, and accuracy / diversity metrics.

mod metrics;
mod report;
mod score;

pub use metrics::{
    coverage_at_k, ndcg_at_k, popular_items, popular_subset_metrics, popularity_bins, recall_at_k,
    PopularSubset,
};
pub use report::{
    evaluate, evaluate_scores, ConfigSnapshot, EvalOptions, EvalReport, PopularReport, UserMetrics,
};
pub use score::{score_users, top_n, top_n_weighted, RankedList, ScoreMatrix};
