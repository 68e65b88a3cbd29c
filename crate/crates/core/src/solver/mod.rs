//! Closed-form EASE fitting, post-hoc item weighting, and independent
//! verification routes for both closed forms.

mod ease;
mod gram;
mod model;
mod oracle;
mod reduced;
mod spectral;

pub use ease::fit_ease;
pub use gram::{gram, GramMatrix, DEFAULT_MEMORY_BUDGET};
pub use model::{apply_item_weights, scale_columns, AppliedWeights, Provenance, SimilarityModel};
pub use oracle::{fit_ease_oracle, fit_ease_weighted_oracle, ORACLE_MAX_ITEMS};
pub use reduced::fit_rank_reduced;
pub use spectral::{spectral_check, SpectralReport};
