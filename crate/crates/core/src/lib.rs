//! Propensity-weighted shallow linear autoencoders for implicit feedback.
//!
//! The crate fits EASE in closed form on a binary user–item matrix, reweights
//! the learned item–item matrix column-wise with inverse propensity weights
//! (power-law, clipped power-law or log-sigmoid), and evaluates the result
//! under strong generalization with Recall@K, NDCG@K and Coverage@K.
//!
//! ```no_run
//! use ipslae::{dataset, eval, propensity, solver};
//!
//! # fn main() -> ipslae::Result<()> {
//! let records = dataset::load_interactions("ratings.csv".as_ref(), &dataset::Delimited::csv())?;
//! let x = dataset::preprocess(&records, &dataset::PreprocessOptions::default())?;
//! let split = dataset::split_strong_generalization(&x, &dataset::SplitOptions::default())?;
//! let train = split.train_matrix(&x);
//! let gram = solver::gram(&train, solver::DEFAULT_MEMORY_BUDGET)?;
//! let model = solver::fit_ease(&gram, 500.0)?;
//! let counts = propensity::ItemCounts::from_gram(&gram);
//! let w = propensity::propensity_logsigmoid(&counts, 0.5, None)?;
//! let weighted = solver::apply_item_weights(&model, &w)?;
//! let report = eval::evaluate(&weighted, &split, dataset::Segment::Test, &counts, &eval::EvalOptions::default())?;
//! println!("{}", report.to_json()?);
//! # Ok(())
//! # }
//! ```

pub mod dataset;
mod error;
pub mod eval;
pub mod grid;
pub mod propensity;
pub mod rng;
pub mod solver;
pub mod tol;

pub use error::{Error, ErrorKind, Result};
