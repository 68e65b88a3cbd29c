use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::matrix::InteractionMatrix;
use crate::error::{Error, Result};
use crate::rng;

const SPLIT_FORMAT: &str = "ipslae-eval-split";
const SPLIT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitOptions {
    pub valid_frac: f64,
    pub test_frac: f64,
    /// Share of each held-out user's items moved to the holdout set.
    pub holdout_frac: f64,
    pub seed: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            valid_frac: 0.1,
            test_frac: 0.1,
            holdout_frac: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Valid,
    Test,
}

impl std::fmt::Display for Segment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Segment::Valid => "valid",
            Segment::Test => "test",
        })
    }
}

/// A held-out user: scored from `foldin`, judged against `holdout`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldOutUser {
    pub user: u32,
    pub foldin: Vec<u32>,
    pub holdout: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegmentSplit {
    /// Users with a nonempty holdout, ascending by user index.
    pub users: Vec<HeldOutUser>,
    /// Held-out users with a single interaction. Their item stays in fold-in
    /// and they are left out of every metric.
    pub foldin_only: Vec<u32>,
}

impl SegmentSplit {
    pub fn user_indices(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self
            .users
            .iter()
            .map(|h| h.user)
            .chain(self.foldin_only.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }
}

/// Disjoint train / validation / test users plus per-user fold-in and
/// holdout items for the two held-out segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSplit {
    pub format: String,
    pub format_version: u32,
    pub seed: u64,
    pub rng: String,
    pub options: SplitOptions,
    pub n_users: usize,
    pub n_items: usize,
    pub train_users: Vec<u32>,
    pub valid: SegmentSplit,
    pub test: SegmentSplit,
}

impl EvalSplit {
    pub fn segment(&self, segment: Segment) -> &SegmentSplit {
        match segment {
            Segment::Valid => &self.valid,
            Segment::Test => &self.test,
        }
    }

    /// Training rows of `x`, i.e. the matrix the model and propensities see.
    pub fn train_matrix(&self, x: &InteractionMatrix) -> InteractionMatrix {
        x.select_rows(&self.train_users)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: EvalSplit = serde_json::from_str(text)?;
        if s.format != SPLIT_FORMAT || s.format_version != SPLIT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "expected {SPLIT_FORMAT} v{SPLIT_FORMAT_VERSION}, found {} v{}",
                s.format, s.format_version
            )));
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Check that `x` is the matrix this split was drawn from.
    pub fn check_matrix(&self, x: &InteractionMatrix) -> Result<()> {
        if x.n_users() != self.n_users {
            return Err(Error::DimensionMismatch {
                expected: self.n_users,
                found: x.n_users(),
            });
        }
        if x.n_items() != self.n_items {
            return Err(Error::DimensionMismatch {
                expected: self.n_items,
                found: x.n_items(),
            });
        }
        Ok(())
    }
}

fn holdout_count(degree: usize, frac: f64) -> usize {
    if degree < 2 {
        return 0;
    }
    ((degree as f64 * frac).round() as usize).clamp(1, degree - 1)
}

/// Partition users by a seeded shuffle, then move `holdout_frac` of each
/// held-out user's items into a holdout set.
pub fn split_strong_generalization(
    x: &InteractionMatrix,
    opts: &SplitOptions,
) -> Result<EvalSplit> {
    let held = opts.valid_frac + opts.test_frac;
    if !(opts.valid_frac > 0.0 && opts.test_frac > 0.0 && held < 1.0) {
        return Err(Error::invalid(format!(
            "need valid_frac > 0, test_frac > 0 and valid_frac + test_frac < 1, got {} and {}",
            opts.valid_frac, opts.test_frac
        )));
    }
    if !(opts.holdout_frac > 0.0 && opts.holdout_frac < 1.0) {
        return Err(Error::invalid(format!(
            "holdout_frac must be in (0, 1), got {}",
            opts.holdout_frac
        )));
    }

    let n = x.n_users();
    let n_valid = (opts.valid_frac * n as f64).round() as usize;
    let n_test = (opts.test_frac * n as f64).round() as usize;
    if n_valid == 0 || n_test == 0 || n_valid + n_test >= n {
        return Err(Error::invalid(format!(
            "{n} users cannot be split into nonempty train/valid/test with fractions {} and {}",
            opts.valid_frac, opts.test_frac
        )));
    }

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng::substream(opts.seed, 0));
    let mut valid_users = order[..n_valid].to_vec();
    let mut test_users = order[n_valid..n_valid + n_test].to_vec();
    let mut train_users = order[n_valid + n_test..].to_vec();
    valid_users.sort_unstable();
    test_users.sort_unstable();
    train_users.sort_unstable();

    let mut sampler = rng::substream(opts.seed, 1);
    let mut hold_out = |users: &[u32]| -> SegmentSplit {
        let mut seg = SegmentSplit::default();
        for &u in users {
            let items = x.row(u as usize);
            let k = holdout_count(items.len(), opts.holdout_frac);
            if k == 0 {
                seg.foldin_only.push(u);
                continue;
            }
            let mut picked = vec![false; items.len()];
            for j in index::sample(&mut sampler, items.len(), k) {
                picked[j] = true;
            }
            let (holdout, foldin): (Vec<(usize, &u32)>, Vec<(usize, &u32)>) =
                items.iter().enumerate().partition(|(j, _)| picked[*j]);
            seg.users.push(HeldOutUser {
                user: u,
                foldin: foldin.into_iter().map(|(_, &i)| i).collect(),
                holdout: holdout.into_iter().map(|(_, &i)| i).collect(),
            });
        }
        seg
    };
    let valid = hold_out(&valid_users);
    let test = hold_out(&test_users);

    Ok(EvalSplit {
        format: SPLIT_FORMAT.into(),
        format_version: SPLIT_FORMAT_VERSION,
        seed: opts.seed,
        rng: rng::RNG_ALGORITHM.into(),
        options: *opts,
        n_users: n,
        n_items: x.n_items(),
        train_users,
        valid,
        test,
    })
}
