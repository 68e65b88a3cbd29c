use rayon::prelude::*;

use crate::dataset::{EvalSplit, HeldOutUser, Segment};
use crate::error::{Error, Result};
use crate::solver::SimilarityModel;

/// Scores `S_u = x_u,foldin · B` for the held-out users of one segment.
///
/// Fold-in items hold `f64::NEG_INFINITY` and are never ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n_items: usize,
    users: Vec<HeldOutUser>,
    rows: Vec<Vec<f64>>,
    skipped: Vec<u32>,
}

impl ScoreMatrix {
    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Scored users, ascending by user index, with their fold-in and holdout sets.
    pub fn users(&self) -> &[HeldOutUser] {
        &self.users
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// Held-out users left out because they have no holdout or no fold-in items.
    pub fn skipped(&self) -> &[u32] {
        &self.skipped
    }
}

/// Per-user top-N item indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    pub n: usize,
    pub lists: Vec<Vec<u32>>,
}

pub fn score_users(
    model: &SimilarityModel,
    split: &EvalSplit,
    segment: Segment,
) -> Result<ScoreMatrix> {
    let n = model.n_items();
    if n != split.n_items {
        return Err(Error::DimensionMismatch {
            expected: split.n_items,
            found: n,
        });
    }
    let seg = split.segment(segment);
    let mut skipped = seg.foldin_only.clone();
    let mut users = Vec::with_capacity(seg.users.len());
    for h in &seg.users {
        if h.foldin.is_empty() || h.holdout.is_empty() {
            skipped.push(h.user);
        } else {
            users.push(h.clone());
        }
    }
    skipped.sort_unstable();

    // Row i of B is column i of Bᵀ, which is contiguous.
    let bt = model.matrix().transpose();
    let rows = users
        .par_iter()
        .map(|h| {
            let mut s = vec![0.0; n];
            for &i in &h.foldin {
                for (acc, v) in s.iter_mut().zip(bt.column(i as usize).iter()) {
                    *acc += v;
                }
            }
            for &i in &h.foldin {
                s[i as usize] = f64::NEG_INFINITY;
            }
            s
        })
        .collect();
    Ok(ScoreMatrix {
        n_items: n,
        users,
        rows,
        skipped,
    })
}

fn rank_row(n: usize, eligible: impl Iterator<Item = (u32, f64)>) -> Vec<u32> {
    let mut cand: Vec<(u32, f64)> = eligible.filter(|(_, s)| *s != f64::NEG_INFINITY).collect();
    // Higher score first, lower item index on ties.
    let cmp = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if cand.len() > n {
        cand.select_nth_unstable_by(n - 1, cmp);
        cand.truncate(n);
    }
    cand.sort_unstable_by(cmp);
    cand.into_iter().map(|(i, _)| i).collect()
}

/// Top `n` eligible items per user.
pub fn top_n(scores: &ScoreMatrix, n: usize) -> Result<RankedList> {
    if n == 0 {
        return Err(Error::invalid("top_n needs n >= 1"));
    }
    let lists = scores
        .rows
        .par_iter()
        .map(|r| rank_row(n, r.iter().enumerate().map(|(i, &s)| (i as u32, s))))
        .collect();
    Ok(RankedList { n, lists })
}

/// Top `n` of `S · diagMat(w)` without forming the weighted model.
pub fn top_n_weighted(scores: &ScoreMatrix, w: &[f64], n: usize) -> Result<RankedList> {
    if n == 0 {
        return Err(Error::invalid("top_n needs n >= 1"));
    }
    if w.len() != scores.n_items {
        return Err(Error::DimensionMismatch {
            expected: scores.n_items,
            found: w.len(),
        });
    }
    let lists = scores
        .rows
        .par_iter()
        .map(|r| {
            rank_row(
                n,
                r.iter().zip(w).enumerate().map(|(i, (&s, &wi))| {
                    let v = if s == f64::NEG_INFINITY { s } else { s * wi };
                    (i as u32, v)
                }),
            )
        })
        .collect();
    Ok(RankedList { n, lists })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SegmentSplit;
    use crate::solver::SimilarityModel;
    use nalgebra::DMatrix;

    fn split_with(users: Vec<HeldOutUser>, n_items: usize) -> EvalSplit {
        EvalSplit {
            format: "ipslae-eval-split".into(),
            format_version: 1,
            seed: 0,
            rng: String::new(),
            options: Default::default(),
            n_users: 10,
            n_items,
            train_users: vec![],
            valid: SegmentSplit::default(),
            test: SegmentSplit {
                users,
                foldin_only: vec![7],
            },
        }
    }

    #[test]
    fn single_row_product() {
        let m = SimilarityModel::import(DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 1.0, 0.0]), "t")
            .unwrap();
        let split = split_with(
            vec![HeldOutUser {
                user: 0,
                foldin: vec![0],
                holdout: vec![1],
            }],
            2,
        );
        let s = score_users(&m, &split, Segment::Test).unwrap();
        assert_eq!(s.row(0), &[f64::NEG_INFINITY, 0.3]);
        assert_eq!(s.skipped(), &[7]);
        assert_eq!(top_n(&s, 5).unwrap().lists, vec![vec![1]]);
    }

    #[test]
    fn empty_foldin_is_skipped() {
        let m = SimilarityModel::import(DMatrix::zeros(3, 3), "t").unwrap();
        let split = split_with(
            vec![HeldOutUser {
                user: 2,
                foldin: vec![],
                holdout: vec![1],
            }],
            3,
        );
        let s = score_users(&m, &split, Segment::Test).unwrap();
        assert!(s.users().is_empty());
        assert_eq!(s.skipped(), &[2, 7]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = SimilarityModel::import(DMatrix::zeros(3, 3), "t").unwrap();
        assert!(matches!(
            score_users(&m, &split_with(vec![], 4), Segment::Test),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ties_go_to_lower_index() {
        let s = ScoreMatrix {
            n_items: 3,
            users: vec![],
            rows: vec![vec![0.9, 0.9, 0.1]],
            skipped: vec![],
        };
        assert_eq!(top_n(&s, 2).unwrap().lists[0], vec![0, 1]);
        assert!(top_n(&s, 0).is_err());
    }
}
