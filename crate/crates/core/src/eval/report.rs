use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    coverage_at_k, ndcg_at_k, popular_subset_metrics, popularity_bins, recall_at_k,
};
use super::score::{score_users, top_n, top_n_weighted, ScoreMatrix};
use crate::dataset::{EvalSplit, Segment};
use crate::error::{Error, Result};
use crate::propensity::{ItemCounts, PropensityFamily};
use crate::rng::RNG_ALGORITHM;
use crate::solver::SimilarityModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub recall_ks: Vec<usize>,
    pub ndcg_ks: Vec<usize>,
    pub coverage_ks: Vec<usize>,
    pub n_bins: usize,
    /// List length counted by the popularity-bin histogram.
    pub bin_k: usize,
    /// Share of most popular items used for popular-subset metrics; `None` skips them.
    pub popular_frac: Option<f64>,
    pub per_user: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            recall_ks: vec![20, 50],
            ndcg_ks: vec![100],
            coverage_ks: vec![100],
            n_bins: 10,
            bin_k: 100,
            popular_frac: Some(0.2),
            per_user: false,
        }
    }
}

impl EvalOptions {
    fn list_len(&self) -> usize {
        self.recall_ks
            .iter()
            .chain(&self.ndcg_ks)
            .chain(&self.coverage_ks)
            .copied()
            .chain([self.bin_k])
            .max()
            .unwrap_or(1)
    }

    fn validate(&self) -> Result<()> {
        let ks = self
            .recall_ks
            .iter()
            .chain(&self.ndcg_ks)
            .chain(&self.coverage_ks);
        if ks.clone().any(|&k| k == 0) || self.bin_k == 0 {
            return Err(Error::invalid("metric cutoffs must be >= 1"));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("n_bins must be >= 1"));
        }
        if let Some(f) = self.popular_frac {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!(
                    "popular_frac must be in (0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }
}

/// What was evaluated, recorded alongside the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub n_items: usize,
    pub lambda: Option<f64>,
    pub model: String,
    /// Weightings in application order; `null` for unnamed column scalings.
    pub weights: Vec<Option<PropensityFamily>>,
    pub split_seed: u64,
    pub options: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularReport {
    pub top_frac: f64,
    pub users: usize,
    pub recall: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: u32,
    pub recall: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub segment: Segment,
    pub users_evaluated: usize,
    pub users_skipped: usize,
    pub recall: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub coverage: BTreeMap<usize, f64>,
    pub bin_k: usize,
    /// Recommendations per popularity bin, most popular bin first.
    pub bins: Vec<u64>,
    pub popular: Option<PopularReport>,
    pub config: ConfigSnapshot,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_user: Option<Vec<UserMetrics>>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `metric<TAB>k<TAB>value` rows.
    pub fn metrics_tsv(&self) -> String {
        let mut out = String::from("metric\tk\tvalue\n");
        let mut put = |name: &str, m: &BTreeMap<usize, f64>| {
            for (k, v) in m {
                writeln!(out, "{name}\t{k}\t{v}").unwrap();
            }
        };
        put("recall", &self.recall);
        put("ndcg", &self.ndcg);
        put("coverage", &self.coverage);
        if let Some(p) = &self.popular {
            put("popular_recall", &p.recall);
            put("popular_ndcg", &p.ndcg);
        }
        out
    }

    /// `bin<TAB>count` rows, bin 1 most popular.
    pub fn bins_tsv(&self) -> String {
        let mut out = String::from("bin\tcount\n");
        for (b, c) in self.bins.iter().enumerate() {
            writeln!(out, "{}\t{c}", b + 1).unwrap();
        }
        out
    }

    pub fn per_user_tsv(&self) -> Option<String> {
        let users = self.per_user.as_ref()?;
        let mut out = String::from("user");
        for k in self.recall.keys() {
            write!(out, "\trecall@{k}").unwrap();
        }
        for k in self.ndcg.keys() {
            write!(out, "\tndcg@{k}").unwrap();
        }
        out.push('\n');
        for u in users {
            write!(out, "{}", u.user).unwrap();
            for v in u.recall.values().chain(u.ndcg.values()) {
                write!(out, "\t{v}").unwrap();
            }
            out.push('\n');
        }
        Some(out)
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    // Sequential summation keeps reports bit-identical across thread counts.
    values.sum::<f64>() / n.max(1) as f64
}

/// Score, rank and measure one segment.
pub fn evaluate(
    model: &SimilarityModel,
    split: &EvalSplit,
    segment: Segment,
    counts: &ItemCounts,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let scores = score_users(model, split, segment)?;
    let snapshot = ConfigSnapshot {
        n_items: model.n_items(),
        lambda: model.lambda(),
        model: provenance_kind(model),
        weights: model.weights_applied().iter().map(|a| a.family).collect(),
        split_seed: split.seed,
        options: opts.clone(),
    };
    evaluate_scores(&scores, None, segment, counts, opts, snapshot)
}

fn provenance_kind(model: &SimilarityModel) -> String {
    serde_json::to_value(model.provenance())
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned))
        .unwrap_or_default()
}

/// Metrics for precomputed scores, optionally rescaled by column weights `w`.
///
/// Ranking `S · diagMat(w)` is the same as ranking the scores of the
/// weighted model, so one scoring pass serves every weighting.
pub fn evaluate_scores(
    scores: &ScoreMatrix,
    w: Option<&[f64]>,
    segment: Segment,
    counts: &ItemCounts,
    opts: &EvalOptions,
    config: ConfigSnapshot,
) -> Result<EvalReport> {
    opts.validate()?;
    if counts.len() != scores.n_items() {
        return Err(Error::DimensionMismatch {
            expected: scores.n_items(),
            found: counts.len(),
        });
    }
    let users = scores.users();
    if users.is_empty() {
        return Err(Error::Empty(format!(
            "{segment} segment (no evaluable users)"
        )));
    }
    let n = opts.list_len();
    let ranked = match w {
        Some(w) => top_n_weighted(scores, w, n)?,
        None => top_n(scores, n)?,
    };
    let lists = &ranked.lists;
    let holdouts: Vec<&[u32]> = users.iter().map(|h| h.holdout.as_slice()).collect();
    let nu = users.len();

    let per_user: Vec<UserMetrics> = users
        .par_iter()
        .zip(lists.par_iter())
        .map(|(h, l)| UserMetrics {
            user: h.user,
            recall: opts
                .recall_ks
                .iter()
                .map(|&k| (k, recall_at_k(l, &h.holdout, k)))
                .collect(),
            ndcg: opts
                .ndcg_ks
                .iter()
                .map(|&k| (k, ndcg_at_k(l, &h.holdout, k)))
                .collect(),
        })
        .collect();

    let recall = opts
        .recall_ks
        .iter()
        .map(|&k| (k, mean(per_user.iter().map(|u| u.recall[&k]), nu)))
        .collect();
    let ndcg = opts
        .ndcg_ks
        .iter()
        .map(|&k| (k, mean(per_user.iter().map(|u| u.ndcg[&k]), nu)))
        .collect();
    let coverage = opts
        .coverage_ks
        .iter()
        .map(|&k| (k, coverage_at_k(lists, scores.n_items(), k)))
        .collect();
    let bins = popularity_bins(lists, counts, opts.n_bins, opts.bin_k);

    let popular = opts.popular_frac.map(|frac| {
        let mut recall = BTreeMap::new();
        let mut ndcg = BTreeMap::new();
        let mut users = 0;
        for &k in opts.recall_ks.iter().chain(&opts.ndcg_ks) {
            let m = popular_subset_metrics(lists, &holdouts, counts, frac, k);
            users = m.users;
            if opts.recall_ks.contains(&k) {
                recall.insert(k, m.recall);
            }
            if opts.ndcg_ks.contains(&k) {
                ndcg.insert(k, m.ndcg);
            }
        }
        PopularReport {
            top_frac: frac,
            users,
            recall,
            ndcg,
        }
    });

    Ok(EvalReport {
        segment,
        users_evaluated: nu,
        users_skipped: scores.skipped().len(),
        recall,
        ndcg,
        coverage,
        bin_k: opts.bin_k,
        bins,
        popular,
        config,
        rng: RNG_ALGORITHM.to_string(),
        per_user: opts.per_user.then_some(per_user),
    })
}
