//! Grid search over regularization strength and item weighting.
//!
//! Every λ is paired with the unweighted model and with each weighting.
//! The chosen cell maximizes Coverage@K subject to
//! `NDCG@K ≥ (1 − ε) · best unweighted NDCG@K` on the validation segment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{EvalSplit, Segment};
use crate::error::{Error, Result};
use crate::eval::{evaluate_scores, score_users, EvalOptions, EvalReport};
use crate::propensity::{ItemCounts, PropensityFamily, PropensitySpec};
use crate::solver::{fit_ease, GramMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub weightings: Vec<PropensitySpec>,
    /// Allowed relative NDCG drop against the best unweighted cell.
    pub epsilon: f64,
    pub ndcg_k: usize,
    pub coverage_k: usize,
}

impl GridSpec {
    /// Log-sigmoid weighting with β in {0.1, ..., 0.9}.
    pub fn logsigmoid(lambdas: Vec<f64>) -> Self {
        Self {
            lambdas,
            weightings: default_beta_grid()
                .into_iter()
                .map(|beta| PropensitySpec::LogSigmoid { beta, alpha: None })
                .collect(),
            epsilon: DEFAULT_EPSILON,
            ndcg_k: 100,
            coverage_k: 100,
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 0.005;

pub fn default_beta_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lambda: f64,
    /// `None` for the unweighted model.
    pub weighting: Option<PropensitySpec>,
    /// Resolved family, including the derived log-sigmoid intercept.
    pub family: Option<PropensityFamily>,
    pub ndcg: f64,
    pub coverage: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub best_unweighted: usize,
    pub baseline_ndcg: f64,
    pub threshold: f64,
    /// Cells meeting the NDCG constraint, in grid order.
    pub feasible: Vec<usize>,
    pub fallback: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub spec: GridSpec,
    pub cells: Vec<GridCell>,
    pub chosen: usize,
    pub trace: SelectionTrace,
}

impl GridResult {
    pub fn chosen_cell(&self) -> &GridCell {
        &self.cells[self.chosen]
    }

    /// Flat per-cell table.
    pub fn cells_tsv(&self) -> String {
        let mut out =
            String::from("cell\tlambda\tfamily\tparams\tndcg\tcoverage\tfeasible\tchosen\n");
        for (k, c) in self.cells.iter().enumerate() {
            let (family, params) = match &c.family {
                None => ("none".to_string(), String::new()),
                Some(f) => {
                    let v = serde_json::to_value(f).unwrap_or_default();
                    let params = v
                        .as_object()
                        .map(|o| {
                            o.iter()
                                .filter(|(name, _)| *name != "family")
                                .map(|(name, x)| format!("{name}={x}"))
                                .collect::<Vec<_>>()
                                .join(",")
                        })
                        .unwrap_or_default();
                    (f.name().to_string(), params)
                }
            };
            out.push_str(&format!(
                "{k}\t{}\t{family}\t{params}\t{}\t{}\t{}\t{}\n",
                c.lambda,
                c.ndcg,
                c.coverage,
                self.trace.feasible.contains(&k),
                k == self.chosen
            ));
        }
        out
    }
}

/// Apply the selection rule to `(weighted?, ndcg, coverage)` triples in grid order.
pub fn select(cells: &[(bool, f64, f64)], epsilon: f64) -> Result<(usize, SelectionTrace)> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let best_unweighted = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.0)
        .fold(None, |best: Option<usize>, (k, c)| match best {
            Some(b) if cells[b].1 >= c.1 => Some(b),
            _ => Some(k),
        })
        .ok_or_else(|| Error::invalid("grid has no unweighted cell"))?;
    let baseline_ndcg = cells[best_unweighted].1;
    let threshold = (1.0 - epsilon) * baseline_ndcg;
    let feasible: Vec<usize> = (0..cells.len())
        .filter(|&k| cells[k].1 >= threshold)
        .collect();

    // Highest coverage, then highest NDCG, then earliest cell.
    let chosen = feasible
        .iter()
        .copied()
        .fold(None, |best: Option<usize>, k| match best {
            Some(b) if (cells[b].2, cells[b].1) >= (cells[k].2, cells[k].1) => Some(b),
            _ => Some(k),
        });
    let (chosen, fallback, reason) = match chosen {
        Some(k) => (
            k,
            false,
            format!(
                "cell {k}: highest coverage {} among {} cells with ndcg >= {threshold}",
                cells[k].2,
                feasible.len()
            ),
        ),
        None => (
            best_unweighted,
            true,
            format!("no cell reached ndcg {threshold}; fell back to best unweighted cell {best_unweighted}"),
        ),
    };
    Ok((
        chosen,
        SelectionTrace {
            best_unweighted,
            baseline_ndcg,
            threshold,
            feasible,
            fallback,
            reason,
        },
    ))
}

/// Evaluate every cell on the validation segment and select one.
pub fn grid_search(
    gram: &GramMatrix,
    split: &EvalSplit,
    counts: &ItemCounts,
    spec: &GridSpec,
    opts: &EvalOptions,
) -> Result<GridResult> {
    if spec.lambdas.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    let mut opts = opts.clone();
    if !opts.ndcg_ks.contains(&spec.ndcg_k) {
        opts.ndcg_ks.push(spec.ndcg_k);
    }
    if !opts.coverage_ks.contains(&spec.coverage_k) {
        opts.coverage_ks.push(spec.coverage_k);
    }
    let vectors = spec
        .weightings
        .iter()
        .map(|s| s.compute(counts))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for &lambda in &spec.lambdas {
        let model = fit_ease(gram, lambda)?;
        let scores = score_users(&model, split, Segment::Valid)?;
        let snapshot = |family: Option<PropensityFamily>| crate::eval::ConfigSnapshot {
            n_items: model.n_items(),
            lambda: Some(lambda),
            model: "ease".into(),
            weights: family.into_iter().map(Some).collect(),
            split_seed: split.seed,
            options: opts.clone(),
        };
        let plain = evaluate_scores(&scores, None, Segment::Valid, counts, &opts, snapshot(None))?;
        let weighted = spec
            .weightings
            .par_iter()
            .zip(vectors.par_iter())
            .map(|(s, pv)| {
                let r = evaluate_scores(
                    &scores,
                    Some(pv.weights()),
                    Segment::Valid,
                    counts,
                    &opts,
                    snapshot(Some(*pv.family())),
                )?;
                Ok((Some(*s), Some(*pv.family()), r))
            })
            .collect::<Result<Vec<_>>>()?;
        for (weighting, family, report) in std::iter::once((None, None, plain)).chain(weighted) {
            cells.push(GridCell {
                lambda,
                weighting,
                family,
                ndcg: report.ndcg[&spec.ndcg_k],
                coverage: report.coverage[&spec.coverage_k],
                report,
            });
        }
    }
    let triples: Vec<(bool, f64, f64)> = cells
        .iter()
        .map(|c| (c.weighting.is_some(), c.ndcg, c.coverage))
        .collect();
    let (chosen, trace) = select(&triples, spec.epsilon)?;
    Ok(GridResult {
        spec: spec.clone(),
        cells,
        chosen,
        trace,
    })
}
