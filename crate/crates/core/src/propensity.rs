//! Per-item propensity scores and their inverse weights.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::InteractionMatrix;
use crate::error::{Error, Result};
use crate::solver::GramMatrix;

/// Training interaction count per item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemCounts(Vec<u64>);

impl ItemCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        Self(counts)
    }

    /// Diagonal of the training Gram matrix.
    pub fn from_gram(g: &GramMatrix) -> Self {
        Self(g.counts())
    }

    pub fn from_matrix(x: &InteractionMatrix) -> Self {
        Self(x.item_degrees())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn min_max(&self) -> Result<(u64, u64)> {
        let min = self
            .0
            .iter()
            .copied()
            .min()
            .ok_or_else(|| Error::Empty("item counts".into()))?;
        Ok((min, self.0.iter().copied().max().unwrap_or(0)))
    }
}

/// Resolved family and parameters that produced a [`PropensityVector`].
///
/// Logarithms are natural.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PropensityFamily {
    PowerLaw { gamma: f64 },
    PowerLawClipped { gamma: f64, c: f64 },
    LogSigmoid { beta: f64, alpha: f64 },
}

impl PropensityFamily {
    /// Recompute the propensity vector this family describes.
    pub fn compute(&self, counts: &ItemCounts) -> Result<PropensityVector> {
        match *self {
            Self::PowerLaw { gamma } => propensity_powerlaw(counts, gamma),
            Self::PowerLawClipped { gamma, c } => {
                clip_propensity(&propensity_powerlaw(counts, gamma)?, c)
            }
            Self::LogSigmoid { beta, alpha } => propensity_logsigmoid(counts, beta, Some(alpha)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PowerLaw { .. } => "power-law",
            Self::PowerLawClipped { .. } => "power-law-clipped",
            Self::LogSigmoid { .. } => "log-sigmoid",
        }
    }
}

/// A requested weighting, before the log-sigmoid intercept is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PropensitySpec {
    PowerLaw {
        gamma: f64,
    },
    PowerLawClipped {
        gamma: f64,
        c: f64,
    },
    LogSigmoid {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
}

impl PropensitySpec {
    pub fn compute(&self, counts: &ItemCounts) -> Result<PropensityVector> {
        match *self {
            Self::PowerLaw { gamma } => propensity_powerlaw(counts, gamma),
            Self::PowerLawClipped { gamma, c } => {
                clip_propensity(&propensity_powerlaw(counts, gamma)?, c)
            }
            Self::LogSigmoid { beta, alpha } => propensity_logsigmoid(counts, beta, alpha),
        }
    }
}

/// Propensity scores `p` in (0, 1] and weights `w = 1/p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityVector {
    family: PropensityFamily,
    p: Vec<f64>,
    w: Vec<f64>,
}

impl PropensityVector {
    fn from_scores(family: PropensityFamily, p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::NonFinite(format!(
                "{} propensity {bad} is outside (0, 1]",
                family.name()
            )));
        }
        let w = p.iter().map(|v| 1.0 / v).collect::<Vec<_>>();
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} weights", family.name())));
        }
        Ok(Self { family, p, w })
    }

    pub fn family(&self) -> &PropensityFamily {
        &self.family
    }

    pub fn scores(&self) -> &[f64] {
        &self.p
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Two-column tab-separated text: external item id, weight.
    pub fn to_tsv(&self, item_ids: &[String]) -> Result<String> {
        if item_ids.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: item_ids.len(),
            });
        }
        let mut out = String::from("item_id\tweight\n");
        for (id, w) in item_ids.iter().zip(&self.w) {
            writeln!(out, "{id}\t{w}").unwrap();
        }
        Ok(out)
    }

    pub fn save_tsv(&self, item_ids: &[String], path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv(item_ids)?).map_err(|e| Error::io(path, e))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// `p_i = ((N_i + 1) / (max_j N_j + 1))^γ`.
pub fn propensity_powerlaw(counts: &ItemCounts, gamma: f64) -> Result<PropensityVector> {
    positive("gamma", gamma)?;
    let (_, max) = counts.min_max()?;
    let top = max as f64 + 1.0;
    let p = counts
        .0
        .iter()
        .map(|&n| ((n as f64 + 1.0) / top).powf(gamma))
        .collect();
    PropensityVector::from_scores(PropensityFamily::PowerLaw { gamma }, p)
}

/// Lower-bound power-law scores at `c`: `p̄_i = max(p_i, c)`.
pub fn clip_propensity(p: &PropensityVector, c: f64) -> Result<PropensityVector> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!(
            "clip level must be in (0, 1), got {c}"
        )));
    }
    let family = match p.family {
        PropensityFamily::PowerLaw { gamma } => PropensityFamily::PowerLawClipped { gamma, c },
        PropensityFamily::PowerLawClipped { gamma, c: old } => PropensityFamily::PowerLawClipped {
            gamma,
            c: old.max(c),
        },
        PropensityFamily::LogSigmoid { .. } => {
            return Err(Error::invalid("clipping applies to power-law propensities"));
        }
    };
    PropensityVector::from_scores(family, p.p.iter().map(|&v| v.max(c)).collect())
}

/// Sigmoid of log counts: `p_i = 1 / (1 + exp(−α − β·ln(N_i + 1)))`.
///
/// Without an override, `α = −β·(ln(min N + 1) + ln(max N + 1)) / 2`, which puts
/// the log-count midpoint at `p = 0.5`.
pub fn propensity_logsigmoid(
    counts: &ItemCounts,
    beta: f64,
    alpha_override: Option<f64>,
) -> Result<PropensityVector> {
    positive("beta", beta)?;
    let (min, max) = counts.min_max()?;
    let p = match alpha_override {
        Some(alpha) => {
            if !alpha.is_finite() {
                return Err(Error::invalid(format!("alpha must be finite, got {alpha}")));
            }
            let p = counts
                .0
                .iter()
                .map(|&n| sigmoid(alpha + beta * (n as f64 + 1.0).ln()))
                .collect();
            return PropensityVector::from_scores(PropensityFamily::LogSigmoid { beta, alpha }, p);
        }
        None => {
            let mid = ((min as f64 + 1.0).ln() + (max as f64 + 1.0).ln()) / 2.0;
            let p = counts
                .0
                .iter()
                .map(|&n| sigmoid(beta * ((n as f64 + 1.0).ln() - mid)))
                .collect();
            (p, -beta * mid)
        }
    };
    PropensityVector::from_scores(PropensityFamily::LogSigmoid { beta, alpha: p.1 }, p.0)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `γ·n^(γ−1)`, the slope of an unnormalized power-law score.
pub fn marginal_utility_powerlaw(n: u64, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("marginal utility is defined for n >= 1"));
    }
    Ok(gamma * (n as f64).powf(gamma - 1.0))
}

/// `1/(n+1)`, the slope of `ln(n+1)`.
pub fn marginal_utility_log(n: u64) -> f64 {
    1.0 / (n as f64 + 1.0)
}

/// Weight as a function of count over the distinct observed counts, ascending.
pub fn weight_curve(counts: &ItemCounts, spec: &PropensitySpec) -> Result<Vec<(u64, f64)>> {
    let pv = spec.compute(counts)?;
    let mut rows: Vec<(u64, f64)> = counts.0.iter().copied().zip(pv.w.iter().copied()).collect();
    rows.sort_by_key(|r| r.0);
    rows.dedup_by_key(|r| r.0);
    Ok(rows)
}

/// Tab-separated `count<TAB>weight` table with a header row.
pub fn weight_curve_tsv(curve: &[(u64, f64)]) -> String {
    let mut out = String::from("count\tweight\n");
    for (n, w) in curve {
        writeln!(out, "{n}\t{w}").unwrap();
    }
    out
}
