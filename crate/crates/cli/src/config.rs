use std::path::{Path, PathBuf};

use ipslae::dataset::{Delimited, PreferenceStructure, PreprocessOptions, SplitOptions};
use ipslae::eval::EvalOptions;
use ipslae::grid::{default_beta_grid, DEFAULT_EPSILON};
use ipslae::propensity::PropensitySpec;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Everything a run needs. Every section is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub preprocess: PreprocessOptions,
    pub split: SplitOptions,
    pub fit: FitConfig,
    pub weighting: WeightingConfig,
    pub eval: EvalOptions,
    pub selection: SelectionConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            preprocess: PreprocessOptions::default(),
            split: SplitOptions::default(),
            fit: FitConfig::default(),
            weighting: WeightingConfig::default(),
            eval: EvalOptions::default(),
            selection: SelectionConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Raw interaction log.
    pub input: Option<PathBuf>,
    /// `csv` (comma, header row) or `tsv` (tab, no header).
    pub format: String,
    pub header: Option<bool>,
    /// Matrix container; defaults to `<output_dir>/matrix.json`.
    pub matrix: Option<PathBuf>,
    /// Split container; defaults to `<output_dir>/split.json`.
    pub split: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: "csv".into(),
            header: None,
            matrix: None,
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub lambdas: Vec<f64>,
    /// Cap on one dense item×item matrix, in GiB.
    pub memory_budget_gib: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![500.0],
            memory_budget_gib: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingConfig {
    /// Family for `weight` and `curve`: power-law, power-law-clipped or log-sigmoid.
    pub family: String,
    pub gamma: f64,
    pub c: f64,
    pub beta: f64,
    pub alpha: Option<f64>,
    /// Families searched by `gridsearch`.
    pub grid_families: Vec<String>,
    pub beta_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        Self {
            family: "log-sigmoid".into(),
            gamma: 0.5,
            c: 0.1,
            beta: 0.5,
            alpha: None,
            grid_families: vec!["log-sigmoid".into()],
            beta_grid: default_beta_grid(),
            gamma_grid: vec![0.5],
            c_grid: vec![0.01, 0.03, 0.05, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub epsilon: f64,
    pub ndcg_k: usize,
    pub coverage_k: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            ndcg_k: 100,
            coverage_k: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub preference_density: f64,
    pub exposure_exponent: f64,
    pub exposure_floor: f64,
    pub structure: PreferenceStructure,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 8000,
            n_items: 2000,
            preference_density: 0.35,
            exposure_exponent: 0.5,
            exposure_floor: 0.01,
            structure: PreferenceStructure::long_tail(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Read `path` (if any), apply `key.path=value` overrides, and validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, Failure> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Failure::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: &str| Err(Failure::Config(m.to_string()));
        if self.fit.lambdas.is_empty() {
            return bad("fit.lambdas is empty");
        }
        if !(self.fit.memory_budget_gib > 0.0) {
            return bad("fit.memory_budget_gib must be positive");
        }
        let w = &self.weighting;
        if w.beta_grid.is_empty()
            || w.gamma_grid.is_empty()
            || w.c_grid.is_empty()
            || w.grid_families.is_empty()
        {
            return bad("weighting grids must be nonempty");
        }
        if !(self.selection.epsilon >= 0.0) {
            return bad("selection.epsilon must be >= 0");
        }
        if !matches!(self.data.format.as_str(), "csv" | "tsv") {
            return bad("data.format must be csv or tsv");
        }
        for f in std::iter::once(&w.family).chain(&w.grid_families) {
            parse_family(f)?;
        }
        Ok(())
    }

    pub fn memory_budget(&self) -> u64 {
        (self.fit.memory_budget_gib * (1u64 << 30) as f64) as u64
    }

    pub fn delimited(&self) -> Delimited {
        let mut d = if self.data.format == "tsv" {
            Delimited::tsv()
        } else {
            Delimited::csv()
        };
        if let Some(h) = self.data.header {
            d.has_header = h;
        }
        d
    }

    pub fn matrix_path(&self) -> PathBuf {
        self.data
            .matrix
            .clone()
            .unwrap_or_else(|| self.output_dir.join("matrix.json"))
    }

    pub fn split_path(&self) -> PathBuf {
        self.data
            .split
            .clone()
            .unwrap_or_else(|| self.output_dir.join("split.json"))
    }

    /// The single weighting used by `weight` and `curve`.
    pub fn weighting_spec(&self) -> Result<PropensitySpec, Failure> {
        let w = &self.weighting;
        Ok(match parse_family(&w.family)? {
            Family::PowerLaw => PropensitySpec::PowerLaw { gamma: w.gamma },
            Family::Clipped => PropensitySpec::PowerLawClipped {
                gamma: w.gamma,
                c: w.c,
            },
            Family::LogSigmoid => PropensitySpec::LogSigmoid {
                beta: w.beta,
                alpha: w.alpha,
            },
        })
    }

    /// Every weighting searched by `gridsearch`, in grid order.
    pub fn grid_specs(&self) -> Result<Vec<PropensitySpec>, Failure> {
        let w = &self.weighting;
        let mut out = Vec::new();
        for f in &w.grid_families {
            match parse_family(f)? {
                Family::PowerLaw => out.extend(
                    w.gamma_grid
                        .iter()
                        .map(|&gamma| PropensitySpec::PowerLaw { gamma }),
                ),
                Family::Clipped => {
                    for &gamma in &w.gamma_grid {
                        out.extend(
                            w.c_grid
                                .iter()
                                .map(|&c| PropensitySpec::PowerLawClipped { gamma, c }),
                        );
                    }
                }
                Family::LogSigmoid => {
                    out.extend(w.beta_grid.iter().map(|&beta| PropensitySpec::LogSigmoid {
                        beta,
                        alpha: w.alpha,
                    }))
                }
            }
        }
        Ok(out)
    }
}

enum Family {
    PowerLaw,
    Clipped,
    LogSigmoid,
}

fn parse_family(name: &str) -> Result<Family, Failure> {
    match name {
        "power-law" => Ok(Family::PowerLaw),
        "power-law-clipped" => Ok(Family::Clipped),
        "log-sigmoid" => Ok(Family::LogSigmoid),
        other => Err(Failure::Config(format!(
            "unknown propensity family {other:?} (expected power-law, power-law-clipped or log-sigmoid)"
        ))),
    }
}

/// `a.b.c=value`, with `value` read as a TOML literal and falling back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), Failure> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Failure::Config(format!("override {spec:?} is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = parts.split_last().unwrap();
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Failure::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
