use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propensity::{PropensityFamily, PropensityVector};
use crate::tol;

const MAGIC: &str = "IPSLAE-SIMILARITY";
const FORMAT_VERSION: u32 = 1;

/// How a model's matrix was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Ease {
        lambda: f64,
        lagrange: Vec<f64>,
    },
    EaseOracle {
        lambda: f64,
    },
    WeightedOracle {
        lambda: f64,
    },
    RankReduced {
        lambda: f64,
        rank: usize,
        lagrange: Vec<f64>,
    },
    External {
        description: String,
    },
}

/// One application of per-item column weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedWeights {
    pub family: Option<PropensityFamily>,
    pub w: Vec<f64>,
}

/// Dense item×item similarity matrix `B` with its fitting record.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    b: DMatrix<f64>,
    zero_diagonal: bool,
    lambda: Option<f64>,
    weights: Vec<AppliedWeights>,
    provenance: Provenance,
    metadata: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    n_items: usize,
    layout: String,
    lambda: Option<f64>,
    zero_diagonal: bool,
    provenance: Provenance,
    weights: Vec<AppliedWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

impl SimilarityModel {
    pub(crate) fn new(
        b: DMatrix<f64>,
        zero_diagonal: bool,
        lambda: Option<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::DimensionMismatch {
                expected: b.nrows(),
                found: b.ncols(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("similarity matrix".into()));
        }
        Ok(Self {
            b,
            zero_diagonal,
            lambda,
            weights: Vec::new(),
            provenance,
            metadata: None,
        })
    }

    /// Wrap a matrix fitted elsewhere. The zero-diagonal flag is derived from the data.
    pub fn import(b: DMatrix<f64>, description: impl Into<String>) -> Result<Self> {
        let zero = b.is_square() && b.diagonal().iter().all(|d| d.abs() <= tol::EXACT);
        Self::new(
            b,
            zero,
            None,
            Provenance::External {
                description: description.into(),
            },
        )
    }

    pub fn n_items(&self) -> usize {
        self.b.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn zero_diagonal(&self) -> bool {
        self.zero_diagonal
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Column weightings applied so far, oldest first.
    pub fn weights_applied(&self) -> &[AppliedWeights] {
        &self.weights
    }

    /// Free-form record stored in the container header, e.g. the run configuration.
    pub fn metadata(&self) -> Option<&serde_json::Value> {
        self.metadata.as_ref()
    }

    pub fn set_metadata(&mut self, metadata: serde_json::Value) {
        self.metadata = Some(metadata);
    }

    /// Lagrange multipliers of the zero-diagonal constraint, when known.
    pub fn lagrange(&self) -> Option<&[f64]> {
        match &self.provenance {
            Provenance::Ease { lagrange, .. } | Provenance::RankReduced { lagrange, .. } => {
                Some(lagrange)
            }
            _ => None,
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            format_version: FORMAT_VERSION,
            n_items: self.n_items(),
            layout: "row-major f64 little-endian".into(),
            lambda: self.lambda,
            zero_diagonal: self.zero_diagonal,
            provenance: self.provenance.clone(),
            weights: self.weights.clone(),
            metadata: self.metadata.clone(),
        };
        let fail = |e| Error::io("<model stream>", e);
        writeln!(out, "{MAGIC}").map_err(fail)?;
        writeln!(out, "{}", serde_json::to_string(&header)?).map_err(fail)?;
        let n = self.n_items();
        let mut buf = Vec::with_capacity(n * 8);
        for i in 0..n {
            buf.clear();
            for j in 0..n {
                buf.extend_from_slice(&self.b[(i, j)].to_le_bytes());
            }
            out.write_all(&buf).map_err(fail)?;
        }
        out.flush().map_err(fail)
    }

    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let fail = |e| Error::io("<model stream>", e);
        let mut line = String::new();
        input.read_line(&mut line).map_err(fail)?;
        if line.trim_end() != MAGIC {
            return Err(Error::Format("not a similarity model file".into()));
        }
        line.clear();
        input.read_line(&mut line).map_err(fail)?;
        let header: Header = serde_json::from_str(line.trim_end())?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version {}",
                header.format_version
            )));
        }
        let n = header.n_items;
        let mut bytes = vec![0u8; n * n * 8];
        input
            .read_exact(&mut bytes)
            .map_err(|_| Error::Format(format!("truncated payload, expected {n}×{n} values")))?;
        let mut rest = [0u8; 1];
        if input.read(&mut rest).map_err(fail)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let b = DMatrix::from_row_iterator(n, n, values);
        for aw in &header.weights {
            if aw.w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: aw.w.len(),
                });
            }
        }
        let mut m = Self::new(b, header.zero_diagonal, header.lambda, header.provenance)?;
        m.weights = header.weights;
        m.metadata = header.metadata;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            e => e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}

fn check_weights(n: usize, w: &[f64]) -> Result<()> {
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    if let Some((j, v)) = w
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::invalid(format!(
            "weight {j} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// `B · diagMat(w)` for an arbitrary positive weight vector.
///
/// Applying `w1` and then `w2 ⊘ w1` leaves the model weighted by `w2`.
pub fn scale_columns(model: &SimilarityModel, w: &[f64]) -> Result<SimilarityModel> {
    scale(model, w, None)
}

/// Post-hoc column weighting `B_w = B · diagMat(w)` with the propensity family recorded.
pub fn apply_item_weights(
    model: &SimilarityModel,
    w: &PropensityVector,
) -> Result<SimilarityModel> {
    scale(model, w.weights(), Some(*w.family()))
}

fn scale(
    model: &SimilarityModel,
    w: &[f64],
    family: Option<PropensityFamily>,
) -> Result<SimilarityModel> {
    check_weights(model.n_items(), w)?;
    let mut out = model.clone();
    for (j, mut col) in out.b.column_iter_mut().enumerate() {
        col *= w[j];
    }
    out.weights.push(AppliedWeights {
        family,
        w: w.to_vec(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimilarityModel {
        let b = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                0.25,
                -1.5,
                1e-300,
                0.0,
                7.0,
                f64::MIN_POSITIVE,
                -0.0,
                0.0,
            ],
        );
        SimilarityModel::new(
            b,
            true,
            Some(2.5),
            Provenance::Ease {
                lambda: 2.5,
                lagrange: vec![1.0, 2.0, 3.0],
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut m = scale_columns(&sample(), &[1.0, 2.0, 0.5]).unwrap();
        m.set_metadata(serde_json::json!({"run": "x"}));
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = SimilarityModel::read_from(&buf[..]).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.matrix().iter().zip(m.matrix().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        sample().save(&p).unwrap();
        assert_eq!(SimilarityModel::load(&p).unwrap(), sample());
    }

    #[test]
    fn rejects_truncated_and_foreign() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        assert!(matches!(
            SimilarityModel::read_from(&buf[..buf.len() - 1]),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            SimilarityModel::read_from(&b"hello\n"[..]),
            Err(Error::Format(_))
        ));
        buf.push(0);
        assert!(matches!(
            SimilarityModel::read_from(&buf[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn weighting_scales_columns() {
        let m = scale_columns(&sample(), &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.matrix()[(0, 1)], 0.75);
        assert_eq!(m.matrix()[(1, 2)], 28.0);
        assert_eq!(m.weights_applied().len(), 1);
    }

    #[test]
    fn weighting_rejects_bad_vectors() {
        assert!(matches!(
            scale_columns(&sample(), &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            scale_columns(&sample(), &[1.0, 0.0, 1.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            scale_columns(&sample(), &[1.0, f64::NAN, 1.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn import_detects_diagonal() {
        let m = SimilarityModel::import(DMatrix::identity(2, 2), "test").unwrap();
        assert!(!m.zero_diagonal());
        let m = SimilarityModel::import(DMatrix::zeros(2, 2), "test").unwrap();
        assert!(m.zero_diagonal());
        assert!(SimilarityModel::import(DMatrix::zeros(2, 3), "x").is_err());
    }
}
