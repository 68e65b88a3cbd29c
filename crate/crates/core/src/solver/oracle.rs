use nalgebra::{DMatrix, DVector};

use super::ease::check_lambda;
use super::model::{Provenance, SimilarityModel};
use crate::dataset::InteractionMatrix;
use crate::error::{Error, Result};

/// Item-count ceiling for the per-column reference solvers.
pub const ORACLE_MAX_ITEMS: usize = 200;

fn dense(x: &InteractionMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::zeros(x.n_users(), x.n_items());
    for (u, row) in x.rows().iter().enumerate() {
        for &i in row {
            d[(u, i as usize)] = 1.0;
        }
    }
    d
}

/// For each column j, solve `min ‖t_j − X₋ⱼ b‖² + λ‖b‖²` over the other
/// items with a general LU solve, and scatter `b` into column j leaving `B_jj = 0`.
fn column_solve(x: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = x.ncols();
    let mut b = DMatrix::<f64>::zeros(n, n);
    // A single item has no other columns to regress on.
    if n < 2 {
        return Ok(b);
    }
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&k| k != j).collect();
        let xm = x.select_columns(&others);
        let mut a = xm.transpose() * &xm;
        for k in 0..others.len() {
            a[(k, k)] += lambda;
        }
        let rhs: DVector<f64> = xm.transpose() * targets.column(j);
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("column {j} subproblem")))?;
        for (k, &i) in others.iter().enumerate() {
            b[(i, j)] = sol[k];
        }
    }
    Ok(b)
}

fn guard(x: &InteractionMatrix) -> Result<()> {
    if x.n_items() > ORACLE_MAX_ITEMS {
        return Err(Error::SizeGuard {
            n: x.n_items(),
            max: ORACLE_MAX_ITEMS,
        });
    }
    Ok(())
}

/// Reference EASE fit that never forms `(G + λI)⁻¹`; one constrained regression per item.
pub fn fit_ease_oracle(x: &InteractionMatrix, lambda: f64) -> Result<SimilarityModel> {
    check_lambda(lambda)?;
    guard(x)?;
    let d = dense(x);
    let b = column_solve(&d, &d, lambda)?;
    SimilarityModel::new(b, true, Some(lambda), Provenance::EaseOracle { lambda })
}

/// Reference solve of the weighted objective `‖X·diagMat(w) − XB‖² + λ‖B‖²` with `diag(B) = 0`.
pub fn fit_ease_weighted_oracle(
    x: &InteractionMatrix,
    lambda: f64,
    w: &[f64],
) -> Result<SimilarityModel> {
    check_lambda(lambda)?;
    guard(x)?;
    if w.len() != x.n_items() {
        return Err(Error::DimensionMismatch {
            expected: x.n_items(),
            found: w.len(),
        });
    }
    if w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("weights must be positive and finite"));
    }
    let d = dense(x);
    let mut t = d.clone();
    for (j, mut col) in t.column_iter_mut().enumerate() {
        col *= w[j];
    }
    let b = column_solve(&d, &t, lambda)?;
    SimilarityModel::new(b, true, Some(lambda), Provenance::WeightedOracle { lambda })
}
