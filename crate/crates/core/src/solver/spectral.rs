use nalgebra::DMatrix;
use serde::Serialize;

use super::ease::check_lambda;
use super::gram::{gram, DEFAULT_MEMORY_BUDGET};
use crate::dataset::InteractionMatrix;
use crate::error::{Error, Result};

/// Outcome of rebuilding `B` from the singular value decomposition of `X`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    /// Singular values of `X`, descending.
    pub singular_values: Vec<f64>,
    /// Numerical rank of `X`.
    pub rank: usize,
    /// Largest absolute entry of the spectral reconstruction minus the closed form.
    pub max_abs_deviation: f64,
    /// The reconstruction itself.
    #[serde(skip)]
    pub reconstruction: DMatrix<f64>,
}

/// Rebuild `B` from the thin SVD `X = U Σ Vᵀ` and Lagrange multipliers `α`:
///
/// ```text
/// B = V diag(σ²/(σ²+λ)) Vᵀ − [V diag(1/(σ²+λ)) Vᵀ + (1/λ)(I − V Vᵀ)] · diagMat(α)
/// ```
///
/// The `(1/λ)(I − V Vᵀ)` term is the null-space part of `(XᵀX + λI)⁻¹`.
/// The reconstruction is compared against the closed-form fit on the same data.
pub fn spectral_check(x: &InteractionMatrix, lambda: f64, alpha: &[f64]) -> Result<SpectralReport> {
    check_lambda(lambda)?;
    let n = x.n_items();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: alpha.len(),
        });
    }
    let mut d = DMatrix::<f64>::zeros(x.n_users(), n);
    for (u, row) in x.rows().iter().enumerate() {
        for &i in row {
            d[(u, i as usize)] = 1.0;
        }
    }
    let (values, v) = right_singular(d)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sigma: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let v = v.select_columns(&order);

    let tol = sigma.first().copied().unwrap_or(0.0) * (x.n_users().max(n) as f64) * f64::EPSILON;
    let rank = sigma.iter().filter(|&&s| s > tol).count();

    // Directions with zero singular value belong to the null-space term.
    let v = v.columns(0, rank).into_owned();
    let mut vs = v.clone();
    let mut vc = v.clone();
    for (k, &s) in sigma[..rank].iter().enumerate() {
        let s2 = s * s;
        vs.column_mut(k).scale_mut(s2 / (s2 + lambda));
        vc.column_mut(k).scale_mut(1.0 / (s2 + lambda));
    }
    let vvt = &v * v.transpose();
    let mut c = &vc * v.transpose();
    c += (DMatrix::identity(n, n) - vvt) / lambda;
    let mut b = &vs * v.transpose();
    for j in 0..n {
        for i in 0..n {
            b[(i, j)] -= c[(i, j)] * alpha[j];
        }
    }

    let closed = super::fit_ease(&gram(x, DEFAULT_MEMORY_BUDGET)?, lambda)?;
    let max_abs_deviation = (&b - closed.matrix()).amax();
    Ok(SpectralReport {
        singular_values: sigma,
        rank,
        max_abs_deviation,
        reconstruction: b,
    })
}

/// Singular values and right singular vectors (as columns) of `d`.
///
/// nalgebra's bidiagonal SVD loses accuracy on rank-deficient binary
/// matrices, so this one goes through faer.
fn right_singular(d: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = faer::Mat::<f64>::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)]);
    let svd = m.thin_svd().map_err(|_| Error::SvdFailed)?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let values = (0..s.nrows()).map(|k| s[k]).collect();
    Ok((
        values,
        DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    ))
}
