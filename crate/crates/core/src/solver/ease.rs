use nalgebra::{Cholesky, DMatrix};

use super::gram::GramMatrix;
use super::model::{Provenance, SimilarityModel};
use crate::error::{Error, Result};

/// Largest accepted condition estimate for `G + λI`.
const MAX_CONDITION: f64 = 1e14;

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// `(G + λI)⁻¹` through a Cholesky factorization.
pub(crate) fn regularized_inverse(g: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut a = g.clone();
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    let chol = Cholesky::new(a)
        .ok_or_else(|| Error::Singular("G + λI is not positive definite".into()))?;
    let l = chol.l_dirty();
    let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let d = l[(i, i)].abs();
        (lo.min(d), hi.max(d))
    });
    if n > 0 && (hi / lo).powi(2) > MAX_CONDITION {
        return Err(Error::Singular(format!(
            "condition estimate {:.3e}",
            (hi / lo).powi(2)
        )));
    }
    let p = chol.inverse();
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("(G + λI)⁻¹".into()));
    }
    Ok(p)
}

/// Closed-form EASE: with `P = (G + λI)⁻¹`, `B = I − P · diagMat(1 ⊘ diag(P))`.
///
/// The Lagrange multipliers of the zero-diagonal constraint,
/// `α = 1 ⊘ diag(P) − λ`, are kept in the model's provenance.
pub fn fit_ease(g: &GramMatrix, lambda: f64) -> Result<SimilarityModel> {
    check_lambda(lambda)?;
    let n = g.n_items();
    let p = regularized_inverse(g.matrix(), lambda)?;
    let inv_diag: Vec<f64> = p.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut b = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let eye = if i == j { 1.0 } else { 0.0 };
            b[(i, j)] = eye - p[(i, j)] * inv_diag[j];
        }
    }
    let lagrange = inv_diag.iter().map(|d| d - lambda).collect();
    SimilarityModel::new(b, true, Some(lambda), Provenance::Ease { lambda, lagrange })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram2() -> GramMatrix {
        GramMatrix::from_dense(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])).unwrap()
    }

    #[test]
    fn hand_worked_two_by_two() {
        // P = (1/5)[[2,-1],[-1,3]] so B = [[0, 1/3], [1/2, 0]].
        let m = fit_ease(&gram2(), 1.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / 3.0, 0.5, 0.0]);
        assert!((m.matrix() - want).amax() < 1e-12);
        // α = 1/diag(P) − λ = (5/2 − 1, 5/3 − 1)
        match m.provenance() {
            Provenance::Ease { lagrange, .. } => {
                assert!((lagrange[0] - 1.5).abs() < 1e-12);
                assert!((lagrange[1] - 2.0 / 3.0).abs() < 1e-12);
            }
            p => panic!("{p:?}"),
        }
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let m = fit_ease(&gram2(), 1e9).unwrap();
        assert!(m.matrix().amax() < 1e-6);
    }

    #[test]
    fn diagonal_is_zero() {
        let g = GramMatrix::from_dense(DMatrix::from_row_slice(
            3,
            3,
            &[4.0, 2.0, 1.0, 2.0, 3.0, 0.0, 1.0, 0.0, 2.0],
        ))
        .unwrap();
        let m = fit_ease(&g, 0.5).unwrap();
        assert!(m.matrix().diagonal().amax() <= crate::tol::EXACT);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        for l in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                fit_ease(&gram2(), l),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn ill_conditioned_is_singular() {
        let g =
            GramMatrix::from_dense(DMatrix::from_row_slice(2, 2, &[1e20, 0.0, 0.0, 0.0])).unwrap();
        assert!(matches!(fit_ease(&g, 1e-3), Err(Error::Singular(_))));
    }
}
