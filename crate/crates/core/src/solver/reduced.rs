use nalgebra::{DMatrix, SymmetricEigen};

use super::ease::check_lambda;
use super::gram::GramMatrix;
use super::model::{Provenance, SimilarityModel};
use crate::error::{Error, Result};

/// Leading eigenpairs of the Gram matrix, largest first. These are the
/// squared singular values and right singular vectors of `X`.
pub(crate) fn leading_eigen(g: &DMatrix<f64>, rank: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(g.clone(), f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
    let mut order: Vec<usize> = (0..g.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(rank);
    let values = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    Ok((values, eig.eigenvectors.select_columns(&order)))
}

/// EASE with the columns of `B` restricted to the span of the top-`rank`
/// right singular vectors `V_r` of `X`:
///
/// ```text
/// B = V_r diag(σ²/(σ²+λ)) V_rᵀ − V_r diag(1/(σ²+λ)) V_rᵀ · diagMat(α)
/// α_j = [V_r diag(σ²/(σ²+λ)) V_rᵀ]_jj / [V_r diag(1/(σ²+λ)) V_rᵀ]_jj
/// ```
///
/// The result has a zero diagonal and rank at most `rank`; at full rank it is
/// the ordinary closed form.
pub fn fit_rank_reduced(g: &GramMatrix, rank: usize, lambda: f64) -> Result<SimilarityModel> {
    check_lambda(lambda)?;
    let n = g.n_items();
    if rank == 0 || rank > n {
        return Err(Error::invalid(format!(
            "rank must be in 1..={n}, got {rank}"
        )));
    }
    let (s2, v) = leading_eigen(g.matrix(), rank)?;
    let mut vs = v.clone();
    let mut vc = v.clone();
    for (k, &s) in s2.iter().enumerate() {
        vs.column_mut(k).scale_mut(s / (s + lambda));
        vc.column_mut(k).scale_mut(1.0 / (s + lambda));
    }
    let a = &vs * v.transpose();
    let c = &vc * v.transpose();

    let c_max = c.diagonal().amax();
    let lagrange: Vec<f64> = (0..n)
        .map(|j| {
            let cjj = c[(j, j)];
            // A row of V_r that is numerically zero makes column j vanish regardless.
            if cjj <= c_max * 1e-14 {
                0.0
            } else {
                a[(j, j)] / cjj
            }
        })
        .collect();

    let mut b = a;
    for j in 0..n {
        let aj = lagrange[j];
        for i in 0..n {
            b[(i, j)] -= c[(i, j)] * aj;
        }
        b[(j, j)] = 0.0;
    }
    SimilarityModel::new(
        b,
        true,
        Some(lambda),
        Provenance::RankReduced {
            lambda,
            rank,
            lagrange,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::InteractionMatrix;
    use crate::solver::{fit_ease, gram, DEFAULT_MEMORY_BUDGET};

    fn data() -> GramMatrix {
        let x = InteractionMatrix::from_dense(&[
            vec![1, 1, 0, 0, 1],
            vec![0, 1, 1, 0, 0],
            vec![1, 0, 1, 1, 0],
            vec![1, 1, 1, 0, 1],
            vec![0, 0, 0, 1, 1],
            vec![1, 0, 0, 1, 0],
        ])
        .unwrap();
        gram(&x, DEFAULT_MEMORY_BUDGET).unwrap()
    }

    #[test]
    fn full_rank_matches_closed_form() {
        let g = data();
        let full = fit_ease(&g, 0.8).unwrap();
        let red = fit_rank_reduced(&g, 5, 0.8).unwrap();
        assert!((full.matrix() - red.matrix()).amax() < 1e-10);
        let (a, b) = (full.lagrange().unwrap(), red.lagrange().unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_is_bounded() {
        let g = data();
        for r in 1..5 {
            let m = fit_rank_reduced(&g, r, 0.5).unwrap();
            let sv = m.matrix().clone().singular_values();
            let numeric = sv.iter().filter(|&&s| s > 1e-9).count();
            assert!(numeric <= r, "rank {r} gave {numeric}");
            assert!(m.matrix().diagonal().amax() == 0.0);
        }
    }

    #[test]
    fn rejects_bad_rank() {
        assert!(fit_rank_reduced(&data(), 0, 1.0).is_err());
        assert!(fit_rank_reduced(&data(), 6, 1.0).is_err());
    }
}
