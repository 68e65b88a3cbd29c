use nalgebra::DMatrix;

use crate::dataset::InteractionMatrix;
use crate::error::{Error, Result};

/// Default cap on a single dense item×item matrix: 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

/// Item co-occurrence counts `XᵀX`. Entry `(i, i)` is item i's interaction count.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    g: DMatrix<f64>,
}

impl GramMatrix {
    pub fn n_items(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn counts(&self) -> Vec<u64> {
        self.g.diagonal().iter().map(|&c| c as u64).collect()
    }

    pub fn from_dense(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::DimensionMismatch {
                expected: g.nrows(),
                found: g.ncols(),
            });
        }
        Ok(Self { g })
    }
}

pub(crate) fn check_budget(n: usize, budget: u64) -> Result<()> {
    let required = (n as u64).saturating_mul(n as u64).saturating_mul(8);
    if required > budget {
        return Err(Error::MemoryBudget {
            n,
            required,
            budget,
        });
    }
    Ok(())
}

/// Accumulate `XᵀX` from the sparse rows into a dense symmetric matrix.
pub fn gram(x: &InteractionMatrix, memory_budget: u64) -> Result<GramMatrix> {
    let n = x.n_items();
    check_budget(n, memory_budget)?;
    let mut g = DMatrix::<f64>::zeros(n, n);
    for row in x.rows() {
        for (k, &a) in row.iter().enumerate() {
            let a = a as usize;
            g[(a, a)] += 1.0;
            for &b in &row[k + 1..] {
                g[(b as usize, a)] += 1.0;
            }
        }
    }
    // Only the lower triangle was accumulated.
    for j in 0..n {
        for i in j + 1..n {
            g[(j, i)] = g[(i, j)];
        }
    }
    Ok(GramMatrix { g })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let x = InteractionMatrix::from_dense(&[vec![1, 1], vec![1, 0]]).unwrap();
        let g = gram(&x, DEFAULT_MEMORY_BUDGET).unwrap();
        assert_eq!(
            g.matrix(),
            &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])
        );
        assert_eq!(g.counts(), vec![2, 1]);
    }

    #[test]
    fn all_zero() {
        let x = InteractionMatrix::from_dense(&[vec![0, 0, 0], vec![0, 0, 0]]).unwrap();
        let g = gram(&x, DEFAULT_MEMORY_BUDGET).unwrap();
        assert!(g.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn row_order_invariant() {
        let a =
            InteractionMatrix::from_dense(&[vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 1]]).unwrap();
        let b =
            InteractionMatrix::from_dense(&[vec![1, 1, 1], vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        assert_eq!(
            gram(&a, DEFAULT_MEMORY_BUDGET).unwrap(),
            gram(&b, DEFAULT_MEMORY_BUDGET).unwrap()
        );
    }

    #[test]
    fn budget_guard() {
        let x = InteractionMatrix::from_index_rows(100, vec![vec![0, 99]]).unwrap();
        assert!(matches!(
            gram(&x, 100 * 100 * 8 - 1),
            Err(Error::MemoryBudget { n: 100, .. })
        ));
        assert!(gram(&x, 100 * 100 * 8).is_ok());
    }
}
