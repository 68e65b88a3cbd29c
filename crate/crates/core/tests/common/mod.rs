#![allow(dead_code)]

use ipslae::dataset::InteractionMatrix;
use rand::Rng;

/// Random binary matrix with the given shape and fill rate.
pub fn random_matrix(
    rng: &mut impl Rng,
    n_users: usize,
    n_items: usize,
    density: f64,
) -> InteractionMatrix {
    let rows = (0..n_users)
        .map(|_| {
            (0..n_items as u32)
                .filter(|_| rng.random_bool(density))
                .collect()
        })
        .collect();
    InteractionMatrix::from_index_rows(n_items, rows).unwrap()
}

/// Random matrix whose columns repeat or vanish, so `XᵀX` is singular.
pub fn rank_deficient(rng: &mut impl Rng, n_users: usize, n_items: usize) -> InteractionMatrix {
    let base = (n_items / 2).max(1);
    let x = random_matrix(rng, n_users, base, 0.4);
    // Column j copies column j % base; the final column stays empty.
    let rows = x
        .rows()
        .iter()
        .map(|r| {
            (0..n_items as u32 - 1)
                .filter(|j| r.binary_search(&(j % base as u32)).is_ok())
                .collect()
        })
        .collect();
    InteractionMatrix::from_index_rows(n_items, rows).unwrap()
}

pub fn max_abs_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).amax()
}
