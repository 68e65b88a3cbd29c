mod common;

use common::{max_abs_diff, random_matrix, rank_deficient};
use ipslae::dataset::{EvalSplit, HeldOutUser, Segment, SegmentSplit, SplitOptions};
use ipslae::eval::{score_users, top_n};
use ipslae::rng;
use ipslae::solver::*;
use ipslae::tol;
use proptest::prelude::*;
use rand::Rng;

fn instance() -> impl Strategy<Value = (u64, usize, usize, f64)> {
    (
        any::<u64>(),
        1usize..40,
        1usize..20,
        prop_oneof![Just(0.1), Just(1.0), Just(10.0), 0.05f64..50.0],
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_matches_per_column_oracle((seed, u, i, lambda) in instance()) {
        let x = random_matrix(&mut rng::seeded(seed), u, i, 0.3);
        let fast = fit_ease(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), lambda).unwrap();
        let slow = fit_ease_oracle(&x, lambda).unwrap();
        prop_assert!(max_abs_diff(fast.matrix(), slow.matrix()) < tol::CROSS_PATH);
        prop_assert!(fast.matrix().diagonal().amax() <= tol::EXACT);
    }

    #[test]
    fn weighting_after_fit_equals_weighted_fit((seed, u, i, lambda) in instance()) {
        let mut r = rng::seeded(seed);
        let x = random_matrix(&mut r, u, i, 0.3);
        let w: Vec<f64> = (0..i).map(|_| r.random_range(0.2..8.0)).collect();
        let shortcut = scale_columns(&fit_ease(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), lambda).unwrap(), &w).unwrap();
        let direct = fit_ease_weighted_oracle(&x, lambda, &w).unwrap();
        prop_assert!(max_abs_diff(shortcut.matrix(), direct.matrix()) < tol::CROSS_PATH);
    }

    #[test]
    fn retargeting_composes((seed, u, i, lambda) in instance()) {
        let mut r = rng::seeded(seed);
        let x = random_matrix(&mut r, u, i, 0.3);
        let w1: Vec<f64> = (0..i).map(|_| r.random_range(0.2..8.0)).collect();
        let w2: Vec<f64> = (0..i).map(|_| r.random_range(0.2..8.0)).collect();
        let ratio: Vec<f64> = w2.iter().zip(&w1).map(|(a, b)| a / b).collect();
        let base = fit_ease(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), lambda).unwrap();
        let two_step = scale_columns(&scale_columns(&base, &w1).unwrap(), &ratio).unwrap();
        let one_step = scale_columns(&base, &w2).unwrap();
        prop_assert!(max_abs_diff(two_step.matrix(), one_step.matrix()) < tol::CROSS_PATH);
    }

    #[test]
    fn spectral_reconstruction_matches((seed, u, i, lambda) in instance(), deficient in any::<bool>()) {
        let mut r = rng::seeded(seed);
        let x = if deficient && i >= 2 { rank_deficient(&mut r, u, i) } else { random_matrix(&mut r, u, i, 0.3) };
        let m = fit_ease(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), lambda).unwrap();
        let rep = spectral_check(&x, lambda, m.lagrange().unwrap()).unwrap();
        prop_assert!(rep.max_abs_deviation < tol::CROSS_PATH, "{}", rep.max_abs_deviation);
        prop_assert!(rep.rank <= u.min(i));
    }

    #[test]
    fn full_rank_reduction_is_the_closed_form((seed, u, i, lambda) in instance()) {
        let x = random_matrix(&mut rng::seeded(seed), u, i, 0.3);
        let g = gram(&x, DEFAULT_MEMORY_BUDGET).unwrap();
        let full = fit_ease(&g, lambda).unwrap();
        let red = fit_rank_reduced(&g, i, lambda).unwrap();
        prop_assert!(max_abs_diff(full.matrix(), red.matrix()) < tol::CROSS_PATH);
    }

    #[test]
    fn reduced_model_keeps_zero_diagonal((seed, u, i, lambda) in instance(), frac in 0.1f64..1.0) {
        let x = random_matrix(&mut rng::seeded(seed), u, i, 0.3);
        let rank = ((i as f64 * frac).ceil() as usize).clamp(1, i);
        let m = fit_rank_reduced(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), rank, lambda).unwrap();
        prop_assert!(m.matrix().diagonal().amax() == 0.0);
    }

    #[test]
    fn global_weight_scale_keeps_rankings((seed, u, i, lambda) in instance(), e in -10i32..10) {
        // Powers of two scale exactly, so tied scores stay tied.
        let c = 2f64.powi(e);
        let mut r = rng::seeded(seed);
        let x = random_matrix(&mut r, u.max(4), i.max(2), 0.4);
        let w: Vec<f64> = (0..x.n_items()).map(|_| r.random_range(0.5..4.0)).collect();
        let cw: Vec<f64> = w.iter().map(|v| v * c).collect();
        let base = fit_ease(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), lambda).unwrap();
        let users = (0..x.n_users() as u32)
            .filter(|&u| !x.row(u as usize).is_empty())
            .map(|u| HeldOutUser { user: u, foldin: x.row(u as usize).to_vec(), holdout: vec![0] })
            .collect();
        let split = EvalSplit {
            format: "ipslae-eval-split".into(),
            format_version: 1,
            seed: 0,
            rng: String::new(),
            options: SplitOptions::default(),
            n_users: x.n_users(),
            n_items: x.n_items(),
            train_users: vec![],
            valid: SegmentSplit::default(),
            test: SegmentSplit { users, foldin_only: vec![] },
        };
        let rank = |w: &[f64]| top_n(&score_users(&scale_columns(&base, w).unwrap(), &split, Segment::Test).unwrap(), 10).unwrap();
        prop_assert_eq!(rank(&w), rank(&cw));
    }
}

#[test]
fn container_round_trip_of_a_fit() {
    let x = random_matrix(&mut rng::seeded(9), 30, 12, 0.3);
    let m = fit_ease(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), 2.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.bin");
    m.save(&p).unwrap();
    assert_eq!(SimilarityModel::load(&p).unwrap(), m);
}

#[test]
fn all_zero_matrix_gives_zero_model() {
    let x = ipslae::dataset::InteractionMatrix::from_index_rows(5, vec![vec![]; 3]).unwrap();
    let m = fit_ease(&gram(&x, DEFAULT_MEMORY_BUDGET).unwrap(), 1.0).unwrap();
    assert_eq!(m.matrix().amax(), 0.0);
}

#[test]
fn imported_model_can_be_weighted() {
    let b = nalgebra::DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { (i + 2 * j) as f64 });
    let m = SimilarityModel::import(b.clone(), "external").unwrap();
    let w = scale_columns(&m, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(w.matrix()[(1, 3)], b[(1, 3)] * 4.0);
    assert!(matches!(w.provenance(), Provenance::External { .. }));
}
