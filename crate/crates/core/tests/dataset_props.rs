mod common;

use std::collections::BTreeSet;

use common::random_matrix;
use ipslae::dataset::*;
use ipslae::rng;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn records(seed: u64, n: usize) -> Vec<InteractionRecord> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| {
            InteractionRecord::new(
                format!("u{}", r.random_range(0..30)),
                format!("i{}", r.random_range(0..15)),
                r.random_range(1..=5) as f64,
            )
        })
        .collect()
}

fn pairs(x: &InteractionMatrix) -> BTreeSet<(String, String)> {
    x.rows()
        .iter()
        .enumerate()
        .flat_map(|(u, row)| {
            row.iter()
                .map(move |&i| (x.user_ids()[u].clone(), x.item_ids()[i as usize].clone()))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_users_and_items(seed in any::<u64>(), u in 10usize..120, i in 1usize..30, density in 0.05f64..0.9) {
        let x = random_matrix(&mut rng::seeded(seed), u, i, density);
        let opts = SplitOptions { seed, ..Default::default() };
        let s = match split_strong_generalization(&x, &opts) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let mut all: Vec<u32> = s.train_users.iter().copied()
            .chain(s.valid.user_indices())
            .chain(s.test.user_indices())
            .collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..u as u32).collect::<Vec<_>>());
        for h in s.valid.users.iter().chain(&s.test.users) {
            let mut both: Vec<u32> = h.foldin.iter().chain(&h.holdout).copied().collect();
            both.sort_unstable();
            prop_assert_eq!(both.as_slice(), x.row(h.user as usize));
            prop_assert!(!h.holdout.is_empty() && !h.foldin.is_empty());
        }
        for &f in s.valid.foldin_only.iter().chain(&s.test.foldin_only) {
            prop_assert!(x.row(f as usize).len() < 2);
        }
        // Same seed, same split.
        prop_assert_eq!(split_strong_generalization(&x, &opts).unwrap(), s);
    }

    #[test]
    fn preprocess_ignores_record_order(seed in any::<u64>(), n in 20usize..300, min_u in 1usize..4, min_i in 1usize..4) {
        let recs = records(seed, n);
        let mut shuffled = recs.clone();
        shuffled.shuffle(&mut rng::seeded(seed ^ 7));
        let opts = PreprocessOptions { rating_threshold: 3.0, min_user_degree: min_u, min_item_degree: min_i };
        match (preprocess(&recs, &opts), preprocess(&shuffled, &opts)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "order changed success"),
        }
    }

    #[test]
    fn preprocess_meets_degree_floors(seed in any::<u64>(), n in 20usize..300, min_u in 1usize..5, min_i in 1usize..5) {
        let recs = records(seed, n);
        let opts = PreprocessOptions { rating_threshold: 2.0, min_user_degree: min_u, min_item_degree: min_i };
        if let Ok(x) = preprocess(&recs, &opts) {
            prop_assert!(x.rows().iter().all(|r| r.len() >= min_u));
            prop_assert!(x.item_degrees().iter().all(|&d| d as usize >= min_i));
            let kept: BTreeSet<(String, String)> = recs.iter()
                .filter(|r| r.value >= 2.0)
                .map(|r| (r.user_id.clone(), r.item_id.clone()))
                .collect();
            prop_assert!(pairs(&x).is_subset(&kept));
        }
    }

    #[test]
    fn matrix_and_split_round_trip(seed in any::<u64>(), u in 10usize..60, i in 1usize..20) {
        let x = random_matrix(&mut rng::seeded(seed), u, i, 0.3);
        prop_assert_eq!(&InteractionMatrix::from_json(&x.to_json().unwrap()).unwrap(), &x);
        let back = preprocess(&x.to_records(1.0), &PreprocessOptions::identity());
        if let Ok(y) = back {
            prop_assert_eq!(pairs(&y), pairs(&x));
        }
        if let Ok(s) = split_strong_generalization(&x, &SplitOptions::default()) {
            prop_assert_eq!(EvalSplit::from_json(&s.to_json().unwrap()).unwrap(), s);
        }
    }
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let x = random_matrix(&mut rng::seeded(3), 40, 12, 0.3);
    let p = dir.path().join("m.json");
    x.save(&p).unwrap();
    assert_eq!(InteractionMatrix::load(&p).unwrap(), x);
    let s = split_strong_generalization(&x, &SplitOptions::default()).unwrap();
    let q = dir.path().join("s.json");
    s.save(&q).unwrap();
    assert_eq!(EvalSplit::load(&q).unwrap(), s);
}

#[test]
fn csv_text_parses_to_the_same_matrix() {
    let text = "user_id,item_id,value\nb,x,5\na,y,4\na,x,1\nb,y,3\n";
    let recs = parse_interactions(text, &Delimited::csv()).unwrap();
    let x = preprocess(
        &recs,
        &PreprocessOptions {
            rating_threshold: 3.0,
            min_user_degree: 1,
            min_item_degree: 1,
        },
    )
    .unwrap();
    assert_eq!(x.user_ids(), ["a", "b"]);
    assert_eq!(x.item_ids(), ["x", "y"]);
    assert_eq!(x.rows(), [vec![1], vec![0, 1]]);
}

#[test]
fn synthetic_observations_sit_inside_preferences() {
    let cfg = MnarConfig {
        n_users: 300,
        n_items: 80,
        preference_density: 0.3,
        exposure: power_law_exposure(80, 0.5, 0.05, 4),
        structure: PreferenceStructure::long_tail(),
        seed: 4,
    };
    let t = generate_mnar(&cfg).unwrap();
    for (full, obs) in t.full.rows().iter().zip(t.observed.rows()) {
        assert!(obs.iter().all(|i| full.binary_search(i).is_ok()));
    }
    assert_eq!(generate_mnar(&cfg).unwrap().observed, t.observed);
}
