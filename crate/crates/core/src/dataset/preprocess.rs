use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::matrix::{id_order, InteractionMatrix};
use super::records::InteractionRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessOptions {
    /// Records with `value >= rating_threshold` become interactions.
    pub rating_threshold: f64,
    pub min_user_degree: usize,
    pub min_item_degree: usize,
}

impl PreprocessOptions {
    /// Explicit ratings: keep ratings of 4 and above, users with at least 5 items.
    pub fn ratings() -> Self {
        Self {
            rating_threshold: 4.0,
            min_user_degree: 5,
            min_item_degree: 0,
        }
    }

    /// Play or click counts: any positive count is an interaction.
    pub fn counts() -> Self {
        Self {
            rating_threshold: 1.0,
            min_user_degree: 5,
            min_item_degree: 0,
        }
    }

    /// Keep every distinct pair.
    pub fn identity() -> Self {
        Self {
            rating_threshold: 0.0,
            min_user_degree: 1,
            min_item_degree: 1,
        }
    }
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self::ratings()
    }
}

/// Threshold, binarize, and prune users and items below the degree limits
/// until nothing changes.
///
/// Ids are re-indexed in canonical order (see `InteractionMatrix`), so the
/// result does not depend on record order.
pub fn preprocess(
    records: &[InteractionRecord],
    opts: &PreprocessOptions,
) -> Result<InteractionMatrix> {
    if records.is_empty() {
        return Err(Error::Empty("record list".into()));
    }
    if !opts.rating_threshold.is_finite() {
        return Err(Error::invalid("rating threshold must be finite"));
    }

    let mut users: HashMap<&str, u32> = HashMap::new();
    let mut items: HashMap<&str, u32> = HashMap::new();
    let mut user_names: Vec<&str> = Vec::new();
    let mut item_names: Vec<&str> = Vec::new();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for r in records.iter().filter(|r| r.value >= opts.rating_threshold) {
        let u = *users.entry(&r.user_id).or_insert_with(|| {
            user_names.push(&r.user_id);
            (user_names.len() - 1) as u32
        });
        let i = *items.entry(&r.item_id).or_insert_with(|| {
            item_names.push(&r.item_id);
            (item_names.len() - 1) as u32
        });
        pairs.push((u, i));
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut user_alive = vec![true; user_names.len()];
    let mut item_alive = vec![true; item_names.len()];
    loop {
        let before = pairs.len();

        let mut udeg = vec![0usize; user_names.len()];
        for &(u, _) in &pairs {
            udeg[u as usize] += 1;
        }
        for (alive, &d) in user_alive.iter_mut().zip(&udeg) {
            *alive = *alive && d >= opts.min_user_degree.max(1);
        }
        pairs.retain(|&(u, _)| user_alive[u as usize]);

        let mut ideg = vec![0usize; item_names.len()];
        for &(_, i) in &pairs {
            ideg[i as usize] += 1;
        }
        for (alive, &d) in item_alive.iter_mut().zip(&ideg) {
            *alive = *alive && d >= opts.min_item_degree.max(1);
        }
        pairs.retain(|&(_, i)| item_alive[i as usize]);

        if pairs.len() == before {
            break;
        }
    }

    // Any user or item still marked alive has at least one pair left, because
    // the final pass removed nothing.
    let canonical = |alive: &[bool], names: &[&str]| -> (Vec<String>, Vec<u32>) {
        let mut kept: Vec<usize> = (0..names.len()).filter(|&k| alive[k]).collect();
        kept.sort_by(|&a, &b| id_order(names[a], names[b]));
        let mut remap = vec![u32::MAX; names.len()];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new as u32;
        }
        (kept.iter().map(|&k| names[k].to_string()).collect(), remap)
    };
    let (user_ids, user_map) = canonical(&user_alive, &user_names);
    let (item_ids, item_map) = canonical(&item_alive, &item_names);
    if user_ids.is_empty() || item_ids.is_empty() {
        return Err(Error::Empty("interaction matrix after filtering".into()));
    }

    let mut rows = vec![Vec::new(); user_ids.len()];
    for &(u, i) in &pairs {
        rows[user_map[u as usize] as usize].push(item_map[i as usize]);
    }
    InteractionMatrix::from_rows(rows, user_ids, item_ids)
}
