use std::collections::HashSet;

use crate::propensity::ItemCounts;

fn prefix(list: &[u32], k: usize) -> &[u32] {
    &list[..k.min(list.len())]
}

/// `|top-k ∩ holdout| / min(k, |holdout|)`; 0 for an empty holdout.
pub fn recall_at_k(ranked: &[u32], holdout: &[u32], k: usize) -> f64 {
    let denom = k.min(holdout.len());
    if denom == 0 {
        return 0.0;
    }
    let hits = prefix(ranked, k)
        .iter()
        .filter(|i| holdout.contains(i))
        .count();
    hits as f64 / denom as f64
}

/// Binary-relevance NDCG with `log₂(rank + 1)` discounts.
pub fn ndcg_at_k(ranked: &[u32], holdout: &[u32], k: usize) -> f64 {
    let ideal = k.min(holdout.len());
    if ideal == 0 {
        return 0.0;
    }
    let discount = |r: usize| 1.0 / ((r + 2) as f64).log2();
    let dcg: f64 = prefix(ranked, k)
        .iter()
        .enumerate()
        .filter(|(_, i)| holdout.contains(i))
        .map(|(r, _)| discount(r))
        .sum();
    let idcg: f64 = (0..ideal).map(discount).sum();
    dcg / idcg
}

/// Share of the catalog appearing in at least one user's top-k.
pub fn coverage_at_k(lists: &[Vec<u32>], n_items: usize, k: usize) -> f64 {
    if n_items == 0 {
        return 0.0;
    }
    let seen: HashSet<u32> = lists
        .iter()
        .flat_map(|l| prefix(l, k).iter().copied())
        .collect();
    seen.len() as f64 / n_items as f64
}

/// Item indices ordered by training count, most popular first, lower index on ties.
fn by_popularity(counts: &ItemCounts) -> Vec<usize> {
    let c = counts.as_slice();
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].cmp(&c[a]).then(a.cmp(&b)));
    order
}

/// Count top-k recommendations per popularity bin.
///
/// Items sorted by count descending are cut into `n_bins` bins of equal item
/// count; the first `n_items % n_bins` bins take one extra item. Bin 0 is the
/// most popular.
pub fn popularity_bins(
    lists: &[Vec<u32>],
    counts: &ItemCounts,
    n_bins: usize,
    k: usize,
) -> Vec<u64> {
    let n_bins = n_bins.max(1);
    let n = counts.len();
    let (base, rem) = (n / n_bins, n % n_bins);
    let mut bin_of = vec![0usize; n];
    let mut pos = 0;
    let order = by_popularity(counts);
    for b in 0..n_bins {
        let size = base + usize::from(b < rem);
        for &i in &order[pos..pos + size] {
            bin_of[i] = b;
        }
        pos += size;
    }
    let mut hist = vec![0u64; n_bins];
    for l in lists {
        for &i in prefix(l, k) {
            hist[bin_of[i as usize]] += 1;
        }
    }
    hist
}

/// Membership mask of the `ceil(top_frac · n_items)` most popular items.
pub fn popular_items(counts: &ItemCounts, top_frac: f64) -> Vec<bool> {
    let n = counts.len();
    let take = ((top_frac * n as f64).ceil() as usize).clamp(usize::from(n > 0), n);
    let mut mask = vec![false; n];
    for i in by_popularity(counts).into_iter().take(take) {
        mask[i] = true;
    }
    mask
}

/// Mean Recall@k and NDCG@k against holdouts restricted to popular items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopularSubset {
    pub recall: f64,
    pub ndcg: f64,
    /// Users with at least one popular holdout item.
    pub users: usize,
}

/// Users whose restricted holdout is empty are skipped; rankings stay full-catalog.
pub fn popular_subset_metrics(
    lists: &[Vec<u32>],
    holdouts: &[&[u32]],
    counts: &ItemCounts,
    top_frac: f64,
    k: usize,
) -> PopularSubset {
    let mask = popular_items(counts, top_frac);
    let (mut recall, mut ndcg, mut users) = (0.0, 0.0, 0usize);
    for (l, h) in lists.iter().zip(holdouts) {
        let restricted: Vec<u32> = h.iter().copied().filter(|&i| mask[i as usize]).collect();
        if restricted.is_empty() {
            continue;
        }
        recall += recall_at_k(l, &restricted, k);
        ndcg += ndcg_at_k(l, &restricted, k);
        users += 1;
    }
    let d = users.max(1) as f64;
    PopularSubset {
        recall: recall / d,
        ndcg: ndcg / d,
        users,
    }
}
