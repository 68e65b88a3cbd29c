use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::matrix::InteractionMatrix;
use crate::error::{Error, Result};
use crate::rng;

/// Shape of the true preference matrix.
///
/// Preference probability for user `u` and item `i` is proportional to
///
/// ```text
/// topic(u, i) * exp(latent_scale * <f_u, g_i> / sqrt(latent_dim)) * appeal_i * activity_u
/// ```
///
/// rescaled so its mean over all cells is the requested density (cells that
/// would exceed 1 are capped). `topic` is `topic_boost` when the user and the
/// item share a topic and 1 otherwise; `appeal_i = rank_i^-appeal_exponent`
/// over a random item ranking; `activity_u = exp(activity_sigma * z_u)`.
/// The default is structureless: every cell has the same probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreferenceStructure {
    pub n_topics: usize,
    pub topic_boost: f64,
    pub latent_dim: usize,
    pub latent_scale: f64,
    pub appeal_exponent: f64,
    pub activity_sigma: f64,
}

impl Default for PreferenceStructure {
    fn default() -> Self {
        Self {
            n_topics: 1,
            topic_boost: 1.0,
            latent_dim: 1,
            latent_scale: 0.0,
            appeal_exponent: 0.0,
            activity_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnarConfig {
    pub n_users: usize,
    pub n_items: usize,
    /// Mean probability that a user truly prefers an item.
    pub preference_density: f64,
    /// Per-item probability that a true preference is observed.
    pub exposure: Vec<f64>,
    #[serde(default)]
    pub structure: PreferenceStructure,
    pub seed: u64,
}

/// Ground truth and observation of a synthetic MNAR corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGroundTruth {
    pub full: InteractionMatrix,
    pub exposure: Vec<f64>,
    /// Per-item count of true preferences.
    pub true_counts: Vec<u64>,
    pub observed: InteractionMatrix,
}

impl SyntheticGroundTruth {
    /// Per-item count of observed interactions.
    pub fn observed_counts(&self) -> Vec<u64> {
        self.observed.item_degrees()
    }

    /// Empirical observation rate per item; `None` where nothing is preferred.
    pub fn empirical_propensity(&self) -> Vec<Option<f64>> {
        self.observed_counts()
            .iter()
            .zip(&self.true_counts)
            .map(|(&obs, &all)| (all > 0).then(|| obs as f64 / all as f64))
            .collect()
    }
}

impl PreferenceStructure {
    /// Four topics, mild latent taste, and a popularity skew in true preferences.
    pub fn long_tail() -> Self {
        Self {
            n_topics: 4,
            topic_boost: 3.0,
            latent_dim: 8,
            latent_scale: 0.5,
            appeal_exponent: 0.8,
            activity_sigma: 0.7,
        }
    }
}

impl MnarConfig {
    /// 8000 users × 2000 items with `rank^-0.5` exposure, about 19 observed
    /// interactions per user. Small enough to fit and evaluate in seconds.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            n_users: 8000,
            n_items: 2000,
            preference_density: 0.35,
            exposure: power_law_exposure(2000, 0.5, 0.01, seed),
            structure: PreferenceStructure::long_tail(),
            seed,
        }
    }
}

/// Exposure falling off as a power of a random popularity rank:
/// `max(floor, rank^-exponent)` with ranks `1..=n_items`.
pub fn power_law_exposure(n_items: usize, exponent: f64, floor: f64, seed: u64) -> Vec<f64> {
    let mut ranks: Vec<usize> = (1..=n_items).collect();
    ranks.shuffle(&mut rng::substream(seed, 7));
    ranks
        .into_iter()
        .map(|r| (r as f64).powf(-exponent).max(floor).min(1.0))
        .collect()
}

/// Sample a true preference matrix and observe each preference
/// independently with its item's exposure probability.
pub fn generate_mnar(config: &MnarConfig) -> Result<SyntheticGroundTruth> {
    let (n_users, n_items) = (config.n_users, config.n_items);
    if n_users == 0 || n_items == 0 {
        return Err(Error::invalid(
            "synthetic corpus needs at least one user and one item",
        ));
    }
    let density = config.preference_density;
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::invalid(format!(
            "preference density must be in (0, 1), got {density}"
        )));
    }
    if config.exposure.len() != n_items {
        return Err(Error::DimensionMismatch {
            expected: n_items,
            found: config.exposure.len(),
        });
    }
    if let Some(bad) = config.exposure.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::invalid(format!(
            "exposure probabilities must be in (0, 1], found {bad}"
        )));
    }
    let st = &config.structure;
    if st.n_topics == 0 || st.latent_dim == 0 || !(st.topic_boost > 0.0) {
        return Err(Error::invalid(
            "preference structure needs n_topics >= 1, latent_dim >= 1, topic_boost > 0",
        ));
    }

    let mut feat = rng::substream(config.seed, 0);
    let user_topic: Vec<usize> = (0..n_users)
        .map(|_| feat.random_range(0..st.n_topics))
        .collect();
    let item_topic: Vec<usize> = (0..n_items)
        .map(|_| feat.random_range(0..st.n_topics))
        .collect();
    let mut normals =
        |n: usize| -> Vec<f64> { (0..n).map(|_| feat.sample(StandardNormal)).collect() };
    let user_f = normals(n_users * st.latent_dim);
    let item_f = normals(n_items * st.latent_dim);
    let activity: Vec<f64> = normals(n_users)
        .into_iter()
        .map(|z| (st.activity_sigma * z).exp())
        .collect();
    let mut ranks: Vec<usize> = (1..=n_items).collect();
    ranks.shuffle(&mut feat);
    let appeal: Vec<f64> = ranks
        .iter()
        .map(|&r| (r as f64).powf(-st.appeal_exponent))
        .collect();

    let scale = st.latent_scale / (st.latent_dim as f64).sqrt();
    let affinity = |u: usize, i: usize| -> f64 {
        let fu = &user_f[u * st.latent_dim..(u + 1) * st.latent_dim];
        let gi = &item_f[i * st.latent_dim..(i + 1) * st.latent_dim];
        let dot: f64 = fu.iter().zip(gi).map(|(a, b)| a * b).sum();
        let topic = if user_topic[u] == item_topic[i] {
            st.topic_boost
        } else {
            1.0
        };
        topic * (scale * dot).exp() * appeal[i] * activity[u]
    };
    let mean: f64 = (0..n_users)
        .map(|u| (0..n_items).map(|i| affinity(u, i)).sum::<f64>())
        .sum::<f64>()
        / (n_users * n_items) as f64;
    let norm = density / mean;

    let mut pref = rng::substream(config.seed, 1);
    let mut expose = rng::substream(config.seed, 2);
    let mut full_rows = Vec::with_capacity(n_users);
    let mut obs_rows = Vec::with_capacity(n_users);
    let mut true_counts = vec![0u64; n_items];
    for u in 0..n_users {
        let mut full = Vec::new();
        let mut obs = Vec::new();
        for i in 0..n_items {
            let p = (norm * affinity(u, i)).min(1.0);
            if pref.random::<f64>() < p {
                full.push(i as u32);
                true_counts[i] += 1;
                if expose.random::<f64>() < config.exposure[i] {
                    obs.push(i as u32);
                }
            }
        }
        full_rows.push(full);
        obs_rows.push(obs);
    }

    Ok(SyntheticGroundTruth {
        full: InteractionMatrix::from_index_rows(n_items, full_rows)?,
        exposure: config.exposure.clone(),
        true_counts,
        observed: InteractionMatrix::from_index_rows(n_items, obs_rows)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n_users: usize, n_items: usize, exposure: f64) -> MnarConfig {
        MnarConfig {
            n_users,
            n_items,
            preference_density: 0.3,
            exposure: vec![exposure; n_items],
            structure: PreferenceStructure::default(),
            seed: 5,
        }
    }

    #[test]
    fn certain_exposure_observes_everything() {
        let g = generate_mnar(&config(50, 20, 1.0)).unwrap();
        assert_eq!(g.observed, g.full);
        assert_eq!(g.observed_counts(), g.true_counts);
    }

    #[test]
    fn tiny_exposure_observes_almost_nothing() {
        let g = generate_mnar(&config(10, 20, 1e-9)).unwrap();
        assert!(g.full.nnz() > 0);
        assert_eq!(g.observed.nnz(), 0);
    }

    #[test]
    fn observed_is_subset_of_full() {
        let mut c = config(200, 30, 0.5);
        c.structure = PreferenceStructure {
            n_topics: 3,
            topic_boost: 4.0,
            latent_dim: 4,
            latent_scale: 1.0,
            appeal_exponent: 0.7,
            activity_sigma: 0.5,
        };
        c.exposure = power_law_exposure(30, 0.8, 0.05, 1);
        let g = generate_mnar(&c).unwrap();
        for u in 0..200 {
            for &i in g.observed.row(u) {
                assert!(g.full.contains(u, i));
            }
        }
        for (o, t) in g.observed_counts().iter().zip(&g.true_counts) {
            assert!(o <= t);
        }
    }

    #[test]
    fn uniform_density_is_respected() {
        let g = generate_mnar(&config(400, 50, 1.0)).unwrap();
        let d = g.full.stats().density;
        assert!((d - 0.3).abs() < 0.02, "density {d}");
    }

    #[test]
    fn deterministic() {
        let c = config(30, 10, 0.4);
        assert_eq!(generate_mnar(&c).unwrap(), generate_mnar(&c).unwrap());
    }

    #[test]
    fn rejects_degenerate() {
        assert!(generate_mnar(&config(0, 10, 0.5)).is_err());
        assert!(generate_mnar(&config(10, 0, 0.5)).is_err());
        assert!(generate_mnar(&config(10, 10, 0.0)).is_err());
        let mut c = config(10, 10, 0.5);
        c.preference_density = 1.0;
        assert!(generate_mnar(&c).is_err());
        c.preference_density = 0.5;
        c.exposure.pop();
        assert!(matches!(
            generate_mnar(&c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn power_law_exposure_shape() {
        let e = power_law_exposure(100, 1.0, 0.02, 3);
        assert_eq!(e.len(), 100);
        assert!(e.contains(&1.0));
        assert!(e.iter().all(|&x| (0.02..=1.0).contains(&x)));
    }
}
