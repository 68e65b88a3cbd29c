use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::InteractionRecord;
use crate::error::{Error, Result};

const MATRIX_FORMAT: &str = "ipslae-interaction-matrix";
const MATRIX_FORMAT_VERSION: u32 = 1;

/// Sparse binary user–item matrix in canonical form.
///
/// Each row lists the item indices the user interacted with, strictly
/// increasing. External ids are kept alongside so results can be mapped back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionMatrix {
    n_items: usize,
    rows: Vec<Vec<u32>>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub density: f64,
}

impl InteractionMatrix {
    /// Build from per-user item lists; rows are sorted and deduplicated.
    pub fn from_rows(
        rows: Vec<Vec<u32>>,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != user_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: user_ids.len(),
                found: rows.len(),
            });
        }
        let n_items = item_ids.len();
        let mut rows = rows;
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            if let Some(&last) = row.last() {
                if last as usize >= n_items {
                    return Err(Error::invalid(format!(
                        "item index {last} out of range for {n_items} items"
                    )));
                }
            }
        }
        Ok(Self {
            n_items,
            rows,
            user_ids,
            item_ids,
        })
    }

    /// Build from index rows with generated ids `u0..`, `i0..`.
    pub fn from_index_rows(n_items: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let user_ids = (0..rows.len()).map(|u| format!("u{u}")).collect();
        let item_ids = (0..n_items).map(|i| format!("i{i}")).collect();
        Self::from_rows(rows, user_ids, item_ids)
    }

    /// Build from a dense 0/1 table; any nonzero entry counts as an interaction.
    pub fn from_dense(dense: &[Vec<u8>]) -> Result<Self> {
        let n_items = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|r| {
                if r.len() != n_items {
                    return Err(Error::DimensionMismatch {
                        expected: n_items,
                        found: r.len(),
                    });
                }
                Ok(r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(i, _)| i as u32)
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_index_rows(n_items, rows)
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, user: usize) -> &[u32] {
        &self.rows[user]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_index(&self) -> HashMap<&str, usize> {
        self.user_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }

    pub fn item_index(&self) -> HashMap<&str, usize> {
        self.item_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }

    pub fn contains(&self, user: usize, item: u32) -> bool {
        self.rows[user].binary_search(&item).is_ok()
    }

    /// Number of users per item.
    pub fn item_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n_items];
        for row in &self.rows {
            for &i in row {
                deg[i as usize] += 1;
            }
        }
        deg
    }

    pub fn stats(&self) -> MatrixStats {
        let interactions = self.nnz();
        let cells = (self.n_users() * self.n_items) as f64;
        MatrixStats {
            users: self.n_users(),
            items: self.n_items,
            interactions,
            density: if cells > 0.0 {
                interactions as f64 / cells
            } else {
                0.0
            },
        }
    }

    /// Sub-matrix of the given users; the item axis is unchanged.
    pub fn select_rows(&self, users: &[u32]) -> Self {
        Self {
            n_items: self.n_items,
            rows: users
                .iter()
                .map(|&u| self.rows[u as usize].clone())
                .collect(),
            user_ids: users
                .iter()
                .map(|&u| self.user_ids[u as usize].clone())
                .collect(),
            item_ids: self.item_ids.clone(),
        }
    }

    /// One record per stored entry, all carrying `value`.
    pub fn to_records(&self, value: f64) -> Vec<InteractionRecord> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(u, row)| {
                row.iter().map(move |&i| {
                    InteractionRecord::new(
                        self.user_ids[u].clone(),
                        self.item_ids[i as usize].clone(),
                        value,
                    )
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let c = MatrixContainer {
            format: MATRIX_FORMAT.into(),
            format_version: MATRIX_FORMAT_VERSION,
            n_users: self.n_users(),
            n_items: self.n_items,
            nnz: self.nnz(),
            user_ids: self.user_ids.clone(),
            item_ids: self.item_ids.clone(),
            rows: self.rows.clone(),
        };
        Ok(serde_json::to_string(&c)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: MatrixContainer = serde_json::from_str(text)?;
        if c.format != MATRIX_FORMAT || c.format_version != MATRIX_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "expected {MATRIX_FORMAT} v{MATRIX_FORMAT_VERSION}, found {} v{}",
                c.format, c.format_version
            )));
        }
        if c.item_ids.len() != c.n_items || c.user_ids.len() != c.n_users {
            return Err(Error::Format(
                "id maps disagree with declared dimensions".into(),
            ));
        }
        if c.rows.iter().any(|r| r.windows(2).any(|w| w[0] >= w[1])) {
            return Err(Error::Format("rows are not strictly increasing".into()));
        }
        let m = Self::from_rows(c.rows, c.user_ids, c.item_ids)?;
        if m.nnz() != c.nnz {
            return Err(Error::Format(format!(
                "declared nnz {} but found {}",
                c.nnz,
                m.nnz()
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// On-disk layout: a single JSON object.
///
/// ```text
/// { "format": "ipslae-interaction-matrix", "format_version": 1,
///   "n_users": U, "n_items": I, "nnz": N,
///   "user_ids": [..U strings..], "item_ids": [..I strings..],
///   "rows": [[sorted item indices of user 0], ...] }
/// ```
#[derive(Serialize, Deserialize)]
struct MatrixContainer {
    format: String,
    format_version: u32,
    n_users: usize,
    n_items: usize,
    nnz: usize,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    rows: Vec<Vec<u32>>,
}

/// Canonical id order: purely numeric ids first by value, then the rest
/// lexicographically.
pub(crate) fn id_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_canonicalized() {
        let m = InteractionMatrix::from_index_rows(4, vec![vec![3, 1, 1, 0], vec![]]).unwrap();
        assert_eq!(m.row(0), &[0, 1, 3]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.item_degrees(), vec![1, 1, 0, 1]);
    }

    #[test]
    fn out_of_range_item() {
        assert!(InteractionMatrix::from_index_rows(2, vec![vec![2]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = InteractionMatrix::from_dense(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        let back = InteractionMatrix::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_wrong_version() {
        let m = InteractionMatrix::from_dense(&[vec![1]]).unwrap();
        let text = m
            .to_json()
            .unwrap()
            .replace("\"format_version\":1", "\"format_version\":9");
        assert!(matches!(
            InteractionMatrix::from_json(&text),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn id_ordering() {
        let mut ids = vec!["b", "10", "a", "9", "x1"];
        ids.sort_by(|a, b| id_order(a, b));
        assert_eq!(ids, vec!["9", "10", "a", "b", "x1"]);
    }
}
