use serde::{Deserialize, Serialize};

use crate::corpus::EntityId;

pub type FeatureId = u32;

/// Sparse entity × feature counts Φ, rows sorted by feature id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    n_features: usize,
    rows: Vec<Vec<(FeatureId, u32)>>,
    col_sums: Vec<u64>,
}

impl CooccurrenceMatrix {
    /// Build from `(entity, feature, count)` cells; duplicate cells are summed.
    pub fn from_cells(
        n_entities: usize,
        n_features: usize,
        cells: impl IntoIterator<Item = (EntityId, FeatureId, u32)>,
    ) -> Self {
        let mut rows: Vec<Vec<(FeatureId, u32)>> = vec![Vec::new(); n_entities];
        for (e, c, n) in cells {
            assert!((c as usize) < n_features, "feature id out of range");
            rows[e.index()].push((c, n));
        }
        let mut col_sums = vec![0u64; n_features];
        for row in &mut rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            row.retain(|&(_, n)| n > 0);
            for &(c, n) in row.iter() {
                col_sums[c as usize] += u64::from(n);
            }
        }
        CooccurrenceMatrix {
            n_features,
            rows,
            col_sums,
        }
    }

    pub fn n_entities(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, e: EntityId) -> &[(FeatureId, u32)] {
        &self.rows[e.index()]
    }

    pub fn get(&self, e: EntityId, c: FeatureId) -> u32 {
        let row = self.row(e);
        row.binary_search_by_key(&c, |&(f, _)| f)
            .map_or(0, |i| row[i].1)
    }

    pub fn column_sum(&self, c: FeatureId) -> u64 {
        self.col_sums[c as usize]
    }

    pub fn cells(&self) -> impl Iterator<Item = (EntityId, FeatureId, u32)> + '_ {
        self.rows.iter().enumerate().flat_map(|(e, row)| {
            row.iter()
                .map(move |&(c, n)| (EntityId(e as u32), c, n))
        })
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Sparse non-negative weights f, stored by row and by column.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureWeights {
    rows: Vec<Vec<(FeatureId, f64)>>,
    cols: Vec<Vec<(EntityId, f64)>>,
}

impl FeatureWeights {
    pub fn empty(n_entities: usize) -> Self {
        FeatureWeights {
            rows: vec![Vec::new(); n_entities],
            cols: Vec::new(),
        }
    }

    /// Rows must be sorted by feature id.
    pub fn from_rows(rows: Vec<Vec<(FeatureId, f64)>>, n_features: usize) -> Self {
        let mut cols: Vec<Vec<(EntityId, f64)>> = vec![Vec::new(); n_features];
        for (e, row) in rows.iter().enumerate() {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for &(c, w) in row {
                cols[c as usize].push((EntityId(e as u32), w));
            }
        }
        FeatureWeights { rows, cols }
    }

    pub fn n_entities(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, e: EntityId) -> &[(FeatureId, f64)] {
        self.rows.get(e.index()).map_or(&[], Vec::as_slice)
    }

    pub fn column(&self, c: FeatureId) -> &[(EntityId, f64)] {
        self.cols.get(c as usize).map_or(&[], Vec::as_slice)
    }

    pub fn get(&self, e: EntityId, c: FeatureId) -> f64 {
        let row = self.row(e);
        row.binary_search_by_key(&c, |&(f, _)| f)
            .map_or(0.0, |i| row[i].1)
    }

    /// Multiply every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(c, w)| (c, w * factor)).collect())
            .collect();
        FeatureWeights::from_rows(rows, self.n_features())
    }
}

/// `f = log(1 + Φ) · log N / log(1 + Σ_e' Φ_e',c)` with `N` the number of
/// entities. Requires `N ≥ 2` for strictly positive weights.
pub fn tfidf(matrix: &CooccurrenceMatrix) -> FeatureWeights {
    let n = matrix.n_entities() as f64;
    let log_n = n.ln();
    let rows = matrix
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&(c, phi)| {
                    let denom = (1.0 + matrix.col_sums[c as usize] as f64).ln();
                    (c, (1.0 + f64::from(phi)).ln() * log_n / denom)
                })
                .collect()
        })
        .collect();
    FeatureWeights::from_rows(rows, matrix.n_features())
}
