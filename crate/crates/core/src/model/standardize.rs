use serde::{Deserialize, Serialize};

use crate::features::FeatureTable;

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero training variance; they transform to 0.
    pub constant: Vec<bool>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut means = vec![0.0; dim];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in vars.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds: Vec<f64> = vars.iter().map(|s| (s / n).sqrt()).collect();
        let constant = stds
            .iter()
            .zip(&means)
            .map(|(s, m)| s.is_nan() || *s <= 1e-12 * (1.0 + m.abs()))
            .collect();
        Standardizer {
            means,
            stds,
            constant,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, v)| {
                if self.constant[k] {
                    0.0
                } else {
                    (v - self.means[k]) / self.stds[k]
                }
            })
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

pub fn fit_standardizer(table: &FeatureTable) -> Standardizer {
    Standardizer::fit(&table.matrix())
}

pub fn apply_standardizer(state: &Standardizer, table: &FeatureTable) -> FeatureTable {
    let mut out = table.clone();
    for r in &mut out.rows {
        r.values = state.transform_row(&r.values);
    }
    out
}
