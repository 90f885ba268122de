use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorState {
    pub scores: Vec<f64>,
    /// Indices of the `k` largest scores, best first; ties go to the lower index.
    pub selected: Vec<usize>,
}

impl SelectorState {
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.selected.iter().map(|&k| row[k]).collect()
    }
}

const R2_CAP: f64 = 1.0 - 1e-12;

fn f_from_moments(sxx: f64, syy: f64, sxy: f64, n: usize) -> f64 {
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    let r2 = (sxy * sxy / (sxx * syy)).min(R2_CAP);
    r2 / (1.0 - r2) * (n as f64 - 2.0)
}

/// Univariate regression F statistic `r^2 / (1 - r^2) * (n - 2)`.
pub fn f_value(feature: &[f64], target: &[f64]) -> Result<f64> {
    let n = feature.len();
    if n != target.len() {
        return Err(Error::Input(format!(
            "feature has {n} entries, target {}",
            target.len()
        )));
    }
    if n < 3 {
        return Err(Error::Input(format!("F-value needs n >= 3, got {n}")));
    }
    let mx = feature.iter().sum::<f64>() / n as f64;
    let my = target.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in feature.iter().zip(target) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Constant columns leave rounding residue in the sum of squares.
    if sxx <= 1e-24 * n as f64 * (1.0 + mx * mx) {
        sxx = 0.0;
    }
    if syy <= 1e-24 * n as f64 * (1.0 + my * my) {
        syy = 0.0;
    }
    Ok(f_from_moments(sxx, syy, sxy, n))
}

/// F-value of every column of a row-major matrix.
pub fn f_values(rows: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    let dim = rows.first().map_or(0, Vec::len);
    let mut column = vec![0.0; rows.len()];
    (0..dim)
        .map(|c| {
            for (dst, r) in column.iter_mut().zip(rows) {
                *dst = r[c];
            }
            f_value(&column, target)
        })
        .collect()
}

pub fn select_top_k(rows: &[Vec<f64>], target: &[f64], k: usize) -> Result<SelectorState> {
    let dim = rows.first().map_or(0, Vec::len);
    if k > dim {
        return Err(Error::Input(format!("cannot select {k} of {dim} features")));
    }
    let scores = f_values(rows, target)?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(SelectorState {
        scores,
        selected: order,
    })
}

pub fn select_top_k_table(table: &FeatureTable, k: usize) -> Result<SelectorState> {
    select_top_k(&table.matrix(), &table.targets(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn orthogonal_feature_scores_zero() {
        assert_eq!(
            f_value(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn hand_pearson_example() {
        // Sxx = 5, Syy = 8.75, Sxy = 6.5: r^2 = 42.25 / 43.75, F = 2 * 42.25 / 1.5
        let f = f_value(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).unwrap();
        assert!((f - 169.0 / 3.0).abs() < 1e-9, "{f}");
    }

    #[test]
    fn perfect_correlation_is_large_but_finite() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let f = f_value(&x, &x).unwrap();
        assert!(f.is_finite() && f > 1e12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(f_value(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 0.0);
        assert_eq!(f_value(&[1.0, 2.0, 3.0], &[0.1; 3]).unwrap(), 0.0);
        assert!(f_value(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn top_k_tie_break_and_bounds() {
        let rows = vec![
            vec![1.0, 1.0, 0.0],
            vec![2.0, 2.0, 1.0],
            vec![3.0, 3.0, 0.0],
            vec![4.0, 4.0, 1.0],
        ];
        let y = [1.0, 2.0, 3.0, 4.5];
        let s = select_top_k(&rows, &y, 1).unwrap();
        assert_eq!(s.scores[0], s.scores[1]);
        assert_eq!(s.selected, vec![0]);
        assert_eq!(select_top_k(&rows, &y, 3).unwrap().selected.len(), 3);
        assert!(select_top_k(&rows, &y, 4).is_err());
    }

    proptest! {
        #[test]
        fn f_value_affine_invariant(
            x in proptest::collection::vec(-10.0f64..10.0, 8),
            y in proptest::collection::vec(-10.0f64..10.0, 8),
            a in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0],
            b in -20.0f64..20.0,
        ) {
            let f1 = f_value(&x, &y).unwrap();
            let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let f2 = f_value(&xt, &y).unwrap();
            prop_assert!((f1 - f2).abs() <= 1e-9 * (1.0 + f1.abs()));
        }

        #[test]
        fn selection_survives_positive_rescaling(
            data in proptest::collection::vec(-5.0f64..5.0, 10 * 6),
            y in proptest::collection::vec(0.0f64..100.0, 10),
            scales in proptest::collection::vec(0.1f64..10.0, 6),
            shifts in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let rows: Vec<Vec<f64>> = data.chunks(6).map(|c| c.to_vec()).collect();
            let scaled: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().enumerate().map(|(k, v)| v * scales[k] + shifts[k]).collect())
                .collect();
            let a = select_top_k(&rows, &y, 3).unwrap();
            let b = select_top_k(&scaled, &y, 3).unwrap();
            // Ties after rounding could legitimately reorder; require well-separated scores.
            let mut sorted = a.scores.clone();
            sorted.sort_by(|p, q| q.total_cmp(p));
            prop_assume!(sorted.windows(2).all(|w| w[0] - w[1] > 1e-6 * (1.0 + w[0])));
            prop_assert_eq!(a.selected, b.selected);
        }
    }
}
