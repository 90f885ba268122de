use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p: f64,
    pub df_between: f64,
    pub df_within: f64,
    /// Mean square within groups.
    pub ms_within: f64,
}

pub(crate) fn check_groups(groups: &[Vec<f64>]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    for (g, values) in groups.iter().enumerate() {
        if values.len() < 2 {
            return Err(Error::Input(format!(
                "group {g} has {} sample(s); need at least 2",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "group {g} contains a non-finite value"
            )));
        }
    }
    Ok(())
}

/// Upper tail of the F(d1, d2) distribution.
pub(crate) fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Classical one-way ANOVA.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    check_groups(groups)?;
    let k = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df_between = (k - 1) as f64;
    let df_within = (n - k) as f64;
    let ms_within = ssw / df_within;
    let ms_between = ssb / df_between;
    let f = if ms_within > 0.0 {
        ms_between / ms_within
    } else if ms_between > 0.0 {
        f64::INFINITY
    } else {
        return Err(Error::Undefined(
            "ANOVA with zero variance everywhere".into(),
        ));
    };
    Ok(AnovaResult {
        f,
        p: f_sf(f, df_between, df_within),
        df_between,
        df_within,
        ms_within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_table() {
        let r = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((r.f - 13.5).abs() < 1e-12);
        // t = -3.674..., two-sided p for t with 4 df
        assert!((r.p - 0.021312).abs() < 1e-5, "{}", r.p);
    }

    #[test]
    fn equal_means_give_zero() {
        let r = anova_oneway(&[vec![1.0, 3.0], vec![0.0, 4.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(anova_oneway(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0], vec![2.0, 3.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
    }

    fn pooled_t(a: &[f64], b: &[f64]) -> f64 {
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let ss = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>()
            + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
        let sp2 = ss / (a.len() + b.len() - 2) as f64;
        (ma - mb) / (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt()
    }

    proptest! {
        #[test]
        fn two_groups_match_t_squared(
            a in proptest::collection::vec(-10.0f64..10.0, 2..12),
            b in proptest::collection::vec(-10.0f64..10.0, 2..12),
        ) {
            let r = anova_oneway(&[a.clone(), b.clone()]).unwrap();
            let t = pooled_t(&a, &b);
            prop_assert!((r.f - t * t).abs() <= 1e-9 * (1.0 + t * t));
            prop_assert!((0.0..=1.0).contains(&r.p));
        }
    }
}
