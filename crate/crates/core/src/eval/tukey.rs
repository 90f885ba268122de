use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use super::anova::{anova_oneway, check_groups};
use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub group_a: String,
    pub group_b: String,
    /// `mean_a - mean_b`.
    pub mean_diff: f64,
    pub q_stat: f64,
    pub p_adj: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub anova_f: f64,
    pub anova_p: f64,
    pub pairwise: Vec<PairwiseComparison>,
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// CDF of the studentized range distribution by nested Gauss-Legendre quadrature.
#[derive(Debug, Clone)]
pub struct StudentizedRange {
    outer: GaussLegendre,
    inner: GaussLegendre,
}

impl Default for StudentizedRange {
    fn default() -> Self {
        Self::new(64, 64)
    }
}

impl StudentizedRange {
    pub fn new(outer_nodes: usize, inner_nodes: usize) -> Self {
        StudentizedRange {
            outer: GaussLegendre::new(outer_nodes),
            inner: GaussLegendre::new(inner_nodes),
        }
    }

    /// P(range of k standard normals < w).
    fn range_prob(&self, w: f64, k: usize) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let km1 = (k - 1) as i32;
        let f = |z: f64| {
            let band = (normal_cdf(z) - normal_cdf(z - w)).max(0.0);
            normal_pdf(z) * band.powi(km1)
        };
        // the integrand is negligible outside [-8, 8]; panel edges follow the band's shoulders
        let mid = w.min(8.0);
        let mut v = self.inner.integrate(-8.0, 0.0, f) + self.inner.integrate(0.0, mid, f);
        if mid < 8.0 {
            v += self.inner.integrate(mid, 8.0, f);
        }
        (k as f64 * v).clamp(0.0, 1.0)
    }

    pub fn cdf(&self, q: f64, k: usize, df: f64) -> f64 {
        assert!(k >= 2, "studentized range needs k >= 2");
        assert!(df > 0.0, "degrees of freedom must be positive");
        if q <= 0.0 || q.is_nan() {
            return 0.0;
        }
        if q.is_infinite() {
            return 1.0;
        }
        if df.is_infinite() {
            return self.range_prob(q, k);
        }
        // s = chi_df / sqrt(df); density on s > 0
        let ln_c = 0.5 * df * df.ln() - ln_gamma(0.5 * df) - (0.5 * df - 1.0) * 2f64.ln();
        let mean_s =
            ((2.0 / df).ln() * 0.5 + ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df)).exp();
        let sd_s = (1.0 - mean_s * mean_s).max(0.0).sqrt();
        let lo = (mean_s - 9.0 * sd_s).max(0.0);
        let hi = mean_s + 9.0 * sd_s + if df < 4.0 { 6.0 } else { 0.0 };
        let v = self.outer.integrate(lo, hi, |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let ln_d = ln_c + (df - 1.0) * s.ln() - 0.5 * df * s * s;
            ln_d.exp() * self.range_prob(q * s, k)
        });
        v.clamp(0.0, 1.0)
    }
}

/// CDF of the studentized range with the default 64 x 64 node grid.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> f64 {
    StudentizedRange::default().cdf(q, k, df)
}

/// Tukey-Kramer all-pairs comparison following a one-way ANOVA.
pub fn tukey_hsd(groups: &[Vec<f64>], labels: &[String]) -> Result<SignificanceReport> {
    check_groups(groups)?;
    if labels.len() != groups.len() {
        return Err(Error::Input(format!(
            "{} labels for {} groups",
            labels.len(),
            groups.len()
        )));
    }
    let anova = anova_oneway(groups)?;
    if anova.ms_within <= 0.0 {
        return Err(Error::Undefined(
            "Tukey test with zero within-group variance".into(),
        ));
    }
    let k = groups.len();
    let means: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len() as f64)
        .collect();
    let dist = StudentizedRange::default();
    let mut pairwise = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let mean_diff = means[a] - means[b];
            let se = (anova.ms_within / 2.0
                * (1.0 / groups[a].len() as f64 + 1.0 / groups[b].len() as f64))
                .sqrt();
            let q_stat = mean_diff.abs() / se;
            let p_adj = (1.0 - dist.cdf(q_stat, k, anova.df_within)).clamp(0.0, 1.0);
            pairwise.push(PairwiseComparison {
                group_a: labels[a].clone(),
                group_b: labels[b].clone(),
                mean_diff,
                q_stat,
                p_adj,
                significant: p_adj < 0.05,
            });
        }
    }
    Ok(SignificanceReport {
        anova_f: anova.f,
        anova_p: anova.p,
        pairwise,
    })
}
