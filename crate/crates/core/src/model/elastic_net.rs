//! Elastic-net linear regression by cyclic coordinate descent.
//!
//! Minimises
//!
//! ```text
//! 1/(2n) ||y - Xw - b||^2 + alpha * l1_ratio * ||w||_1 + alpha * (1 - l1_ratio) / 2 * ||w||^2
//! ```
//!
//! with an unpenalised intercept `b`. Each coordinate step is exact:
//! `w_j <- S(z_j, alpha * l1_ratio) / (c_j + alpha * (1 - l1_ratio))`, where
//! `z_j = (1/n) x_j . (r + x_j w_j)` and `c_j = (1/n) ||x_j||^2`. The
//! intercept is reset to `mean(y - Xw)` after every sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticNetParams {
    pub alpha: f64,
    pub l1_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams {
            alpha: 1.0,
            l1_ratio: 0.5,
            tol: 1e-4,
            max_iter: 1000,
        }
    }
}

impl ElasticNetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.l1_ratio) {
            return Err(Error::Config(format!(
                "l1_ratio must be in [0, 1], got {}",
                self.l1_ratio
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }

    fn l1(&self) -> f64 {
        self.alpha * self.l1_ratio
    }

    fn l2(&self) -> f64 {
        self.alpha * (1.0 - self.l1_ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub params: ElasticNetParams,
    pub converged: bool,
    pub n_iter: usize,
}

impl ElasticNetModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.weights.len() {
                    Err(Error::Input(format!(
                        "row has {} features, model expects {}",
                        r.len(),
                        self.weights.len()
                    )))
                } else {
                    Ok(self.predict_row(r))
                }
            })
            .collect()
    }
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn check_inputs(rows: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if rows.len() != y.len() {
        return Err(Error::Input(format!(
            "{} rows but {} targets",
            rows.len(),
            y.len()
        )));
    }
    if rows.len() < 2 {
        return Err(Error::Input("elastic net needs at least two rows".into()));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::Input("ragged design matrix".into()));
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input(
            "non-finite value in design matrix or target".into(),
        ));
    }
    Ok(p)
}

pub fn objective(
    rows: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    intercept: f64,
    params: &ElasticNetParams,
) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| {
            let pred = intercept + r.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>();
            (yi - pred).powi(2)
        })
        .sum();
    let l1: f64 = weights.iter().map(|w| w.abs()).sum();
    let l2: f64 = weights.iter().map(|w| w * w).sum();
    rss / (2.0 * n) + params.l1() * l1 + 0.5 * params.l2() * l2
}

pub fn fit_elastic_net(
    rows: &[Vec<f64>],
    y: &[f64],
    params: &ElasticNetParams,
) -> Result<ElasticNetModel> {
    fit(rows, y, params, None)
}

/// Like [`fit_elastic_net`], also returning the objective after every sweep.
pub fn fit_elastic_net_traced(
    rows: &[Vec<f64>],
    y: &[f64],
    params: &ElasticNetParams,
) -> Result<(ElasticNetModel, Vec<f64>)> {
    let mut trace = Vec::new();
    let model = fit(rows, y, params, Some(&mut trace))?;
    Ok((model, trace))
}

fn fit(
    rows: &[Vec<f64>],
    y: &[f64],
    params: &ElasticNetParams,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<ElasticNetModel> {
    params.validate()?;
    let p = check_inputs(rows, y)?;
    let n = y.len();
    let inv_n = 1.0 / n as f64;
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let curvature: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() * inv_n)
        .collect();
    let (l1, l2) = (params.l1(), params.l2());

    let mut w = vec![0.0; p];
    let mut b = y.iter().sum::<f64>() * inv_n;
    let mut resid: Vec<f64> = y.iter().map(|v| v - b).collect();
    let penalty = |w: &[f64]| {
        l1 * w.iter().map(|v| v.abs()).sum::<f64>()
            + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
    };
    let current_objective = |resid: &[f64], w: &[f64]| {
        resid.iter().map(|r| r * r).sum::<f64>() * 0.5 * inv_n + penalty(w)
    };
    let mut previous = current_objective(&resid, &w);

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < params.max_iter {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let denom = curvature[j] + l2;
            if denom <= 0.0 {
                continue;
            }
            let col = &cols[j];
            let z = col.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>() * inv_n
                + curvature[j] * w[j];
            let updated = soft_threshold(z, l1) / denom;
            let step = updated - w[j];
            if step != 0.0 {
                for (r, x) in resid.iter_mut().zip(col) {
                    *r -= step * x;
                }
                w[j] = updated;
                max_change = max_change.max(step.abs());
            }
        }
        let shift = resid.iter().sum::<f64>() * inv_n;
        if shift != 0.0 {
            b += shift;
            resid.iter_mut().for_each(|r| *r -= shift);
            max_change = max_change.max(shift.abs());
        }

        let obj = current_objective(&resid, &w);
        debug_assert!(
            obj <= previous + 1e-10 * (1.0 + previous.abs()),
            "objective increased from {previous} to {obj}"
        );
        previous = obj;
        if let Some(t) = trace.as_deref_mut() {
            t.push(obj);
        }
        if max_change < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("elastic net stopped after {sweeps} sweeps without converging");
    }
    Ok(ElasticNetModel {
        weights: w,
        intercept: b,
        params: *params,
        converged,
        n_iter: sweeps,
    })
}

/// Per-coordinate violation of the optimality conditions (0 means satisfied).
pub fn kkt_violations(rows: &[Vec<f64>], y: &[f64], model: &ElasticNetModel) -> Vec<f64> {
    let n = y.len() as f64;
    let resid: Vec<f64> = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| yi - model.predict_row(r))
        .collect();
    let (l1, l2) = (model.params.l1(), model.params.l2());
    model
        .weights
        .iter()
        .enumerate()
        .map(|(j, &wj)| {
            let grad = -rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum::<f64>() / n + l2 * wj;
            if wj != 0.0 {
                (grad + l1 * wj.signum()).abs()
            } else {
                (grad.abs() - l1).max(0.0)
            }
        })
        .collect()
}
