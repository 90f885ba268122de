use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Severity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub r2: f64,
    pub ccc: f64,
    /// HD severity groups with at least two evaluated speakers.
    pub ccc_by_severity: BTreeMap<Severity, f64>,
    pub n_speakers: usize,
}

fn check_pair(pred: &[f64], truth: &[f64], min_len: usize) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Input(format!(
            "prediction length {} != truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.len() < min_len {
        return Err(Error::Input(format!(
            "need at least {min_len} values, got {}",
            pred.len()
        )));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn pop_var(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1)?;
    let mse = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 2)?;
    if is_constant(truth) {
        return Err(Error::Undefined("R^2 with constant ground truth".into()));
    }
    let m = mean(truth);
    let ss_tot: f64 = truth.iter().map(|t| (t - m).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Lin's concordance correlation coefficient with population moments.
pub fn ccc(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 2)?;
    let (cp, ct) = (is_constant(pred), is_constant(truth));
    if cp && ct {
        return Ok(if pred[0] == truth[0] { 1.0 } else { 0.0 });
    }
    if cp || ct {
        return Ok(0.0);
    }
    let (mp, mt) = (mean(pred), mean(truth));
    let cov = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - mp) * (t - mt))
        .sum::<f64>()
        / pred.len() as f64;
    let denom = pop_var(pred, mp) + pop_var(truth, mt) + (mp - mt).powi(2);
    Ok((2.0 * cov / denom).clamp(-1.0, 1.0))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let (mx, my) = (mean(x), mean(y));
    let (vx, vy) = (pop_var(x, mx), pop_var(y, my));
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.len() as f64;
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// CCC within each HD severity group; groups with fewer than two speakers are omitted.
pub fn ccc_by_severity(
    pred_by_speaker: &[(String, f64)],
    manifest: &DatasetManifest,
) -> BTreeMap<Severity, f64> {
    let mut groups: BTreeMap<Severity, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (id, p) in pred_by_speaker {
        match manifest.get(id) {
            Some(rec) if rec.severity != Severity::Control => {
                let g = groups.entry(rec.severity).or_default();
                g.0.push(*p);
                g.1.push(rec.tms);
            }
            Some(_) => {}
            None => log::warn!("speaker `{id}` not in manifest; excluded from severity CCC"),
        }
    }
    let mut out = BTreeMap::new();
    for (sev, (pred, truth)) in groups {
        if pred.len() < 2 {
            log::warn!(
                "severity group `{sev}` has {} test speaker(s); CCC omitted",
                pred.len()
            );
            continue;
        }
        out.insert(sev, ccc(&pred, &truth).expect("lengths checked"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Cohort, SpeakerRecord};
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[4.0, 5.0, 9.0], &[1.0, 2.0, 6.0]).unwrap() - 3.0).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r2(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(r2(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), -3.0);
        assert!(matches!(
            r2(&[1.0, 2.0], &[5.0, 5.0]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn ccc_examples() {
        let t = [1.0, 2.0, 3.0];
        assert!((ccc(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((ccc(&[3.0, 2.0, 1.0], &t).unwrap() + 1.0).abs() < 1e-15);
        let shifted: Vec<f64> = t.iter().map(|v| v + 10.0).collect();
        let var = 2.0 / 3.0;
        let expect = 2.0 * var / (2.0 * var + 100.0);
        assert!((ccc(&shifted, &t).unwrap() - expect).abs() < 1e-15);
        assert_eq!(ccc(&[4.0, 4.0], &[4.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ccc(&[4.0, 4.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn ccc_properties(
            x in proptest::collection::vec(-50.0f64..50.0, 3..30),
            noise in proptest::collection::vec(-5.0f64..5.0, 30),
            a in 0.1f64..10.0,
            b in -20.0f64..20.0,
        ) {
            let y: Vec<f64> = x.iter().zip(&noise).map(|(v, e)| v + e).collect();
            let c = ccc(&x, &y).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert!((c - ccc(&y, &x).unwrap()).abs() < 1e-12);
            prop_assert!(c.abs() <= pearson(&x, &y).unwrap().abs() + 1e-12);
            let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ya: Vec<f64> = y.iter().map(|v| a * v + b).collect();
            prop_assert!((ccc(&xa, &ya).unwrap() - c).abs() < 1e-9);
            let r = rmse(&x, &y).unwrap();
            prop_assert!(r >= 0.0 && (r - rmse(&y, &x).unwrap()).abs() < 1e-12);
        }
    }

    fn manifest() -> DatasetManifest {
        let rec = |id: &str, tms: f64, sev: Severity| SpeakerRecord {
            speaker_id: id.into(),
            wav_path: format!("{id}.wav").into(),
            tms,
            cohort: if sev == Severity::Control {
                Cohort::Control
            } else {
                Cohort::Hd
            },
            severity: sev,
            tfc: None,
            dcl: None,
        };
        DatasetManifest::new(vec![
            rec("c", 3.0, Severity::Control),
            rec("p1", 5.0, Severity::Premanifest),
            rec("p2", 12.0, Severity::Premanifest),
            rec("e1", 30.0, Severity::Early),
            rec("e2", 45.0, Severity::Early),
            rec("l1", 70.0, Severity::Late),
            rec("l2", 80.0, Severity::Late),
        ])
        .unwrap()
    }

    #[test]
    fn severity_groups() {
        let m = manifest();
        let only_pre = vec![("p1".to_string(), 6.0), ("p2".to_string(), 10.0)];
        let map = ccc_by_severity(&only_pre, &m);
        assert_eq!(
            map.keys().copied().collect::<Vec<_>>(),
            vec![Severity::Premanifest]
        );

        let lone_late = vec![
            ("p1".to_string(), 6.0),
            ("p2".to_string(), 10.0),
            ("l1".to_string(), 50.0),
        ];
        assert!(!ccc_by_severity(&lone_late, &m).contains_key(&Severity::Late));

        let perfect: Vec<(String, f64)> = m
            .records
            .iter()
            .map(|r| (r.speaker_id.clone(), r.tms))
            .collect();
        let map = ccc_by_severity(&perfect, &m);
        assert_eq!(map.len(), 3);
        assert!(map.values().all(|&v| (v - 1.0).abs() < 1e-12));
    }
}
