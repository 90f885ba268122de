use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FeatureSet};
use super::extract::CorpusFrames;
use super::run::{metric_value, run_experiment_on, AggregateReport, RunReport, METRICS};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::eval::{tukey_hsd, SignificanceReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<AggregateReport>,
    /// Tukey test across feature sets, one per metric.
    pub significance: BTreeMap<String, SignificanceReport>,
}

/// Tukey tests on per-run metric samples of several experiments.
pub fn significance_across(
    runs: &[(FeatureSet, Vec<RunReport>)],
) -> Result<BTreeMap<String, SignificanceReport>> {
    let labels: Vec<String> = runs.iter().map(|(fs, _)| fs.to_string()).collect();
    METRICS
        .iter()
        .map(|&name| {
            let groups: Vec<Vec<f64>> = runs
                .iter()
                .map(|(_, r)| r.iter().map(|x| metric_value(&x.metrics, name)).collect())
                .collect();
            Ok((name.to_string(), tukey_hsd(&groups, &labels)?))
        })
        .collect()
}

pub type RunsByFeatureSet = (FeatureSet, Vec<RunReport>);

/// Runs every feature set on identical plans (same master seed) and compares them.
pub fn compare_feature_sets(
    manifest: &DatasetManifest,
    cfg: &ExperimentConfig,
    feature_sets: &[FeatureSet],
) -> Result<(Comparison, Vec<RunsByFeatureSet>)> {
    if feature_sets.len() < 2 {
        return Err(Error::Config(
            "compare needs at least two feature sets".into(),
        ));
    }
    if cfg.n_runs < 2 {
        return Err(Error::Config(
            "compare needs at least two runs per feature set".into(),
        ));
    }
    let needs_frames = feature_sets.iter().any(|fs| *fs != FeatureSet::External);
    let frames = if needs_frames {
        CorpusFrames::extract(manifest, &cfg.dsp)?
    } else {
        CorpusFrames {
            speakers: Vec::new(),
        }
    };
    let mut runs = Vec::with_capacity(feature_sets.len());
    let mut reports = Vec::with_capacity(feature_sets.len());
    for &fs in feature_sets {
        let run_cfg = ExperimentConfig {
            feature_set: fs,
            ..cfg.clone()
        };
        run_cfg.validate()?;
        let table = frames.feature_table(manifest, &run_cfg)?;
        let out = run_experiment_on(manifest, &table, &run_cfg)?;
        reports.push(out.aggregate);
        runs.push((fs, out.runs));
    }
    let significance = significance_across(&runs)?;
    for r in reports.iter_mut() {
        r.significance = Some(significance.clone());
    }
    Ok((
        Comparison {
            reports,
            significance,
        },
        runs,
    ))
}
