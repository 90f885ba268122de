use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{EvalLevel, ExperimentConfig, FeatureSet};
use super::extract::CorpusFrames;
use super::run::{run_experiment_on, METRICS};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};

pub const DEFAULT_SWEEP_SIZES: [f64; 6] = [7.0, 10.0, 15.0, 20.0, 25.0, 30.0];
pub const SWEEP_HEADER: [&str; 5] = ["size", "feature_set", "metric", "mean", "std"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: f64,
    pub feature_set: FeatureSet,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

/// Segment-level experiments at each segment size, non-overlapping segments.
pub fn segment_sweep(
    manifest: &DatasetManifest,
    cfg: &ExperimentConfig,
    sizes: &[f64],
    feature_sets: &[FeatureSet],
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if feature_sets.contains(&FeatureSet::External) {
        return Err(Error::Config(
            "the segment sweep cannot re-segment external features".into(),
        ));
    }
    let frames = CorpusFrames::extract(manifest, &cfg.dsp)?;
    let mut rows = Vec::new();
    for &size in sizes {
        for &fs in feature_sets {
            let run_cfg = ExperimentConfig {
                feature_set: fs,
                segment_s: size,
                segment_hop_s: None,
                level: EvalLevel::Segment,
                ..cfg.clone()
            };
            let table = frames.feature_table(manifest, &run_cfg)?;
            if table.is_empty() {
                log::warn!("no {size} s segments in the corpus; size skipped");
                break;
            }
            let out = run_experiment_on(manifest, &table, &run_cfg)?;
            for name in METRICS {
                let m = out.aggregate.metrics[name];
                rows.push(SweepRow {
                    size,
                    feature_set: fs,
                    metric: name.to_string(),
                    mean: m.mean,
                    std: m.std,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in rows {
        out.write_record([
            r.size.to_string(),
            r.feature_set.to_string(),
            r.metric.clone(),
            r.mean.to_string(),
            r.std.to_string(),
        ])?;
    }
    out.flush()
        .map_err(|e| Error::Format(format!("writing sweep csv: {e}")))?;
    Ok(())
}

/// Whether a metric improves from the smallest to the largest size.
pub fn sweep_trend(rows: &[SweepRow], feature_set: FeatureSet, metric: &str) -> Option<bool> {
    let series: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.feature_set == feature_set && r.metric == metric)
        .collect();
    let (first, last) = (series.first()?, series.last()?);
    Some(if metric == "rmse" {
        last.mean <= first.mean
    } else {
        last.mean >= first.mean
    })
}
