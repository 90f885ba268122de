use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EvalLevel, ExperimentConfig, FeatureSet};
use super::extract::prepare_features;
use super::plan::{make_run_plan, RunPlan};
use crate::dataset::{DatasetManifest, Severity};
use crate::error::{Error, Result};
use crate::eval::{ccc, ccc_by_severity, r2, rmse, MetricReport, SignificanceReport};
use crate::features::{FeatureKind, FeatureTable};
use crate::model::{
    f_values, fit_elastic_net, select_top_k, ElasticNetModel, SelectorState, Standardizer,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const METRICS: [&str; 3] = ["rmse", "r2", "ccc"];

/// Standardizer, selector and regressor fitted on the training rows of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub standardizer: Standardizer,
    pub selector: SelectorState,
    pub model: ElasticNetModel,
}

impl FittedPipeline {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(row);
        self.model.predict_row(&self.selector.project(&z))
    }
}

/// Fits the learning stack on the rows whose speaker is in `train_ids`.
pub fn fit_pipeline(
    table: &FeatureTable,
    train_ids: &[String],
    cfg: &ExperimentConfig,
) -> Result<FittedPipeline> {
    let train: HashSet<&str> = train_ids.iter().map(String::as_str).collect();
    let rows: Vec<&Vec<f64>> = table
        .rows
        .iter()
        .filter(|r| train.contains(r.speaker_id.as_str()))
        .map(|r| &r.values)
        .collect();
    let y: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| train.contains(r.speaker_id.as_str()))
        .map(|r| r.target_tms)
        .collect();
    if rows.len() < 3 {
        return Err(Error::Config(format!(
            "only {} training segments",
            rows.len()
        )));
    }
    let owned: Vec<Vec<f64>> = rows.into_iter().cloned().collect();
    let standardizer = Standardizer::fit(&owned);
    let z = standardizer.transform(&owned);
    let k = if cfg.top_k > table.dim() {
        log::warn!(
            "top_k {} exceeds {} features; keeping all",
            cfg.top_k,
            table.dim()
        );
        table.dim()
    } else {
        cfg.top_k
    };
    let selector = select_top_k(&z, &y, k)?;
    let x: Vec<Vec<f64>> = z.iter().map(|r| selector.project(r)).collect();
    let model = fit_elastic_net(&x, &y, &cfg.elastic_net)?;
    if !model.converged {
        log::warn!(
            "elastic net stopped after {} sweeps without converging",
            model.n_iter
        );
    }
    Ok(FittedPipeline {
        standardizer,
        selector,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerPrediction {
    pub speaker_id: String,
    pub truth: f64,
    /// Mean over the speaker's segment predictions.
    pub predicted: f64,
    pub n_segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub run_index: usize,
    pub seed: u64,
    pub feature_set: FeatureSet,
    pub level: EvalLevel,
    pub train_speaker_ids: Vec<String>,
    pub test_speaker_ids: Vec<String>,
    pub metrics: MetricReport,
    pub selected_feature_indices: Vec<usize>,
    /// F-value of every feature on the training rows.
    pub feature_scores: Option<Vec<f64>>,
    /// `[n_channels, n_delays]` for FVTC feature sets.
    pub fvtc_shape: Option<[usize; 2]>,
    pub predictions: Vec<SpeakerPrediction>,
    pub converged: bool,
}

impl RunReport {
    pub fn plan(&self) -> (&[String], &[String]) {
        (&self.train_speaker_ids, &self.test_speaker_ids)
    }
}

fn score(
    pred: &[f64],
    truth: &[f64],
    pairs: &[(String, f64)],
    manifest: &DatasetManifest,
    n_speakers: usize,
) -> Result<MetricReport> {
    if pred.len() < 2 {
        return Err(Error::Config(format!(
            "{} evaluated test item(s); need at least 2",
            pred.len()
        )));
    }
    Ok(MetricReport {
        rmse: rmse(pred, truth)?,
        r2: r2(pred, truth)?,
        ccc: ccc(pred, truth)?,
        ccc_by_severity: ccc_by_severity(pairs, manifest),
        n_speakers,
    })
}

/// One train/test split on a precomputed feature table.
pub fn run_once_on(
    manifest: &DatasetManifest,
    table: &FeatureTable,
    cfg: &ExperimentConfig,
    run_index: usize,
) -> Result<RunReport> {
    let plan: RunPlan = make_run_plan(manifest, cfg, run_index)?;
    let fitted = fit_pipeline(table, &plan.train_ids, cfg)?;

    let mut seg_pred = Vec::new();
    let mut seg_truth = Vec::new();
    let mut seg_pairs = Vec::new();
    let mut predictions = Vec::new();
    for id in &plan.test_ids {
        let rows: Vec<_> = table.rows.iter().filter(|r| &r.speaker_id == id).collect();
        if rows.is_empty() {
            log::warn!("test speaker `{id}` has no segments; excluded from metrics");
            continue;
        }
        let preds: Vec<f64> = rows.iter().map(|r| fitted.predict_row(&r.values)).collect();
        for (r, p) in rows.iter().zip(&preds) {
            seg_pred.push(*p);
            seg_truth.push(r.target_tms);
            seg_pairs.push((id.clone(), *p));
        }
        predictions.push(SpeakerPrediction {
            speaker_id: id.clone(),
            truth: rows[0].target_tms,
            predicted: preds.iter().sum::<f64>() / preds.len() as f64,
            n_segments: preds.len(),
        });
    }
    let metrics = match cfg.level {
        EvalLevel::Segment => score(
            &seg_pred,
            &seg_truth,
            &seg_pairs,
            manifest,
            predictions.len(),
        )?,
        EvalLevel::Speaker => {
            let pred: Vec<f64> = predictions.iter().map(|p| p.predicted).collect();
            let truth: Vec<f64> = predictions.iter().map(|p| p.truth).collect();
            let pairs: Vec<(String, f64)> = predictions
                .iter()
                .map(|p| (p.speaker_id.clone(), p.predicted))
                .collect();
            score(&pred, &truth, &pairs, manifest, predictions.len())?
        }
    };

    let feature_scores = if cfg.feature_set.is_fvtc() || cfg.record_scores {
        Some(fitted.selector.scores.clone())
    } else {
        None
    };
    let fvtc_shape = (table.kind == FeatureKind::Fvtc).then(|| {
        let n = cfg.vtc.n_channels;
        [n, table.dim() / (n * n).max(1)]
    });
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_index,
        seed: plan.seed,
        feature_set: cfg.feature_set,
        level: cfg.level,
        train_speaker_ids: plan.train_ids,
        test_speaker_ids: plan.test_ids,
        metrics,
        selected_feature_indices: fitted.selector.selected.clone(),
        feature_scores,
        fvtc_shape,
        predictions,
        converged: fitted.model.converged,
    })
}

/// Extracts features and performs run `run_index`.
pub fn run_once(
    manifest: &DatasetManifest,
    cfg: &ExperimentConfig,
    run_index: usize,
) -> Result<RunReport> {
    let table = prepare_features(manifest, cfg)?;
    run_once_on(manifest, &table, cfg, run_index)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over runs.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len();
        if n == 0 {
            return MeanStd {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        MeanStd { mean, std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub schema_version: u32,
    pub feature_set: FeatureSet,
    pub level: EvalLevel,
    pub segment_s: f64,
    pub master_seed: u64,
    pub n_runs: usize,
    /// Keyed by `rmse`, `r2` and `ccc`.
    pub metrics: BTreeMap<String, MeanStd>,
    /// Averaged over the runs in which the group was scored.
    pub ccc_by_severity: BTreeMap<Severity, MeanStd>,
    pub significance: Option<BTreeMap<String, SignificanceReport>>,
}

pub fn metric_value(m: &MetricReport, name: &str) -> f64 {
    match name {
        "rmse" => m.rmse,
        "r2" => m.r2,
        "ccc" => m.ccc,
        other => panic!("unknown metric `{other}`"),
    }
}

pub fn aggregate(reports: &[RunReport], cfg: &ExperimentConfig) -> AggregateReport {
    let metrics = METRICS
        .iter()
        .map(|&name| {
            let values: Vec<f64> = reports
                .iter()
                .map(|r| metric_value(&r.metrics, name))
                .collect();
            (name.to_string(), MeanStd::of(&values))
        })
        .collect();
    let ccc_by_severity = Severity::HD
        .iter()
        .filter_map(|sev| {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.metrics.ccc_by_severity.get(sev).copied())
                .collect();
            (!values.is_empty()).then(|| (*sev, MeanStd::of(&values)))
        })
        .collect();
    AggregateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        feature_set: cfg.feature_set,
        level: cfg.level,
        segment_s: cfg.segment_s,
        master_seed: cfg.master_seed,
        n_runs: reports.len(),
        metrics,
        ccc_by_severity,
        significance: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub runs: Vec<RunReport>,
    pub aggregate: AggregateReport,
}

/// `cfg.n_runs` runs on a precomputed table, executed on the current rayon pool.
pub fn run_experiment_on(
    manifest: &DatasetManifest,
    table: &FeatureTable,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let runs = (0..cfg.n_runs)
        .into_par_iter()
        .map(|i| run_once_on(manifest, table, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&runs, cfg);
    Ok(ExperimentOutput { runs, aggregate })
}

pub fn run_experiment(
    manifest: &DatasetManifest,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutput> {
    let table = prepare_features(manifest, cfg)?;
    run_experiment_on(manifest, &table, cfg)
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Training-row F-values, exposed for leakage checks.
pub fn train_feature_scores(table: &FeatureTable, train_ids: &[String]) -> Result<Vec<f64>> {
    let train: HashSet<&str> = train_ids.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .filter(|r| train.contains(r.speaker_id.as_str()))
        .map(|r| r.values.clone())
        .collect();
    let y: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| train.contains(r.speaker_id.as_str()))
        .map(|r| r.target_tms)
        .collect();
    f_values(&Standardizer::fit(&rows).transform(&rows), &y)
}
