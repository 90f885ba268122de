//! Experiment protocol: seeded speaker-independent splits, repeated runs,
//! aggregation, the segment-size sweep, F-value heatmaps and comparisons.

mod compare;
mod config;
mod extract;
mod figures;
mod plan;
mod run;
mod sweep;

pub use compare::{compare_feature_sets, significance_across, Comparison, RunsByFeatureSet};
pub use config::{EvalLevel, ExperimentConfig, FeatureSet};
pub use extract::{extract_speaker_frames, prepare_features, CorpusFrames, SpeakerFrames};
pub use figures::{
    fvalue_heatmap, prediction_summary, prediction_svg, write_prediction_csv, Heatmap,
    SpeakerSummary, LOW_CHANNEL_MAX,
};
pub use plan::{make_run_plan, n_test_speakers, RunPlan};
pub use run::{
    aggregate, fit_pipeline, metric_value, run_experiment, run_experiment_on, run_once,
    run_once_on, train_feature_scores, with_threads, AggregateReport, ExperimentOutput,
    FittedPipeline, MeanStd, RunReport, SpeakerPrediction, METRICS, REPORT_SCHEMA_VERSION,
};
pub use sweep::{
    segment_sweep, sweep_trend, write_sweep_csv, SweepRow, DEFAULT_SWEEP_SIZES, SWEEP_HEADER,
};
