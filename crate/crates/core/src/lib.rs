//! Vocal tract coordination (VTC) features for speech-based motor score
//! regression: MFCC extraction, delayed cross-correlation tensors, their
//! eigen-spectra, an elastic-net learner and the repeated-split evaluation
//! protocol around them.

pub mod container;
pub mod dataset;
pub mod dsp;
mod error;
pub mod eval;
pub mod features;
pub mod harness;
pub mod model;
pub mod seed;
pub mod vtc;

pub use container::Container;
pub use dataset::{DatasetManifest, Severity, SpeakerRecord, SynthConfig};
pub use dsp::{DspConfig, FrameMatrix};
pub use error::{Error, Result};
pub use eval::{MetricReport, SignificanceReport};
pub use features::{FeatureKind, FeatureTable};
pub use harness::{AggregateReport, ExperimentConfig, FeatureSet, RunReport};
pub use model::{ElasticNetModel, ElasticNetParams};
pub use vtc::{EvtcMatrix, VtcConfig, VtcTensor};
