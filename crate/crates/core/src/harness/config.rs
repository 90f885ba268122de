use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::{ChannelKind, DspConfig};
use crate::error::{Error, Result};
use crate::model::ElasticNetParams;
use crate::vtc::VtcConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    RawMfcc,
    RawDmfcc,
    EvtcMfcc,
    EvtcDmfcc,
    FvtcMfcc,
    FvtcDmfcc,
    External,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 7] = [
        FeatureSet::RawMfcc,
        FeatureSet::RawDmfcc,
        FeatureSet::EvtcMfcc,
        FeatureSet::EvtcDmfcc,
        FeatureSet::FvtcMfcc,
        FeatureSet::FvtcDmfcc,
        FeatureSet::External,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::RawMfcc => "raw_mfcc",
            FeatureSet::RawDmfcc => "raw_dmfcc",
            FeatureSet::EvtcMfcc => "evtc_mfcc",
            FeatureSet::EvtcDmfcc => "evtc_dmfcc",
            FeatureSet::FvtcMfcc => "fvtc_mfcc",
            FeatureSet::FvtcDmfcc => "fvtc_dmfcc",
            FeatureSet::External => "external",
        }
    }

    /// Frame stream the feature set is computed from; `None` for external features.
    pub fn channel_kind(self) -> Option<ChannelKind> {
        match self {
            FeatureSet::RawMfcc | FeatureSet::EvtcMfcc | FeatureSet::FvtcMfcc => {
                Some(ChannelKind::Mfcc)
            }
            FeatureSet::RawDmfcc | FeatureSet::EvtcDmfcc | FeatureSet::FvtcDmfcc => {
                Some(ChannelKind::Dmfcc)
            }
            FeatureSet::External => None,
        }
    }

    pub fn is_fvtc(self) -> bool {
        matches!(self, FeatureSet::FvtcMfcc | FeatureSet::FvtcDmfcc)
    }

    /// Parses a comma-separated list, rejecting unknown and duplicate names.
    pub fn parse_list(s: &str) -> Result<Vec<FeatureSet>> {
        let mut out: Vec<FeatureSet> = Vec::new();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let fs: FeatureSet = name.parse()?;
            if out.contains(&fs) {
                return Err(Error::Config(format!("feature set `{name}` listed twice")));
            }
            out.push(fs);
        }
        if out.is_empty() {
            return Err(Error::Config("empty feature set list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|fs| fs.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = FeatureSet::ALL.iter().map(|f| f.as_str()).collect();
                Error::Config(format!(
                    "unknown feature set `{s}` (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalLevel {
    /// Segment predictions are averaged per speaker before scoring.
    #[default]
    Speaker,
    Segment,
}

impl FromStr for EvalLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speaker" => Ok(EvalLevel::Speaker),
            "segment" => Ok(EvalLevel::Segment),
            other => Err(Error::Config(format!(
                "unknown level `{other}` (expected speaker or segment)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub feature_set: FeatureSet,
    pub segment_s: f64,
    /// Defaults to `segment_s` (non-overlapping segments).
    pub segment_hop_s: Option<f64>,
    pub test_fraction: f64,
    pub n_runs: usize,
    pub n_controls_kept: usize,
    pub top_k: usize,
    pub level: EvalLevel,
    pub master_seed: u64,
    /// Draw the control subset once per experiment instead of once per run.
    pub fixed_controls: bool,
    /// Record all per-feature F-values in every run report (always on for FVTC).
    pub record_scores: bool,
    pub external_csv: Option<PathBuf>,
    pub dsp: DspConfig,
    pub vtc: VtcConfig,
    pub elastic_net: ElasticNetParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            feature_set: FeatureSet::FvtcDmfcc,
            segment_s: 10.0,
            segment_hop_s: None,
            test_fraction: 0.2,
            n_runs: 100,
            n_controls_kept: 7,
            top_k: 75,
            level: EvalLevel::Speaker,
            master_seed: 0,
            fixed_controls: false,
            record_scores: false,
            external_csv: None,
            dsp: DspConfig::default(),
            vtc: VtcConfig::default(),
            elastic_net: ElasticNetParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn hop_s(&self) -> f64 {
        self.segment_hop_s.unwrap_or(self.segment_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be >= 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be >= 1".into()));
        }
        if !(self.segment_s > 0.0 && self.segment_s.is_finite()) {
            return Err(Error::Config(format!(
                "segment_s must be > 0, got {}",
                self.segment_s
            )));
        }
        if !(self.hop_s() > 0.0 && self.hop_s().is_finite()) {
            return Err(Error::Config(format!(
                "segment_hop_s must be > 0, got {}",
                self.hop_s()
            )));
        }
        if self.feature_set == FeatureSet::External && self.external_csv.is_none() {
            return Err(Error::Config(
                "feature set `external` needs external_csv".into(),
            ));
        }
        self.dsp.validate()?;
        self.vtc.validate()?;
        self.elastic_net.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
