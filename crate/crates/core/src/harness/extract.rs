use rayon::prelude::*;

use super::config::{ExperimentConfig, FeatureSet};
use crate::dataset::DatasetManifest;
use crate::dsp::{
    cmvn, delta, mfcc, read_wav, segment_frames, ChannelKind, DspConfig, FrameMatrix,
};
use crate::error::Result;
use crate::features::{
    evtc_feature_names, fvtc_feature_names, import_external_features, pool_stats, pool_stats_names,
    FeatureKind, FeatureRow, FeatureTable,
};
use crate::vtc::{evtc, fvtc};

/// Whole-recording frames of one speaker, each stream CMVN-normalised.
#[derive(Debug, Clone)]
pub struct SpeakerFrames {
    pub speaker_id: String,
    pub mfcc: FrameMatrix,
    pub dmfcc: FrameMatrix,
}

impl SpeakerFrames {
    pub fn stream(&self, kind: ChannelKind) -> &FrameMatrix {
        match kind {
            ChannelKind::Mfcc => &self.mfcc,
            ChannelKind::Dmfcc => &self.dmfcc,
        }
    }
}

/// MFCCs of the full recording, deltas from the raw MFCCs, then CMVN on both streams.
pub fn extract_speaker_frames(
    manifest: &DatasetManifest,
    speaker_id: &str,
    dsp: &DspConfig,
) -> Result<SpeakerFrames> {
    let record = manifest
        .get(speaker_id)
        .ok_or_else(|| crate::Error::Join(vec![speaker_id.to_string()]))?;
    let mut audio = read_wav(manifest.audio_path(record))?;
    audio.speaker_id = speaker_id.to_string();
    let raw = mfcc(&audio, dsp)?;
    let d = delta(&raw, dsp.delta_width)?;
    Ok(SpeakerFrames {
        speaker_id: speaker_id.to_string(),
        mfcc: cmvn(&raw)?,
        dmfcc: cmvn(&d)?,
    })
}

/// Frames for every manifest speaker, in manifest order.
#[derive(Debug, Clone)]
pub struct CorpusFrames {
    pub speakers: Vec<SpeakerFrames>,
}

impl CorpusFrames {
    pub fn extract(manifest: &DatasetManifest, dsp: &DspConfig) -> Result<Self> {
        let speakers = manifest
            .records
            .par_iter()
            .map(|r| extract_speaker_frames(manifest, &r.speaker_id, dsp))
            .collect::<Result<Vec<_>>>()?;
        Ok(CorpusFrames { speakers })
    }

    /// Segments every speaker and computes `cfg.feature_set` per segment.
    pub fn feature_table(
        &self,
        manifest: &DatasetManifest,
        cfg: &ExperimentConfig,
    ) -> Result<FeatureTable> {
        let Some(kind) = cfg.feature_set.channel_kind() else {
            let path = cfg.external_csv.as_ref().expect("validated config");
            return import_external_features(path, manifest);
        };
        let delays = cfg.vtc.delays();
        let n = cfg.vtc.n_channels;
        let (table_kind, names) = match cfg.feature_set {
            FeatureSet::RawMfcc | FeatureSet::RawDmfcc => {
                (FeatureKind::RawStats, pool_stats_names(cfg.dsp.n_mfcc - 1))
            }
            FeatureSet::FvtcMfcc | FeatureSet::FvtcDmfcc => {
                (FeatureKind::Fvtc, fvtc_feature_names(n, &delays))
            }
            _ => (FeatureKind::Evtc, evtc_feature_names(n, &delays)),
        };
        let per_speaker = self
            .speakers
            .par_iter()
            .map(|sp| -> Result<Vec<FeatureRow>> {
                let tms = manifest
                    .get(&sp.speaker_id)
                    .ok_or_else(|| crate::Error::Join(vec![sp.speaker_id.clone()]))?
                    .tms;
                let segments = segment_frames(sp.stream(kind), cfg.segment_s, cfg.hop_s())?;
                if segments.is_empty() {
                    log::warn!(
                        "speaker `{}` has no {} s segment",
                        sp.speaker_id,
                        cfg.segment_s
                    );
                }
                segments
                    .iter()
                    .enumerate()
                    .map(|(k, seg)| {
                        let values = match table_kind {
                            FeatureKind::RawStats => pool_stats(seg),
                            FeatureKind::Fvtc => fvtc(seg, &cfg.vtc)?.values,
                            _ => evtc(&fvtc(seg, &cfg.vtc)?)?.values,
                        };
                        Ok(FeatureRow {
                            speaker_id: sp.speaker_id.clone(),
                            segment_index: k,
                            target_tms: tms,
                            values,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        let table = FeatureTable {
            rows: per_speaker.into_iter().flatten().collect(),
            feature_names: names,
            kind: table_kind,
        };
        table.validate()?;
        Ok(table)
    }
}

/// Frames plus the feature table for a single configuration.
pub fn prepare_features(
    manifest: &DatasetManifest,
    cfg: &ExperimentConfig,
) -> Result<FeatureTable> {
    cfg.validate()?;
    if cfg.feature_set == FeatureSet::External {
        return CorpusFrames {
            speakers: Vec::new(),
        }
        .feature_table(manifest, cfg);
    }
    CorpusFrames::extract(manifest, &cfg.dsp)?.feature_table(manifest, cfg)
}
