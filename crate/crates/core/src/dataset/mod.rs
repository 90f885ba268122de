//! Corpus manifests, severity labelling, and the synthetic corpus generator.

mod manifest;
mod synth;

pub use manifest::{
    derive_severity, load_manifest, save_manifest, Cohort, DatasetManifest, Severity,
    SpeakerRecord, MANIFEST_HEADER, TMS_MAX,
};
pub use synth::{
    generate_synthetic_corpus, group_tms_distribution, plan_synthetic_speakers, recording_samples,
    synthesize_speaker, SynthConfig, SynthMode, SynthSpeaker,
};
