//! Shared inputs for the benchmarks.

use vtc_core::dataset::{synthesize_speaker, SynthConfig};
use vtc_core::dsp::{mfcc, AudioBuffer};
use vtc_core::{DspConfig, FrameMatrix};

/// A synthetic recording of `duration_s` seconds at 16 kHz.
pub fn recording(duration_s: f64) -> AudioBuffer {
    let cfg = SynthConfig {
        duration_s,
        ..SynthConfig::default()
    };
    let s = synthesize_speaker(&cfg, "bench01", 100.0, 42).expect("valid synth config");
    AudioBuffer::new(s.samples, s.sample_rate, s.speaker_id)
}

/// MFCC frames for a synthetic recording.
pub fn frames(duration_s: f64) -> FrameMatrix {
    mfcc(&recording(duration_s), &DspConfig::default()).expect("valid audio")
}

/// Deterministic regression problem with `n` rows and `p` columns.
pub fn regression(n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| next()).collect()).collect();
    let y = rows
        .iter()
        .map(|r| 3.0 * r[0] - 2.0 * r[1] + r[p / 2] + 0.1 * next())
        .collect();
    (rows, y)
}
