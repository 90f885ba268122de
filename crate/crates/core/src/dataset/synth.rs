use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{save_manifest, Cohort, DatasetManifest, Severity, SpeakerRecord, TMS_MAX};
use crate::dsp::{hz_to_mel, mel_to_hz, write_wav, DspConfig};
use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Control-rate step of the articulation trajectories, seconds.
const CTRL_STEP_S: f64 = 0.005;
const ENVELOPE_SMOOTH_S: f64 = 0.040;
const JITTER_KNOT_S: f64 = 0.200;
const BASE_JITTER_MS: f64 = 5.0;
/// Jitter variance added per TMS point at unit coupling, ms^2.
const JITTER_MS2_PER_TMS: f64 = 28.0;
const PRIVATE_DRIVE_SHARE: f64 = 0.2;
const FORMANT_BANDS: [f64; 6] = [3.0, 8.0, 14.0, 20.0, 26.0, 33.0];
const FORMANT_WIDTH: f64 = 2.5;
const FORMANT_LAG_S: f64 = 0.025;
const PAIR_LAG_S: f64 = 0.060;
const N_BANDS: usize = 40;
const N_CEPSTRA: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthMode {
    /// Pseudo-formant bands driven by one lagged articulation envelope.
    Formant,
    /// Independent cepstral trajectories with a single planted lagged pair
    /// between MFCC channels `a` and `b` (0-based, c1 is channel 0).
    CepstralPair { a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_control: usize,
    pub n_premanifest: usize,
    pub n_early: usize,
    pub n_late: usize,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub seed: u64,
    /// Scales how much TMS inflates the inter-band lag jitter.
    pub coupling_strength: f64,
    pub mode: SynthMode,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_control: 7,
            n_premanifest: 12,
            n_early: 12,
            n_late: 7,
            duration_s: 60.0,
            sample_rate: 16_000,
            seed: 0,
            coupling_strength: 1.0,
            mode: SynthMode::Formant,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration_s must be > 0, got {}",
                self.duration_s
            )));
        }
        if self.sample_rate < 8000 {
            return Err(Error::Config(format!(
                "sample_rate must be >= 8000, got {}",
                self.sample_rate
            )));
        }
        if !(self.coupling_strength >= 0.0 && self.coupling_strength.is_finite()) {
            return Err(Error::Config(
                "coupling_strength must be finite and >= 0".into(),
            ));
        }
        if let SynthMode::CepstralPair { a, b } = self.mode {
            if a >= N_CEPSTRA || b >= N_CEPSTRA || a == b {
                return Err(Error::Config(format!(
                    "cepstral pair ({a}, {b}) must be two distinct channels below {N_CEPSTRA}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_speakers(&self) -> usize {
        self.n_control + self.n_premanifest + self.n_early + self.n_late
    }
}

/// Mean and standard deviation of the TMS draw for a severity group.
pub fn group_tms_distribution(severity: Severity) -> (f64, f64) {
    match severity {
        Severity::Control => (4.4, 2.7),
        Severity::Premanifest => (10.0, 7.0),
        Severity::Early => (40.0, 13.0),
        Severity::Late => (64.0, 16.0),
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpeaker {
    pub speaker_id: String,
    pub tms: f64,
    pub sample_rate: u32,
    pub samples: Vec<f64>,
    /// Realised standard deviation of the lag jitter process, ms.
    pub lag_jitter_ms: f64,
}

fn draw_tms(rng: &mut ChaCha8Rng, severity: Severity) -> f64 {
    let (mean, std) = group_tms_distribution(severity);
    let normal = Normal::new(mean, std).expect("positive std");
    loop {
        let v: f64 = normal.sample(rng);
        if (0.0..=TMS_MAX).contains(&v) {
            return (v * 10.0).round() / 10.0;
        }
    }
}

fn gaussian_kernel(sigma_steps: f64) -> Vec<f64> {
    let half = (4.0 * sigma_steps).ceil() as isize;
    let k: Vec<f64> = (-half..=half)
        .map(|i| (-0.5 * (i as f64 / sigma_steps).powi(2)).exp())
        .collect();
    let norm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    k.into_iter().map(|v| v / norm).collect()
}

/// Unit-variance Gaussian process: white noise smoothed by a Gaussian kernel.
fn smooth_noise(rng: &mut ChaCha8Rng, n: usize, kernel: &[f64]) -> Vec<f64> {
    let pad = kernel.len() - 1;
    let white: Vec<f64> = (0..n + pad).map(|_| rng.sample(StandardNormal)).collect();
    (0..n)
        .map(|t| {
            kernel
                .iter()
                .zip(&white[t..t + kernel.len()])
                .map(|(k, w)| k * w)
                .sum()
        })
        .collect()
}

/// Piecewise-linear N(0, sigma^2) knot process sampled on the control grid.
fn jitter_process(
    rng: &mut ChaCha8Rng,
    n: usize,
    knot_every: usize,
    sigma: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n_knots = n / knot_every + 2;
    let knots: Vec<f64> = (0..n_knots)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let path = (0..n)
        .map(|t| {
            let k = t / knot_every;
            let frac = (t % knot_every) as f64 / knot_every as f64;
            knots[k] + frac * (knots[k + 1] - knots[k])
        })
        .collect();
    (path, knots)
}

/// Linear interpolation of `x` at fractional index `pos` with edge clamping.
fn sample_at(x: &[f64], pos: f64) -> f64 {
    let last = (x.len() - 1) as f64;
    let p = pos.clamp(0.0, last);
    let i = p.floor() as usize;
    if i + 1 >= x.len() {
        return x[x.len() - 1];
    }
    let f = p - i as f64;
    x[i] + f * (x[i + 1] - x[i])
}

fn jitter_sigma_ms(tms: f64, coupling: f64) -> f64 {
    (BASE_JITTER_MS.powi(2) + coupling * tms * JITTER_MS2_PER_TMS).sqrt()
}

fn std_dev(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Log band powers (bands x control steps) for the formant mode.
fn formant_log_power(rng: &mut ChaCha8Rng, n_ctrl: usize, sigma_ms: f64) -> (Vec<Vec<f64>>, f64) {
    let kernel = gaussian_kernel(ENVELOPE_SMOOTH_S / CTRL_STEP_S);
    let knot_every = (JITTER_KNOT_S / CTRL_STEP_S).round() as usize;
    let gain = 1.2 * rng.random_range(0.8..1.2);
    let tilt = rng.random_range(-0.06..-0.02);
    let centres: Vec<f64> = FORMANT_BANDS
        .iter()
        .map(|c| c + rng.random_range(-0.7..0.7))
        .collect();
    let envelope = smooth_noise(rng, n_ctrl, &kernel);
    let mut all_knots = Vec::new();
    let mut drives = Vec::with_capacity(centres.len());
    for k in 0..centres.len() {
        let (jitter, knots) = jitter_process(rng, n_ctrl, knot_every, sigma_ms);
        all_knots.extend(knots);
        let private = smooth_noise(rng, n_ctrl, &kernel);
        let base_lag = k as f64 * FORMANT_LAG_S / CTRL_STEP_S;
        let drive: Vec<f64> = (0..n_ctrl)
            .map(|t| {
                let lag = base_lag + jitter[t] / 1000.0 / CTRL_STEP_S;
                let shared = sample_at(&envelope, t as f64 - lag);
                (1.0 - PRIVATE_DRIVE_SHARE).sqrt() * shared
                    + PRIVATE_DRIVE_SHARE.sqrt() * private[t]
            })
            .collect();
        drives.push(drive);
    }
    let log_power = (0..N_BANDS)
        .map(|m| {
            let weights: Vec<f64> = centres
                .iter()
                .map(|c| (-0.5 * ((m as f64 - c) / FORMANT_WIDTH).powi(2)).exp())
                .collect();
            (0..n_ctrl)
                .map(|t| {
                    tilt * m as f64
                        + gain
                            * weights
                                .iter()
                                .zip(&drives)
                                .map(|(w, d)| w * d[t])
                                .sum::<f64>()
                })
                .collect()
        })
        .collect();
    (log_power, std_dev(&all_knots))
}

/// Log band powers for the planted cepstral-pair mode.
fn cepstral_pair_log_power(
    rng: &mut ChaCha8Rng,
    n_ctrl: usize,
    sigma_ms: f64,
    a: usize,
    b: usize,
) -> (Vec<Vec<f64>>, f64) {
    let kernel = gaussian_kernel(ENVELOPE_SMOOTH_S / CTRL_STEP_S);
    let knot_every = (JITTER_KNOT_S / CTRL_STEP_S).round() as usize;
    let mut cepstra: Vec<Vec<f64>> = (0..N_CEPSTRA)
        .map(|_| smooth_noise(rng, n_ctrl, &kernel))
        .collect();
    let (jitter, knots) = jitter_process(rng, n_ctrl, knot_every, sigma_ms);
    let source = cepstra[a].clone();
    let private = smooth_noise(rng, n_ctrl, &kernel);
    let base_lag = PAIR_LAG_S / CTRL_STEP_S;
    cepstra[b] = (0..n_ctrl)
        .map(|t| {
            let lag = base_lag + jitter[t] / 1000.0 / CTRL_STEP_S;
            (1.0 - PRIVATE_DRIVE_SHARE).sqrt() * sample_at(&source, t as f64 - lag)
                + PRIVATE_DRIVE_SHARE.sqrt() * private[t]
        })
        .collect();
    // inverse orthonormal DCT-II; cepstrum n+1 carries channel n
    let scale = 1.5;
    let nb = N_BANDS as f64;
    let log_power = (0..N_BANDS)
        .map(|m| {
            let basis: Vec<f64> = (0..N_CEPSTRA)
                .map(|n| (2.0 / nb).sqrt() * (PI * (n + 1) as f64 * (m as f64 + 0.5) / nb).cos())
                .collect();
            (0..n_ctrl)
                .map(|t| {
                    scale
                        * basis
                            .iter()
                            .zip(&cepstra)
                            .map(|(w, c)| w * c[t])
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    (log_power, std_dev(&knots))
}

/// Centre frequencies of the analysis mel bands at `sample_rate`.
fn band_centres(sample_rate: u32) -> Vec<f64> {
    let top = hz_to_mel(sample_rate as f64 / 2.0);
    (1..=N_BANDS)
        .map(|m| mel_to_hz(top * m as f64 / (N_BANDS + 1) as f64))
        .collect()
}

fn render(
    rng: &mut ChaCha8Rng,
    log_power: &[Vec<f64>],
    n_samples: usize,
    sample_rate: u32,
) -> Vec<f64> {
    let ctrl_per_sample = 1.0 / (CTRL_STEP_S * sample_rate as f64);
    let mut out = vec![0.0; n_samples];
    for (lp, hz) in log_power.iter().zip(band_centres(sample_rate)) {
        let amp: Vec<f64> = lp.iter().map(|l| (0.5 * l).exp()).collect();
        let phase0: f64 = rng.random_range(0.0..2.0 * PI);
        let step = 2.0 * PI * hz / sample_rate as f64;
        let (mut re, mut im) = (phase0.cos(), phase0.sin());
        let (cr, ci) = (step.cos(), step.sin());
        for (n, o) in out.iter_mut().enumerate() {
            *o += sample_at(&amp, n as f64 * ctrl_per_sample) * im;
            let nr = re * cr - im * ci;
            im = re * ci + im * cr;
            re = nr;
            if n % 1024 == 1023 {
                let norm = (re * re + im * im).sqrt();
                re /= norm;
                im /= norm;
            }
        }
    }
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n_samples as f64).sqrt();
    let noise = rms * 10f64.powf(-50.0 / 20.0);
    for o in out.iter_mut() {
        *o += noise * rng.sample::<f64, _>(StandardNormal);
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for o in out.iter_mut() {
            *o *= 0.9 / peak;
        }
    }
    out
}

/// Samples per recording: `duration_s` of audio plus the tail the last
/// analysis window needs, so the default front end yields `duration_s / hop` frames.
pub fn recording_samples(cfg: &SynthConfig) -> usize {
    let dsp = DspConfig::default();
    let tail = dsp.window_samples(cfg.sample_rate) - dsp.hop_samples(cfg.sample_rate);
    (cfg.duration_s * cfg.sample_rate as f64).round() as usize + tail
}

/// Synthesises one speaker's recording; deterministic in `seed`.
pub fn synthesize_speaker(
    cfg: &SynthConfig,
    speaker_id: &str,
    tms: f64,
    seed: u64,
) -> Result<SynthSpeaker> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, 0);
    let n_samples = recording_samples(cfg);
    let n_ctrl = (cfg.duration_s / CTRL_STEP_S).ceil() as usize + 2;
    let sigma_ms = jitter_sigma_ms(tms, cfg.coupling_strength);
    let (log_power, lag_jitter_ms) = match cfg.mode {
        SynthMode::Formant => formant_log_power(&mut rng, n_ctrl, sigma_ms),
        SynthMode::CepstralPair { a, b } => {
            cepstral_pair_log_power(&mut rng, n_ctrl, sigma_ms, a, b)
        }
    };
    let samples = render(&mut rng, &log_power, n_samples, cfg.sample_rate);
    Ok(SynthSpeaker {
        speaker_id: speaker_id.to_string(),
        tms,
        sample_rate: cfg.sample_rate,
        samples,
        lag_jitter_ms,
    })
}

fn plan_records(cfg: &SynthConfig) -> Vec<(SpeakerRecord, u64)> {
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let groups = [
        (Severity::Control, cfg.n_control, "ctl"),
        (Severity::Premanifest, cfg.n_premanifest, "pre"),
        (Severity::Early, cfg.n_early, "early"),
        (Severity::Late, cfg.n_late, "late"),
    ];
    let mut out = Vec::with_capacity(cfg.n_speakers());
    for (severity, count, prefix) in groups {
        for i in 0..count {
            let speaker_id = format!("{prefix}{:02}", i + 1);
            let tms = draw_tms(&mut rng, severity);
            let (cohort, dcl, tfc) = match severity {
                Severity::Control => (Cohort::Control, None, None),
                Severity::Premanifest => (
                    Cohort::Hd,
                    Some(rng.random_range(0..=3u8)),
                    Some(rng.random_range(11..=13u8)),
                ),
                Severity::Early => (Cohort::Hd, Some(4), Some(rng.random_range(7..=13u8))),
                Severity::Late => (Cohort::Hd, Some(4), Some(rng.random_range(0..=6u8))),
            };
            let record = SpeakerRecord {
                wav_path: PathBuf::from("audio").join(format!("{speaker_id}.wav")),
                speaker_id,
                tms,
                cohort,
                severity,
                tfc,
                dcl,
            };
            out.push((record, rng.random()));
        }
    }
    out
}

/// Writes `audio/<id>.wav` for every speaker plus `manifest.csv` under `out_dir`.
pub fn generate_synthetic_corpus(
    cfg: &SynthConfig,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    let audio_dir = out_dir.join("audio");
    std::fs::create_dir_all(&audio_dir).map_err(|e| Error::io(&audio_dir, e))?;
    let planned = plan_records(cfg);
    planned
        .par_iter()
        .try_for_each(|(record, seed)| -> Result<()> {
            let speaker = synthesize_speaker(cfg, &record.speaker_id, record.tms, *seed)?;
            write_wav(
                out_dir.join(&record.wav_path),
                &speaker.samples,
                cfg.sample_rate,
            )
        })?;
    let mut manifest = DatasetManifest::new(planned.into_iter().map(|(r, _)| r).collect())?;
    manifest.sample_rate_hint = Some(cfg.sample_rate);
    save_manifest(&manifest, out_dir.join("manifest.csv"))?;
    manifest.base_dir = Some(out_dir.to_path_buf());
    log::info!(
        "wrote {} synthetic speakers to {}",
        manifest.len(),
        out_dir.display()
    );
    Ok(manifest)
}

/// TMS values and per-speaker seeds without rendering audio.
pub fn plan_synthetic_speakers(cfg: &SynthConfig) -> Vec<(SpeakerRecord, u64)> {
    plan_records(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::pearson;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_control: 2,
            n_premanifest: 0,
            n_early: 0,
            n_late: 1,
            duration_s: 1.0,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn corpus_is_byte_identical_on_rerun() {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let m1 = generate_synthetic_corpus(&small(7), d1.path()).unwrap();
        generate_synthetic_corpus(&small(7), d2.path()).unwrap();
        assert_eq!(m1.len(), 3);
        let read = |d: &Path, p: &str| std::fs::read(d.join(p)).unwrap();
        assert_eq!(
            read(d1.path(), "manifest.csv"),
            read(d2.path(), "manifest.csv")
        );
        for r in &m1.records {
            let p = r.wav_path.to_str().unwrap();
            assert_eq!(read(d1.path(), p), read(d2.path(), p));
        }
        let reloaded = crate::dataset::load_manifest(d1.path().join("manifest.csv")).unwrap();
        assert_eq!(reloaded.records, m1.records);
    }

    #[test]
    fn control_tms_matches_target_moments() {
        let cfg = SynthConfig {
            n_control: 31,
            n_premanifest: 0,
            n_early: 0,
            n_late: 0,
            seed: 3,
            ..Default::default()
        };
        let planned = plan_synthetic_speakers(&cfg);
        let mean = planned.iter().map(|(r, _)| r.tms).sum::<f64>() / 31.0;
        assert!((mean - 4.4).abs() <= 2.0 * 2.7 / 31f64.sqrt(), "{mean}");
        assert!(planned.iter().all(|(r, _)| r.validate().is_ok()));
    }

    #[test]
    fn hd_labels_are_consistent() {
        let planned = plan_synthetic_speakers(&SynthConfig::default());
        assert_eq!(planned.len(), 38);
        for (r, _) in &planned {
            r.validate().unwrap();
            assert!((0.0..=TMS_MAX).contains(&r.tms));
        }
    }

    #[test]
    fn zero_coupling_decouples_jitter_from_tms() {
        let cfg = SynthConfig {
            coupling_strength: 0.0,
            duration_s: 20.0,
            ..Default::default()
        };
        let (mut tms, mut jitter) = (Vec::new(), Vec::new());
        for i in 0..50u64 {
            let t = i as f64 * 2.5;
            let sigma = jitter_sigma_ms(t, 0.0);
            let mut rng = stream_rng(99, i);
            let n = (cfg.duration_s / CTRL_STEP_S) as usize;
            let (_, knots) = jitter_process(&mut rng, n, 40, sigma);
            tms.push(t);
            jitter.push(std_dev(&knots));
        }
        assert!(pearson(&tms, &jitter).unwrap().abs() < 0.4);

        let coupled: Vec<f64> = tms.iter().map(|&t| jitter_sigma_ms(t, 1.0)).collect();
        assert!(pearson(&tms, &coupled).unwrap() > 0.9);
    }

    #[test]
    fn speaker_jitter_tracks_tms_when_coupled() {
        let cfg = SynthConfig {
            duration_s: 2.0,
            ..Default::default()
        };
        let low = synthesize_speaker(&cfg, "a", 2.0, 1).unwrap();
        let high = synthesize_speaker(&cfg, "b", 100.0, 1).unwrap();
        assert!(high.lag_jitter_ms > 2.0 * low.lag_jitter_ms);
        assert_eq!(low.samples.len(), 32_240);
        let frames = crate::dsp::frame_count(low.samples.len(), 400, 160);
        assert_eq!(frames, 200);
        let peak = low.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.9).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs() {
        assert!(SynthConfig {
            duration_s: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            sample_rate: 4000,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            mode: SynthMode::CepstralPair { a: 2, b: 2 },
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            mode: SynthMode::CepstralPair { a: 2, b: 15 },
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
