use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::frames::{ChannelKind, FrameMatrix};
use super::wav::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DspConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    /// Cepstral coefficients computed before c0 is dropped.
    pub n_mfcc: usize,
    pub n_mels: usize,
    pub delta_width: usize,
    pub log_floor: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            window_ms: 25.0,
            hop_ms: 10.0,
            n_mfcc: 16,
            n_mels: 40,
            delta_width: 9,
            log_floor: 1e-10,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop_ms > 0.0 && self.window_ms > self.hop_ms) {
            return Err(Error::Config(format!(
                "need window_ms > hop_ms > 0, got window {} hop {}",
                self.window_ms, self.hop_ms
            )));
        }
        if self.n_mfcc < 2 || self.n_mfcc > self.n_mels {
            return Err(Error::Config(format!(
                "need 2 <= n_mfcc <= n_mels, got {} and {}",
                self.n_mfcc, self.n_mels
            )));
        }
        if self.delta_width < 3 || self.delta_width.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "delta_width must be odd and >= 3, got {}",
                self.delta_width
            )));
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return Err(Error::Config("log_floor must be positive".into()));
        }
        Ok(())
    }

    pub fn window_samples(&self, sample_rate: u32) -> usize {
        (self.window_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    /// Next power of two at or above the window length.
    pub fn fft_size(&self, sample_rate: u32) -> usize {
        self.window_samples(sample_rate).next_power_of_two()
    }
}

/// `1 + floor((len - window) / hop)`, or 0 when the signal is shorter than a window.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window || window == 0 || hop == 0 {
        0
    } else {
        1 + (len - window) / hop
    }
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

pub fn hz_to_mel(hz: f64) -> f64 {
    if hz < MIN_LOG_HZ {
        hz / F_SP
    } else {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    if mel < MIN_LOG_MEL {
        mel * F_SP
    } else {
        MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
    }
}

/// Area-normalised triangular filters spanning 0 Hz to Nyquist.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    pub n_fft: usize,
    pub sample_rate: u32,
    /// `n_mels + 2` edge frequencies; filter `m` spans `edges[m]..edges[m + 2]`.
    pub edges_hz: Vec<f64>,
    /// Per filter: first FFT bin and its weights.
    weights: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: u32) -> Self {
        let fmax = sample_rate as f64 / 2.0;
        let mel_max = hz_to_mel(fmax);
        let edges_hz: Vec<f64> = (0..n_mels + 2)
            .map(|k| mel_to_hz(mel_max * k as f64 / (n_mels + 1) as f64))
            .collect();
        let n_bins = n_fft / 2 + 1;
        let bin_hz = sample_rate as f64 / n_fft as f64;
        let weights = (0..n_mels)
            .map(|m| {
                let (lo, mid, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
                let norm = 2.0 / (hi - lo);
                let mut first = None;
                let mut w = Vec::new();
                for k in 0..n_bins {
                    let f = k as f64 * bin_hz;
                    let rise = (f - lo) / (mid - lo);
                    let fall = (hi - f) / (hi - mid);
                    let v = rise.min(fall).max(0.0) * norm;
                    if v > 0.0 {
                        first.get_or_insert(k);
                        w.push(v);
                    } else if first.is_some() {
                        break;
                    }
                }
                (first.unwrap_or(0), w)
            })
            .collect();
        MelFilterbank {
            n_fft,
            sample_rate,
            edges_hz,
            weights,
        }
    }

    pub fn n_mels(&self) -> usize {
        self.weights.len()
    }

    pub fn center_hz(&self, m: usize) -> f64 {
        self.edges_hz[m + 1]
    }

    /// Weight of filter `m` at an arbitrary frequency.
    pub fn response(&self, m: usize, hz: f64) -> f64 {
        let (lo, mid, hi) = (self.edges_hz[m], self.edges_hz[m + 1], self.edges_hz[m + 2]);
        let rise = (hz - lo) / (mid - lo);
        let fall = (hi - hz) / (hi - mid);
        rise.min(fall).max(0.0) * 2.0 / (hi - lo)
    }

    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for ((first, w), o) in self.weights.iter().zip(out.iter_mut()) {
            *o = w.iter().zip(&power[*first..]).map(|(a, b)| a * b).sum();
        }
    }
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

struct Framer {
    window: Vec<f64>,
    hop: usize,
    fft: Arc<dyn Fft<f64>>,
    n_fft: usize,
}

impl Framer {
    fn new(cfg: &DspConfig, sample_rate: u32) -> Self {
        let n_fft = cfg.fft_size(sample_rate);
        Framer {
            window: hamming(cfg.window_samples(sample_rate)),
            hop: cfg.hop_samples(sample_rate),
            fft: FftPlanner::new().plan_fft_forward(n_fft),
            n_fft,
        }
    }

    /// Power spectrum (`n_fft / 2 + 1` bins) of frame `t`.
    fn power(&self, samples: &[f64], t: usize, buf: &mut Vec<Complex<f64>>, out: &mut [f64]) {
        buf.clear();
        let start = t * self.hop;
        buf.extend(
            samples[start..start + self.window.len()]
                .iter()
                .zip(&self.window)
                .map(|(s, w)| Complex::new(s * w, 0.0)),
        );
        buf.resize(self.n_fft, Complex::new(0.0, 0.0));
        self.fft.process(buf);
        for (o, c) in out.iter_mut().zip(buf.iter()) {
            *o = c.norm_sqr();
        }
    }
}

/// Log mel energies, `n_mels x frames` (outer index is the mel band).
pub fn log_mel_spectrogram(audio: &AudioBuffer, cfg: &DspConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let sr = audio.sample_rate;
    if sr == 0 {
        return Err(Error::Input("sample rate is zero".into()));
    }
    let framer = Framer::new(cfg, sr);
    let n_frames = frame_count(audio.samples.len(), framer.window.len(), framer.hop);
    if n_frames == 0 {
        return Err(Error::Input(format!(
            "audio for `{}` has {} samples, shorter than one {}-sample window",
            audio.speaker_id,
            audio.samples.len(),
            framer.window.len()
        )));
    }
    let bank = MelFilterbank::new(cfg.n_mels, framer.n_fft, sr);
    let mut out = vec![vec![0.0; n_frames]; cfg.n_mels];
    let mut buf = Vec::with_capacity(framer.n_fft);
    let mut power = vec![0.0; framer.n_fft / 2 + 1];
    let mut mel = vec![0.0; cfg.n_mels];
    for t in 0..n_frames {
        framer.power(&audio.samples, t, &mut buf, &mut power);
        bank.apply(&power, &mut mel);
        for (row, &e) in out.iter_mut().zip(&mel) {
            row[t] = e.max(cfg.log_floor).ln();
        }
    }
    Ok(out)
}

/// Orthonormal DCT-II basis, `n_out x n_in`.
fn dct_basis(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n_in as f64).sqrt()
            } else {
                (2.0 / n_in as f64).sqrt()
            };
            (0..n_in)
                .map(|m| scale * (PI * k as f64 * (m as f64 + 0.5) / n_in as f64).cos())
                .collect()
        })
        .collect()
}

/// Cepstral coefficients 1..n_mfcc (c0 removed), one channel per coefficient.
pub fn mfcc(audio: &AudioBuffer, cfg: &DspConfig) -> Result<FrameMatrix> {
    let log_mel = log_mel_spectrogram(audio, cfg)?;
    let n_frames = log_mel[0].len();
    let basis = dct_basis(cfg.n_mfcc, cfg.n_mels);
    let n_channels = cfg.n_mfcc - 1;
    let mut values = vec![0.0; n_channels * n_frames];
    for (ch, row) in basis.iter().skip(1).enumerate() {
        let out = &mut values[ch * n_frames..(ch + 1) * n_frames];
        for (m, &b) in row.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(&log_mel[m]) {
                *o += b * x;
            }
        }
    }
    Ok(FrameMatrix {
        n_channels,
        n_frames,
        values,
        channel_kind: ChannelKind::Mfcc,
        hop_ms: cfg.hop_ms,
        speaker_id: audio.speaker_id.clone(),
        start_frame: 0,
    })
}
