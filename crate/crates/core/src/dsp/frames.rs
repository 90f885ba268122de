use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::Container;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Mfcc,
    Dmfcc,
}

/// Channels x frames matrix, stored channel-major so each channel is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    pub n_channels: usize,
    pub n_frames: usize,
    pub values: Vec<f64>,
    pub channel_kind: ChannelKind,
    pub hop_ms: f64,
    pub speaker_id: String,
    /// Offset of the first frame within the full recording.
    pub start_frame: usize,
}

impl FrameMatrix {
    pub fn from_channels(
        channels: Vec<Vec<f64>>,
        channel_kind: ChannelKind,
        hop_ms: f64,
        speaker_id: impl Into<String>,
    ) -> Result<Self> {
        let n_channels = channels.len();
        let n_frames = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != n_frames) {
            return Err(Error::Input("channels have unequal lengths".into()));
        }
        Ok(FrameMatrix {
            n_channels,
            n_frames,
            values: channels.into_iter().flatten().collect(),
            channel_kind,
            hop_ms,
            speaker_id: speaker_id.into(),
            start_frame: 0,
        })
    }

    pub fn channel(&self, ch: usize) -> &[f64] {
        &self.values[ch * self.n_frames..(ch + 1) * self.n_frames]
    }

    pub fn channel_mut(&mut self, ch: usize) -> &mut [f64] {
        &mut self.values[ch * self.n_frames..(ch + 1) * self.n_frames]
    }

    pub fn get(&self, ch: usize, t: usize) -> f64 {
        self.values[ch * self.n_frames + t]
    }

    /// Copy of frames `start..start + len`.
    pub fn slice_frames(&self, start: usize, len: usize) -> FrameMatrix {
        let mut values = Vec::with_capacity(self.n_channels * len);
        for ch in 0..self.n_channels {
            values.extend_from_slice(&self.channel(ch)[start..start + len]);
        }
        FrameMatrix {
            n_channels: self.n_channels,
            n_frames: len,
            values,
            channel_kind: self.channel_kind,
            hop_ms: self.hop_ms,
            speaker_id: self.speaker_id.clone(),
            start_frame: self.start_frame + start,
        }
    }

    /// `VTCF` container: dims (channels, frames), label = speaker id, and a
    /// trailer of `u8 kind | f64 hop_ms | u64 start_frame`.
    pub fn to_container(&self) -> Container {
        let mut trailer = vec![match self.channel_kind {
            ChannelKind::Mfcc => 0u8,
            ChannelKind::Dmfcc => 1u8,
        }];
        trailer.extend_from_slice(&self.hop_ms.to_le_bytes());
        trailer.extend_from_slice(&(self.start_frame as u64).to_le_bytes());
        Container {
            dims: vec![self.n_channels as u32, self.n_frames as u32],
            values: self.values.iter().map(|&v| v as f32).collect(),
            label: self.speaker_id.clone(),
            trailer,
        }
    }

    pub fn from_container(c: Container) -> Result<Self> {
        if c.dims.len() != 2 {
            return Err(Error::Format("frame matrix needs two dims".into()));
        }
        let (kind, hop_ms, start_frame) = if c.trailer.len() >= 17 {
            let kind = match c.trailer[0] {
                0 => ChannelKind::Mfcc,
                1 => ChannelKind::Dmfcc,
                k => return Err(Error::Format(format!("unknown channel kind tag {k}"))),
            };
            let hop = f64::from_le_bytes(c.trailer[1..9].try_into().unwrap());
            let start = u64::from_le_bytes(c.trailer[9..17].try_into().unwrap());
            (kind, hop, start as usize)
        } else {
            (ChannelKind::Mfcc, 10.0, 0)
        };
        Ok(FrameMatrix {
            n_channels: c.dims[0] as usize,
            n_frames: c.dims[1] as usize,
            values: c.values.into_iter().map(f64::from).collect(),
            channel_kind: kind,
            hop_ms,
            speaker_id: c.label,
            start_frame,
        })
    }

    pub fn write_vtcf(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_container().to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_vtcf(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_container(Container::from_bytes(&bytes, 2)?)
    }

    /// One row per frame: `frame,c00,c01,...`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["frame".to_string()];
        header.extend((0..self.n_channels).map(|c| format!("c{c:02}")));
        out.write_record(&header)?;
        for t in 0..self.n_frames {
            let mut row = vec![(self.start_frame + t).to_string()];
            row.extend((0..self.n_channels).map(|c| self.get(c, t).to_string()));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Local linear-regression slope over `width` frames, boundary frames replicated.
pub fn delta(frames: &FrameMatrix, width: usize) -> Result<FrameMatrix> {
    if width < 3 || width.is_multiple_of(2) {
        return Err(Error::Input(format!(
            "delta width must be odd and >= 3, got {width}"
        )));
    }
    if frames.n_frames < width {
        return Err(Error::Input(format!(
            "{} frames is fewer than delta width {width}",
            frames.n_frames
        )));
    }
    let half = (width - 1) / 2;
    let denom = 2.0 * (1..=half).map(|k| (k * k) as f64).sum::<f64>();
    let n = frames.n_frames;
    let last = n - 1;
    let mut out = frames.clone();
    out.channel_kind = ChannelKind::Dmfcc;
    for ch in 0..frames.n_channels {
        let x = frames.channel(ch);
        let d = out.channel_mut(ch);
        for t in 0..n {
            let mut acc = 0.0;
            for k in 1..=half {
                let ahead = x[(t + k).min(last)];
                let behind = x[t.saturating_sub(k)];
                acc += k as f64 * (ahead - behind);
            }
            d[t] = acc / denom;
        }
    }
    Ok(out)
}

/// Per-channel mean removal and division by the population standard deviation.
/// Channels with (numerically) zero variance are only mean-centred.
pub fn cmvn(frames: &FrameMatrix) -> Result<FrameMatrix> {
    if frames.n_frames < 2 {
        return Err(Error::Input("cmvn needs at least two frames".into()));
    }
    let n = frames.n_frames as f64;
    let mut out = frames.clone();
    for ch in 0..frames.n_channels {
        let x = out.channel_mut(ch);
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        let divisor = if std > 1e-12 * (1.0 + mean.abs()) {
            std
        } else {
            1.0
        };
        for v in x.iter_mut() {
            *v = (*v - mean) / divisor;
        }
    }
    Ok(out)
}

/// Fixed-length windows of `round(segment_s / hop)` frames every
/// `round(hop_s / hop)` frames; a trailing partial window is dropped.
pub fn segment_frames(
    frames: &FrameMatrix,
    segment_s: f64,
    hop_s: f64,
) -> Result<Vec<FrameMatrix>> {
    if !(segment_s > 0.0 && hop_s > 0.0) {
        return Err(Error::Input(format!(
            "segment length and hop must be positive, got {segment_s} and {hop_s}"
        )));
    }
    let len = (segment_s * 1000.0 / frames.hop_ms).round() as usize;
    let step = (hop_s * 1000.0 / frames.hop_ms).round() as usize;
    if len == 0 || step == 0 {
        return Err(Error::Input("segment shorter than one frame hop".into()));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= frames.n_frames {
        out.push(frames.slice_frames(start, len));
        start += step;
    }
    Ok(out)
}
