//! Vocal tract coordination features.
//!
//! For zero-mean channels `x_i`, the delayed normalised correlation is
//!
//! ```text
//! r[i][j][d] = sum_{t < T-d} x_i[t] * x_j[t+d] / sqrt(E_i * E_j),   E_i = sum_t x_i[t]^2
//! ```
//!
//! with the energies taken over the full segment. The full tensor over all
//! channel pairs and delays is the FVTC feature; the per-delay eigenvalue
//! spectra of the symmetrised channel matrices form the EVTC feature.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::container::Container;
use crate::dsp::FrameMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneratePolicy {
    /// Zero-energy channels are an error.
    #[default]
    Error,
    /// Correlations involving a zero-energy channel are 0.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VtcConfig {
    pub n_channels: usize,
    /// Number of delays on the grid.
    pub max_delay: usize,
    pub first_delay: usize,
    pub delay_stride: usize,
    pub degenerate: DegeneratePolicy,
}

impl Default for VtcConfig {
    fn default() -> Self {
        VtcConfig {
            n_channels: 15,
            max_delay: 80,
            first_delay: 0,
            delay_stride: 1,
            degenerate: DegeneratePolicy::Error,
        }
    }
}

impl VtcConfig {
    /// `first, first + stride, ...` strictly below `first + max_delay`.
    pub fn delays(&self) -> Vec<usize> {
        (self.first_delay..self.first_delay + self.max_delay)
            .step_by(self.delay_stride.max(1))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_delay == 0 || self.delay_stride == 0 || self.n_channels == 0 {
            return Err(Error::Config(
                "max_delay, delay_stride and n_channels must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VtcTensor {
    pub n_channels: usize,
    pub delays: Vec<usize>,
    /// Flat index `(i * N + j) * D + k` for delay `delays[k]`.
    pub values: Vec<f64>,
    pub speaker_id: String,
    pub segment_index: usize,
}

impl VtcTensor {
    pub fn n_delays(&self) -> usize {
        self.delays.len()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_channels + j) * self.delays.len() + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// `N x N` channel matrix at delay index `k`.
    pub fn slice(&self, k: usize) -> DMatrix<f64> {
        let n = self.n_channels;
        DMatrix::from_fn(n, n, |i, j| self.get(i, j, k))
    }

    /// Trailer: `u64 segment_index | u32 n_delays | u32 delay...`.
    pub fn to_container(&self) -> Container {
        let mut trailer = (self.segment_index as u64).to_le_bytes().to_vec();
        trailer.extend_from_slice(&(self.delays.len() as u32).to_le_bytes());
        for &d in &self.delays {
            trailer.extend_from_slice(&(d as u32).to_le_bytes());
        }
        let n = self.n_channels as u32;
        Container {
            dims: vec![n, n, self.delays.len() as u32],
            values: self.values.iter().map(|&v| v as f32).collect(),
            label: self.speaker_id.clone(),
            trailer,
        }
    }

    pub fn from_container(c: Container) -> Result<Self> {
        if c.dims.len() != 3 || c.dims[0] != c.dims[1] {
            return Err(Error::Format("VTC tensor needs dims N x N x D".into()));
        }
        let n_delays = c.dims[2] as usize;
        let (segment_index, delays) = match c.trailer.len() {
            len if len >= 12 => {
                let seg = u64::from_le_bytes(c.trailer[0..8].try_into().unwrap()) as usize;
                let count = u32::from_le_bytes(c.trailer[8..12].try_into().unwrap()) as usize;
                if count != n_delays || len < 12 + 4 * count {
                    return Err(Error::Format("VTC tensor delay trailer mismatch".into()));
                }
                let delays = c.trailer[12..12 + 4 * count]
                    .chunks_exact(4)
                    .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
                    .collect();
                (seg, delays)
            }
            _ => (0, (0..n_delays).collect()),
        };
        Ok(VtcTensor {
            n_channels: c.dims[0] as usize,
            delays,
            values: c.values.into_iter().map(f64::from).collect(),
            speaker_id: c.label,
            segment_index,
        })
    }

    pub fn write_vtcf(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_container().to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_vtcf(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_container(Container::from_bytes(&bytes, 3)?)
    }

    /// Columns `i,j,d,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["i", "j", "d", "value"])?;
        for i in 0..self.n_channels {
            for j in 0..self.n_channels {
                for (k, d) in self.delays.iter().enumerate() {
                    out.write_record([
                        i.to_string(),
                        j.to_string(),
                        d.to_string(),
                        self.get(i, j, k).to_string(),
                    ])?;
                }
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvtcMatrix {
    pub n_channels: usize,
    pub delays: Vec<usize>,
    /// Flat index `rank * D + k`: the `rank`-th largest eigenvalue at delay index `k`.
    pub values: Vec<f64>,
    pub speaker_id: String,
    pub segment_index: usize,
}

impl EvtcMatrix {
    pub fn get(&self, rank: usize, k: usize) -> f64 {
        self.values[rank * self.delays.len() + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_channels).map(|r| self.get(r, k)).collect()
    }

    pub fn to_container(&self) -> Container {
        let mut trailer = (self.segment_index as u64).to_le_bytes().to_vec();
        trailer.extend_from_slice(&(self.delays.len() as u32).to_le_bytes());
        for &d in &self.delays {
            trailer.extend_from_slice(&(d as u32).to_le_bytes());
        }
        Container {
            dims: vec![self.n_channels as u32, self.delays.len() as u32],
            values: self.values.iter().map(|&v| v as f32).collect(),
            label: self.speaker_id.clone(),
            trailer,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four fixed lanes: the summation order depends only on the length.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let base = c * 4;
        for l in 0..4 {
            acc[l] += a[base + l] * b[base + l];
        }
    }
    let mut tail = 0.0;
    for t in chunks * 4..n {
        tail += a[t] * b[t];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn check_channels(frames: &FrameMatrix, i: usize, j: usize) -> Result<()> {
    if i >= frames.n_channels || j >= frames.n_channels {
        return Err(Error::Input(format!(
            "channel pair ({i}, {j}) out of range for {} channels",
            frames.n_channels
        )));
    }
    Ok(())
}

/// Delayed normalised correlation of channel `i` with channel `j` shifted by `d` frames.
pub fn xcorr(frames: &FrameMatrix, i: usize, j: usize, d: usize) -> Result<f64> {
    check_channels(frames, i, j)?;
    let t = frames.n_frames;
    if d >= t {
        return Err(Error::Input(format!("delay {d} not below frame count {t}")));
    }
    let (xi, xj) = (frames.channel(i), frames.channel(j));
    let ei = dot(xi, xi);
    let ej = dot(xj, xj);
    if ei == 0.0 || ej == 0.0 {
        return Err(Error::DegenerateChannel { i, j });
    }
    Ok(dot(&xi[..t - d], &xj[d..]) / (ei * ej).sqrt())
}

/// Full `N x N x D` correlation tensor of one segment.
pub fn fvtc(frames: &FrameMatrix, cfg: &VtcConfig) -> Result<VtcTensor> {
    cfg.validate()?;
    let n = frames.n_channels;
    if n != cfg.n_channels {
        return Err(Error::Input(format!(
            "expected {} channels, got {n}",
            cfg.n_channels
        )));
    }
    let delays = cfg.delays();
    let t = frames.n_frames;
    let max_d = *delays.last().expect("validated non-empty delay grid");
    if t <= max_d {
        return Err(Error::SegmentTooShort {
            n_frames: t,
            max_delay: max_d,
        });
    }
    let energy: Vec<f64> = (0..n)
        .map(|c| dot(frames.channel(c), frames.channel(c)))
        .collect();
    let nd = delays.len();
    let mut values = vec![0.0; n * n * nd];
    for i in 0..n {
        let xi = frames.channel(i);
        for j in 0..n {
            let xj = frames.channel(j);
            let norm = (energy[i] * energy[j]).sqrt();
            let out = &mut values[(i * n + j) * nd..(i * n + j + 1) * nd];
            if norm == 0.0 {
                match cfg.degenerate {
                    DegeneratePolicy::Error => return Err(Error::DegenerateChannel { i, j }),
                    DegeneratePolicy::Zero => continue,
                }
            }
            for (o, &d) in out.iter_mut().zip(&delays) {
                *o = dot(&xi[..t - d], &xj[d..]) / norm;
            }
        }
    }
    Ok(VtcTensor {
        n_channels: n,
        delays,
        values,
        speaker_id: frames.speaker_id.clone(),
        segment_index: 0,
    })
}

/// Descending eigenvalues of `(R_d + R_d^T) / 2` for every delay slice.
pub fn evtc(tensor: &VtcTensor) -> Result<EvtcMatrix> {
    let n = tensor.n_channels;
    let nd = tensor.n_delays();
    if let Some(pos) = tensor.values.iter().position(|v| !v.is_finite()) {
        let k = pos % nd;
        let ij = pos / nd;
        return Err(Error::NonFinite {
            i: ij / n,
            j: ij % n,
            d: tensor.delays[k],
        });
    }
    let mut values = vec![0.0; n * nd];
    for k in 0..nd {
        let r = tensor.slice(k);
        let sym = (&r + r.transpose()) * 0.5;
        let mut eig: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (rank, e) in eig.into_iter().enumerate() {
            values[rank * nd + k] = e;
        }
    }
    Ok(EvtcMatrix {
        n_channels: n,
        delays: tensor.delays.clone(),
        values,
        speaker_id: tensor.speaker_id.clone(),
        segment_index: tensor.segment_index,
    })
}
