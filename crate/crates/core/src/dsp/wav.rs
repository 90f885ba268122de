use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    /// Mono samples in [-1, 1].
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub speaker_id: String,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32, speaker_id: impl Into<String>) -> Self {
        AudioBuffer {
            samples,
            sample_rate,
            speaker_id: speaker_id.into(),
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::FormatError(msg) => Error::Format(format!("{}: {msg}", path.display())),
        hound::Error::Unsupported => {
            Error::Format(format!("{}: unsupported WAV codec", path.display()))
        }
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Reads a PCM integer or IEEE float WAV file, downmixing to mono by the
/// per-frame arithmetic mean. The speaker id is the file stem.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format(format!("{}: zero channels", path.display())));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (hound::SampleFormat::Int, bits @ 8..=32) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (fmt, bits) => {
            return Err(Error::Format(format!(
                "{}: unsupported sample format {fmt:?} with {bits} bits",
                path.display()
            )))
        }
    };
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    let speaker_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(AudioBuffer {
        samples,
        sample_rate: spec.sample_rate,
        speaker_id,
    })
}

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(q).map_err(|e| map_hound(path, e))?;
    }
    w.finalize().map_err(|e| map_hound(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, channels: u16, bits: u16, format: hound::SampleFormat, data: &[i32]) {
        let spec = hound::WavSpec {
            channels,
            sample_rate: 16000,
            bits_per_sample: bits,
            sample_format: format,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &d in data {
            if bits == 16 {
                w.write_sample(d as i16).unwrap();
            } else {
                w.write_sample(d).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn pcm16_full_scale_maps_to_just_below_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_raw(&p, 1, 16, hound::SampleFormat::Int, &[32767, -32768, 0]);
        let a = read_wav(&p).unwrap();
        assert_eq!(a.samples, vec![32767.0 / 32768.0, -1.0, 0.0]);
        assert_eq!(a.sample_rate, 16000);
        assert_eq!(a.speaker_id, "a");
    }

    #[test]
    fn stereo_is_mean_downmixed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        write_raw(
            &p,
            2,
            16,
            hound::SampleFormat::Int,
            &[16384, -16384, 8192, 8192],
        );
        let a = read_wav(&p).unwrap();
        assert_eq!(a.samples, vec![0.0, 0.25]);
    }

    #[test]
    fn float32_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        w.write_sample(0.5f32).unwrap();
        w.write_sample(-0.25f32).unwrap();
        w.finalize().unwrap();
        assert_eq!(read_wav(&p).unwrap().samples, vec![0.5, -0.25]);
    }

    /// Minimal RIFF header declaring format tag 0x0031 (GSM 6.10).
    fn gsm_wav() -> Vec<u8> {
        let mut b = Vec::new();
        let fmt_len: u32 = 20;
        let data = [0u8; 65];
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(4 + 8 + fmt_len + 8 + data.len() as u32).to_le_bytes());
        b.extend_from_slice(b"WAVE");
        b.extend_from_slice(b"fmt ");
        b.extend_from_slice(&fmt_len.to_le_bytes());
        b.extend_from_slice(&0x0031u16.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&8000u32.to_le_bytes());
        b.extend_from_slice(&1625u32.to_le_bytes());
        b.extend_from_slice(&65u16.to_le_bytes());
        b.extend_from_slice(&0u16.to_le_bytes());
        b.extend_from_slice(&2u16.to_le_bytes());
        b.extend_from_slice(&320u16.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&(data.len() as u32).to_le_bytes());
        b.extend_from_slice(&data);
        b
    }

    #[test]
    fn gsm_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gsm.wav");
        std::fs::write(&p, gsm_wav()).unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        write_raw(
            &p,
            1,
            16,
            hound::SampleFormat::Int,
            &[1, 2, 3, 4, 5, 6, 7, 8],
        );
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        let err = read_wav(&p).unwrap_err();
        assert!(err.is_io(), "{err:?}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_wav("/nonexistent/x.wav").unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("/nonexistent/x.wav"));
    }

    #[test]
    fn write_then_read_quantises_to_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.wav");
        write_wav(&p, &[0.0, 0.5, -1.0, 2.0], 16000).unwrap();
        let a = read_wav(&p).unwrap();
        assert_eq!(a.samples.len(), 4);
        assert!((a.samples[1] - 0.5).abs() < 1e-4);
        assert!((a.samples[3] - 32767.0 / 32768.0).abs() < 1e-12);
    }
}
