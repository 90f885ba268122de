//! Audio to frame-level cepstral features.
//!
//! The processing chain per recording is
//! `read_wav -> mfcc (c0 dropped) -> delta -> cmvn -> segment_frames`,
//! with CMVN applied to each stream over the whole recording.

mod frames;
mod mfcc;
mod wav;

pub use frames::{cmvn, delta, segment_frames, ChannelKind, FrameMatrix};
pub use mfcc::{
    frame_count, hz_to_mel, log_mel_spectrogram, mel_to_hz, mfcc, DspConfig, MelFilterbank,
};
pub use wav::{read_wav, write_wav, AudioBuffer};
