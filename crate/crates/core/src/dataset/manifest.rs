use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound of the Total Motor Score.
pub const TMS_MAX: f64 = 128.0;

pub const MANIFEST_HEADER: [&str; 7] = [
    "speaker_id",
    "wav_path",
    "tms",
    "cohort",
    "severity",
    "tfc",
    "dcl",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Control,
    Hd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Control,
    Premanifest,
    Early,
    Late,
}

impl Cohort {
    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::Control => "control",
            Cohort::Hd => "hd",
        }
    }
}

impl Severity {
    pub const ALL: [Severity; 4] = [
        Severity::Control,
        Severity::Premanifest,
        Severity::Early,
        Severity::Late,
    ];
    pub const HD: [Severity; 3] = [Severity::Premanifest, Severity::Early, Severity::Late];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Control => "control",
            Severity::Premanifest => "premanifest",
            Severity::Early => "early",
            Severity::Late => "late",
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "control" => Ok(Cohort::Control),
            "hd" => Ok(Cohort::Hd),
            other => Err(format!("unknown cohort `{other}`")),
        }
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "control" => Ok(Severity::Control),
            "premanifest" => Ok(Severity::Premanifest),
            "early" => Ok(Severity::Early),
            "late" => Ok(Severity::Late),
            other => Err(format!("unknown severity `{other}`")),
        }
    }
}

/// Severity from the clinical ratings.
///
/// HD speakers with a diagnostic confidence level below 4 are premanifest;
/// manifest speakers (level 4) split on Total Functional Capacity into
/// early (7-13) and late (0-6).
pub fn derive_severity(cohort: Cohort, dcl: Option<u8>, tfc: Option<u8>) -> Result<Severity> {
    if cohort == Cohort::Control {
        return Ok(Severity::Control);
    }
    let dcl = dcl.ok_or_else(|| Error::validation("", "dcl", "required for hd cohort"))?;
    match dcl {
        0..=3 => Ok(Severity::Premanifest),
        4 => match tfc {
            Some(7..=13) => Ok(Severity::Early),
            Some(0..=6) => Ok(Severity::Late),
            Some(t) => Err(Error::validation("", "tfc", format!("{t} outside 0..=13"))),
            None => Err(Error::validation("", "tfc", "required when dcl = 4")),
        },
        d => Err(Error::validation("", "dcl", format!("{d} outside 0..=4"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerRecord {
    pub speaker_id: String,
    pub wav_path: PathBuf,
    pub tms: f64,
    pub cohort: Cohort,
    pub severity: Severity,
    pub tfc: Option<u8>,
    pub dcl: Option<u8>,
}

impl SpeakerRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Error::validation(&self.speaker_id, field, reason);
        if self.speaker_id.is_empty() {
            return Err(bad("speaker_id", "empty".into()));
        }
        if !(0.0..=TMS_MAX).contains(&self.tms) {
            return Err(bad("tms", format!("{} outside [0, {TMS_MAX}]", self.tms)));
        }
        if (self.severity == Severity::Control) != (self.cohort == Cohort::Control) {
            return Err(bad(
                "severity",
                format!("{} inconsistent with cohort {}", self.severity, self.cohort),
            ));
        }
        if let Some(t) = self.tfc.filter(|&t| t > 13) {
            return Err(bad("tfc", format!("{t} outside 0..=13")));
        }
        if let Some(d) = self.dcl.filter(|&d| d > 4) {
            return Err(bad("dcl", format!("{d} outside 0..=4")));
        }
        if self.cohort == Cohort::Hd && self.dcl.is_some() {
            let derived =
                derive_severity(self.cohort, self.dcl, self.tfc).map_err(|e| match e {
                    Error::Validation { field, reason, .. } => bad(&field, reason),
                    other => other,
                })?;
            if derived != self.severity {
                return Err(bad(
                    "severity",
                    format!("stated {} but ratings imply {derived}", self.severity),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<SpeakerRecord>,
    pub sample_rate_hint: Option<u32>,
    /// Directory that relative `wav_path`s resolve against.
    pub base_dir: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn new(records: Vec<SpeakerRecord>) -> Result<Self> {
        let m = DatasetManifest {
            records,
            sample_rate_hint: None,
            base_dir: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        let mut paths = std::collections::HashSet::new();
        for r in &self.records {
            r.validate()?;
            if !ids.insert(r.speaker_id.as_str()) {
                return Err(Error::validation(&r.speaker_id, "speaker_id", "duplicate"));
            }
            if !paths.insert(&r.wav_path) {
                return Err(Error::validation(&r.speaker_id, "wav_path", "duplicate"));
            }
        }
        Ok(())
    }

    pub fn get(&self, speaker_id: &str) -> Option<&SpeakerRecord> {
        self.records.iter().find(|r| r.speaker_id == speaker_id)
    }

    pub fn audio_path(&self, record: &SpeakerRecord) -> PathBuf {
        match &self.base_dir {
            Some(base) if record.wav_path.is_relative() => base.join(&record.wav_path),
            _ => record.wav_path.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let mut col = [0usize; 7];
    for (slot, name) in col.iter_mut().zip(MANIFEST_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(name.to_string()))?;
    }

    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let field = |k: usize| row.get(col[k]).unwrap_or("");
        let speaker_id = field(0).to_string();
        let sid = if speaker_id.is_empty() {
            format!("<row {}>", line + 1)
        } else {
            speaker_id.clone()
        };
        let tms: f64 = field(2)
            .parse()
            .map_err(|_| Error::validation(&sid, "tms", format!("not a number: `{}`", field(2))))?;
        let cohort = field(3)
            .parse()
            .map_err(|e: String| Error::validation(&sid, "cohort", e))?;
        let severity = field(4)
            .parse()
            .map_err(|e: String| Error::validation(&sid, "severity", e))?;
        let optional_int = |k: usize, name: &str| -> Result<Option<u8>> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<u8>()
                .map(Some)
                .map_err(|_| Error::validation(&sid, name, format!("not a small integer: `{s}`")))
        };
        let record = SpeakerRecord {
            speaker_id,
            wav_path: PathBuf::from(field(1)),
            tms,
            cohort,
            severity,
            tfc: optional_int(5, "tfc")?,
            dcl: optional_int(6, "dcl")?,
        };
        records.push(record);
    }

    let manifest = DatasetManifest {
        records,
        sample_rate_hint: None,
        base_dir: path.parent().map(Path::to_path_buf),
    };
    manifest.validate()?;
    Ok(manifest)
}

pub fn save_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(MANIFEST_HEADER)?;
    for r in &manifest.records {
        let opt = |v: Option<u8>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.speaker_id.clone(),
            r.wav_path.to_string_lossy().into_owned(),
            r.tms.to_string(),
            r.cohort.to_string(),
            r.severity.to_string(),
            opt(r.tfc),
            opt(r.dcl),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
