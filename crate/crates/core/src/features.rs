//! Feature tables: broad-statistics pooling, VTC flattening, and external CSV import.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::Container;
use crate::dataset::DatasetManifest;
use crate::dsp::FrameMatrix;
use crate::error::{Error, Result};
use crate::vtc::{EvtcMatrix, VtcTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    RawStats,
    Fvtc,
    Evtc,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub speaker_id: String,
    pub segment_index: usize,
    pub target_tms: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    pub feature_names: Vec<String>,
    pub kind: FeatureKind,
}

#[derive(Serialize, Deserialize)]
struct TableSidecar {
    kind: FeatureKind,
    feature_names: Vec<String>,
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn empty(kind: FeatureKind, feature_names: Vec<String>) -> Self {
        FeatureTable {
            rows: Vec::new(),
            feature_names,
            kind,
        }
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target_tms).collect()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    /// Rows whose speaker passes `keep`, in table order.
    pub fn filter_speakers(&self, keep: impl Fn(&str) -> bool) -> FeatureTable {
        FeatureTable {
            rows: self
                .rows
                .iter()
                .filter(|r| keep(&r.speaker_id))
                .cloned()
                .collect(),
            feature_names: self.feature_names.clone(),
            kind: self.kind,
        }
    }

    pub fn speakers(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.speaker_id.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for (r, row) in self.rows.iter().enumerate() {
            if row.values.len() != dim {
                return Err(Error::Input(format!(
                    "row {r} has {} values, expected {dim}",
                    row.values.len()
                )));
            }
            if let Some(c) = row.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::validation(
                    &row.speaker_id,
                    &self.feature_names[c],
                    format!("non-finite value in row {r}"),
                ));
            }
        }
        Ok(())
    }

    /// Writes `<stem>.vtcf` (rows x dim values) and `<stem>.json` (names, row metadata).
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let container = Container {
            dims: vec![self.rows.len() as u32, self.dim() as u32],
            values: self
                .rows
                .iter()
                .flat_map(|r| r.values.iter().map(|&v| v as f32))
                .collect(),
            label: String::new(),
            trailer: Vec::new(),
        };
        let bin = stem.with_extension("vtcf");
        std::fs::write(&bin, container.to_bytes()).map_err(|e| Error::io(&bin, e))?;
        let sidecar = TableSidecar {
            kind: self.kind,
            feature_names: self.feature_names.clone(),
            rows: self.rows.clone(),
        };
        let json = stem.with_extension("json");
        let file = std::fs::File::create(&json).map_err(|e| Error::io(&json, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &sidecar)?;
        Ok(())
    }

    pub fn load(stem: impl AsRef<Path>) -> Result<Self> {
        let stem = stem.as_ref();
        let json = stem.with_extension("json");
        let file = std::fs::File::open(&json).map_err(|e| Error::io(&json, e))?;
        let sidecar: TableSidecar = serde_json::from_reader(std::io::BufReader::new(file))?;
        let bin = stem.with_extension("vtcf");
        let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        let c = Container::from_bytes(&bytes, 2)?;
        let (n, dim) = (c.dims[0] as usize, c.dims[1] as usize);
        if n != sidecar.rows.len() || dim != sidecar.feature_names.len() {
            return Err(Error::Format(
                "feature table sidecar does not match container".into(),
            ));
        }
        let rows = sidecar
            .rows
            .into_iter()
            .zip(c.values.chunks(dim.max(1)))
            .map(|(mut r, v)| {
                r.values = v.iter().map(|&x| f64::from(x)).collect();
                r
            })
            .collect();
        Ok(FeatureTable {
            rows,
            feature_names: sidecar.feature_names,
            kind: sidecar.kind,
        })
    }

    /// `speaker_id,segment_index,target_tms,<feature names...>`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec![
            "speaker_id".to_string(),
            "segment_index".into(),
            "target_tms".into(),
        ];
        header.extend(self.feature_names.iter().cloned());
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.speaker_id.clone(),
                r.segment_index.to_string(),
                r.target_tms.to_string(),
            ];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub const POOLED_STATS: [&str; 5] = ["mean", "std", "min", "max", "median"];

pub fn pool_stats_names(n_channels: usize) -> Vec<String> {
    (0..n_channels)
        .flat_map(|c| POOLED_STATS.iter().map(move |s| format!("ch{c:02}_{s}")))
        .collect()
}

/// Per channel: mean, population std, min, max, median.
pub fn pool_stats(frames: &FrameMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(frames.n_channels * 5);
    let mut sorted = Vec::with_capacity(frames.n_frames);
    for ch in 0..frames.n_channels {
        let x = frames.channel(ch);
        if x.is_empty() {
            out.extend([0.0; 5]);
            continue;
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        sorted.clear();
        sorted.extend_from_slice(x);
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let median = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        };
        out.extend([mean, std, sorted[0], sorted[m - 1], median]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum VtcFeature {
    Full(VtcTensor),
    Eigen(EvtcMatrix),
}

impl VtcFeature {
    fn speaker_id(&self) -> &str {
        match self {
            VtcFeature::Full(t) => &t.speaker_id,
            VtcFeature::Eigen(e) => &e.speaker_id,
        }
    }

    fn segment_index(&self) -> usize {
        match self {
            VtcFeature::Full(t) => t.segment_index,
            VtcFeature::Eigen(e) => e.segment_index,
        }
    }

    fn shape(&self) -> (FeatureKind, usize, &[usize]) {
        match self {
            VtcFeature::Full(t) => (FeatureKind::Fvtc, t.n_channels, &t.delays),
            VtcFeature::Eigen(e) => (FeatureKind::Evtc, e.n_channels, &e.delays),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            VtcFeature::Full(t) => &t.values,
            VtcFeature::Eigen(e) => &e.values,
        }
    }
}

pub fn fvtc_feature_names(n_channels: usize, delays: &[usize]) -> Vec<String> {
    let mut names = Vec::with_capacity(n_channels * n_channels * delays.len());
    for i in 0..n_channels {
        for j in 0..n_channels {
            for d in delays {
                names.push(format!("r_i{i}_j{j}_d{d}"));
            }
        }
    }
    names
}

pub fn evtc_feature_names(n_channels: usize, delays: &[usize]) -> Vec<String> {
    (0..n_channels)
        .flat_map(|k| delays.iter().map(move |d| format!("eig{k}_d{d}")))
        .collect()
}

/// One row per tensor, targets joined from the manifest by speaker id.
pub fn flatten_vtc(items: &[VtcFeature], manifest: &DatasetManifest) -> Result<FeatureTable> {
    let Some(first) = items.first() else {
        return Ok(FeatureTable::empty(FeatureKind::Fvtc, Vec::new()));
    };
    let (kind, n, delays) = first.shape();
    let names = match kind {
        FeatureKind::Fvtc => fvtc_feature_names(n, delays),
        _ => evtc_feature_names(n, delays),
    };
    let mut missing = BTreeSet::new();
    let mut rows = Vec::with_capacity(items.len());
    for item in items {
        let (k, n2, d2) = item.shape();
        if k != kind {
            return Err(Error::Input("mixed FVTC and EVTC inputs".into()));
        }
        if n2 != n || d2 != delays {
            return Err(Error::Input("inconsistent tensor shapes".into()));
        }
        match manifest.get(item.speaker_id()) {
            Some(rec) => rows.push(FeatureRow {
                speaker_id: rec.speaker_id.clone(),
                segment_index: item.segment_index(),
                target_tms: rec.tms,
                values: item.values().to_vec(),
            }),
            None => {
                missing.insert(item.speaker_id().to_string());
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Join(missing.into_iter().collect()));
    }
    Ok(FeatureTable {
        rows,
        feature_names: names,
        kind,
    })
}

/// Inverse of the FVTC flattening for one row.
pub fn unflatten_fvtc(
    values: &[f64],
    n_channels: usize,
    delays: &[usize],
    speaker_id: &str,
    segment_index: usize,
) -> Result<VtcTensor> {
    if values.len() != n_channels * n_channels * delays.len() {
        return Err(Error::Input(format!(
            "{} values do not form a {n_channels}x{n_channels}x{} tensor",
            values.len(),
            delays.len()
        )));
    }
    Ok(VtcTensor {
        n_channels,
        delays: delays.to_vec(),
        values: values.to_vec(),
        speaker_id: speaker_id.to_string(),
        segment_index,
    })
}

/// Reads `speaker_id,segment_index,f_0,...` rows produced by an external toolkit.
pub fn import_external_features(
    csv_path: impl AsRef<Path>,
    manifest: &DatasetManifest,
) -> Result<FeatureTable> {
    let path = csv_path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    for (pos, name) in ["speaker_id", "segment_index"].iter().enumerate() {
        if headers.get(pos) != Some(*name) {
            return Err(Error::Schema(name.to_string()));
        }
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut missing = BTreeSet::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let speaker_id = rec.get(0).unwrap_or("").to_string();
        let segment_index = rec.get(1).unwrap_or("").parse().map_err(|_| {
            Error::validation(&speaker_id, "segment_index", format!("row {}", r + 1))
        })?;
        let mut values = Vec::with_capacity(names.len());
        for (c, name) in names.iter().enumerate() {
            let cell = rec.get(c + 2).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                Error::validation(
                    &speaker_id,
                    name,
                    format!("row {} unparseable `{cell}`", r + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::validation(
                    &speaker_id,
                    name,
                    format!("row {} column {} is not finite", r + 1, c + 2),
                ));
            }
            values.push(v);
        }
        match manifest.get(&speaker_id) {
            Some(m) => rows.push(FeatureRow {
                speaker_id,
                segment_index,
                target_tms: m.tms,
                values,
            }),
            None => {
                missing.insert(speaker_id);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Join(missing.into_iter().collect()));
    }
    if rows.is_empty() {
        log::warn!("{}: external feature file has no rows", path.display());
    }
    let unmatched: Vec<&str> = manifest
        .records
        .iter()
        .filter(|m| !rows.iter().any(|r| r.speaker_id == m.speaker_id))
        .map(|m| m.speaker_id.as_str())
        .collect();
    if !unmatched.is_empty() && !rows.is_empty() {
        log::warn!(
            "no external features for speakers: {}",
            unmatched.join(", ")
        );
    }
    Ok(FeatureTable {
        rows,
        feature_names: names,
        kind: FeatureKind::External,
    })
}
