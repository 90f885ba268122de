use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::run::RunReport;
use crate::error::{Error, Result};

/// Channels counted as "low" in the selected-feature statistic.
pub const LOW_CHANNEL_MAX: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub n_channels: usize,
    pub n_delays: usize,
    /// `matrix[i][j]`: run-averaged F-value maximised over delays.
    pub matrix: Vec<Vec<f64>>,
    pub argmax: (usize, usize),
    /// Share of selected features with both channels at most `LOW_CHANNEL_MAX`.
    pub low_channel_fraction: f64,
}

pub fn fvalue_heatmap(reports: &[RunReport]) -> Result<Heatmap> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Input("no run reports".into()))?;
    let mut shape = None;
    for r in reports {
        let (Some(s), Some(scores)) = (r.fvtc_shape, &r.feature_scores) else {
            return Err(Error::Input(format!(
                "run {} ({}) carries no FVTC F-values",
                r.run_index, r.feature_set
            )));
        };
        if !r.feature_set.is_fvtc() || scores.len() != s[0] * s[0] * s[1] {
            return Err(Error::Input(format!(
                "run {} is not an FVTC run",
                r.run_index
            )));
        }
        if shape.is_some_and(|prev| prev != s) {
            return Err(Error::Input("run reports disagree on FVTC shape".into()));
        }
        shape = Some(s);
    }
    let [n, nd] = first.fvtc_shape.expect("checked above");
    let mut mean = vec![0.0; n * n * nd];
    for r in reports {
        for (m, s) in mean
            .iter_mut()
            .zip(r.feature_scores.as_ref().expect("checked above"))
        {
            *m += s;
        }
    }
    let runs = reports.len() as f64;
    let mut matrix = vec![vec![f64::NEG_INFINITY; n]; n];
    let mut argmax = (0, 0);
    for i in 0..n {
        for j in 0..n {
            let cell = mean[(i * n + j) * nd..(i * n + j + 1) * nd]
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b / runs));
            matrix[i][j] = cell;
            if cell > matrix[argmax.0][argmax.1] {
                argmax = (i, j);
            }
        }
    }
    let (mut low, mut total) = (0usize, 0usize);
    for r in reports {
        for &idx in &r.selected_feature_indices {
            let ij = idx / nd;
            total += 1;
            if ij / n <= LOW_CHANNEL_MAX && ij % n <= LOW_CHANNEL_MAX {
                low += 1;
            }
        }
    }
    let low_channel_fraction = if total == 0 {
        0.0
    } else {
        low as f64 / total as f64
    };
    Ok(Heatmap {
        n_channels: n,
        n_delays: nd,
        matrix,
        argmax,
        low_channel_fraction,
    })
}

impl Heatmap {
    /// Long format: `i,j,max_mean_f`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["i", "j", "max_mean_f"])?;
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out.write_record([i.to_string(), j.to_string(), v.to_string()])?;
            }
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    pub fn to_svg(&self) -> String {
        let cell = 28.0;
        let margin = 60.0;
        let n = self.n_channels as f64;
        let size = margin * 2.0 + cell * n + 40.0;
        let flat: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="{cell}" height="{cell}" fill="{}"><title>i={i} j={j} F={v:.3}</title></rect>"#,
                    margin + j as f64 * cell,
                    margin + i as f64 * cell,
                    viridis(t)
                );
            }
        }
        for k in 0..self.n_channels {
            let c = margin + (k as f64 + 0.5) * cell;
            let _ = writeln!(
                s,
                r#"<text x="{c:.1}" y="{:.1}" text-anchor="middle">{k}</text>"#,
                margin - 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{k}</text>"#,
                margin - 6.0,
                c + 4.0
            );
        }
        let mid = margin + cell * n / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{mid:.1}" y="{:.1}" text-anchor="middle" font-size="13">channel j</text>"#,
            margin - 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{mid:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 {x:.1} {mid:.1})">channel i</text>"#,
            x = margin - 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10">max mean F: {lo:.2} .. {hi:.2}</text>"#,
            margin,
            margin + cell * n + 20.0
        );
        s.push_str("</svg>\n");
        s
    }
}

fn viridis(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let x = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerSummary {
    pub speaker_id: String,
    pub truth: f64,
    pub mean_pred: f64,
    pub std_pred: f64,
    pub n_runs: usize,
}

/// Per-speaker prediction spread over all runs in which the speaker was tested.
pub fn prediction_summary(reports: &[RunReport]) -> Vec<SpeakerSummary> {
    let mut by: BTreeMap<&str, (f64, Vec<f64>)> = BTreeMap::new();
    for r in reports {
        for p in &r.predictions {
            by.entry(&p.speaker_id)
                .or_insert_with(|| (p.truth, Vec::new()))
                .1
                .push(p.predicted);
        }
    }
    by.into_iter()
        .map(|(id, (truth, preds))| {
            let n = preds.len() as f64;
            let mean = preds.iter().sum::<f64>() / n;
            let std = (preds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            SpeakerSummary {
                speaker_id: id.to_string(),
                truth,
                mean_pred: mean,
                std_pred: std,
                n_runs: preds.len(),
            }
        })
        .collect()
}

pub fn write_prediction_csv<W: Write>(rows: &[SpeakerSummary], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["speaker_id", "truth", "mean_pred", "std_pred"])?;
    for r in rows {
        out.write_record([
            r.speaker_id.clone(),
            r.truth.to_string(),
            r.mean_pred.to_string(),
            r.std_pred.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

/// Ground truth against mean prediction with one-std error bars, sorted by truth.
pub fn prediction_svg(rows: &[SpeakerSummary]) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let mut sorted: Vec<&SpeakerSummary> = rows.iter().collect();
    sorted.sort_by(|a, b| a.truth.total_cmp(&b.truth));
    let top = sorted
        .iter()
        .map(|r| r.truth.max(r.mean_pred + r.std_pred))
        .fold(10.0f64, f64::max)
        .ceil();
    let bottom = sorted
        .iter()
        .map(|r| r.mean_pred - r.std_pred)
        .fold(0.0f64, f64::min)
        .floor();
    let y = |v: f64| h - m - (v - bottom) / (top - bottom) * (h - 2.0 * m);
    let step = if sorted.is_empty() {
        0.0
    } else {
        (w - 2.0 * m) / sorted.len() as f64
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - m,
        w - m,
        h - m
    );
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#,
        h - m
    );
    for (k, r) in sorted.iter().enumerate() {
        let x = m + (k as f64 + 0.5) * step;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="steelblue"/>"#,
            y(r.mean_pred - r.std_pred),
            y(r.mean_pred + r.std_pred)
        );
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.1}" cy="{:.1}" r="3" fill="steelblue"><title>{}</title></circle>"#,
            y(r.mean_pred),
            r.speaker_id
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="6" height="6" fill="black"/>"#,
            x - 3.0,
            y(r.truth) - 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">speakers (sorted by ground truth)</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">TMS</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{:.1}">{top}</text><text x="{m}" y="{:.1}">{bottom}</text>"#,
        m - 5.0,
        h - m + 14.0
    );
    s.push_str("</svg>\n");
    s
}
