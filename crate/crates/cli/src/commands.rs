use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use vtc_core::dataset::{generate_synthetic_corpus, load_manifest, SynthConfig, SynthMode};
use vtc_core::dsp::segment_frames;
use vtc_core::harness::{
    compare_feature_sets, fvalue_heatmap, prediction_summary, prediction_svg, run_experiment_on,
    segment_sweep, with_threads, write_prediction_csv, write_sweep_csv, CorpusFrames, EvalLevel,
    ExperimentConfig, FeatureSet, RunReport,
};
use vtc_core::vtc::{evtc, fvtc};
use vtc_core::{DatasetManifest, Error, Result};

use super::{Cli, Command, ExperimentArgs, SynthArgs};

pub fn dispatch(cli: &Cli) -> Result<()> {
    with_threads(cli.threads, || match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Extract(a) => extract(cli, &a.exp, a.tensors, a.csv),
        Command::Run(a) => run(cli, &a.exp),
        Command::Sweep(a) => sweep(cli, &a.exp, &a.sizes, a.feature_sets.as_deref()),
        Command::Compare(a) => compare(cli, &a.exp, &a.feature_sets),
        Command::Heatmap(a) => heatmap(cli, &a.exp, a.runs.as_deref()),
    })?
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn manifest(cli: &Cli) -> Result<DatasetManifest> {
    let path = cli
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Config("--manifest is required".into()))?;
    load_manifest(path)
}

/// Defaults, then `--config`, then `--seed`, then per-command flags.
fn experiment_config(cli: &Cli, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut value = match &cli.config {
        None => serde_json::to_value(ExperimentConfig::default())?,
        Some(c) => {
            let text = if c.trim_start().starts_with('{') {
                c.clone()
            } else {
                fs::read_to_string(c).map_err(|e| Error::io(c, e))?
            };
            let user: ExperimentConfig = serde_json::from_str(&text)?;
            serde_json::to_value(user)?
        }
    };
    let obj = value
        .as_object_mut()
        .expect("config serialises to an object");
    if let Some(seed) = cli.seed {
        obj.insert("master_seed".into(), Value::from(seed));
    }
    if let Some(fs) = &args.feature_set {
        obj.insert(
            "feature_set".into(),
            Value::from(fs.parse::<FeatureSet>()?.as_str()),
        );
    }
    if let Some(level) = &args.level {
        level.parse::<EvalLevel>()?;
        obj.insert("level".into(), Value::from(level.as_str()));
    }
    let mut set_f64 = |key: &str, v: Option<f64>| {
        if let Some(v) = v {
            obj.insert(key.into(), Value::from(v));
        }
    };
    set_f64("segment_s", args.segment_s);
    set_f64("segment_hop_s", args.segment_hop_s);
    set_f64("test_fraction", args.test_fraction);
    if let Some(n) = args.n_runs {
        obj.insert("n_runs".into(), Value::from(n));
    }
    if let Some(k) = args.top_k {
        obj.insert("top_k".into(), Value::from(k));
    }
    if args.fixed_controls {
        obj.insert("fixed_controls".into(), Value::from(true));
    }
    if let Some(p) = &args.external_csv {
        obj.insert(
            "external_csv".into(),
            Value::from(p.to_string_lossy().into_owned()),
        );
    }
    let cfg: ExperimentConfig = serde_json::from_value(value)?;
    cfg.validate()?;
    Ok(cfg)
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let mode = match &a.pair {
        None => SynthMode::Formant,
        Some(p) => {
            let parts: Vec<usize> = p
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    Error::Config(format!("--pair expects two channel indices, got `{p}`"))
                })?;
            match parts[..] {
                [a, b] => SynthMode::CepstralPair { a, b },
                _ => {
                    return Err(Error::Config(format!(
                        "--pair expects two channel indices, got `{p}`"
                    )))
                }
            }
        }
    };
    let cfg = SynthConfig {
        n_control: a.n_control,
        n_premanifest: a.n_premanifest,
        n_early: a.n_early,
        n_late: a.n_late,
        duration_s: a.duration,
        sample_rate: a.sample_rate,
        seed: cli.seed.unwrap_or(0),
        coupling_strength: a.coupling,
        mode,
    };
    let m = generate_synthetic_corpus(&cfg, &cli.out)?;
    println!(
        "{} speakers -> {}",
        m.len(),
        cli.out.join("manifest.csv").display()
    );
    Ok(())
}

fn extract(cli: &Cli, args: &ExperimentArgs, tensors: bool, csv: bool) -> Result<()> {
    let m = manifest(cli)?;
    let cfg = experiment_config(cli, args)?;
    if cfg.feature_set == FeatureSet::External {
        return Err(Error::Config(
            "extract computes features from audio; `external` has none".into(),
        ));
    }
    let frames = CorpusFrames::extract(&m, &cfg.dsp)?;
    let frame_dir = cli.out.join("frames");
    create_dir(&frame_dir)?;
    for sp in &frames.speakers {
        sp.mfcc
            .write_vtcf(frame_dir.join(format!("{}.mfcc.vtcf", sp.speaker_id)))?;
        sp.dmfcc
            .write_vtcf(frame_dir.join(format!("{}.dmfcc.vtcf", sp.speaker_id)))?;
    }
    let table = frames.feature_table(&m, &cfg)?;
    let stem = cli.out.join(format!("features_{}", cfg.feature_set));
    table.save(&stem)?;
    if csv {
        let path = stem.with_extension("csv");
        table.write_csv(create_file(&path)?)?;
    }
    if tensors {
        let kind = cfg.feature_set.channel_kind().expect("not external");
        if cfg.feature_set.is_fvtc()
            || matches!(
                cfg.feature_set,
                FeatureSet::EvtcMfcc | FeatureSet::EvtcDmfcc
            )
        {
            let dir = cli.out.join("tensors");
            create_dir(&dir)?;
            for sp in &frames.speakers {
                for (k, seg) in segment_frames(sp.stream(kind), cfg.segment_s, cfg.hop_s())?
                    .iter()
                    .enumerate()
                {
                    let mut t = fvtc(seg, &cfg.vtc)?;
                    t.segment_index = k;
                    let path = dir.join(format!("{}_seg{k:03}.vtcf", sp.speaker_id));
                    if cfg.feature_set.is_fvtc() {
                        t.write_vtcf(&path)?;
                    } else {
                        let e = evtc(&t)?;
                        let bytes = e.to_container().to_bytes();
                        fs::write(&path, bytes).map_err(|err| Error::io(&path, err))?;
                    }
                }
            }
        } else {
            log::warn!("--tensors ignored for {}", cfg.feature_set);
        }
    }
    println!(
        "{} rows x {} features -> {}.vtcf",
        table.len(),
        table.dim(),
        stem.display()
    );
    Ok(())
}

fn write_runs(dir: &Path, runs: &[RunReport]) -> Result<()> {
    create_dir(dir)?;
    for r in runs {
        write_json(&dir.join(format!("run_{:03}.json", r.run_index)), r)?;
    }
    Ok(())
}

fn run(cli: &Cli, args: &ExperimentArgs) -> Result<()> {
    let m = manifest(cli)?;
    let cfg = experiment_config(cli, args)?;
    create_dir(&cli.out)?;
    let table = if cfg.feature_set == FeatureSet::External {
        CorpusFrames {
            speakers: Vec::new(),
        }
        .feature_table(&m, &cfg)?
    } else {
        CorpusFrames::extract(&m, &cfg.dsp)?.feature_table(&m, &cfg)?
    };
    let out = run_experiment_on(&m, &table, &cfg)?;
    write_json(&cli.out.join("config.json"), &cfg)?;
    write_runs(&cli.out.join("runs"), &out.runs)?;
    write_json(&cli.out.join("aggregate.json"), &out.aggregate)?;
    let summary = prediction_summary(&out.runs);
    write_prediction_csv(&summary, create_file(&cli.out.join("predictions.csv"))?)?;
    write_text(&cli.out.join("predictions.svg"), &prediction_svg(&summary))?;
    let a = &out.aggregate;
    println!(
        "{}: RMSE {:.2} ({:.2})  R2 {:.3} ({:.3})  CCC {:.3} ({:.3})  over {} runs",
        a.feature_set,
        a.metrics["rmse"].mean,
        a.metrics["rmse"].std,
        a.metrics["r2"].mean,
        a.metrics["r2"].std,
        a.metrics["ccc"].mean,
        a.metrics["ccc"].std,
        a.n_runs
    );
    Ok(())
}

fn sweep(
    cli: &Cli,
    args: &ExperimentArgs,
    sizes: &[f64],
    feature_sets: Option<&str>,
) -> Result<()> {
    let m = manifest(cli)?;
    let cfg = experiment_config(cli, args)?;
    let sets = match feature_sets {
        Some(s) => FeatureSet::parse_list(s)?,
        None => vec![cfg.feature_set],
    };
    let rows = segment_sweep(&m, &cfg, sizes, &sets)?;
    create_dir(&cli.out)?;
    let path = cli.out.join("sweep.csv");
    write_sweep_csv(&rows, create_file(&path)?)?;
    println!("{} rows -> {}", rows.len(), path.display());
    Ok(())
}

fn compare(cli: &Cli, args: &ExperimentArgs, feature_sets: &str) -> Result<()> {
    let m = manifest(cli)?;
    let cfg = experiment_config(cli, args)?;
    let sets = FeatureSet::parse_list(feature_sets)?;
    let (comparison, runs) = compare_feature_sets(&m, &cfg, &sets)?;
    create_dir(&cli.out)?;
    for (fs, r) in &runs {
        write_runs(&cli.out.join(fs.as_str()).join("runs"), r)?;
    }
    write_json(&cli.out.join("compare.json"), &comparison)?;
    for (metric, sig) in &comparison.significance {
        for p in &sig.pairwise {
            println!(
                "{metric}: {} vs {}  diff {:+.4}  q {:.3}  p {:.4}{}",
                p.group_a,
                p.group_b,
                p.mean_diff,
                p.q_stat,
                p.p_adj,
                if p.significant { "  *" } else { "" }
            );
        }
    }
    Ok(())
}

fn load_runs(dir: &Path) -> Result<Vec<RunReport>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        })
        .collect()
}

fn heatmap(cli: &Cli, args: &ExperimentArgs, runs_dir: Option<&Path>) -> Result<()> {
    let runs = match runs_dir {
        Some(dir) => load_runs(dir)?,
        None => {
            let m = manifest(cli)?;
            let cfg = experiment_config(cli, args)?;
            if !cfg.feature_set.is_fvtc() {
                return Err(Error::Input(format!(
                    "heatmap needs an FVTC feature set, got {}",
                    cfg.feature_set
                )));
            }
            let table = CorpusFrames::extract(&m, &cfg.dsp)?.feature_table(&m, &cfg)?;
            run_experiment_on(&m, &table, &cfg)?.runs
        }
    };
    let h = fvalue_heatmap(&runs)?;
    create_dir(&cli.out)?;
    h.write_csv(create_file(&cli.out.join("heatmap.csv"))?)?;
    write_text(&cli.out.join("heatmap.svg"), &h.to_svg())?;
    write_json(&cli.out.join("heatmap.json"), &h)?;
    println!(
        "argmax channel pair ({}, {}); {:.0}% of selected features within channels 0-{}",
        h.argmax.0,
        h.argmax.1,
        100.0 * h.low_channel_fraction,
        vtc_core::harness::LOW_CHANNEL_MAX
    );
    Ok(())
}
