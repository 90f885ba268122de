use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::dataset::{Cohort, DatasetManifest};
use crate::error::{Error, Result};
use crate::seed::{mix_seed, stream_rng};

/// Stream index reserved for the experiment-wide control subset.
const FIXED_CONTROL_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub run_index: usize,
    pub seed: u64,
    /// Both lists follow manifest order.
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub controls_kept: Vec<String>,
}

pub fn n_test_speakers(n: usize, test_fraction: f64) -> usize {
    ((n as f64 * test_fraction + 1e-9).floor() as usize).max(1)
}

/// Downsamples controls, then splits the retained speakers by speaker.
pub fn make_run_plan(
    manifest: &DatasetManifest,
    cfg: &ExperimentConfig,
    run_index: usize,
) -> Result<RunPlan> {
    if manifest.is_empty() {
        return Err(Error::Config("manifest has no speakers".into()));
    }
    let seed = mix_seed(cfg.master_seed, run_index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let controls: Vec<&str> = manifest
        .records
        .iter()
        .filter(|r| r.cohort == Cohort::Control)
        .map(|r| r.speaker_id.as_str())
        .collect();
    let keep = cfg.n_controls_kept.min(controls.len());
    let kept: Vec<&str> = if cfg.fixed_controls {
        let mut fixed = stream_rng(cfg.master_seed, FIXED_CONTROL_STREAM);
        controls
            .choose_multiple(&mut fixed, keep)
            .copied()
            .collect()
    } else {
        controls.choose_multiple(&mut rng, keep).copied().collect()
    };
    let mut retained: Vec<&str> = manifest
        .records
        .iter()
        .filter(|r| r.cohort != Cohort::Control || kept.contains(&r.speaker_id.as_str()))
        .map(|r| r.speaker_id.as_str())
        .collect();
    let n_test = n_test_speakers(retained.len(), cfg.test_fraction);
    if retained.len() < n_test + 2 {
        return Err(Error::Config(format!(
            "{} retained speakers cannot give {n_test} test and at least 2 training speakers",
            retained.len()
        )));
    }
    retained.shuffle(&mut rng);
    let test: Vec<&str> = retained[..n_test].to_vec();
    let in_order = |pred: &dyn Fn(&str) -> bool| -> Vec<String> {
        manifest
            .records
            .iter()
            .map(|r| r.speaker_id.as_str())
            .filter(|id| pred(id))
            .map(str::to_string)
            .collect()
    };
    Ok(RunPlan {
        run_index,
        seed,
        train_ids: in_order(&|id| retained[n_test..].contains(&id)),
        test_ids: in_order(&|id| test.contains(&id)),
        controls_kept: in_order(&|id| kept.contains(&id)),
    })
}
