//! Project configuration, read from a single JSON file.

use std::path::{Path, PathBuf};

use adeffect_core::evaluation::ExperimentSettings;
use adeffect_core::text_features::HASH_BUCKETS;
use adeffect_core::visual_features::{VisualParams, DEFAULT_FRAME_RATE};
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Default,
    /// Priors pooled over the whole balanced set and resubstitution bins.
    PaperReplication,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Raw annotation records, JSON Lines.
    pub raw_records: PathBuf,
    /// Base directory for the relative asset paths inside the records.
    pub assets_root: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub profile: Profile,
    pub paths: Paths,
    pub seeds: Vec<u64>,
    pub balance_seed: u64,
    pub frame_rate: f64,
    pub visual: VisualParams,
    pub hash_buckets: usize,
    pub experiment: ExperimentSettings,
    /// Videos per side for the best/worst distribution analysis.
    pub extremes_k: usize,
    /// Worker threads; 0 uses one per core.
    pub threads: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            profile: Profile::Default,
            paths: Paths {
                raw_records: "raw.jsonl".into(),
                assets_root: ".".into(),
                output_dir: "out".into(),
            },
            seeds: vec![1, 2, 3, 4, 5],
            balance_seed: 0,
            frame_rate: DEFAULT_FRAME_RATE,
            visual: VisualParams::default(),
            hash_buckets: HASH_BUCKETS,
            experiment: ExperimentSettings::default(),
            extremes_k: 200,
            threads: 0,
        }
    }
}

impl Config {
    /// Read `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Config =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.apply_profile();
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.paths.raw_records,
            &mut self.paths.assets_root,
            &mut self.paths.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// The replication profile overrides the two corpus-level flags.
    pub fn apply_profile(&mut self) {
        if self.profile == Profile::PaperReplication {
            self.experiment.priors_on_full_dataset = true;
            self.experiment.out_of_fold_bins = false;
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.seeds.is_empty(), "config: seeds must not be empty");
        ensure!(
            self.frame_rate > 0.0 && self.frame_rate.is_finite(),
            "config: frame_rate must be positive"
        );
        if self.hash_buckets != HASH_BUCKETS {
            bail!("config: hash_buckets is fixed at {HASH_BUCKETS}");
        }
        let flow = self.visual.flow;
        ensure!(flow.block_size > 0, "config: flow block_size must be positive");
        ensure!(
            self.visual.shot_threshold > 0.0 && self.visual.shot_threshold <= 2.0,
            "config: shot_threshold must be in (0, 2]"
        );
        let f = self.experiment.train_fraction;
        ensure!(f > 0.0 && f < 1.0, "config: train_fraction must be in (0, 1)");
        ensure!(self.extremes_k > 0, "config: extremes_k must be positive");
        Ok(())
    }

    pub fn features_dir(&self) -> PathBuf {
        self.paths.output_dir.join("features")
    }

    pub fn clean_path(&self) -> PathBuf {
        self.paths.output_dir.join("clean.jsonl")
    }

    pub fn balanced_path(&self) -> PathBuf {
        self.paths.output_dir.join("balanced.jsonl")
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.paths.output_dir.join("analysis")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.paths.output_dir.join("results")
    }

    /// Run `f` on a pool of `threads` workers.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.threads).build()?;
        Ok(pool.install(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{"paths": {"raw_records": "r.jsonl", "assets_root": "assets", "output_dir": "/abs/out"}}"#,
        )
        .unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.seeds, [1, 2, 3, 4, 5]);
        assert_eq!(c.paths.raw_records, dir.path().join("r.jsonl"));
        assert_eq!(c.paths.output_dir, PathBuf::from("/abs/out"));
        assert!(!c.experiment.priors_on_full_dataset);
    }

    #[test]
    fn replication_profile_sets_flags() {
        let mut c = Config {
            profile: Profile::PaperReplication,
            ..Config::default()
        };
        c.experiment.out_of_fold_bins = true;
        c.apply_profile();
        assert!(c.experiment.priors_on_full_dataset);
        assert!(!c.experiment.out_of_fold_bins);
    }

    #[test]
    fn partial_learner_override() {
        let c: Config = serde_json::from_str(
            r#"{"experiment": {"learners": {"overrides": {"svm_optical_flow": {"kind": "svm", "lambda": 0.01}}}}}"#,
        )
        .unwrap();
        let p = c.experiment.learners.overrides["svm_optical_flow"];
        assert_eq!(
            p,
            adeffect_core::learners::LearnerParams::Svm(adeffect_core::learners::SvmParams {
                lambda: 0.01,
                ..Default::default()
            })
        );
    }

    #[test]
    fn rejects_bad_values() {
        let c = Config {
            seeds: vec![],
            ..Config::default()
        };
        assert!(c.validate().is_err());
        let c = Config {
            hash_buckets: 64,
            ..Config::default()
        };
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<Config>(r#"{"sedes": [1]}"#).is_err());
    }
}
