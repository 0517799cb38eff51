//! Run configuration: one JSON file, every field optional. Command-line
//! flags override whatever the file sets.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dve_core::{RefinementConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::encoders::{EncoderSpec, TEST_DEFAULT_DIM, TEST_DEFAULT_SEED};
use crate::lvlm::LvlmConfig;
use crate::sources::SourcePaths;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides `train.seed` when set.
    pub seed: Option<u64>,
    pub sources: SourcePaths,
    /// DVE JSONL written by `build-dataset` and read by later commands.
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Default output directory for reports.
    pub out: Option<PathBuf>,
    pub train: TrainConfig,
    pub refinement: RefinementConfig,
    /// Prompt template files; each replaces the inline template in `refinement`.
    pub templates: TemplateFiles,
    /// Thresholds to sweep in `refine`; empty means `refinement.eta`.
    pub etas: Vec<f64>,
    pub concurrency: usize,
    pub lvlm: LvlmConfig,
    pub visual_encoder: EncoderSpec,
    pub text_encoder: EncoderSpec,
    /// Generation metrics for `generate-eval`.
    pub metrics: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let test = EncoderSpec::test(TEST_DEFAULT_DIM, TEST_DEFAULT_SEED);
        Self {
            seed: None,
            sources: SourcePaths::default(),
            dataset: None,
            checkpoint: None,
            out: None,
            train: TrainConfig::default(),
            refinement: RefinementConfig::default(),
            templates: TemplateFiles::default(),
            etas: Vec::new(),
            concurrency: 4,
            lvlm: LvlmConfig::default(),
            visual_encoder: test.clone(),
            text_encoder: test,
            metrics: vec!["rouge-l".into(), "bleu-4".into()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateFiles {
    pub initial: Option<PathBuf>,
    pub refine: Option<PathBuf>,
}

fn read_template(path: &Path) -> anyhow::Result<String> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading template {}", path.display()))?;
    Ok(text.trim_end().to_string())
}

pub const KNOWN_METRICS: [&str; 2] = ["rouge-l", "bleu-4"];

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// The file at `path` if given, else the defaults.
    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Fold the top-level seed into the training config.
    pub fn resolve_seed(&mut self) {
        if let Some(seed) = self.seed {
            self.train.seed = seed;
        }
    }

    /// Replace the inline prompt templates with the configured files.
    pub fn load_templates(&mut self) -> anyhow::Result<()> {
        if let Some(p) = &self.templates.initial {
            self.refinement.templates.initial = read_template(p)?;
        }
        if let Some(p) = &self.templates.refine {
            self.refinement.templates.refine = read_template(p)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.train.validate().context("train")?;
        self.refinement.validate().context("refinement")?;
        if let Some(eta) = self.etas.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            bail!("etas: every threshold must be positive and finite, got {eta}");
        }
        if self.concurrency == 0 {
            bail!("concurrency must be at least 1");
        }
        if let Some(m) = self.metrics.iter().find(|m| !KNOWN_METRICS.contains(&m.as_str())) {
            bail!("metrics: unknown metric `{m}` (known: {})", KNOWN_METRICS.join(", "));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"train": {"alpha": 0.5}, "seed": 9}"#).unwrap();
        assert_eq!(cfg.train.alpha, 0.5);
        assert_eq!(cfg.train.batch_size, 32);
        assert_eq!(cfg.refinement.max_rounds, 3);
        let mut cfg = cfg;
        cfg.resolve_seed();
        assert_eq!(cfg.train.seed, 9);
        cfg.validate().unwrap();
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.train.alpha = 1.5;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { etas: vec![1.0, 0.0], ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { metrics: vec!["meteor".into()], ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"trian": {}}"#).is_err());
    }

    #[test]
    fn shipped_templates_match_the_defaults() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("templates");
        let mut cfg = RunConfig {
            templates: TemplateFiles { initial: Some(dir.join("initial.txt")), refine: Some(dir.join("refine.txt")) },
            ..RunConfig::default()
        };
        cfg.load_templates().unwrap();
        assert_eq!(cfg.refinement.templates, dve_core::refinement::PromptTemplates::default());
    }

    #[test]
    fn template_file_replaces_inline_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        std::fs::write(&path, "Make \"{hypothesis}\" {goal}.\n").unwrap();
        let mut cfg =
            RunConfig { templates: TemplateFiles { initial: Some(path), refine: None }, ..RunConfig::default() };
        cfg.load_templates().unwrap();
        let prompt = cfg.refinement.templates.render_initial("It rains", dve_core::Goal::Weaken).unwrap();
        assert_eq!(prompt, "Make \"It rains\" weaken.");

        std::fs::write(dir.path().join("bad.txt"), "{nope}").unwrap();
        cfg.templates.refine = Some(dir.path().join("bad.txt"));
        cfg.load_templates().unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
