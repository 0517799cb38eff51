//! Command-line interface. `main.rs` only parses and reports errors; the
//! commands live here so tests can drive them in-process.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dve_core::dataset::{compute_stats, verify_stats, StatsTolerances};
use dve_core::evaluator::train::train_with_observer;
use dve_core::evaluator::ClassNormalization;
use dve_core::metrics::external::{Bleu4, GenerationCase, ReportRow, RougeL};
use dve_core::metrics::{AgreementReport, CorrelationReport, HumanScore, MetricRegistry};
use dve_core::refinement::mock::{RoundEchoClient, ScheduleScorer};
use dve_core::refinement::{LvlmClient, ModelScorer, UpdateScorer};
use dve_core::{DatasetStats, Goal, Hypothesis, ImagePremise, Split, UpdateLabel};
use serde::{Deserialize, Serialize};

use crate::batch::{batch_refine, read_requests, trace_file_name, write_traces};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::encoders::{EncoderKind, EncoderSpec};
use crate::jsonl::{read_jsonl, read_lines, write_jsonl};
use crate::lvlm::HttpLvlmClient;
use crate::report::{opt, write_csv, write_json};

#[derive(Debug, Parser)]
#[command(name = "dve", version, about = "Defeasible visual entailment toolkit")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (training shuffles, synthetic data).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory of the command.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join SNLI, δ-NLI and Flickr30k into the DVE corpus.
    BuildDataset(BuildDatasetArgs),
    /// Train the evaluator heads.
    Train(TrainArgs),
    /// Score one (image, hypothesis, update) triplet.
    Score(ScoreArgs),
    /// Update-type classification accuracy on dataset splits.
    ClassifyEval(ClassifyEvalArgs),
    /// Reference-based metrics (and optionally evaluator scores) for generated updates.
    GenerateEval(GenerateEvalArgs),
    /// Pearson, Spearman and Kendall correlation of metric columns with human scores.
    Correlate(CorrelateArgs),
    /// Fleiss' kappa over human ratings.
    Agreement(AgreementArgs),
    /// Generate, critique and refine updates with an LVLM.
    Refine(RefineArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BuildDataset(_) => "build-dataset",
            Command::Train(_) => "train",
            Command::Score(_) => "score",
            Command::ClassifyEval(_) => "classify-eval",
            Command::GenerateEval(_) => "generate-eval",
            Command::Correlate(_) => "correlate",
            Command::Agreement(_) => "agreement",
            Command::Refine(_) => "refine",
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// SNLI JSONL file; repeat for several splits.
    #[arg(long, value_name = "FILE")]
    pub snli: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub delta_nli_train: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub delta_nli_validation: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub delta_nli_test: Option<PathBuf>,
    /// Flickr30k caption TSV (`<image>.jpg#<n>\t<caption>`).
    #[arg(long, value_name = "FILE")]
    pub flickr_captions: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub flickr_images: Option<PathBuf>,
    /// Write a generated separable corpus of N samples instead of joining sources.
    #[arg(long, value_name = "N", conflicts_with_all = ["snli", "verify_table1"])]
    pub synthetic: Option<usize>,
    /// Compare the statistics with the published corpus figures; fails on any mismatch.
    #[arg(long)]
    pub verify_table1: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EncoderArgs {
    #[arg(long, value_name = "KIND")]
    pub visual_encoder: Option<EncoderKind>,
    #[arg(long, value_name = "KIND")]
    pub text_encoder: Option<EncoderKind>,
    /// Output size of the test encoder.
    #[arg(long, value_name = "N")]
    pub encoder_dim: Option<usize>,
}

impl EncoderArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let apply = |spec: &mut EncoderSpec, kind: Option<EncoderKind>| {
            if let Some(kind) = kind {
                if kind != spec.kind {
                    *spec = EncoderSpec::new(kind);
                }
            }
            if self.encoder_dim.is_some() {
                spec.dim = self.encoder_dim;
            }
        };
        apply(&mut cfg.visual_encoder, self.visual_encoder);
        apply(&mut cfg.text_encoder, self.text_encoder);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Softmax,
    Sigmoid,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// DVE JSONL corpus.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Weight of the classification loss.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,
    #[command(flatten)]
    pub encoders: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "DIR")]
    pub checkpoint: Option<PathBuf>,
    /// Image file of the premise.
    #[arg(long, value_name = "FILE")]
    pub image: PathBuf,
    /// Defaults to the image file stem.
    #[arg(long)]
    pub image_id: Option<String>,
    #[arg(long)]
    pub hypothesis: String,
    #[arg(long)]
    pub update: String,
}

#[derive(Debug, Args)]
pub struct ClassifyEvalArgs {
    #[arg(long, value_name = "DIR")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Splits to evaluate; all when omitted.
    #[arg(long, value_name = "SPLIT")]
    pub split: Vec<Split>,
}

#[derive(Debug, Args)]
pub struct GenerateEvalArgs {
    /// JSONL with one generated update per line.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Metric names; overrides the config list.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Also report the mean evaluator score of each group.
    #[arg(long, value_name = "DIR")]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// CSV with a human score column and one column per metric.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value = "human")]
    pub human: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    /// Ratings in -2..=2.
    Centered,
    /// Ratings in 1..=5.
    Points,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// CSV with one row per item and one column per rater; the first row names the raters.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "centered")]
    pub scale: ScaleArg,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// JSONL of refinement requests.
    #[arg(long, value_name = "FILE")]
    pub requests: PathBuf,
    /// Use the deterministic echo client instead of the configured endpoint.
    #[arg(long)]
    pub mock_lvlm: bool,
    /// Score round k with the k-th value, repeating the last (needs --mock-lvlm).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_name = "S0,S1,...")]
    pub mock_scores: Vec<f64>,
    /// JSON object mapping request ids to per-round scores (needs --mock-lvlm).
    #[arg(long, value_name = "FILE")]
    pub mock_schedule: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub checkpoint: Option<PathBuf>,
    /// Threshold; repeat to sweep several.
    #[arg(long)]
    pub eta: Vec<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Critique the update score minus the caption score.
    #[arg(long)]
    pub caption_relative: bool,
    /// Prompt for the first generation; placeholders `{hypothesis}`, `{goal}`.
    #[arg(long, value_name = "FILE")]
    pub initial_template: Option<PathBuf>,
    /// Prompt for refinements; adds `{update}` and `{score}`.
    #[arg(long, value_name = "FILE")]
    pub refine_template: Option<PathBuf>,
}

/// Run a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.resolve_seed();
    let target = cli.out.or_else(|| cfg.out.clone());
    match cli.command {
        Command::BuildDataset(a) => build_dataset(cfg, a, target, out),
        Command::Train(a) => train(cfg, a, target, out),
        Command::Score(a) => score(cfg, a, out),
        Command::ClassifyEval(a) => classify_eval(cfg, a, target, out),
        Command::GenerateEval(a) => generate_eval(cfg, a, target, out),
        Command::Correlate(a) => correlate(a, target, out),
        Command::Agreement(a) => agreement(a, target, out),
        Command::Refine(a) => refine(cfg, a, target, out),
    }
}

fn required(path: Option<PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
    path.with_context(|| format!("no {what} given (flag or config)"))
}

fn print_stats(out: &mut dyn Write, stats: &[DatasetStats]) -> anyhow::Result<()> {
    for s in stats {
        writeln!(
            out,
            "{:<10} samples {:>7}  weakeners {:>6}  strengtheners {:>6}  images {:>5}  premises {:>5}  hypotheses {:>5}",
            s.split.as_str(),
            s.total_samples,
            s.weakener_count,
            s.strengthener_count,
            s.unique_images,
            s.unique_premises,
            s.unique_hypotheses
        )?;
    }
    Ok(())
}

fn build_dataset(
    mut cfg: RunConfig,
    a: BuildDatasetArgs,
    target: Option<PathBuf>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let dir = target.unwrap_or_else(|| PathBuf::from("dve-data"));
    let dataset = if let Some(n) = a.synthetic {
        dve_core::synthetic::separable_corpus(n, cfg.seed.unwrap_or(0))
    } else {
        let s = &mut cfg.sources;
        if !a.snli.is_empty() {
            s.snli = a.snli;
        }
        let overrides = [
            (&mut s.delta_nli_train, a.delta_nli_train),
            (&mut s.delta_nli_validation, a.delta_nli_validation),
            (&mut s.delta_nli_test, a.delta_nli_test),
            (&mut s.flickr_captions, a.flickr_captions),
            (&mut s.flickr_images, a.flickr_images),
        ];
        for (slot, value) in overrides {
            if value.is_some() {
                *slot = value;
            }
        }
        let joined = cfg.sources.join()?;
        let r = &joined.report;
        writeln!(
            out,
            "joined {} samples; dropped pairs {}, unresolved images {}, non-neutral {}, orphan updates {}, malformed {}",
            r.emitted, r.dropped_pairs, r.unresolved_images, r.non_neutral, r.orphan_updates, r.malformed
        )?;
        write_json(&dir.join("join_report.json"), r)?;
        joined.dataset
    };
    write_jsonl(&dataset, &dir.join("dataset.jsonl"))?;
    let stats = compute_stats(&dataset);
    write_json(&dir.join("stats.json"), &stats)?;
    print_stats(out, &stats)?;
    writeln!(out, "wrote {}", dir.join("dataset.jsonl").display())?;

    if a.verify_table1 {
        let reports: Vec<_> = stats
            .iter()
            .map(|s| verify_stats(s, &DatasetStats::reference(s.split), StatsTolerances::default()))
            .collect();
        write_json(&dir.join("table1_check.json"), &reports)?;
        for r in &reports {
            for c in &r.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{mark} {} {} actual {} expected {}", r.split.as_str(), c.field, c.actual, c.expected)?;
            }
        }
        let failed = reports.iter().flat_map(|r| r.failures()).count();
        if failed > 0 {
            bail!("{failed} statistics differ from the published figures");
        }
    }
    Ok(())
}

fn dataset_path(flag: Option<PathBuf>, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    required(flag.or_else(|| cfg.dataset.clone()), "dataset")
}

fn train(mut cfg: RunConfig, a: TrainArgs, target: Option<PathBuf>, out: &mut dyn Write) -> anyhow::Result<()> {
    let t = &mut cfg.train;
    t.alpha = a.alpha.unwrap_or(t.alpha);
    t.learning_rate = a.learning_rate.unwrap_or(t.learning_rate);
    t.weight_decay = a.weight_decay.unwrap_or(t.weight_decay);
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.max_epochs = a.epochs.unwrap_or(t.max_epochs);
    if let Some(n) = a.normalization {
        t.normalization = match n {
            NormalizationArg::Softmax => ClassNormalization::Softmax,
            NormalizationArg::Sigmoid => ClassNormalization::Sigmoid,
        };
    }
    a.encoders.apply(&mut cfg);
    cfg.validate()?;

    let dir = target.or_else(|| cfg.checkpoint.clone()).unwrap_or_else(|| PathBuf::from("checkpoint"));
    let dataset = read_jsonl(&dataset_path(a.dataset, &cfg)?)?;
    let visual = cfg.visual_encoder.build_visual()?;
    let text = cfg.text_encoder.build_text()?;
    writeln!(out, "epoch  val_L_p    val_L_c    val_L      val_acc  train_L")?;
    let mut line = |m: &dve_core::evaluator::EpochMetrics| {
        let v = &m.validation;
        // progress output only; a closed stdout must not abort training
        let _ = writeln!(
            out,
            "{:>5}  {:<9.6}  {:<9.6}  {:<9.6}  {:<7.4}  {:.6}",
            m.epoch, v.contrastive, v.categorical, v.combined, v.accuracy, m.train_combined
        );
    };
    let model = train_with_observer(&dataset, &*visual, &*text, &cfg.train, &mut line)?;
    let selected = model.selected_epoch;
    Checkpoint::new(model, cfg.visual_encoder.clone(), cfg.text_encoder.clone()).save(&dir)?;
    writeln!(out, "selected epoch {}", selected.map_or_else(|| "-".into(), |e| e.to_string()))?;
    writeln!(out, "wrote {}", dir.display())?;
    Ok(())
}

fn load_checkpoint(flag: Option<PathBuf>, cfg: &RunConfig) -> anyhow::Result<Checkpoint> {
    let dir = required(flag.or_else(|| cfg.checkpoint.clone()), "checkpoint")?;
    Checkpoint::load(&dir).with_context(|| format!("loading checkpoint {}", dir.display()))
}

fn premise_for(path: &Path, id: Option<String>) -> anyhow::Result<ImagePremise> {
    let id = id.unwrap_or_else(|| path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()));
    Ok(ImagePremise::new(id, path.to_string_lossy())?)
}

fn score(cfg: RunConfig, a: ScoreArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let ckpt = load_checkpoint(a.checkpoint, &cfg)?;
    let (visual, text) = ckpt.build_encoders()?;
    let premise = premise_for(&a.image, a.image_id)?;
    let hypothesis = Hypothesis::new(a.hypothesis)?;
    let s = ckpt.model.score_triplet(&*visual, &*text, &premise, &hypothesis, &a.update)?;
    writeln!(out, "{s}")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRow {
    pub split: Split,
    pub samples: usize,
    pub accuracy: f64,
    pub weakener_accuracy: Option<f64>,
    pub strengthener_accuracy: Option<f64>,
}

fn classify_eval(
    cfg: RunConfig,
    a: ClassifyEvalArgs,
    target: Option<PathBuf>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let ckpt = load_checkpoint(a.checkpoint, &cfg)?;
    let dataset = read_jsonl(&dataset_path(a.dataset, &cfg)?)?;
    let (visual, text) = ckpt.build_encoders()?;
    let splits = if a.split.is_empty() { Split::ALL.to_vec() } else { a.split };
    let mut rows = Vec::new();
    for split in splits {
        // [correct, total] per class index
        let mut tally = [[0usize; 2]; 2];
        for s in dataset.split(split) {
            let gold = s.update.label.context("dataset sample has no update label")?;
            let pred = ckpt.model.predict_label(&*visual, &*text, &s.premise, &s.hypothesis, &s.update.text)?;
            let t = &mut tally[gold.class_index()];
            t[0] += usize::from(pred == gold);
            t[1] += 1;
        }
        let total = tally[0][1] + tally[1][1];
        if total == 0 {
            continue;
        }
        let class = |l: UpdateLabel| {
            let [c, n] = tally[l.class_index()];
            (n > 0).then(|| c as f64 / n as f64)
        };
        rows.push(ClassifyRow {
            split,
            samples: total,
            accuracy: (tally[0][0] + tally[1][0]) as f64 / total as f64,
            weakener_accuracy: class(UpdateLabel::Weakener),
            strengthener_accuracy: class(UpdateLabel::Strengthener),
        });
    }
    if rows.is_empty() {
        bail!("no samples in the requested splits");
    }
    for r in &rows {
        writeln!(
            out,
            "{:<10} samples {:>6}  accuracy {:.4}  weakener {}  strengthener {}",
            r.split.as_str(),
            r.samples,
            r.accuracy,
            opt(r.weakener_accuracy),
            opt(r.strengthener_accuracy)
        )?;
    }
    if let Some(path) = target {
        write_json(&path, &rows)?;
    }
    Ok(())
}

/// One generated update to evaluate.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationLine {
    pub model: String,
    pub goal: Goal,
    pub candidate: String,
    #[serde(default)]
    pub references: Vec<String>,
    /// Needed for the evaluator score.
    #[serde(default)]
    pub hypothesis: Option<String>,
    #[serde(default)]
    pub image_id: Option<String>,
    #[serde(default)]
    pub image_path: Option<String>,
}

fn generate_eval(
    cfg: RunConfig,
    a: GenerateEvalArgs,
    target: Option<PathBuf>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let names = if a.metrics.is_empty() { cfg.metrics.clone() } else { a.metrics };
    RunConfig { metrics: names.clone(), ..cfg.clone() }.validate()?;
    let mut registry = MetricRegistry::empty();
    for name in &names {
        match name.as_str() {
            "rouge-l" => registry.register(Box::new(RougeL)),
            _ => registry.register(Box::new(Bleu4)),
        };
    }
    let lines: Vec<(usize, GenerationLine)> = read_lines(&a.input)?;
    if lines.is_empty() {
        bail!("{} holds no generations", a.input.display());
    }
    let scorer = a.checkpoint.map(|p| load_checkpoint(Some(p), &cfg)).transpose()?;
    let encoders = scorer.as_ref().map(Checkpoint::build_encoders).transpose()?;

    let mut groups: BTreeMap<(String, Goal), Vec<&GenerationLine>> = BTreeMap::new();
    for (_, l) in &lines {
        groups.entry((l.model.clone(), l.goal)).or_default().push(l);
    }
    let mut rows = Vec::new();
    for ((model, goal), items) in &groups {
        let premise = |l: &GenerationLine| -> anyhow::Result<Option<ImagePremise>> {
            match (&l.image_id, &l.image_path) {
                (Some(id), path) => Ok(Some(ImagePremise::new(id.clone(), path.clone().unwrap_or_default())?)),
                (None, Some(path)) => premise_for(Path::new(path), None).map(Some),
                (None, None) => Ok(None),
            }
        };
        if registry.names().next().is_some() {
            let cases = items
                .iter()
                .map(|l| {
                    Ok(GenerationCase {
                        candidate: l.candidate.clone(),
                        references: l.references.clone(),
                        image: premise(l)?,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            rows.extend(registry.evaluate(model, *goal, &cases)?);
        }
        if let (Some(ckpt), Some((visual, text))) = (&scorer, &encoders) {
            let mut sum = 0.0;
            for l in items {
                let p = premise(l)?.context("evaluator score needs image_id or image_path")?;
                let h = Hypothesis::new(l.hypothesis.clone().context("evaluator score needs a hypothesis")?)?;
                sum += ckpt.model.score_triplet(&**visual, &**text, &p, &h, &l.candidate)?;
            }
            rows.push(ReportRow {
                model: model.clone(),
                goal: *goal,
                metric: "evaluator".into(),
                value: sum / items.len() as f64,
                count: items.len(),
            });
        }
    }
    for r in &rows {
        writeln!(out, "{:<16} {:<10} {:<10} {:.4}  (n={})", r.model, r.goal.as_str(), r.metric, r.value, r.count)?;
    }
    if let Some(dir) = target {
        write_csv(&dir.join("generation_report.csv"), &rows)?;
        write_json(&dir.join("generation_report.json"), &rows)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub n: usize,
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub kendall_tau: Option<f64>,
}

fn correlate(a: CorrelateArgs, target: Option<PathBuf>, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut reader = csv::Reader::from_path(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let headers = reader.headers()?.clone();
    let human_col =
        headers.iter().position(|h| h == a.human).with_context(|| format!("no `{}` column in the input", a.human))?;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("row {}, column `{}`: `{field}` is not a number", row + 2, &headers[col]))?;
            columns[col].push(v);
        }
    }
    let human = &columns[human_col];
    let mut rows = Vec::new();
    for (col, name) in headers.iter().enumerate().filter(|(c, _)| *c != human_col) {
        let r = CorrelationReport::compute(&columns[col], human).with_context(|| format!("metric `{name}`"))?;
        rows.push(CorrelationRow {
            metric: name.into(),
            n: human.len(),
            pearson_r: r.pearson_r,
            spearman_rho: r.spearman_rho,
            kendall_tau: r.kendall_tau,
        });
    }
    for r in &rows {
        writeln!(
            out,
            "{:<16} r {}  rho {}  tau {}",
            r.metric,
            opt(r.pearson_r),
            opt(r.spearman_rho),
            opt(r.kendall_tau)
        )?;
    }
    if let Some(dir) = target {
        write_csv(&dir.join("correlation.csv"), &rows)?;
        write_json(&dir.join("correlation.json"), &rows)?;
    }
    Ok(())
}

fn agreement(a: AgreementArgs, target: Option<PathBuf>, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut reader = csv::Reader::from_path(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut ratings = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let parsed = record?
            .iter()
            .map(|field| {
                let v: i8 =
                    field.trim().parse().with_context(|| format!("row {}: `{field}` is not an integer", row + 2))?;
                let score = match a.scale {
                    ScaleArg::Centered => HumanScore::new(v),
                    ScaleArg::Points => u8::try_from(v)
                        .map_err(|_| dve_core::metrics::MetricError::InvalidMatrix(format!("scale point {v}")))
                        .and_then(HumanScore::from_scale_point),
                };
                score.with_context(|| format!("row {}", row + 2))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        ratings.push(parsed);
    }
    let report = AgreementReport::compute(&ratings)?;
    writeln!(out, "kappa five-way {}", opt(report.five_way))?;
    writeln!(out, "kappa collapsed {}", opt(report.collapsed))?;
    writeln!(out, "items {} raters {}", report.items, report.raters)?;
    if let Some(path) = target {
        write_json(&path, &report)?;
    }
    Ok(())
}

fn refine(mut cfg: RunConfig, a: RefineArgs, target: Option<PathBuf>, out: &mut dyn Write) -> anyhow::Result<()> {
    if !a.eta.is_empty() {
        cfg.etas = a.eta;
    }
    if let Some(m) = a.max_rounds {
        cfg.refinement.max_rounds = m;
    }
    if let Some(c) = a.concurrency {
        cfg.concurrency = c;
    }
    cfg.refinement.caption_relative |= a.caption_relative;
    if a.initial_template.is_some() {
        cfg.templates.initial = a.initial_template;
    }
    if a.refine_template.is_some() {
        cfg.templates.refine = a.refine_template;
    }
    cfg.load_templates()?;
    cfg.validate()?;
    let mocked_scores = !a.mock_scores.is_empty() || a.mock_schedule.is_some();
    if mocked_scores && !a.mock_lvlm {
        bail!("--mock-scores and --mock-schedule read round tags only the mock LVLM produces; add --mock-lvlm");
    }
    let requests = read_requests(&a.requests)?;

    let client: Box<dyn LvlmClient + Sync> = if a.mock_lvlm {
        Box::new(RoundEchoClient::new("mock update"))
    } else {
        Box::new(HttpLvlmClient::new(cfg.lvlm.clone())?)
    };

    let runs = if mocked_scores {
        let scores = a.mock_scores.clone();
        let mut scorer = ScheduleScorer::uniform(move |k| scores.get(k).or(scores.last()).copied().unwrap_or(0.0));
        if let Some(path) = &a.mock_schedule {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let schedule: BTreeMap<String, Vec<f64>> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            for (id, s) in schedule {
                scorer = scorer.with_request(id, s);
            }
        }
        run_batch(&*client, &scorer, &requests, &cfg)
    } else {
        let ckpt = load_checkpoint(a.checkpoint, &cfg)?;
        let (visual, text) = ckpt.build_encoders()?;
        let scorer = ModelScorer {
            model: &ckpt.model,
            visual: &*visual,
            text: &*text,
            caption_relative: cfg.refinement.caption_relative,
        };
        run_batch(&*client, &scorer, &requests, &cfg)
    };

    for run in &runs {
        let s = &run.summary;
        let cumulative: Vec<String> = s.cumulative.iter().map(|v| format!("{v:.4}")).collect();
        writeln!(
            out,
            "eta {}  requests {}  initial {:.4}  cumulative {}  exhausted {}  aborted {}",
            s.eta,
            s.requests,
            s.initial,
            cumulative.join(" "),
            s.exhausted,
            s.aborted
        )?;
    }
    if let Some(dir) = target {
        for run in &runs {
            write_traces(&dir.join(trace_file_name(run.eta)), &run.traces)?;
        }
        let summaries: Vec<_> = runs.iter().map(|r| &r.summary).collect();
        write_json(&dir.join("summary.json"), &summaries)?;
    }
    Ok(())
}

fn run_batch<S: UpdateScorer + Sync + ?Sized>(
    client: &(dyn LvlmClient + Sync),
    scorer: &S,
    requests: &[dve_core::refinement::RefineRequest],
    cfg: &RunConfig,
) -> Vec<crate::batch::EtaRun> {
    batch_refine(client, scorer, requests, &cfg.refinement, &cfg.etas, cfg.concurrency)
}
