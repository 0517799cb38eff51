//! Corpus construction: join neutral SNLI pairs with δ-NLI updates and
//! Flickr30k images, plus per-split statistics and their verification
//! against published reference values.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Caption, DveSample, Hypothesis, ImagePremise, Split, Update, UpdateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnliRecord {
    pub premise_text: String,
    pub hypothesis_text: String,
    pub label: NliLabel,
    /// Flickr30k caption reference such as `3416050480.jpg#4`; informational.
    pub caption_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaNliRecord {
    pub premise_text: String,
    pub hypothesis_text: String,
    pub update_text: String,
    pub update_type: UpdateLabel,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlickrRecord {
    pub image_id: String,
    pub image_path: String,
    pub caption_texts: Vec<String>,
}

/// A source record that could not be decoded or failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("malformed {source_name} record {position}: {reason}")]
pub struct MalformedRecord {
    pub source_name: String,
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DveDataset {
    pub samples: Vec<DveSample>,
}

impl DveDataset {
    pub fn new(samples: Vec<DveSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &DveSample> + '_ {
        self.samples.iter().filter(move |s| s.split == split)
    }
}

/// Counters describing what the join kept and what it skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinReport {
    pub emitted: usize,
    /// Neutral pairs with no δ-NLI update.
    pub dropped_pairs: usize,
    /// Pairs with updates whose premise text matches no Flickr caption.
    pub unresolved_images: usize,
    pub malformed: usize,
    pub non_neutral: usize,
    /// δ-NLI updates whose pair is not among the neutral SNLI pairs.
    pub orphan_updates: usize,
    pub malformed_records: Vec<MalformedRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinOutput {
    pub dataset: DveDataset,
    pub report: JoinReport,
}

/// Collapse whitespace runs and trim. Join keys compare exactly after this.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub fn malformed(source_name: &str, position: usize, reason: &str) -> MalformedRecord {
    MalformedRecord { source_name: source_name.into(), position, reason: reason.into() }
}

/// Join the three sources into DVE samples.
///
/// Every neutral SNLI pair that has at least one δ-NLI update and whose
/// premise text is one of an image's captions yields one sample per update.
/// The text premise is replaced by the image and kept as the sample caption.
/// Output follows the order of first appearance of each SNLI pair, then the
/// δ-NLI order of its updates.
pub fn join_sources<S, D, F>(snli: S, dnli: D, flickr: F) -> JoinOutput
where
    S: IntoIterator<Item = Result<SnliRecord, MalformedRecord>>,
    D: IntoIterator<Item = Result<DeltaNliRecord, MalformedRecord>>,
    F: IntoIterator<Item = Result<FlickrRecord, MalformedRecord>>,
{
    let mut report = JoinReport::default();
    let note = |report: &mut JoinReport, err: MalformedRecord| {
        report.malformed += 1;
        report.malformed_records.push(err);
    };

    // caption text -> image; first image claiming a caption wins
    let mut images: BTreeMap<String, (String, String)> = BTreeMap::new();
    for (position, record) in flickr.into_iter().enumerate() {
        let record = match record {
            Ok(r) if r.image_id.trim().is_empty() => {
                note(&mut report, malformed("flickr", position, "empty image id"));
                continue;
            }
            Ok(r) if r.caption_texts.iter().all(|c| c.trim().is_empty()) => {
                note(&mut report, malformed("flickr", position, "no captions"));
                continue;
            }
            Ok(r) => r,
            Err(e) => {
                note(&mut report, e);
                continue;
            }
        };
        for caption in &record.caption_texts {
            let key = normalize_whitespace(caption);
            if key.is_empty() {
                continue;
            }
            images.entry(key).or_insert_with(|| (record.image_id.clone(), record.image_path.clone()));
        }
    }

    type PairKey = (String, String);
    let mut updates: BTreeMap<PairKey, Vec<DeltaNliRecord>> = BTreeMap::new();
    for (position, record) in dnli.into_iter().enumerate() {
        match record {
            Ok(r) => {
                if r.premise_text.trim().is_empty()
                    || r.hypothesis_text.trim().is_empty()
                    || r.update_text.trim().is_empty()
                {
                    note(&mut report, malformed("delta-nli", position, "empty text field"));
                    continue;
                }
                let key = (normalize_whitespace(&r.premise_text), normalize_whitespace(&r.hypothesis_text));
                updates.entry(key).or_default().push(r);
            }
            Err(e) => note(&mut report, e),
        }
    }

    let mut seen: BTreeSet<PairKey> = BTreeSet::new();
    let mut pairs: Vec<(PairKey, SnliRecord)> = Vec::new();
    for (position, record) in snli.into_iter().enumerate() {
        match record {
            Ok(r) if r.label != NliLabel::Neutral => report.non_neutral += 1,
            Ok(r) => {
                if r.premise_text.trim().is_empty() || r.hypothesis_text.trim().is_empty() {
                    note(&mut report, malformed("snli", position, "empty text field"));
                    continue;
                }
                let key = (normalize_whitespace(&r.premise_text), normalize_whitespace(&r.hypothesis_text));
                if seen.insert(key.clone()) {
                    pairs.push((key, r));
                }
            }
            Err(e) => note(&mut report, e),
        }
    }

    let mut samples = Vec::new();
    for (key, pair) in &pairs {
        let Some(pair_updates) = updates.remove(key) else {
            report.dropped_pairs += 1;
            continue;
        };
        let Some((image_id, image_path)) = images.get(&key.0) else {
            report.unresolved_images += 1;
            continue;
        };
        // both texts were checked non-blank above
        let (Ok(caption), Ok(hypothesis), Ok(premise)) = (
            Caption::new(pair.premise_text.clone()),
            Hypothesis::new(pair.hypothesis_text.clone()),
            ImagePremise::new(image_id.clone(), image_path.clone()),
        ) else {
            continue;
        };
        for u in pair_updates {
            let Ok(update) = Update::labeled(u.update_text, u.update_type) else {
                continue;
            };
            samples.push(DveSample {
                premise: premise.clone(),
                caption: caption.clone(),
                hypothesis: hypothesis.clone(),
                update,
                split: u.split,
            });
        }
    }
    report.orphan_updates = updates.values().map(Vec::len).sum();
    report.emitted = samples.len();

    JoinOutput { dataset: DveDataset::new(samples), report }
}

/// Table-style statistics for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub split: Split,
    pub total_samples: u64,
    pub weakener_count: u64,
    pub strengthener_count: u64,
    /// Premise means the caption text; lengths are whitespace word counts.
    pub avg_premise_len: f64,
    pub avg_hypothesis_len: f64,
    pub unique_premises: u64,
    pub unique_hypotheses: u64,
    pub avg_updates_per_image: f64,
    pub unique_images: u64,
    /// Set when the split has no samples; every other field is zero.
    #[serde(default)]
    pub empty: bool,
}

/// Mergeable partial statistics. Shards can be folded independently and
/// combined with [`StatsAccumulator::merge`].
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    total: u64,
    weakeners: u64,
    strengtheners: u64,
    premise_words: u64,
    hypothesis_words: u64,
    premises: BTreeSet<String>,
    hypotheses: BTreeSet<String>,
    images: BTreeSet<String>,
}

impl StatsAccumulator {
    pub fn push(&mut self, sample: &DveSample) {
        self.total += 1;
        match sample.update.label {
            Some(UpdateLabel::Weakener) => self.weakeners += 1,
            Some(UpdateLabel::Strengthener) => self.strengtheners += 1,
            None => {}
        }
        self.premise_words += word_count(sample.caption.as_str());
        self.hypothesis_words += word_count(sample.hypothesis.as_str());
        if !self.premises.contains(sample.caption.as_str()) {
            self.premises.insert(sample.caption.as_str().into());
        }
        if !self.hypotheses.contains(sample.hypothesis.as_str()) {
            self.hypotheses.insert(sample.hypothesis.as_str().into());
        }
        if !self.images.contains(&sample.premise.image_id) {
            self.images.insert(sample.premise.image_id.clone());
        }
    }

    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        self.total += other.total;
        self.weakeners += other.weakeners;
        self.strengtheners += other.strengtheners;
        self.premise_words += other.premise_words;
        self.hypothesis_words += other.hypothesis_words;
        self.premises.extend(other.premises);
        self.hypotheses.extend(other.hypotheses);
        self.images.extend(other.images);
        self
    }

    pub fn finish(&self, split: Split) -> DatasetStats {
        if self.total == 0 {
            return DatasetStats::zero(split);
        }
        let n = self.total as f64;
        DatasetStats {
            split,
            total_samples: self.total,
            weakener_count: self.weakeners,
            strengthener_count: self.strengtheners,
            avg_premise_len: self.premise_words as f64 / n,
            avg_hypothesis_len: self.hypothesis_words as f64 / n,
            unique_premises: self.premises.len() as u64,
            unique_hypotheses: self.hypotheses.len() as u64,
            avg_updates_per_image: n / self.images.len() as f64,
            unique_images: self.images.len() as u64,
            empty: false,
        }
    }
}

fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl DatasetStats {
    fn zero(split: Split) -> Self {
        DatasetStats {
            split,
            total_samples: 0,
            weakener_count: 0,
            strengthener_count: 0,
            avg_premise_len: 0.0,
            avg_hypothesis_len: 0.0,
            unique_premises: 0,
            unique_hypotheses: 0,
            avg_updates_per_image: 0.0,
            unique_images: 0,
            empty: true,
        }
    }

    /// Published statistics of the full corpus.
    pub fn reference(split: Split) -> DatasetStats {
        let (total, half, prem, hyp, up, uh, per_image, images) = match split {
            Split::Train => (93_082, 46_541, 12.83, 8.27, 9_293, 9_438, 9.79, 9_507),
            Split::Validation => (1_888, 944, 13.82, 8.41, 191, 195, 9.68, 195),
            Split::Test => (1_972, 986, 13.21, 8.23, 200, 203, 9.71, 203),
        };
        DatasetStats {
            split,
            total_samples: total,
            weakener_count: half,
            strengthener_count: half,
            avg_premise_len: prem,
            avg_hypothesis_len: hyp,
            unique_premises: up,
            unique_hypotheses: uh,
            avg_updates_per_image: per_image,
            unique_images: images,
            empty: false,
        }
    }
}

/// Statistics for every split, in `Split::ALL` order. Empty splits are
/// present and flagged.
pub fn compute_stats(dataset: &DveDataset) -> Vec<DatasetStats> {
    let mut acc: BTreeMap<Split, StatsAccumulator> = BTreeMap::new();
    for sample in &dataset.samples {
        acc.entry(sample.split).or_default().push(sample);
    }
    Split::ALL
        .iter()
        .map(|&split| acc.get(&split).map_or_else(|| DatasetStats::zero(split), |a| a.finish(split)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsTolerances {
    /// Absolute tolerance for averaged fields. Counts always compare exactly.
    pub average_abs: f64,
}

impl Default for StatsTolerances {
    fn default() -> Self {
        Self { average_abs: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCheck {
    pub field: String,
    pub actual: f64,
    pub expected: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub split: Split,
    pub checks: Vec<FieldCheck>,
}

impl StatsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FieldCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn verify_stats(actual: &DatasetStats, expected: &DatasetStats, tolerances: StatsTolerances) -> StatsReport {
    let counts = [
        ("total_samples", actual.total_samples, expected.total_samples),
        ("weakener_count", actual.weakener_count, expected.weakener_count),
        ("strengthener_count", actual.strengthener_count, expected.strengthener_count),
        ("unique_premises", actual.unique_premises, expected.unique_premises),
        ("unique_hypotheses", actual.unique_hypotheses, expected.unique_hypotheses),
        ("unique_images", actual.unique_images, expected.unique_images),
    ];
    let averages = [
        ("avg_premise_len", actual.avg_premise_len, expected.avg_premise_len),
        ("avg_hypothesis_len", actual.avg_hypothesis_len, expected.avg_hypothesis_len),
        ("avg_updates_per_image", actual.avg_updates_per_image, expected.avg_updates_per_image),
    ];
    let mut checks: Vec<FieldCheck> = counts
        .iter()
        .map(|&(field, a, e)| FieldCheck { field: field.into(), actual: a as f64, expected: e as f64, passed: a == e })
        .collect();
    checks.extend(averages.iter().map(|&(field, a, e)| FieldCheck {
        field: field.into(),
        actual: a,
        expected: e,
        passed: (a - e).abs() <= tolerances.average_abs,
    }));
    StatsReport { split: actual.split, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn snli(p: &str, h: &str, label: NliLabel) -> Result<SnliRecord, MalformedRecord> {
        Ok(SnliRecord { premise_text: p.into(), hypothesis_text: h.into(), label, caption_id: None })
    }

    fn dnli(p: &str, h: &str, u: &str, t: UpdateLabel) -> Result<DeltaNliRecord, MalformedRecord> {
        Ok(DeltaNliRecord {
            premise_text: p.into(),
            hypothesis_text: h.into(),
            update_text: u.into(),
            update_type: t,
            split: Split::Train,
        })
    }

    fn flickr(id: &str, captions: &[&str]) -> Result<FlickrRecord, MalformedRecord> {
        Ok(FlickrRecord {
            image_id: id.into(),
            image_path: alloc::format!("images/{id}"),
            caption_texts: captions.iter().map(|c| c.to_string()).collect(),
        })
    }

    #[test]
    fn unresolved_image_is_counted_not_fatal() {
        let out = join_sources(
            vec![snli("A man sleeps.", "He is tired.", NliLabel::Neutral)],
            vec![dnli("A man sleeps.", "He is tired.", "He ran a marathon.", UpdateLabel::Strengthener)],
            vec![flickr("1.jpg", &["A cat sits."])],
        );
        assert!(out.dataset.is_empty());
        assert_eq!(out.report.unresolved_images, 1);
        assert_eq!(out.report.dropped_pairs, 0);
    }

    #[test]
    fn whitespace_normalized_keys_match() {
        let out = join_sources(
            vec![snli("A  man\tsleeps. ", "He is tired.", NliLabel::Neutral)],
            vec![dnli("A man sleeps.", "He is  tired.", "He ran all day.", UpdateLabel::Strengthener)],
            vec![flickr("1.jpg", &["A man sleeps."])],
        );
        assert_eq!(out.dataset.len(), 1);
        // caption keeps the SNLI text verbatim
        assert_eq!(out.dataset.samples[0].caption.as_str(), "A  man\tsleeps. ");
    }

    #[test]
    fn non_neutral_and_malformed_are_skipped() {
        let out = join_sources(
            vec![
                snli("A man sleeps.", "He is tired.", NliLabel::Entailment),
                Err(malformed("snli", 1, "bad json")),
                snli("", "x", NliLabel::Neutral),
            ],
            vec![dnli("A man sleeps.", "He is tired.", "u", UpdateLabel::Weakener)],
            vec![flickr("1.jpg", &["A man sleeps."])],
        );
        assert!(out.dataset.is_empty());
        assert_eq!(out.report.non_neutral, 1);
        assert_eq!(out.report.malformed, 2);
        assert_eq!(out.report.orphan_updates, 1);
    }

    #[test]
    fn stats_of_single_sample() {
        let sample = DveSample {
            premise: ImagePremise::new("1.jpg", "1.jpg").unwrap(),
            caption: Caption::new("a man sleeps on a bench").unwrap(),
            hypothesis: Hypothesis::new("a b c").unwrap(),
            update: Update::labeled("he is tired", UpdateLabel::Weakener).unwrap(),
            split: Split::Test,
        };
        let stats = compute_stats(&DveDataset::new(vec![sample]));
        let test = &stats[2];
        assert_eq!(test.avg_hypothesis_len, 3.0);
        assert_eq!(test.avg_premise_len, 6.0);
        assert_eq!(test.weakener_count, 1);
        assert!(!test.empty);
        assert!(stats[0].empty && stats[1].empty);
        assert_eq!(stats[0].total_samples, 0);
    }

    #[test]
    fn verify_flags_off_by_one_only() {
        let expected = DatasetStats::reference(Split::Test);
        let mut actual = expected.clone();
        assert!(verify_stats(&actual, &expected, StatsTolerances::default()).passed());
        actual.weakener_count = 985;
        actual.avg_premise_len = 13.25;
        let report = verify_stats(&actual, &expected, StatsTolerances::default());
        let failed: Vec<_> = report.failures().map(|c| c.field.as_str()).collect();
        assert_eq!(failed, ["weakener_count"]);
    }

    #[test]
    fn reference_stats_are_internally_consistent() {
        for split in Split::ALL {
            let r = DatasetStats::reference(split);
            assert_eq!(r.weakener_count + r.strengthener_count, r.total_samples);
            let per_image = r.total_samples as f64 / r.unique_images as f64;
            assert!((per_image - r.avg_updates_per_image).abs() < 0.005, "{split}");
        }
    }
}
