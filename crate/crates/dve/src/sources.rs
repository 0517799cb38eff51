//! Readers for the three raw sources: SNLI JSONL, δ-NLI JSONL, and the
//! Flickr30k caption TSV plus image directory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use dve_core::dataset::{malformed, DeltaNliRecord, FlickrRecord, MalformedRecord, NliLabel, SnliRecord};
use dve_core::{Split, UpdateLabel};
use serde::Deserialize;

use crate::jsonl::JsonlError;

pub fn open(path: &Path) -> Result<BufReader<File>, JsonlError> {
    File::open(path).map(BufReader::new).map_err(|e| JsonlError::io(path, e))
}

#[derive(Deserialize)]
struct SnliLine {
    gold_label: String,
    sentence1: String,
    sentence2: String,
    #[serde(rename = "captionID", default)]
    caption_id: Option<String>,
}

/// SNLI records. Pairs whose gold label is `-` (no annotator consensus) are
/// reported as malformed.
pub fn snli_records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<SnliRecord, MalformedRecord>> {
    json_lines(reader, "snli").map(|item| {
        let (position, line): (usize, SnliLine) = item?;
        let label = match line.gold_label.as_str() {
            "entailment" => NliLabel::Entailment,
            "neutral" => NliLabel::Neutral,
            "contradiction" => NliLabel::Contradiction,
            other => return Err(malformed("snli", position, &format!("gold_label `{other}`"))),
        };
        Ok(SnliRecord {
            premise_text: line.sentence1,
            hypothesis_text: line.sentence2,
            label,
            caption_id: line.caption_id,
        })
    })
}

#[derive(Deserialize)]
struct DeltaNliLine {
    #[serde(rename = "Premise", alias = "premise")]
    premise: String,
    #[serde(rename = "Hypothesis", alias = "hypothesis")]
    hypothesis: String,
    #[serde(rename = "Update", alias = "update")]
    update: String,
    #[serde(rename = "UpdateType", alias = "update_type")]
    update_type: String,
    #[serde(rename = "Split", alias = "split", default)]
    split: Option<String>,
}

/// δ-NLI records. The split comes from a `split` field when present,
/// otherwise from `default_split` (the release ships one file per split).
pub fn delta_nli_records<R: BufRead>(
    reader: R,
    default_split: Split,
) -> impl Iterator<Item = Result<DeltaNliRecord, MalformedRecord>> {
    json_lines(reader, "delta-nli").map(move |item| {
        let (position, line): (usize, DeltaNliLine) = item?;
        let update_type: UpdateLabel = line
            .update_type
            .parse()
            .map_err(|_| malformed("delta-nli", position, &format!("update type `{}`", line.update_type)))?;
        let split = match line.split {
            Some(s) => s.parse().map_err(|_| malformed("delta-nli", position, &format!("split `{s}`")))?,
            None => default_split,
        };
        Ok(DeltaNliRecord {
            premise_text: line.premise,
            hypothesis_text: line.hypothesis,
            update_text: line.update,
            update_type,
            split,
        })
    })
}

/// Flickr30k caption TSV (`<file>.jpg#<n>\t<caption>`), grouped per image in
/// order of first appearance. Image paths resolve inside `image_dir`.
pub fn flickr_records<R: BufRead>(reader: R, image_dir: &Path) -> Vec<Result<FlickrRecord, MalformedRecord>> {
    let mut out = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut captions: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
    for (position, line) in reader.lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                out.push(Err(malformed("flickr", position, &e.to_string())));
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let Some((key, caption)) = line.split_once('\t') else {
            out.push(Err(malformed("flickr", position, "expected `<image>#<n>\\t<caption>`")));
            continue;
        };
        let file_name = key.split_once('#').map_or(key, |(f, _)| f).trim();
        let image_id = file_name.rsplit_once('.').map_or(file_name, |(stem, _)| stem).to_string();
        let entry = captions.entry(image_id.clone()).or_insert_with(|| {
            order.push(image_id.clone());
            (path_string(&image_dir.join(file_name)), Vec::new())
        });
        entry.1.push(caption.trim().to_string());
    }
    for image_id in order {
        if let Some((image_path, caption_texts)) = captions.remove(&image_id) {
            out.push(Ok(FlickrRecord { image_id, image_path, caption_texts }));
        }
    }
    out
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn json_lines<R, T>(reader: R, source: &'static str) -> impl Iterator<Item = Result<(usize, T), MalformedRecord>>
where
    R: BufRead,
    T: for<'de> Deserialize<'de>,
{
    reader.lines().enumerate().filter_map(move |(position, line)| match line {
        Err(e) => Some(Err(malformed(source, position, &e.to_string()))),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(
            serde_json::from_str::<T>(&l)
                .map(|v| (position, v))
                .map_err(|e| malformed(source, position, &e.to_string())),
        ),
    })
}

/// Where each raw source lives.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(default)]
pub struct SourcePaths {
    /// One or more SNLI JSONL files; all splits may be given.
    pub snli: Vec<PathBuf>,
    pub delta_nli_train: Option<PathBuf>,
    pub delta_nli_validation: Option<PathBuf>,
    pub delta_nli_test: Option<PathBuf>,
    pub flickr_captions: Option<PathBuf>,
    pub flickr_images: Option<PathBuf>,
}

impl SourcePaths {
    fn delta_files(&self) -> Vec<(Split, &PathBuf)> {
        [
            (Split::Train, &self.delta_nli_train),
            (Split::Validation, &self.delta_nli_validation),
            (Split::Test, &self.delta_nli_test),
        ]
        .into_iter()
        .filter_map(|(s, p)| p.as_ref().map(|p| (s, p)))
        .collect()
    }

    /// Open every configured file and run the join.
    pub fn join(&self) -> anyhow::Result<dve_core::dataset::JoinOutput> {
        use anyhow::{bail, Context};
        if self.snli.is_empty() {
            bail!("no SNLI source configured");
        }
        let delta = self.delta_files();
        if delta.is_empty() {
            bail!("no delta-NLI source configured");
        }
        let captions = self.flickr_captions.as_ref().context("no Flickr30k caption file configured")?;
        let images = self.flickr_images.clone().unwrap_or_else(|| PathBuf::from("flickr30k-images"));

        let mut snli = Vec::new();
        for p in &self.snli {
            snli.extend(snli_records(open(p)?));
        }
        let mut dnli = Vec::new();
        for (split, p) in delta {
            dnli.extend(delta_nli_records(open(p)?, split));
        }
        let flickr = flickr_records(open(captions)?, &images);
        Ok(dve_core::dataset::join_sources(snli, dnli, flickr))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snli_line_parses() {
        let src = r#"{"gold_label":"neutral","sentence1":"A dog runs.","sentence2":"It is fast.","captionID":"12.jpg#3","pairID":"x"}
{"gold_label":"-","sentence1":"a","sentence2":"b"}
"#;
        let recs: Vec<_> = snli_records(src.as_bytes()).collect();
        assert_eq!(recs.len(), 2);
        let first = recs[0].as_ref().unwrap();
        assert_eq!(first.label, NliLabel::Neutral);
        assert_eq!(first.caption_id.as_deref(), Some("12.jpg#3"));
        assert_eq!(recs[1].as_ref().unwrap_err().position, 1);
    }

    #[test]
    fn delta_nli_split_and_type() {
        let src = r#"{"Premise":"p","Hypothesis":"h","Update":"u","UpdateType":"weakener"}
{"premise":"p","hypothesis":"h","update":"u","update_type":"strengthener","split":"dev"}
{"Premise":"p","Hypothesis":"h","Update":"u","UpdateType":"sideways"}"#;
        let recs: Vec<_> = delta_nli_records(src.as_bytes(), Split::Test).collect();
        let a = recs[0].as_ref().unwrap();
        assert_eq!((a.update_type, a.split), (UpdateLabel::Weakener, Split::Test));
        let b = recs[1].as_ref().unwrap();
        assert_eq!((b.update_type, b.split), (UpdateLabel::Strengthener, Split::Validation));
        assert!(recs[2].is_err());
    }

    #[test]
    fn flickr_groups_captions() {
        let src = "10.jpg#0\tA dog.\n10.jpg#1\tA brown dog.\n11.jpg#0\tA cat.\nbroken line\n";
        let recs = flickr_records(src.as_bytes(), Path::new("imgs"));
        assert_eq!(recs.len(), 3);
        assert!(recs[0].is_err());
        let dog = recs[1].as_ref().unwrap();
        assert_eq!(dog.image_id, "10");
        assert_eq!(dog.caption_texts, ["A dog.", "A brown dog."]);
        assert_eq!(Path::new(&dog.image_path), Path::new("imgs/10.jpg"));
    }
}
