//! Dataset persistence, one JSON object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use dve_core::{Caption, DveDataset, DveSample, Hypothesis, ImagePremise, Split, Update, UpdateLabel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Schema { path: PathBuf, line: usize, message: String },
    #[error("sample {index} has no update_type and cannot be written")]
    Unlabeled { index: usize },
}

impl JsonlError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        JsonlError::Io { path: path.to_path_buf(), source }
    }

    /// 1-based line of a schema error.
    pub fn line(&self) -> Option<usize> {
        match self {
            JsonlError::Schema { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleLine {
    image_id: String,
    image_path: String,
    caption: String,
    hypothesis: String,
    update: String,
    update_type: UpdateLabel,
    split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
}

impl SampleLine {
    fn from_sample(index: usize, s: &DveSample) -> Result<Self, JsonlError> {
        Ok(Self {
            image_id: s.premise.image_id.clone(),
            image_path: s.premise.source_path.clone(),
            caption: s.caption.as_str().into(),
            hypothesis: s.hypothesis.as_str().into(),
            update: s.update.text.clone(),
            update_type: s.update.label.ok_or(JsonlError::Unlabeled { index })?,
            split: s.split,
            width: s.premise.width,
            height: s.premise.height,
        })
    }

    fn into_sample(self) -> Result<DveSample, String> {
        let mut premise = ImagePremise::new(self.image_id, self.image_path).map_err(|e| e.to_string())?;
        premise.width = self.width;
        premise.height = self.height;
        Ok(DveSample {
            premise,
            caption: Caption::new(self.caption).map_err(|e| format!("caption: {e}"))?,
            hypothesis: Hypothesis::new(self.hypothesis).map_err(|e| format!("hypothesis: {e}"))?,
            update: Update::labeled(self.update, self.update_type).map_err(|e| format!("update: {e}"))?,
            split: self.split,
        })
    }
}

pub fn write_jsonl(dataset: &DveDataset, path: &Path) -> Result<(), JsonlError> {
    let lines = dataset
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| SampleLine::from_sample(i, s))
        .collect::<Result<Vec<_>, _>>()?;
    write_lines(path, &lines)
}

pub fn read_jsonl(path: &Path) -> Result<DveDataset, JsonlError> {
    let lines: Vec<(usize, SampleLine)> = read_lines(path)?;
    let samples = lines
        .into_iter()
        .map(|(line, raw)| {
            raw.into_sample().map_err(|message| JsonlError::Schema { path: path.to_path_buf(), line, message })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DveDataset::new(samples))
}

/// Serialize each item on its own line, replacing the file.
pub fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), JsonlError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| JsonlError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| JsonlError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| JsonlError::io(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| JsonlError::io(path, e))?;
    }
    out.flush().map_err(|e| JsonlError::io(path, e))
}

/// Parse every non-blank line, keeping its 1-based line number.
pub fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, JsonlError> {
    let file = File::open(path).map_err(|e| JsonlError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| JsonlError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| JsonlError::Schema {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}
