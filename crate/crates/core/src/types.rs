//! Domain types shared across the toolkit and the label/sign conventions.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("unknown {kind} `{value}`")]
    UnknownVariant { kind: &'static str, value: String },
}

/// Whether an update makes the hypothesis less or more likely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateLabel {
    Weakener,
    Strengthener,
}

impl UpdateLabel {
    pub const ALL: [UpdateLabel; 2] = [UpdateLabel::Weakener, UpdateLabel::Strengthener];

    /// −1 for a weakener, +1 for a strengthener.
    pub const fn sign(self) -> i8 {
        match self {
            UpdateLabel::Weakener => -1,
            UpdateLabel::Strengthener => 1,
        }
    }

    pub const fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            -1 => Some(UpdateLabel::Weakener),
            1 => Some(UpdateLabel::Strengthener),
            _ => None,
        }
    }

    /// Output index of the classification head: 0 weakener, 1 strengthener.
    pub const fn class_index(self) -> usize {
        match self {
            UpdateLabel::Weakener => 0,
            UpdateLabel::Strengthener => 1,
        }
    }

    pub const fn from_class_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(UpdateLabel::Weakener),
            1 => Some(UpdateLabel::Strengthener),
            _ => None,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            UpdateLabel::Weakener => "weakener",
            UpdateLabel::Strengthener => "strengthener",
        }
    }
}

impl fmt::Display for UpdateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UpdateLabel {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weakener" | "w" => Ok(UpdateLabel::Weakener),
            "strengthener" | "s" => Ok(UpdateLabel::Strengthener),
            _ => Err(TypeError::UnknownVariant { kind: "update type", value: s.into() }),
        }
    }
}

/// Sign encoding of an update label used by the pairwise contrastive loss.
pub const fn label_sign(label: UpdateLabel) -> i8 {
    label.sign()
}

/// Inverse of [`label_sign`].
pub const fn sign_to_label(sign: i8) -> Option<UpdateLabel> {
    UpdateLabel::from_sign(sign)
}

/// What a generated update is asked to do to the hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    Weaken,
    Strengthen,
}

impl Goal {
    pub const fn as_str(self) -> &'static str {
        match self {
            Goal::Weaken => "weaken",
            Goal::Strengthen => "strengthen",
        }
    }
}

impl From<Goal> for UpdateLabel {
    fn from(goal: Goal) -> Self {
        match goal {
            Goal::Weaken => UpdateLabel::Weakener,
            Goal::Strengthen => UpdateLabel::Strengthener,
        }
    }
}

impl From<UpdateLabel> for Goal {
    fn from(label: UpdateLabel) -> Self {
        match label {
            UpdateLabel::Weakener => Goal::Weaken,
            UpdateLabel::Strengthener => Goal::Strengthen,
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Goal {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weaken" | "weakener" | "w" => Ok(Goal::Weaken),
            "strengthen" | "strengthener" | "s" => Ok(Goal::Strengthen),
            _ => Err(TypeError::UnknownVariant { kind: "goal", value: s.into() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub const fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "dev" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(TypeError::UnknownVariant { kind: "split", value: s.into() }),
        }
    }
}

/// Reference to the image that grounds the entailment. Pixels are never
/// stored here; encoders resolve `source_path` themselves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImagePremise {
    pub image_id: String,
    pub source_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
}

impl ImagePremise {
    pub fn new(image_id: impl Into<String>, source_path: impl Into<String>) -> Result<Self, TypeError> {
        let image_id = image_id.into();
        if image_id.trim().is_empty() {
            return Err(TypeError::Empty("image_id"));
        }
        Ok(Self { image_id, source_path: source_path.into(), width: None, height: None })
    }
}

macro_rules! text_newtype {
    ($(#[$meta:meta])* $name:ident, $field:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(text: impl Into<String>) -> Result<Self, TypeError> {
                let text = text.into();
                if text.trim().is_empty() {
                    Err(TypeError::Empty($field))
                } else {
                    Ok(Self(text))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn into_string(self) -> String {
                self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = TypeError;

            fn try_from(text: String) -> Result<Self, Self::Error> {
                Self::new(text)
            }
        }

        impl From<$name> for String {
            fn from(value: $name) -> String {
                value.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

text_newtype!(
    /// The sentence whose likelihood the update shifts.
    Hypothesis,
    "hypothesis"
);
text_newtype!(
    /// The original text premise paired with the image.
    Caption,
    "caption"
);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Update {
    pub text: String,
    /// Absent for generated candidates that have not been labelled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<UpdateLabel>,
}

impl Update {
    pub fn new(text: impl Into<String>, label: Option<UpdateLabel>) -> Result<Self, TypeError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(TypeError::Empty("update"));
        }
        Ok(Self { text, label })
    }

    pub fn labeled(text: impl Into<String>, label: UpdateLabel) -> Result<Self, TypeError> {
        Self::new(text, Some(label))
    }

    pub fn unlabeled(text: impl Into<String>) -> Result<Self, TypeError> {
        Self::new(text, None)
    }
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DveSample {
    pub premise: ImagePremise,
    pub caption: Caption,
    pub hypothesis: Hypothesis,
    pub update: Update,
    pub split: Split,
}
