//! Well-being dimensions, coder labels and estimator categories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the eight well-being components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Emo,
    Sat,
    Vit,
    Res,
    Fun,
    Tru,
    Rel,
    Wor,
}

impl Dimension {
    /// Column order used by the index CSV.
    pub const ALL: [Dimension; 8] = [
        Dimension::Emo,
        Dimension::Sat,
        Dimension::Vit,
        Dimension::Res,
        Dimension::Fun,
        Dimension::Tru,
        Dimension::Rel,
        Dimension::Wor,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Dimension::Emo => "emo",
            Dimension::Sat => "sat",
            Dimension::Vit => "vit",
            Dimension::Res => "res",
            Dimension::Fun => "fun",
            Dimension::Tru => "tru",
            Dimension::Rel => "rel",
            Dimension::Wor => "wor",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn description(self) -> &'static str {
        match self {
            Dimension::Emo => "emotional well-being",
            Dimension::Sat => "satisfying life",
            Dimension::Vit => "vitality",
            Dimension::Res => "resilience and self-esteem",
            Dimension::Fun => "positive functioning",
            Dimension::Tru => "trust and belonging",
            Dimension::Rel => "relationships",
            Dimension::Wor => "quality of job",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dimension code {0:?}")]
pub struct UnknownDimension(pub String);

impl FromStr for Dimension {
    type Err = UnknownDimension;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.code() == s.trim())
            .ok_or_else(|| UnknownDimension(s.to_string()))
    }
}

/// The four categories every estimated distribution is defined over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Positive,
    Neutral,
    Negative,
    Offtopic,
}

impl Category {
    pub const COUNT: usize = 4;
    pub const ALL: [Category; 4] = [
        Category::Positive,
        Category::Neutral,
        Category::Negative,
        Category::Offtopic,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Positive => "positive",
            Category::Neutral => "neutral",
            Category::Negative => "negative",
            Category::Offtopic => "offtopic",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A coder's judgment on one dimension. `Unlabeled` records an explicit skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Neutral,
    Negative,
    Offtopic,
    Unlabeled,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Neutral => "neutral",
            Label::Negative => "negative",
            Label::Offtopic => "offtopic",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn category(self) -> Option<Category> {
        match self {
            Label::Positive => Some(Category::Positive),
            Label::Neutral => Some(Category::Neutral),
            Label::Negative => Some(Category::Negative),
            Label::Offtopic => Some(Category::Offtopic),
            Label::Unlabeled => None,
        }
    }
}

impl From<Category> for Label {
    fn from(c: Category) -> Self {
        match c {
            Category::Positive => Label::Positive,
            Category::Neutral => Label::Neutral,
            Category::Negative => Label::Negative,
            Category::Offtopic => Label::Offtopic,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(Label::Positive),
            "neutral" => Ok(Label::Neutral),
            "negative" => Ok(Label::Negative),
            "offtopic" | "off-topic" => Ok(Label::Offtopic),
            "unlabeled" => Ok(Label::Unlabeled),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

impl FromStr for Category {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Label>()?
            .category()
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}
