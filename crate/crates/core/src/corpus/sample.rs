use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tokenize::normalize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// A timestamped note or post.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    /// Days for clinical-style series, chunk index for chunked series.
    pub time: f64,
    pub text: String,
}

impl Document {
    pub fn new(time: f64, text: impl Into<String>) -> Self {
        Self {
            time,
            text: text.into(),
        }
    }
}

/// One labeled case: a chronologically ordered series of documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSeriesSample {
    pub id: String,
    pub label: usize,
    pub split: Split,
    pub documents: Vec<Document>,
}

impl TimeSeriesSample {
    /// Validates ordering and timestamps, then drops documents that are
    /// empty after normalization or exact duplicates of an earlier
    /// `(time, normalized text)` pair.
    pub fn new(id: impl Into<String>, label: usize, split: Split, documents: Vec<Document>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Validation("sample id must be non-empty".into()));
        }
        for (i, doc) in documents.iter().enumerate() {
            if !doc.time.is_finite() || doc.time < 0.0 {
                return Err(Error::Validation(format!(
                    "sample {id}: document {i} has invalid time {}",
                    doc.time
                )));
            }
            if i > 0 && doc.time < documents[i - 1].time {
                return Err(Error::Validation(format!(
                    "sample {id}: documents not sorted by time at index {i} ({} after {})",
                    doc.time,
                    documents[i - 1].time
                )));
            }
        }
        let mut seen = HashSet::new();
        let documents = documents
            .into_iter()
            .filter(|doc| {
                let norm = normalize(&doc.text);
                !norm.is_empty() && seen.insert((doc.time.to_bits(), norm))
            })
            .collect();
        Ok(Self {
            id,
            label,
            split,
            documents,
        })
    }

    pub fn last_time(&self) -> Option<f64> {
        self.documents.last().map(|d| d.time)
    }
}

/// An immutable collection of samples across the three splits.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Corpus {
    samples: Vec<TimeSeriesSample>,
}

impl Corpus {
    pub fn new(samples: Vec<TimeSeriesSample>) -> Result<Self> {
        let mut ids = HashSet::new();
        for s in &samples {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Validation(format!("duplicate sample id {}", s.id)));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[TimeSeriesSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &TimeSeriesSample> + '_ {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn split_counts(&self) -> SplitCounts {
        let mut c = SplitCounts::default();
        for s in &self.samples {
            match s.split {
                Split::Train => c.train += 1,
                Split::Validation => c.validation += 1,
                Split::Test => c.test += 1,
            }
        }
        c
    }

    /// `max label + 1`, at least 2.
    pub fn num_classes(&self) -> usize {
        self.samples.iter().map(|s| s.label + 1).max().unwrap_or(0).max(2)
    }

    /// Checks labels against a task's class count.
    pub fn check_labels(&self, classes: usize) -> Result<()> {
        match self.samples.iter().find(|s| s.label >= classes) {
            Some(s) => Err(Error::Validation(format!(
                "sample {} has label {} but the task has {classes} classes",
                s.id, s.label
            ))),
            None => Ok(()),
        }
    }

    /// Same validation/test data, with the train split replaced by the
    /// train samples whose ids are in `keep`, in corpus order.
    pub fn with_train_subset(&self, keep: &HashSet<&str>) -> Corpus {
        let samples = self
            .samples
            .iter()
            .filter(|s| s.split != Split::Train || keep.contains(s.id.as_str()))
            .cloned()
            .collect();
        Corpus { samples }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl fmt::Display for SplitCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "# train\t# validation\t# test\n{}\t{}\t{}",
            self.train, self.validation, self.test
        )
    }
}
