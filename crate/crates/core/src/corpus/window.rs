use crate::error::{Error, Result};

use super::sample::{Document, TimeSeriesSample};

/// The documents of one sample visible within prediction window `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowedView<'a> {
    pub sample_id: &'a str,
    pub window: f64,
    pub documents: &'a [Document],
}

impl WindowedView<'_> {
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Prefix of `sample`'s documents with `time ≤ t`. A sample shorter than the
/// window yields all of its documents.
pub fn slice_window(sample: &TimeSeriesSample, t: f64) -> Result<WindowedView<'_>> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("window must be > 0, got {t}")));
    }
    let end = sample.documents.partition_point(|d| d.time <= t);
    Ok(WindowedView {
        sample_id: &sample.id,
        window: t,
        documents: &sample.documents[..end],
    })
}
