//! Line-delimited JSON corpus files.
//!
//! One sample per line:
//!
//! ```text
//! {"id":"s00001","label":1,"split":"train","documents":[{"time":0.25,"text":"..."}]}
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::sample::{Corpus, TimeSeriesSample};

pub fn parse_corpus(reader: impl Read) -> Result<Corpus> {
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: TimeSeriesSample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let sample = TimeSeriesSample::new(raw.id, raw.label, raw.split, raw.documents)
            .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::Corpus("corpus file contains no samples".into()));
    }
    Corpus::new(samples)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    parse_corpus(fs::File::open(path)?)
}

pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> Result<()> {
    for s in corpus.samples() {
        let line = serde_json::to_string(s).map_err(|e| Error::Corpus(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial corpus behind.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("partial");
    let result = (|| {
        let mut w = std::io::BufWriter::new(fs::File::create(&tmp)?);
        write_corpus(corpus, &mut w)?;
        w.flush()?;
        Ok::<_, Error>(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}
