//! Time-series text data: samples, prediction windows, tokenization,
//! vocabularies, corpus files, and the synthetic generator.

mod io;
mod sample;
mod synth;
mod tokenize;
mod vocab;
mod window;

pub use io::{load_corpus, parse_corpus, save_corpus, write_corpus};
pub use sample::{Corpus, Document, Split, SplitCounts, TimeSeriesSample};
pub use synth::{generate_synthetic, signal_token, SynthSpec};
pub use tokenize::{normalize, tokenize};
pub use vocab::{build_vocab, encode_view, EncodeLimits, EncodedView, Vocabulary, PAD, UNK};
pub use window::{slice_window, WindowedView};
