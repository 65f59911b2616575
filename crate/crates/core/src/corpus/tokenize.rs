/// Lowercases, splits on whitespace, strips leading/trailing punctuation and
/// drops tokens that end up empty. Internal punctuation is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Tokens joined by single spaces; empty for texts with no tokens.
pub fn normalize(text: &str) -> String {
    tokenize(text).join(" ")
}
