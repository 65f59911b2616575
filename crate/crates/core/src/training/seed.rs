use sha2::{Digest, Sha256};

use crate::models::ModelParams;

/// Child seed for the stream named `label` under `base`: the first eight
/// bytes (little endian) of `sha256(base_le || label)`. Streams with
/// different labels never share state, so adding a run leaves the others
/// untouched.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
}

/// Hex digest of every parameter name, shape and value bit pattern.
pub fn params_digest(params: &ModelParams) -> String {
    let mut h = Sha256::new();
    for (name, t) in params.iter() {
        h.update(name.as_bytes());
        for &d in t.shape() {
            h.update((d as u64).to_le_bytes());
        }
        for v in t.data() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
