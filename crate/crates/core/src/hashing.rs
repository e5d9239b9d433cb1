//! Content hashes used to address reports and manifests.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Hash of the compact JSON form of `value`.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    sha256_hex(serde_json::to_vec(value).expect("value serialises"))
}
