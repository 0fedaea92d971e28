//! Salted SHA-256 password digests.
//!
//! TODO: swap for a memory-hard KDF (argon2) once stored images carry a
//! digest-scheme tag.

use credchain_core::{sha256, Hash256};
use serde::{Deserialize, Serialize};

pub const SALT_LEN: usize = 16;
pub const MIN_PASSWORD_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct PasswordDigest {
    #[serde(with = "hex::serde")]
    pub salt: [u8; SALT_LEN],
    pub digest: Hash256,
}

impl PasswordDigest {
    pub fn new(salt: [u8; SALT_LEN], password: &str) -> Self {
        PasswordDigest { salt, digest: digest(&salt, password) }
    }

    pub fn matches(&self, password: &str) -> bool {
        constant_time_eq(digest(&self.salt, password).as_bytes(), self.digest.as_bytes())
    }
}

fn digest(salt: &[u8; SALT_LEN], password: &str) -> Hash256 {
    let mut buf = Vec::with_capacity(SALT_LEN + password.len());
    buf.extend_from_slice(salt);
    buf.extend_from_slice(password.as_bytes());
    sha256(&buf)
}

fn constant_time_eq(a: &[u8; 32], b: &[u8; 32]) -> bool {
    a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Burns the same work as a real check so unknown emails are not
/// distinguishable by timing class.
pub(crate) fn dummy_check(password: &str) -> bool {
    let probe = PasswordDigest { salt: [0; SALT_LEN], digest: Hash256::ZERO };
    probe.matches(password) && false
}
