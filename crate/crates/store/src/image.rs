//! On-disk store image: a JSON document followed by a checksum trailer
//! `\n#sha256=<hex of the JSON bytes>\n`. Images are replaced whole via
//! write-temp-then-rename, so a crash leaves either the old or the new image.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use credchain_core::sha256;
use serde::{Deserialize, Serialize};

use crate::model::{DocType, DocumentRecord, Role, ShareToken, StudentProfile, UnixSeconds};
use crate::password::PasswordDigest;
use crate::StoreError;

const TRAILER: &str = "\n#sha256=";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct StoredUser {
    pub user_id: String,
    pub role: Role,
    pub email: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linked_address: Option<credchain_core::Address>,
    #[serde(default)]
    pub disabled: bool,
    pub created_at: UnixSeconds,
    pub password: PasswordDigest,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct StoreImage {
    pub users: Vec<StoredUser>,
    pub students: Vec<StudentProfile>,
    pub documents: Vec<DocumentRecord>,
    pub doc_types: Vec<DocType>,
    pub share_tokens: Vec<ShareToken>,
    /// Position of the seeded entropy stream, as a decimal string.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_position: Option<String>,
}

pub(crate) fn encode(image: &StoreImage) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(image).expect("store image serializes");
    let checksum = sha256(&out).to_hex();
    out.extend_from_slice(TRAILER.as_bytes());
    out.extend_from_slice(checksum.as_bytes());
    out.push(b'\n');
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Result<StoreImage, StoreError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt("not UTF-8"))?;
    let (body, trailer) = text.rsplit_once(TRAILER).ok_or_else(|| corrupt("missing checksum"))?;
    let expected = trailer.strip_suffix('\n').ok_or_else(|| corrupt("truncated checksum"))?;
    if sha256(body.as_bytes()).to_hex() != expected {
        return Err(corrupt("checksum mismatch"));
    }
    serde_json::from_str(body).map_err(|e| corrupt(&e.to_string()))
}

fn corrupt(reason: &str) -> StoreError {
    StoreError::CorruptStore(reason.to_owned())
}

/// Writes `bytes` to `path` atomically with respect to crashes.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("image");
    let tmp = dir.join(format!(".{file_name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Ok(d) = fs::File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

pub(crate) fn load(path: &Path) -> Result<Option<StoreImage>, StoreError> {
    match fs::read(path) {
        Ok(bytes) => decode(&bytes).map(Some),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_image_round_trip() {
        let bytes = encode(&StoreImage::default());
        assert_eq!(decode(&bytes).unwrap(), StoreImage::default());
    }

    #[test]
    fn every_truncation_is_rejected() {
        let bytes = encode(&StoreImage::default());
        for cut in 0..bytes.len() {
            assert!(
                matches!(decode(&bytes[..cut]), Err(StoreError::CorruptStore(_))),
                "prefix of {cut} bytes accepted"
            );
        }
    }

    #[test]
    fn body_edit_is_rejected() {
        let mut bytes = encode(&StoreImage::default());
        let pos = bytes.iter().position(|&b| b == b'[').unwrap();
        bytes[pos] = b'{';
        assert!(matches!(decode(&bytes), Err(StoreError::CorruptStore(_))));
    }
}
