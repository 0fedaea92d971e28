use std::fmt;
use std::str::FromStr;

use credchain_core::{Address, Hash256};
use serde::{Deserialize, Serialize};

/// Wall-clock instant in whole seconds since the Unix epoch.
pub type UnixSeconds = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Admin,
    University,
    Student,
    Employer,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Admin, Role::University, Role::Student, Role::Employer];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Admin => "Admin",
            Role::University => "University",
            Role::Student => "Student",
            Role::Employer => "Employer",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            Role::Admin => "ADM",
            Role::University => "UNI",
            Role::Student => "STU",
            Role::Employer => "EMP",
        }
    }

    pub(crate) fn user_id(self, ordinal: usize) -> String {
        format!("{}-{ordinal:06}", self.id_prefix())
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

/// Account as seen by callers. Credentials never leave the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: String,
    pub role: Role,
    pub email: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linked_address: Option<Address>,
    #[serde(default)]
    pub disabled: bool,
    pub created_at: UnixSeconds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewUser {
    pub role: Role,
    pub email: String,
    pub password: String,
    pub name: String,
    pub country: Option<String>,
    pub linked_address: Option<Address>,
}

/// Identity established by a successful login.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub user_id: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub student_id: String,
    pub name: String,
    pub university_id: String,
    pub email: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocType {
    /// On-chain `doc_type_code`; codes start at 1 and are never reused.
    pub code: u16,
    pub name: String,
}

/// Chain status of a document's `store_hash` transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxRef {
    Pending,
    Submitted(Hash256),
}

impl TxRef {
    pub fn hash(&self) -> Option<Hash256> {
        match self {
            TxRef::Pending => None,
            TxRef::Submitted(h) => Some(*h),
        }
    }
}

impl fmt::Display for TxRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TxRef::Pending => f.write_str("pending"),
            TxRef::Submitted(h) => write!(f, "{h}"),
        }
    }
}

impl Serialize for TxRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TxRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        if text == "pending" {
            return Ok(TxRef::Pending);
        }
        text.parse().map(TxRef::Submitted).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub student_id: String,
    pub issuer_university_id: String,
    pub doc_type: String,
    pub file_digest: Hash256,
    pub tx_hash: TxRef,
    pub uploaded_at: UnixSeconds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareToken {
    pub token: String,
    pub doc_id: String,
    pub created_at: UnixSeconds,
    pub expires_at: UnixSeconds,
    #[serde(default)]
    pub revoked: bool,
}

impl ShareToken {
    pub fn url(&self) -> String {
        format!("/share/{}", self.token)
    }
}
