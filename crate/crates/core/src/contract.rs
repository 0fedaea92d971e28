//! The achievement registry contract.
//!
//! A plain state machine driven by the ledger's block executor. It has three
//! entry points: `add_uni` (owner only), `store_hash` (registered universities
//! only, write-once per hash) and the read-only `get_hash` view.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::encoding::Encoder;
use crate::primitives::{sha256, Address, Hash256};
use crate::units::SimTime;

/// Why a call reverted. The numeric code is what receipts and exports carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevertReason {
    NotOwner,
    UniversityAlreadyRegistered,
    NotRegisteredUniversity,
    DuplicateHash,
    UnknownContract,
    OutOfGas,
    MalformedPayload,
    InsufficientFunds,
    InvalidArgument,
}

impl RevertReason {
    pub fn code(self) -> u8 {
        match self {
            RevertReason::NotOwner => 1,
            RevertReason::UniversityAlreadyRegistered => 2,
            RevertReason::NotRegisteredUniversity => 3,
            RevertReason::DuplicateHash => 4,
            RevertReason::UnknownContract => 5,
            RevertReason::OutOfGas => 6,
            RevertReason::MalformedPayload => 7,
            RevertReason::InsufficientFunds => 8,
            RevertReason::InvalidArgument => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RevertReason::NotOwner => "NotOwner",
            RevertReason::UniversityAlreadyRegistered => "UniversityAlreadyRegistered",
            RevertReason::NotRegisteredUniversity => "NotRegisteredUniversity",
            RevertReason::DuplicateHash => "DuplicateHash",
            RevertReason::UnknownContract => "UnknownContract",
            RevertReason::OutOfGas => "OutOfGas",
            RevertReason::MalformedPayload => "MalformedPayload",
            RevertReason::InsufficientFunds => "InsufficientFunds",
            RevertReason::InvalidArgument => "InvalidArgument",
        }
    }

    pub fn from_name(name: &str) -> Option<RevertReason> {
        use RevertReason::*;
        [
            NotOwner,
            UniversityAlreadyRegistered,
            NotRegisteredUniversity,
            DuplicateHash,
            UnknownContract,
            OutOfGas,
            MalformedPayload,
            InsufficientFunds,
            InvalidArgument,
        ]
        .into_iter()
        .find(|r| r.name() == name)
    }
}

impl fmt::Display for RevertReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversityMeta {
    pub name: String,
    pub country: String,
    pub registered_at: u64,
}

/// What the contract keeps per certificate hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub issuer: Address,
    pub stored_at: u64,
    pub doc_type_code: u16,
}

/// Result of a `get_hash` view. `block_timestamp` is joined from the header
/// of block `stored_at`, keeping contract state independent of the
/// proof-of-work search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub issuer: Address,
    pub stored_at: u64,
    pub block_timestamp: SimTime,
    pub doc_type_code: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractState {
    owner: Address,
    universities: BTreeMap<Address, UniversityMeta>,
    records: BTreeMap<Hash256, StoredRecord>,
}

/// Deployment address: first 20 bytes of SHA-256(owner ‖ nonce).
pub fn contract_address(owner: Address, nonce: u64) -> Address {
    let mut buf = Vec::with_capacity(28);
    buf.extend_from_slice(owner.as_bytes());
    buf.extend_from_slice(&nonce.to_be_bytes());
    let digest = sha256(&buf);
    let mut out = [0u8; 20];
    out.copy_from_slice(&digest.as_bytes()[..20]);
    Address::new(out)
}

impl ContractState {
    pub fn deploy(owner: Address) -> Self {
        ContractState { owner, universities: BTreeMap::new(), records: BTreeMap::new() }
    }

    pub fn owner(&self) -> Address {
        self.owner
    }

    pub fn universities(&self) -> &BTreeMap<Address, UniversityMeta> {
        &self.universities
    }

    pub fn records(&self) -> &BTreeMap<Hash256, StoredRecord> {
        &self.records
    }

    pub fn is_university(&self, addr: &Address) -> bool {
        self.universities.contains_key(addr)
    }

    pub fn add_uni(
        &mut self,
        caller: Address,
        uni: Address,
        meta: UniversityMeta,
    ) -> Result<(), RevertReason> {
        if caller != self.owner {
            return Err(RevertReason::NotOwner);
        }
        if meta.name.trim().is_empty() || uni.is_zero() {
            return Err(RevertReason::InvalidArgument);
        }
        if self.universities.contains_key(&uni) {
            return Err(RevertReason::UniversityAlreadyRegistered);
        }
        self.universities.insert(uni, meta);
        Ok(())
    }

    pub fn store_hash(
        &mut self,
        caller: Address,
        cert_hash: Hash256,
        doc_type_code: u16,
        block_number: u64,
    ) -> Result<(), RevertReason> {
        if !self.universities.contains_key(&caller) {
            return Err(RevertReason::NotRegisteredUniversity);
        }
        if self.records.contains_key(&cert_hash) {
            return Err(RevertReason::DuplicateHash);
        }
        self.records.insert(
            cert_hash,
            StoredRecord { issuer: caller, stored_at: block_number, doc_type_code },
        );
        Ok(())
    }

    pub fn get_hash(&self, cert_hash: &Hash256) -> Option<&StoredRecord> {
        self.records.get(cert_hash)
    }

    pub(crate) fn encode_into(&self, enc: &mut Encoder) {
        enc.bytes(self.owner.as_bytes());
        enc.u64(self.universities.len() as u64);
        for (addr, meta) in &self.universities {
            enc.bytes(addr.as_bytes())
                .str(&meta.name)
                .str(&meta.country)
                .u64(meta.registered_at);
        }
        enc.u64(self.records.len() as u64);
        for (hash, rec) in &self.records {
            enc.bytes(hash.as_bytes())
                .bytes(rec.issuer.as_bytes())
                .u64(rec.stored_at)
                .u16(rec.doc_type_code);
        }
    }
}
