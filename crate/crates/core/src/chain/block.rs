use serde::{Deserialize, Serialize};

use crate::encoding::Encoder;
use crate::primitives::{sha256, Address, Hash256};
use crate::tx::SignedTransaction;
use crate::units::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    pub parent_hash: Hash256,
    pub timestamp: SimTime,
    pub difficulty: u32,
    pub pow_nonce: u64,
    pub miner: Address,
    pub transactions: Vec<SignedTransaction>,
    pub state_root: Hash256,
    pub block_hash: Hash256,
}

/// Commitment to the ordered transaction list.
pub fn tx_root(txs: &[SignedTransaction]) -> Hash256 {
    let mut enc = Encoder::new();
    enc.u64(txs.len() as u64);
    for tx in txs {
        enc.bytes(tx.hash().as_bytes());
    }
    sha256(&enc.finish())
}

pub(crate) struct HeaderFields {
    pub number: u64,
    pub parent_hash: Hash256,
    pub difficulty: u32,
    pub miner: Address,
    pub tx_root: Hash256,
    pub state_root: Hash256,
}

impl HeaderFields {
    pub fn hash(&self, timestamp: SimTime, pow_nonce: u64) -> Hash256 {
        let bytes = Encoder::new()
            .u64(self.number)
            .bytes(self.parent_hash.as_bytes())
            .u64(timestamp.as_millis())
            .u32(self.difficulty)
            .u64(pow_nonce)
            .bytes(self.miner.as_bytes())
            .bytes(self.tx_root.as_bytes())
            .bytes(self.state_root.as_bytes())
            .finish();
        sha256(&bytes)
    }
}

impl Block {
    pub(crate) fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            number: self.number,
            parent_hash: self.parent_hash,
            difficulty: self.difficulty,
            miner: self.miner,
            tx_root: tx_root(&self.transactions),
            state_root: self.state_root,
        }
    }

    /// Hash of the header as currently populated (ignores `block_hash`).
    pub fn compute_hash(&self) -> Hash256 {
        self.header_fields().hash(self.timestamp, self.pow_nonce)
    }

    pub fn meets_difficulty(&self) -> bool {
        self.block_hash.leading_zero_bits() >= self.difficulty
    }
}

/// Searches `pow_nonce` upward from 0. Attempt `n` (0-based) stamps the block
/// `start + (n + 1) * tick`, so the simulated clock advances with the work.
pub(crate) fn seal(
    header: &HeaderFields,
    start: SimTime,
    tick: SimTime,
    stamp_with_attempts: bool,
) -> (u64, SimTime, Hash256) {
    let mut nonce: u64 = 0;
    loop {
        let timestamp = if stamp_with_attempts {
            pow_timestamp(start, tick, nonce).expect("simulated clock overflow")
        } else {
            start
        };
        let hash = header.hash(timestamp, nonce);
        if hash.leading_zero_bits() >= header.difficulty {
            return (nonce, timestamp, hash);
        }
        nonce += 1;
    }
}

pub(crate) fn pow_timestamp(parent: SimTime, tick: SimTime, pow_nonce: u64) -> Option<SimTime> {
    pow_nonce
        .checked_add(1)
        .and_then(|attempts| tick.checked_mul(attempts))
        .and_then(|elapsed| parent.checked_add(elapsed))
}
