use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};

use crate::primitives::{Address, Hash256};
use crate::tx::SignedTransaction;
use crate::units::{SimTime, WeiAmount};

/// Total order: gas price descending, then submission time, then hash.
type PriorityKey = (Reverse<WeiAmount>, SimTime, Hash256);

#[derive(Debug, Clone, Copy, Default)]
struct SenderPending {
    count: u64,
    reserved: WeiAmount,
}

#[derive(Debug, Default, Clone)]
pub(crate) struct Mempool {
    ordered: BTreeMap<PriorityKey, SignedTransaction>,
    by_hash: HashMap<Hash256, PriorityKey>,
    senders: HashMap<Address, SenderPending>,
}

impl Mempool {
    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn contains(&self, hash: &Hash256) -> bool {
        self.by_hash.contains_key(hash)
    }

    pub fn pending_count(&self, sender: &Address) -> u64 {
        self.senders.get(sender).map_or(0, |s| s.count)
    }

    /// Worst-case spend already promised by the sender's pending transactions.
    pub fn reserved(&self, sender: &Address) -> WeiAmount {
        self.senders.get(sender).map_or(WeiAmount::ZERO, |s| s.reserved)
    }

    /// `cost` is the worst-case spend (max fee plus transferred value).
    pub fn insert(&mut self, hash: Hash256, tx: SignedTransaction, cost: WeiAmount) {
        let key = (Reverse(tx.gas_price), tx.submitted_at, hash);
        let entry = self.senders.entry(tx.from).or_default();
        entry.count += 1;
        entry.reserved = entry.reserved.checked_add(cost).unwrap_or(WeiAmount::from_wei(u128::MAX));
        self.by_hash.insert(hash, key);
        self.ordered.insert(key, tx);
    }

    pub fn remove(&mut self, hash: &Hash256, cost: WeiAmount) -> Option<SignedTransaction> {
        let key = self.by_hash.remove(hash)?;
        let tx = self.ordered.remove(&key)?;
        if let Some(entry) = self.senders.get_mut(&tx.from) {
            entry.count -= 1;
            entry.reserved = entry.reserved.checked_sub(cost).unwrap_or(WeiAmount::ZERO);
            if entry.count == 0 {
                self.senders.remove(&tx.from);
            }
        }
        Some(tx)
    }

    /// Pending transactions in priority order.
    pub fn iter(&self) -> impl Iterator<Item = (&Hash256, &SignedTransaction)> {
        self.ordered.iter().map(|((_, _, h), tx)| (h, tx))
    }
}
