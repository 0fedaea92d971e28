use std::sync::Arc;

use parking_lot::RwLock;

use super::block::Block;
use super::ledger::{Ledger, MineError, SubmitError};
use super::receipt::TxLookup;
use super::state::WorldState;
use crate::primitives::{Address, Hash256};
use crate::tx::SignedTransaction;

/// Cloneable handle for concurrent use of one ledger.
///
/// Submissions and reads take the lock briefly. Mining seals the block under
/// a read lock and only takes the write lock to validate and append, so the
/// proof-of-work search never blocks readers.
#[derive(Debug, Clone)]
pub struct ChainHandle {
    inner: Arc<RwLock<Ledger>>,
    mining: Arc<parking_lot::Mutex<()>>,
}

impl ChainHandle {
    pub fn new(ledger: Ledger) -> Self {
        ChainHandle { inner: Arc::new(RwLock::new(ledger)), mining: Arc::default() }
    }

    pub fn submit(&self, tx: SignedTransaction) -> Result<Hash256, SubmitError> {
        self.inner.write().submit_transaction(tx)
    }

    pub fn read<T>(&self, f: impl FnOnce(&Ledger) -> T) -> T {
        f(&self.inner.read())
    }

    pub fn write<T>(&self, f: impl FnOnce(&mut Ledger) -> T) -> T {
        f(&mut self.inner.write())
    }

    pub fn snapshot(&self) -> Arc<WorldState> {
        self.inner.read().snapshot()
    }

    pub fn lookup(&self, tx_hash: &Hash256) -> TxLookup {
        self.inner.read().get_receipt(tx_hash)
    }

    /// Mines one block. Producers are serialized; if the tip moves while
    /// sealing (e.g. an imported block), the block is rebuilt.
    pub fn mine(&self, miner: Address) -> Result<Block, MineError> {
        let _producer = self.mining.lock();
        loop {
            let (block, tip) = {
                let ledger = self.inner.read();
                (ledger.produce_block(miner), ledger.tip().block_hash)
            };
            let mut ledger = self.inner.write();
            if ledger.tip().block_hash != tip {
                continue;
            }
            // Transactions submitted during sealing simply wait for the next block.
            let tally = ledger.validate_and_accept_with_tally(&block);
            return if tally.accepted {
                Ok(block)
            } else {
                Err(MineError::Rejected(tally.first_rejection))
            };
        }
    }
}
