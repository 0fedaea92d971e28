//! The proof-of-work ledger.

mod block;
mod config;
pub mod export;
mod ledger;
mod mempool;
mod receipt;
mod shared;
mod state;

pub use block::{tx_root, Block};
pub use config::{
    ChainConfig, ConfigError, ADMIN_GRANT, DEFAULT_BLOCK_GAS_LIMIT, DEFAULT_BLOCK_REWARD,
    DEFAULT_DIFFICULTY, DEFAULT_NODE_COUNT, DEFAULT_TICK_PER_HASH, FAUCET_GRANT, MAX_DIFFICULTY,
};
pub use ledger::{BlockRejection, Ledger, MineError, NodeFault, ReplayError, SubmitError, Tally};
pub use receipt::{Receipt, TxLookup, RECEIPT_CSV_HEADER};
pub use shared::ChainHandle;
pub use state::{AccountState, TxStatus, WorldState};
