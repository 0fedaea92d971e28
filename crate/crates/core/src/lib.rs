//! Core primitives for the credential chain: amounts and identifiers, the
//! canonical byte encoding, wallets, the achievement registry contract and
//! the proof-of-work ledger that executes it.

pub mod chain;
pub mod contract;
pub mod encoding;
pub mod payload;
pub mod primitives;
pub mod tx;
pub mod units;
pub mod wallet;

pub use chain::{
    Block, ChainConfig, ChainHandle, Ledger, Receipt, SubmitError, TxLookup, TxStatus,
};
pub use contract::{CertificateRecord, ContractState, RevertReason, UniversityMeta};
pub use payload::CallPayload;
pub use primitives::{sha256, Address, Hash256, ParseHexError};
pub use tx::{SignedTransaction, UnsignedTransaction};
pub use units::{compute_fee, FeeOverflow, Gas, SimTime, WeiAmount};
pub use wallet::{generate_keypair, verify_signature, Keypair, TxRequest, WalletEntry, WalletError};
