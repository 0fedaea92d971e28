//! Off-chain persistence for private data: accounts, student profiles,
//! document metadata and files, and share tokens. Only file digests and
//! document-type codes ever reach the chain.

mod env;
mod image;
mod model;
mod notifier;
mod password;
mod store;

pub use env::{Clock, Entropy, FixedClock, OsEntropy, SeededEntropy, SystemClock};
pub use image::write_atomic;
pub use model::{
    DocType, DocumentRecord, NewUser, Principal, Role, ShareToken, StudentProfile, TxRef,
    UnixSeconds, UserAccount,
};
pub use notifier::{MemoryNotifier, Notification, Notifier, OutboxNotifier};
pub use password::{MIN_PASSWORD_LEN, SALT_LEN};
pub use store::{NewStudent, Store, StoreOptions, DEFAULT_SHARE_TTL_SECS};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("email already registered for this role")]
    DuplicateEmail,
    #[error("password must be at least {MIN_PASSWORD_LEN} characters")]
    WeakPassword,
    #[error("unknown user")]
    UnknownUser,
    #[error("unknown student")]
    UnknownStudent,
    #[error("unknown university")]
    UnknownUniversity,
    #[error("unknown document")]
    UnknownDocument,
    #[error("document type is not in the catalog; add it first")]
    AddDocumentTypeFirst,
    #[error("document belongs to another student")]
    NotDocumentOwner,
    #[error("unknown share token")]
    UnknownToken,
    #[error("share token expired")]
    Expired,
    #[error("share token revoked")]
    Revoked,
    #[error("transaction hash already set for this document")]
    TxHashAlreadySet,
    #[error("{0} accounts are not supported")]
    UnsupportedRole(Role),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
