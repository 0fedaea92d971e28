//! Key management, address derivation and transaction signing.
//!
//! Keys are Ed25519 keypairs derived from a 32-byte seed. An address is the
//! last 20 bytes of SHA-256 over the public key.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::Address;
use crate::tx::{SignedTransaction, UnsignedTransaction};
use crate::units::{Gas, SimTime, WeiAmount};

pub const DEFAULT_GAS_LIMIT: Gas = 40_000;
pub const DEFAULT_GAS_PRICE: WeiAmount = WeiAmount::from_gwei(100);

const PLAINTEXT_WARNING: &str =
    "UNENCRYPTED KEY MATERIAL: this file holds a signing seed in plaintext";

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("seed must be exactly 32 bytes, got {0}")]
    BadSeedLength(usize),
    #[error("wallet {wallet} cannot sign for {requested}")]
    AddressMismatch { wallet: Address, requested: Address },
    #[error("wallet file: {0}")]
    Io(#[from] std::io::Error),
    #[error("wallet file is malformed: {0}")]
    Format(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Keypair {
    secret: [u8; 32],
    public: [u8; 32],
}

impl Keypair {
    pub fn public(&self) -> &[u8; 32] {
        &self.public
    }

    pub fn address(&self) -> Address {
        Address::from_public_key(&self.public)
    }

    fn signing_key(&self) -> SigningKey {
        SigningKey::from_bytes(&self.secret)
    }
}

impl fmt::Debug for Keypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Keypair")
            .field("public", &hex::encode(self.public))
            .finish_non_exhaustive()
    }
}

pub fn generate_keypair(seed: &[u8]) -> Result<Keypair, WalletError> {
    let secret: [u8; 32] = seed
        .try_into()
        .map_err(|_| WalletError::BadSeedLength(seed.len()))?;
    let public = SigningKey::from_bytes(&secret).verifying_key().to_bytes();
    Ok(Keypair { secret, public })
}

/// True iff `tx.signature` is a valid signature of the signed fields under
/// `public_key`. Malformed keys or signatures yield `false`.
pub fn verify_signature(tx: &SignedTransaction, public_key: &[u8]) -> bool {
    let Ok(key_bytes) = <[u8; 32]>::try_from(public_key) else {
        return false;
    };
    let Ok(key) = VerifyingKey::from_bytes(&key_bytes) else {
        return false;
    };
    let Ok(sig) = Signature::from_slice(&tx.signature) else {
        return false;
    };
    key.verify(&tx.unsigned().signing_bytes(), &sig).is_ok()
}

/// Fields a caller supplies; the wallet fills in nonce, key and defaults.
#[derive(Debug, Clone)]
pub struct TxRequest {
    pub from: Address,
    pub to: Address,
    pub payload: Vec<u8>,
    pub gas_limit: Option<Gas>,
    pub gas_price: Option<WeiAmount>,
    pub submitted_at: SimTime,
}

#[derive(Debug, Clone)]
pub struct WalletEntry {
    pub label: String,
    keypair: Keypair,
    address: Address,
    next_nonce: u64,
}

impl WalletEntry {
    pub fn new(label: impl Into<String>, keypair: Keypair) -> Self {
        let address = keypair.address();
        WalletEntry { label: label.into(), keypair, address, next_nonce: 0 }
    }

    pub fn from_seed(label: impl Into<String>, seed: &[u8]) -> Result<Self, WalletError> {
        Ok(Self::new(label, generate_keypair(seed)?))
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn keypair(&self) -> &Keypair {
        &self.keypair
    }

    pub fn next_nonce(&self) -> u64 {
        self.next_nonce
    }

    /// Aligns the counter with the ledger's view of the next usable nonce.
    pub fn sync_nonce(&mut self, pending_nonce: u64) {
        self.next_nonce = pending_nonce;
    }

    pub fn sign_transaction(&mut self, req: TxRequest) -> Result<SignedTransaction, WalletError> {
        if req.from != self.address {
            return Err(WalletError::AddressMismatch { wallet: self.address, requested: req.from });
        }
        let unsigned = UnsignedTransaction {
            nonce: self.next_nonce,
            from: self.address,
            public_key: self.keypair.public,
            to: req.to,
            payload: req.payload,
            gas_limit: req.gas_limit.unwrap_or(DEFAULT_GAS_LIMIT),
            gas_price: req.gas_price.unwrap_or(DEFAULT_GAS_PRICE),
            submitted_at: req.submitted_at,
        };
        let signature = self.keypair.signing_key().sign(&unsigned.signing_bytes());
        self.next_nonce += 1;
        Ok(unsigned.into_signed(signature.to_bytes().to_vec()))
    }

    /// Writes the wallet file, readable only by the owner on unix.
    pub fn save(&self, path: &Path) -> Result<(), WalletError> {
        let file = WalletFile {
            warning: PLAINTEXT_WARNING.to_owned(),
            label: self.label.clone(),
            address: self.address,
            seed: hex::encode(self.keypair.secret),
            next_nonce: self.next_nonce,
        };
        let json = serde_json::to_vec_pretty(&file).map_err(|e| WalletError::Format(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        {
            let mut opts = fs::OpenOptions::new();
            opts.write(true).create(true).truncate(true);
            #[cfg(unix)]
            {
                use std::os::unix::fs::OpenOptionsExt;
                opts.mode(0o600);
            }
            let mut f = opts.open(&tmp)?;
            f.write_all(&json)?;
            f.sync_all()?;
        }
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, WalletError> {
        let bytes = fs::read(path)?;
        let file: WalletFile =
            serde_json::from_slice(&bytes).map_err(|e| WalletError::Format(e.to_string()))?;
        let seed = hex::decode(&file.seed).map_err(|e| WalletError::Format(e.to_string()))?;
        let mut entry = WalletEntry::from_seed(file.label, &seed)?;
        if entry.address != file.address {
            return Err(WalletError::Format(format!(
                "stored address {} does not match key ({})",
                file.address, entry.address
            )));
        }
        entry.next_nonce = file.next_nonce;
        Ok(entry)
    }
}

#[derive(Serialize, Deserialize)]
struct WalletFile {
    warning: String,
    label: String,
    address: Address,
    seed: String,
    next_nonce: u64,
}
