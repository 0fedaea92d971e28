//! Binary call payloads carried by transactions.
//!
//! Layout: one opcode byte followed by the arguments, each in the canonical
//! length-prefixed form of [`crate::encoding`].
//!
//! | opcode | call        | arguments                                   |
//! |--------|-------------|---------------------------------------------|
//! | `0x00` | deploy      | none                                        |
//! | `0x01` | add_uni     | university (20 bytes), name, country (UTF-8) |
//! | `0x02` | store_hash  | certificate hash (32 bytes), doc type (u16) |
//! | `0x03` | transfer    | amount in Wei (u128)                        |

use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::primitives::{Address, Hash256};
use crate::units::{Gas, WeiAmount};

pub const OP_DEPLOY: u8 = 0x00;
pub const OP_ADD_UNI: u8 = 0x01;
pub const OP_STORE_HASH: u8 = 0x02;
pub const OP_TRANSFER: u8 = 0x03;

pub const DEPLOY_GAS: Gas = 32_000;
pub const ADD_UNI_GAS: Gas = 32_000;
pub const STORE_HASH_GAS: Gas = 30_000;
pub const TRANSFER_GAS: Gas = 21_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallPayload {
    Deploy,
    AddUni { university: Address, name: String, country: String },
    StoreHash { cert_hash: Hash256, doc_type_code: u16 },
    Transfer { amount: WeiAmount },
}

impl CallPayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        match self {
            CallPayload::Deploy => {
                enc.raw(&[OP_DEPLOY]);
            }
            CallPayload::AddUni { university, name, country } => {
                enc.raw(&[OP_ADD_UNI])
                    .bytes(university.as_bytes())
                    .str(name)
                    .str(country);
            }
            CallPayload::StoreHash { cert_hash, doc_type_code } => {
                enc.raw(&[OP_STORE_HASH])
                    .bytes(cert_hash.as_bytes())
                    .u16(*doc_type_code);
            }
            CallPayload::Transfer { amount } => {
                enc.raw(&[OP_TRANSFER]).u128(amount.wei());
            }
        }
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<CallPayload, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let payload = match dec.byte()? {
            OP_DEPLOY => CallPayload::Deploy,
            OP_ADD_UNI => CallPayload::AddUni {
                university: Address::new(dec.fixed()?),
                name: dec.string()?,
                country: dec.string()?,
            },
            OP_STORE_HASH => CallPayload::StoreHash {
                cert_hash: Hash256::new(dec.fixed()?),
                doc_type_code: dec.u16()?,
            },
            OP_TRANSFER => CallPayload::Transfer { amount: WeiAmount::from_wei(dec.u128()?) },
            other => return Err(DecodeError::UnknownOpcode(other)),
        };
        dec.finish()?;
        Ok(payload)
    }

    /// Flat gas charged for the call.
    pub fn gas_cost(&self) -> Gas {
        match self {
            CallPayload::Deploy => DEPLOY_GAS,
            CallPayload::AddUni { .. } => ADD_UNI_GAS,
            CallPayload::StoreHash { .. } => STORE_HASH_GAS,
            CallPayload::Transfer { .. } => TRANSFER_GAS,
        }
    }

    /// Value moved out of the sender's balance besides the fee.
    pub fn value(&self) -> WeiAmount {
        match self {
            CallPayload::Transfer { amount } => *amount,
            _ => WeiAmount::ZERO,
        }
    }
}

/// Gas charged for raw payload bytes; undecodable payloads pay the transfer rate.
pub fn intrinsic_gas(payload: &[u8]) -> Gas {
    CallPayload::decode(payload).map_or(TRANSFER_GAS, |p| p.gas_cost())
}
