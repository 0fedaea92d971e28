use serde::{Deserialize, Serialize};

use crate::encoding::Encoder;
use crate::primitives::{sha256, Address, Hash256};
use crate::units::{Gas, SimTime, WeiAmount};

/// Transaction fields covered by the signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsignedTransaction {
    pub nonce: u64,
    pub from: Address,
    pub public_key: [u8; 32],
    pub to: Address,
    pub payload: Vec<u8>,
    pub gas_limit: Gas,
    pub gas_price: WeiAmount,
    pub submitted_at: SimTime,
}

impl UnsignedTransaction {
    /// Canonical encoding of the signed fields, in declaration order.
    pub fn signing_bytes(&self) -> Vec<u8> {
        Encoder::new()
            .u64(self.nonce)
            .bytes(self.from.as_bytes())
            .bytes(&self.public_key)
            .bytes(self.to.as_bytes())
            .bytes(&self.payload)
            .u64(self.gas_limit)
            .u128(self.gas_price.wei())
            .u64(self.submitted_at.as_millis())
            .finish()
    }

    pub fn into_signed(self, signature: Vec<u8>) -> SignedTransaction {
        SignedTransaction {
            nonce: self.nonce,
            from: self.from,
            public_key: self.public_key,
            to: self.to,
            payload: self.payload,
            gas_limit: self.gas_limit,
            gas_price: self.gas_price,
            submitted_at: self.submitted_at,
            signature,
        }
    }
}

/// A contract call or transfer with its detached Ed25519 signature.
///
/// The sender's public key travels with the transaction since addresses are
/// one-way digests of keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTransaction {
    pub nonce: u64,
    pub from: Address,
    #[serde(with = "hex_array")]
    pub public_key: [u8; 32],
    pub to: Address,
    #[serde(with = "hex_vec")]
    pub payload: Vec<u8>,
    pub gas_limit: Gas,
    pub gas_price: WeiAmount,
    pub submitted_at: SimTime,
    #[serde(with = "hex_vec")]
    pub signature: Vec<u8>,
}

impl SignedTransaction {
    pub fn unsigned(&self) -> UnsignedTransaction {
        UnsignedTransaction {
            nonce: self.nonce,
            from: self.from,
            public_key: self.public_key,
            to: self.to,
            payload: self.payload.clone(),
            gas_limit: self.gas_limit,
            gas_price: self.gas_price,
            submitted_at: self.submitted_at,
        }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = self.unsigned().signing_bytes();
        out.extend(Encoder::new().bytes(&self.signature).finish());
        out
    }

    /// SHA-256 of the full canonical encoding, signature included.
    pub fn hash(&self) -> Hash256 {
        sha256(&self.canonical_bytes())
    }

    /// Worst-case fee: every unit of the gas limit at the offered price.
    pub fn max_fee(&self) -> Option<WeiAmount> {
        self.gas_price.checked_mul_gas(self.gas_limit)
    }
}

pub(crate) mod hex_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}
