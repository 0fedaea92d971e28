use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain::state::TxStatus;
use crate::primitives::{Address, Hash256};
use crate::units::{Gas, SimTime, WeiAmount};

/// The mined outcome of a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_hash: Hash256,
    pub block_number: u64,
    pub from: Address,
    pub gas_used: Gas,
    pub gas_price: WeiAmount,
    pub fee: WeiAmount,
    #[serde(serialize_with = "status_ser", deserialize_with = "status_de")]
    pub status: TxStatus,
    pub submitted_at: SimTime,
    pub confirmed_at: SimTime,
    pub confirmation_delay: SimTime,
}

fn status_ser<S: Serializer>(status: &TxStatus, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&status.label())
}

fn status_de<'de, D: Deserializer<'de>>(d: D) -> Result<TxStatus, D::Error> {
    let label = String::deserialize(d)?;
    TxStatus::parse_label(&label)
        .ok_or_else(|| serde::de::Error::custom(format!("unknown status `{label}`")))
}

pub const RECEIPT_CSV_HEADER: &str =
    "tx_hash,block_number,from,gas_used,gas_price_wei,fee_wei,submitted_at_s,confirmed_at_s,delay_s,status";

impl Receipt {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.tx_hash,
            self.block_number,
            self.from,
            self.gas_used,
            self.gas_price,
            self.fee,
            self.submitted_at,
            self.confirmed_at,
            self.confirmation_delay,
            self.status.label()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxLookup {
    Mined(Receipt),
    Pending,
    Unknown,
}
