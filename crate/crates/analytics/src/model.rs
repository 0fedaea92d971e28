use credchain_core::{compute_fee, Gas, Hash256, SimTime, WeiAmount};
use num_rational::BigRational;
use num_traits::Signed;

use crate::AnalyticsError;

/// Group label reserved for the whole-log row.
pub const ALL_GROUP: &str = "ALL";

/// One confirmed transaction. Construction enforces `fee = gas_used *
/// gas_price` and `confirmed_at >= submitted_at`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxLogEntry {
    tx_hash: Hash256,
    issuer_university_id: String,
    submitted_at: SimTime,
    confirmed_at: SimTime,
    gas_used: Gas,
    gas_price: WeiAmount,
    fee: WeiAmount,
}

impl TxLogEntry {
    pub fn new(
        tx_hash: Hash256,
        issuer_university_id: impl Into<String>,
        submitted_at: SimTime,
        confirmed_at: SimTime,
        gas_used: Gas,
        gas_price: WeiAmount,
        fee: WeiAmount,
    ) -> Result<TxLogEntry, AnalyticsError> {
        let issuer = issuer_university_id.into();
        if issuer.trim().is_empty() {
            return Err(AnalyticsError::InvalidEntry("missing issuer id".into()));
        }
        if issuer == ALL_GROUP {
            return Err(AnalyticsError::InvalidEntry(format!("issuer id `{ALL_GROUP}` is reserved")));
        }
        if confirmed_at < submitted_at {
            return Err(AnalyticsError::InvalidEntry(format!(
                "confirmed_at {confirmed_at} precedes submitted_at {submitted_at}"
            )));
        }
        match compute_fee(gas_used, gas_price) {
            Ok(expected) if expected == fee => {}
            _ => {
                return Err(AnalyticsError::InvalidEntry(format!(
                    "fee {fee} != gas_used {gas_used} * gas_price {gas_price}"
                )))
            }
        }
        Ok(TxLogEntry { tx_hash, issuer_university_id: issuer, submitted_at, confirmed_at, gas_used, gas_price, fee })
    }

    /// Builds an entry whose fee is derived from gas used and price.
    pub fn derived(
        tx_hash: Hash256,
        issuer_university_id: impl Into<String>,
        submitted_at: SimTime,
        confirmed_at: SimTime,
        gas_used: Gas,
        gas_price: WeiAmount,
    ) -> Result<TxLogEntry, AnalyticsError> {
        let fee = compute_fee(gas_used, gas_price).map_err(|_| AnalyticsError::Overflow)?;
        Self::new(tx_hash, issuer_university_id, submitted_at, confirmed_at, gas_used, gas_price, fee)
    }

    pub fn tx_hash(&self) -> Hash256 {
        self.tx_hash
    }

    pub fn issuer_university_id(&self) -> &str {
        &self.issuer_university_id
    }

    pub fn submitted_at(&self) -> SimTime {
        self.submitted_at
    }

    pub fn confirmed_at(&self) -> SimTime {
        self.confirmed_at
    }

    pub fn gas_used(&self) -> Gas {
        self.gas_used
    }

    pub fn gas_price(&self) -> WeiAmount {
        self.gas_price
    }

    pub fn fee(&self) -> WeiAmount {
        self.fee
    }

    pub fn delay(&self) -> SimTime {
        self.confirmed_at - self.submitted_at
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceQuote {
    effective_at: SimTime,
    usd_per_ether: BigRational,
}

impl PriceQuote {
    pub fn new(effective_at: SimTime, usd_per_ether: BigRational) -> Result<PriceQuote, AnalyticsError> {
        if !usd_per_ether.is_positive() {
            return Err(AnalyticsError::InvalidPrice(format!("price at {effective_at} must be positive")));
        }
        Ok(PriceQuote { effective_at, usd_per_ether })
    }

    pub fn effective_at(&self) -> SimTime {
        self.effective_at
    }

    pub fn usd_per_ether(&self) -> &BigRational {
        &self.usd_per_ether
    }
}

/// Step function over quotes: the applicable price at `t` is the latest
/// quote with `effective_at <= t`.
#[derive(Debug, Clone, Default)]
pub struct PriceTable(Vec<PriceQuote>);

impl PriceTable {
    pub fn new(mut quotes: Vec<PriceQuote>) -> Result<PriceTable, AnalyticsError> {
        quotes.sort_by_key(|q| q.effective_at);
        if let Some(w) = quotes.windows(2).find(|w| w[0].effective_at == w[1].effective_at) {
            return Err(AnalyticsError::InvalidPrice(format!("two quotes at {}", w[0].effective_at)));
        }
        Ok(PriceTable(quotes))
    }

    pub fn quotes(&self) -> &[PriceQuote] {
        &self.0
    }

    pub fn lookup(&self, at: SimTime) -> Option<&PriceQuote> {
        let idx = self.0.partition_point(|q| q.effective_at <= at);
        idx.checked_sub(1).map(|i| &self.0[i])
    }
}
