//! Confirmation-delay and fee aggregation over transaction logs, with exact
//! Wei and rational USD arithmetic. Display values round half-even: Ether to
//! 8 decimals, USD to 6, seconds to 3.

mod decimal;
mod input;
mod model;
mod report;

pub use decimal::{format_mmss, parse_decimal, round_half_even};
pub use input::{parse_prices, parse_txlog, txlog_from_receipts, write_txlog, PRICE_COLUMNS, TXLOG_COLUMNS};
pub use model::{PriceQuote, PriceTable, TxLogEntry, ALL_GROUP};
pub use num_rational::BigRational;
pub use report::{
    aggregate, emit_report, group_by_university, summarize, AggregateReport, GroupSummary, ReportFormat,
    ReportRow, ETH_PLACES, REPORT_CSV_COLUMNS, SECONDS_PLACES, USD_PLACES,
};

use credchain_core::SimTime;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid entry: {0}")]
    InvalidEntry(String),
    #[error("invalid price: {0}")]
    InvalidPrice(String),
    #[error("no price quote at or before {at}")]
    NoApplicablePrice { at: SimTime },
    #[error("unknown report format `{0}` (expected csv or json)")]
    UnknownFormat(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for AnalyticsError {
    fn from(e: csv::Error) -> Self {
        AnalyticsError::Io(std::io::Error::other(e))
    }
}
