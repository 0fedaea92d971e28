//! CSV readers for transaction logs, price feeds and ledger receipt exports.
//! Errors carry the 1-based line number of the offending row.

use std::io::{Read, Write};

use credchain_core::{Address, SimTime, WeiAmount};

use crate::decimal::parse_decimal;
use crate::model::{PriceQuote, PriceTable, TxLogEntry};
use crate::AnalyticsError;

pub const TXLOG_COLUMNS: [&str; 7] = [
    "tx_hash",
    "issuer_university_id",
    "submitted_at_s",
    "confirmed_at_s",
    "gas_used",
    "gas_price_wei",
    "fee_wei",
];

pub const PRICE_COLUMNS: [&str; 2] = ["effective_at", "usd_per_ether"];

const RECEIPT_COLUMNS: [&str; 10] = [
    "tx_hash",
    "block_number",
    "from",
    "gas_used",
    "gas_price_wei",
    "fee_wei",
    "submitted_at_s",
    "confirmed_at_s",
    "delay_s",
    "status",
];

struct Rows<R> {
    reader: csv::Reader<R>,
}

impl<R: Read> Rows<R> {
    fn open(input: R, expected: &[&str]) -> Result<Self, AnalyticsError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
        if !headers.iter().eq(expected.iter().copied()) {
            return Err(parse_err(1, format!("expected header `{}`", expected.join(","))));
        }
        Ok(Rows { reader })
    }

    fn for_each(
        mut self,
        mut f: impl FnMut(u64, &csv::StringRecord) -> Result<(), String>,
    ) -> Result<(), AnalyticsError> {
        let mut record = csv::StringRecord::new();
        loop {
            let line = self.reader.position().line();
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map_or(line, |p| p.line());
                    if record.iter().all(str::is_empty) {
                        continue;
                    }
                    f(line, &record).map_err(|m| parse_err(line, m))?;
                }
                Err(e) => {
                    let line = e.position().map_or(line, |p| p.line());
                    return Err(parse_err(line, e.to_string()));
                }
            }
        }
    }
}

fn parse_err(line: u64, message: String) -> AnalyticsError {
    AnalyticsError::Parse { line, message }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T, String> {
    let raw = rec.get(idx).ok_or_else(|| format!("missing column `{name}`"))?;
    raw.parse().map_err(|_| format!("invalid {name} `{raw}`"))
}

pub fn parse_txlog(input: impl Read) -> Result<Vec<TxLogEntry>, AnalyticsError> {
    let mut entries = Vec::new();
    Rows::open(input, &TXLOG_COLUMNS)?.for_each(|_, rec| {
        let entry = TxLogEntry::new(
            field(rec, 0, "tx_hash")?,
            rec.get(1).unwrap_or_default(),
            field(rec, 2, "submitted_at_s")?,
            field(rec, 3, "confirmed_at_s")?,
            field(rec, 4, "gas_used")?,
            field(rec, 5, "gas_price_wei")?,
            field(rec, 6, "fee_wei")?,
        )
        .map_err(|e| e.to_string())?;
        entries.push(entry);
        Ok(())
    })?;
    Ok(entries)
}

pub fn parse_prices(input: impl Read) -> Result<PriceTable, AnalyticsError> {
    let mut quotes = Vec::new();
    let mut lines = Vec::new();
    Rows::open(input, &PRICE_COLUMNS)?.for_each(|line, rec| {
        let at: SimTime = field(rec, 0, "effective_at")?;
        let raw = rec.get(1).unwrap_or_default();
        let price = parse_decimal(raw).ok_or_else(|| format!("invalid usd_per_ether `{raw}`"))?;
        quotes.push(PriceQuote::new(at, price).map_err(|e| e.to_string())?);
        lines.push(line);
        Ok(())
    })?;
    PriceTable::new(quotes).map_err(|e| parse_err(lines.last().copied().unwrap_or(1), e.to_string()))
}

/// Joins a ledger receipt export with an issuer lookup. Receipts whose sender
/// maps to no issuer are skipped.
pub fn txlog_from_receipts(
    input: impl Read,
    issuer_of: impl Fn(&Address) -> Option<String>,
) -> Result<Vec<TxLogEntry>, AnalyticsError> {
    let mut entries = Vec::new();
    Rows::open(input, &RECEIPT_COLUMNS)?.for_each(|_, rec| {
        let from: Address = field(rec, 2, "from")?;
        let Some(issuer) = issuer_of(&from) else { return Ok(()) };
        let entry = TxLogEntry::new(
            field(rec, 0, "tx_hash")?,
            issuer,
            field(rec, 6, "submitted_at_s")?,
            field(rec, 7, "confirmed_at_s")?,
            field(rec, 3, "gas_used")?,
            field(rec, 4, "gas_price_wei")?,
            field::<WeiAmount>(rec, 5, "fee_wei")?,
        )
        .map_err(|e| e.to_string())?;
        entries.push(entry);
        Ok(())
    })?;
    Ok(entries)
}

pub fn write_txlog(entries: &[TxLogEntry], out: impl Write) -> Result<(), AnalyticsError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TXLOG_COLUMNS)?;
    for e in entries {
        w.write_record([
            e.tx_hash().to_hex(),
            e.issuer_university_id().to_owned(),
            e.submitted_at().to_string(),
            e.confirmed_at().to_string(),
            e.gas_used().to_string(),
            e.gas_price().to_string(),
            e.fee().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_mismatch_is_line_one() {
        let err = parse_prices("at,price\n0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, AnalyticsError::Parse { line: 1, .. }));
    }

    #[test]
    fn bad_price_row_names_its_line() {
        let err = parse_prices("effective_at,usd_per_ether\n0,213.61\n5,abc\n".as_bytes()).unwrap_err();
        match err {
            AnalyticsError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_price_rejected() {
        let err = parse_prices("effective_at,usd_per_ether\n0,-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, AnalyticsError::Parse { line: 2, .. }));
    }

    #[test]
    fn txlog_fee_law_checked_per_row() {
        let text = format!(
            "{}\n{},U1,0.000,1.000,40000,100000000000,4000000000000000\n{},U1,0.000,1.000,40000,100000000000,4000000000000001\n",
            TXLOG_COLUMNS.join(","),
            "11".repeat(32),
            "22".repeat(32)
        );
        let err = parse_txlog(text.as_bytes()).unwrap_err();
        assert!(matches!(err, AnalyticsError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn empty_log_parses_to_nothing() {
        let text = format!("{}\n", TXLOG_COLUMNS.join(","));
        assert!(parse_txlog(text.as_bytes()).unwrap().is_empty());
    }
}
