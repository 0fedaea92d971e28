use std::collections::BTreeMap;
use std::str::FromStr;

use credchain_core::SimTime;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::decimal::{format_mmss, round_half_even};
use crate::model::{PriceTable, TxLogEntry, ALL_GROUP};
use crate::AnalyticsError;

pub const ETH_PLACES: u32 = 8;
pub const USD_PLACES: u32 = 6;
pub const SECONDS_PLACES: u32 = 3;

pub const REPORT_CSV_COLUMNS: [&str; 8] = [
    "group",
    "tx_count",
    "total_delay_s",
    "avg_delay_s",
    "total_fee_eth",
    "avg_fee_eth",
    "total_fee_usd",
    "avg_fee_usd",
];

const WEI_PER_ETHER: u128 = 1_000_000_000_000_000_000;

/// Exact totals for one set of entries. Averages are always total / count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSummary {
    pub tx_count: u64,
    pub total_delay: SimTime,
    pub total_fee_wei: u128,
    pub total_fee_usd: BigRational,
}

impl Default for GroupSummary {
    fn default() -> Self {
        GroupSummary {
            tx_count: 0,
            total_delay: SimTime::ZERO,
            total_fee_wei: 0,
            total_fee_usd: BigRational::zero(),
        }
    }
}

impl GroupSummary {
    fn add(&mut self, entry: &TxLogEntry, usd: &BigRational) -> Result<(), AnalyticsError> {
        self.tx_count += 1;
        self.total_delay = self.total_delay.checked_add(entry.delay()).ok_or(AnalyticsError::Overflow)?;
        self.total_fee_wei =
            self.total_fee_wei.checked_add(entry.fee().wei()).ok_or(AnalyticsError::Overflow)?;
        self.total_fee_usd += usd;
        Ok(())
    }

    fn average(&self, total: BigRational) -> Option<BigRational> {
        (self.tx_count > 0).then(|| total / BigRational::from_integer(self.tx_count.into()))
    }

    pub fn total_delay_secs(&self) -> BigRational {
        BigRational::new(self.total_delay.as_millis().into(), 1000.into())
    }

    pub fn avg_delay_secs(&self) -> Option<BigRational> {
        self.average(self.total_delay_secs())
    }

    pub fn total_fee_eth(&self) -> BigRational {
        BigRational::new(BigInt::from(self.total_fee_wei), BigInt::from(WEI_PER_ETHER))
    }

    pub fn avg_fee_eth(&self) -> Option<BigRational> {
        self.average(self.total_fee_eth())
    }

    pub fn avg_fee_wei(&self) -> Option<BigRational> {
        self.average(BigRational::from_integer(self.total_fee_wei.into()))
    }

    pub fn avg_fee_usd(&self) -> Option<BigRational> {
        self.average(self.total_fee_usd.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateReport {
    pub overall: GroupSummary,
    /// Keyed by issuer id. Groups with no entries are absent.
    pub groups: BTreeMap<String, GroupSummary>,
}

fn entry_usd(entry: &TxLogEntry, prices: &PriceTable) -> Result<BigRational, AnalyticsError> {
    let quote = prices
        .lookup(entry.confirmed_at())
        .ok_or(AnalyticsError::NoApplicablePrice { at: entry.confirmed_at() })?;
    let eth = BigRational::new(BigInt::from(entry.fee().wei()), BigInt::from(WEI_PER_ETHER));
    Ok(eth * quote.usd_per_ether())
}

/// Totals over all entries; each entry is priced at its confirmation time.
pub fn summarize(entries: &[TxLogEntry], prices: &PriceTable) -> Result<GroupSummary, AnalyticsError> {
    let mut summary = GroupSummary::default();
    for entry in entries {
        summary.add(entry, &entry_usd(entry, prices)?)?;
    }
    Ok(summary)
}

pub fn group_by_university(
    entries: &[TxLogEntry],
    prices: &PriceTable,
) -> Result<BTreeMap<String, GroupSummary>, AnalyticsError> {
    let mut groups: BTreeMap<String, GroupSummary> = BTreeMap::new();
    for entry in entries {
        let usd = entry_usd(entry, prices)?;
        groups.entry(entry.issuer_university_id().to_owned()).or_default().add(entry, &usd)?;
    }
    Ok(groups)
}

/// An empty log yields a report with a zero-count overall row and no groups.
pub fn aggregate(entries: &[TxLogEntry], prices: &PriceTable) -> Result<AggregateReport, AnalyticsError> {
    Ok(AggregateReport { overall: summarize(entries, prices)?, groups: group_by_university(entries, prices)? })
}

/// Display form of one report row. CSV and JSON both render from this.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub group: String,
    pub tx_count: u64,
    pub total_delay_s: String,
    pub avg_delay_s: Option<String>,
    pub total_fee_eth: String,
    pub avg_fee_eth: Option<String>,
    pub total_fee_usd: String,
    pub avg_fee_usd: Option<String>,
    pub total_fee_wei: String,
    pub total_delay_mmss: String,
    pub avg_delay_mmss: Option<String>,
}

impl ReportRow {
    pub fn render(group: &str, s: &GroupSummary) -> ReportRow {
        let avg_delay = s.avg_delay_secs();
        ReportRow {
            group: group.to_owned(),
            tx_count: s.tx_count,
            total_delay_s: s.total_delay.to_string(),
            avg_delay_s: avg_delay.as_ref().map(|v| round_half_even(v, SECONDS_PLACES)),
            total_fee_eth: round_half_even(&s.total_fee_eth(), ETH_PLACES),
            avg_fee_eth: s.avg_fee_eth().map(|v| round_half_even(&v, ETH_PLACES)),
            total_fee_usd: round_half_even(&s.total_fee_usd, USD_PLACES),
            avg_fee_usd: s.avg_fee_usd().map(|v| round_half_even(&v, USD_PLACES)),
            total_fee_wei: s.total_fee_wei.to_string(),
            total_delay_mmss: format_mmss(&s.total_delay_secs()),
            avg_delay_mmss: avg_delay.as_ref().map(format_mmss),
        }
    }

    fn csv_fields(&self) -> [String; 8] {
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        [
            self.group.clone(),
            self.tx_count.to_string(),
            self.total_delay_s.clone(),
            opt(&self.avg_delay_s),
            self.total_fee_eth.clone(),
            opt(&self.avg_fee_eth),
            self.total_fee_usd.clone(),
            opt(&self.avg_fee_usd),
        ]
    }
}

impl AggregateReport {
    /// `ALL` first, then groups in issuer-id order.
    pub fn rows(&self) -> Vec<ReportRow> {
        std::iter::once(ReportRow::render(ALL_GROUP, &self.overall))
            .chain(self.groups.iter().map(|(g, s)| ReportRow::render(g, s)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(AnalyticsError::UnknownFormat(other.to_owned())),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    rows: &'a [ReportRow],
}

pub fn emit_report(report: &AggregateReport, format: ReportFormat) -> Result<Vec<u8>, AnalyticsError> {
    let rows = report.rows();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(REPORT_CSV_COLUMNS)?;
            for row in &rows {
                w.write_record(row.csv_fields())?;
            }
            w.into_inner().map_err(|e| AnalyticsError::Io(e.into_error()))
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&JsonReport { rows: &rows })
                .map_err(|e| AnalyticsError::Io(e.into()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}
