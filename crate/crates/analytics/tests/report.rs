use std::path::PathBuf;

use credchain_analytics::{
    aggregate, emit_report, group_by_university, parse_decimal, parse_prices, parse_txlog,
    round_half_even, summarize, write_txlog, AnalyticsError, BigRational, PriceQuote, PriceTable,
    ReportFormat, TxLogEntry, REPORT_CSV_COLUMNS,
};
use credchain_core::{Hash256, SimTime, WeiAmount};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn table2() -> (Vec<TxLogEntry>, PriceTable) {
    let log = parse_txlog(std::fs::File::open(fixture("table2_txlog.csv")).unwrap()).unwrap();
    let prices = parse_prices(std::fs::File::open(fixture("table2_prices.csv")).unwrap()).unwrap();
    (log, prices)
}

fn single_price(price: &str) -> PriceTable {
    PriceTable::new(vec![PriceQuote::new(SimTime::ZERO, parse_decimal(price).unwrap()).unwrap()]).unwrap()
}

fn cap_fee_entry() -> TxLogEntry {
    TxLogEntry::derived(Hash256::ZERO, "U1", SimTime::ZERO, SimTime::from_secs(15), 40_000, WeiAmount::from_gwei(100))
        .unwrap()
}

#[test]
fn usd_conversion_of_the_fee_cap() {
    let entry = cap_fee_entry();
    assert_eq!(entry.fee(), WeiAmount::from_wei(4_000_000_000_000_000));
    for (price, usd) in [("213.61", "0.854440"), ("2036.55", "8.146200")] {
        let s = summarize(std::slice::from_ref(&entry), &single_price(price)).unwrap();
        assert_eq!(round_half_even(&s.total_fee_usd, 6), usd);
    }
}

#[test]
fn table2_totals() {
    let (log, prices) = table2();
    let report = aggregate(&log, &prices).unwrap();
    let rows = report.rows();
    let all = &rows[0];
    assert_eq!(all.group, "ALL");
    assert_eq!(all.tx_count, 219);
    assert_eq!(all.total_delay_s, "1052.000");
    assert_eq!(all.total_delay_mmss, "17:32");
    assert_eq!(all.total_fee_eth, "0.76703077");
    assert_eq!(all.total_fee_wei, "767030770000000000");
    assert_eq!(all.avg_fee_eth.as_deref(), Some("0.00350242"));
    assert_eq!(all.avg_delay_s.as_deref(), Some("4.804"));
    assert_eq!(all.avg_delay_mmss.as_deref(), Some("00:05"));
    assert_eq!(all.total_fee_usd, "657.410568");
    let usd: f64 = all.total_fee_usd.parse().unwrap();
    assert!((usd - 657.409).abs() <= 0.01);
}

#[test]
fn table2_university_one() {
    let (log, prices) = table2();
    let groups = group_by_university(&log, &prices).unwrap();
    let counts: Vec<(&str, u64)> = groups.iter().map(|(k, v)| (k.as_str(), v.tx_count)).collect();
    assert_eq!(
        counts,
        [("U1", 45), ("U2", 17), ("U3", 18), ("U4", 30), ("U5", 28), ("U6", 8), ("unattributed", 73)]
    );
    let u1 = &groups["U1"];
    assert_eq!(round_half_even(&u1.total_fee_eth(), 8), "0.21992263");
    assert_eq!(round_half_even(&u1.avg_fee_eth().unwrap(), 8), "0.00488717");
    assert_eq!(u1.total_delay, SimTime::from_secs(605));
    assert_eq!(groups["U2"].total_delay, SimTime::from_secs(224));
}

#[test]
fn fixture_metadata_names_the_divergent_figures() {
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("table2_meta.json")).unwrap()).unwrap();
    let p = &meta["published_figures_not_reproduced"];
    assert_eq!(p["avg_fee_eth"]["published"], "0.01091671");
    assert_eq!(p["avg_delay"]["published"], "0.24 (MM:SS)");
    assert_eq!(p["U1_avg_fee_eth"]["published"], "0.00549");
    assert_eq!(meta["exact_targets"]["total_fee_eth"], "0.76703077");
}

#[test]
fn csv_layout_and_json_agree() {
    let (log, prices) = table2();
    let report = aggregate(&log, &prices).unwrap();
    let csv_bytes = emit_report(&report, ReportFormat::Csv).unwrap();
    let json_bytes = emit_report(&report, ReportFormat::Json).unwrap();
    let mut rdr = csv::Reader::from_reader(csv_bytes.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), REPORT_CSV_COLUMNS);
    let json: serde_json::Value = serde_json::from_slice(&json_bytes).unwrap();
    let json_rows = json["rows"].as_array().unwrap();
    let csv_rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(csv_rows.len(), json_rows.len());
    assert_eq!(csv_rows.len(), 8);
    for (c, j) in csv_rows.iter().zip(json_rows) {
        for (i, col) in REPORT_CSV_COLUMNS.iter().enumerate() {
            let jv = match &j[*col] {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Null => String::new(),
                other => panic!("unexpected {other}"),
            };
            assert_eq!(&c[i], jv, "column {col}");
        }
    }
}

#[test]
fn empty_log_gives_empty_report() {
    let report = aggregate(&[], &PriceTable::default()).unwrap();
    assert!(report.groups.is_empty());
    let csv = String::from_utf8(emit_report(&report, ReportFormat::Csv).unwrap()).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "ALL,0,0.000,,0.00000000,,0.000000,");
    let json: serde_json::Value =
        serde_json::from_slice(&emit_report(&report, ReportFormat::Json).unwrap()).unwrap();
    assert!(json["rows"][0]["avg_fee_eth"].is_null());
    assert_eq!(json["rows"][0]["total_delay_mmss"], "00:00");
}

#[test]
fn entries_before_first_quote_fail() {
    let prices = PriceTable::new(vec![PriceQuote::new(SimTime::from_secs(100), parse_decimal("1").unwrap()).unwrap()])
        .unwrap();
    let err = aggregate(&[cap_fee_entry()], &prices).unwrap_err();
    assert!(matches!(err, AnalyticsError::NoApplicablePrice { at } if at == SimTime::from_secs(15)));
}

#[test]
fn unknown_format_rejected() {
    assert!(matches!("xml".parse::<ReportFormat>(), Err(AnalyticsError::UnknownFormat(f)) if f == "xml"));
}

#[test]
fn txlog_round_trip() {
    let (log, _) = table2();
    let mut out = Vec::new();
    write_txlog(&log, &mut out).unwrap();
    assert_eq!(out, std::fs::read(fixture("table2_txlog.csv")).unwrap());
    assert_eq!(parse_txlog(out.as_slice()).unwrap(), log);
}

#[test]
fn prices_switch_at_effective_time() {
    let prices = PriceTable::new(vec![
        PriceQuote::new(SimTime::ZERO, parse_decimal("213.61").unwrap()).unwrap(),
        PriceQuote::new(SimTime::from_secs(10), parse_decimal("2036.55").unwrap()).unwrap(),
    ])
    .unwrap();
    let early = TxLogEntry::derived(Hash256::new([1; 32]), "U1", SimTime::ZERO, SimTime::from_secs(9), 40_000, WeiAmount::from_gwei(100)).unwrap();
    let late = cap_fee_entry();
    let s = summarize(&[early, late], &prices).unwrap();
    assert_eq!(s.total_fee_usd, parse_decimal("9.00064").unwrap());
}

mod laws {
    use super::*;
    use num_traits::Signed;
    use proptest::prelude::*;

    fn entry_strategy() -> impl Strategy<Value = TxLogEntry> {
        (any::<[u8; 32]>(), 0u8..5, 0u64..1_000_000, 0u64..600_000, 1u64..100_000, 1u64..1_000)
            .prop_map(|(h, g, sub, delay, gas, gwei)| {
                TxLogEntry::derived(
                    Hash256::new(h),
                    format!("U{g}"),
                    SimTime::from_millis(sub),
                    SimTime::from_millis(sub + delay),
                    gas,
                    WeiAmount::from_gwei(gwei),
                )
                .unwrap()
            })
    }

    fn prices() -> PriceTable {
        PriceTable::new(vec![
            PriceQuote::new(SimTime::ZERO, parse_decimal("213.61").unwrap()).unwrap(),
            PriceQuote::new(SimTime::from_secs(500), parse_decimal("857.085").unwrap()).unwrap(),
            PriceQuote::new(SimTime::from_secs(1000), parse_decimal("2036.55").unwrap()).unwrap(),
        ])
        .unwrap()
    }

    proptest! {
        #[test]
        fn partition_law(entries in proptest::collection::vec(entry_strategy(), 0..60)) {
            let report = aggregate(&entries, &prices()).unwrap();
            let count: u64 = report.groups.values().map(|g| g.tx_count).sum();
            let wei: u128 = report.groups.values().map(|g| g.total_fee_wei).sum();
            let ms: u64 = report.groups.values().map(|g| g.total_delay.as_millis()).sum();
            let usd: BigRational = report.groups.values().map(|g| g.total_fee_usd.clone()).sum();
            prop_assert_eq!(count, report.overall.tx_count);
            prop_assert_eq!(wei, report.overall.total_fee_wei);
            prop_assert_eq!(ms, report.overall.total_delay.as_millis());
            prop_assert_eq!(usd, report.overall.total_fee_usd.clone());
            prop_assert!(report.groups.values().all(|g| g.tx_count > 0));
        }

        #[test]
        fn average_law(entries in proptest::collection::vec(entry_strategy(), 1..60)) {
            let report = aggregate(&entries, &prices()).unwrap();
            for row in report.rows() {
                let count = BigRational::from_integer(row.tx_count.into());
                let checks = [
                    (&row.avg_fee_eth, &row.total_fee_eth, 8u32),
                    (&row.avg_fee_usd, &row.total_fee_usd, 6),
                    (&row.avg_delay_s, &row.total_delay_s, 3),
                ];
                for (avg, total, places) in checks {
                    let avg = parse_decimal(avg.as_deref().unwrap()).unwrap();
                    let total = parse_decimal(total).unwrap();
                    let half_ulp = BigRational::new(1.into(), (2 * 10u64.pow(places)).into());
                    // Average and total are each rounded once from exact values.
                    let bound = half_ulp.clone() * count.clone() + half_ulp;
                    prop_assert!((avg * count.clone() - total).abs() <= bound);
                }
            }
        }

        #[test]
        fn currency_law_is_order_independent(mut entries in proptest::collection::vec(entry_strategy(), 0..40), seed in any::<u64>()) {
            let a = aggregate(&entries, &prices()).unwrap();
            let expected: BigRational = entries.iter().map(|e| {
                let q = prices().lookup(e.confirmed_at()).unwrap().usd_per_ether().clone();
                BigRational::new(e.fee().wei().into(), 1_000_000_000_000_000_000u128.into()) * q
            }).sum();
            prop_assert_eq!(&a.overall.total_fee_usd, &expected);
            let n = entries.len().max(1);
            entries.rotate_left((seed as usize) % n);
            entries.reverse();
            let b = aggregate(&entries, &prices()).unwrap();
            prop_assert_eq!(
                emit_report(&a, ReportFormat::Json).unwrap(),
                emit_report(&b, ReportFormat::Json).unwrap()
            );
        }

        #[test]
        fn emission_is_idempotent(entries in proptest::collection::vec(entry_strategy(), 0..30)) {
            let once = emit_report(&aggregate(&entries, &prices()).unwrap(), ReportFormat::Csv).unwrap();
            let twice = emit_report(&aggregate(&entries, &prices()).unwrap(), ReportFormat::Csv).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
