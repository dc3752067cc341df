//! Field cost records: CSV ingestion, failure-rate estimation, synthetic
//! fleet generation, and result export.
//!
//! The CSV schema stands in for the proprietary service database the
//! empirical parameters came from. Header (bit-exact):
//!
//! ```text
//! unit_id,event_time_days,cost_eur
//! ```
//!
//! Costs at or below 1 EUR are rejected at parse time so that every ingested
//! record satisfies the log-cost fitting precondition (`ln cost > 0`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::JumpDistribution;
use crate::numerics;
use crate::process::sample_jump_times;
use crate::rng::path_stream;

pub const COST_CSV_HEADER: &str = "unit_id,event_time_days,cost_eur";
pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected `{COST_CSV_HEADER}`, got `{0}`")]
    BadHeader(String),
    #[error("row {row}: malformed number in column `{column}`: `{value}`")]
    MalformedNumber { row: usize, column: &'static str, value: String },
    #[error("row {row}: wrong field count {got}, expected 3")]
    WrongFieldCount { row: usize, got: usize },
    #[error("row {row}: negative event time {value}")]
    NegativeTime { row: usize, value: f64 },
    #[error("row {row}: non-positive cost {value}")]
    NonPositiveCost { row: usize, value: f64 },
    #[error("row {row}: cost {value} EUR is at or below the 1 EUR floor")]
    CostBelowFloor { row: usize, value: f64 },
    #[error("need at least one unit, got 0")]
    NoUnits,
    #[error("observation window must be positive, got {0}")]
    NonPositiveWindow(f64),
    #[error("result table row {row} has {got} values, expected {expected} columns")]
    RaggedTable { row: usize, got: usize, expected: usize },
    #[error("malformed result table: {0}")]
    MalformedTable(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One field-service event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub unit_id: String,
    /// Days since fleet start, ≥ 0.
    pub event_time_days: f64,
    /// Repair cost in EUR, > 1.
    pub cost_eur: f64,
}

/// Fleet-level summary with the failure-rate estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSummary {
    pub n_units: u64,
    pub observation_window_days: f64,
    pub n_events: u64,
    /// Events per unit-year (365-day year).
    pub lambda_hat: f64,
    pub mean_cost: f64,
    /// (probability, cost) pairs at p10/p25/p50/p75/p90.
    pub cost_quantiles: Vec<(f64, f64)>,
    /// Set when the record list was empty; lambda_hat is then 0 by
    /// convention, not evidence.
    pub no_events: bool,
}

/// Parse the cost CSV. All rows parse or the first offending row is reported
/// with its (1-based) data row number and column; row order is preserved.
pub fn parse_cost_csv<R: Read>(reader: R) -> Result<Vec<CostRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    {
        let headers = rdr.headers()?;
        let got = headers.iter().collect::<Vec<_>>().join(",");
        if got != COST_CSV_HEADER {
            return Err(DataError::BadHeader(got));
        }
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(DataError::WrongFieldCount { row, got: rec.len() });
        }
        let time: f64 = rec[1].trim().parse().map_err(|_| DataError::MalformedNumber {
            row,
            column: "event_time_days",
            value: rec[1].to_string(),
        })?;
        let cost: f64 = rec[2].trim().parse().map_err(|_| DataError::MalformedNumber {
            row,
            column: "cost_eur",
            value: rec[2].to_string(),
        })?;
        if !time.is_finite() || time < 0.0 {
            return Err(DataError::NegativeTime { row, value: time });
        }
        if !cost.is_finite() || cost <= 0.0 {
            return Err(DataError::NonPositiveCost { row, value: cost });
        }
        if cost <= 1.0 {
            return Err(DataError::CostBelowFloor { row, value: cost });
        }
        records.push(CostRecord { unit_id: rec[0].to_string(), event_time_days: time, cost_eur: cost });
    }
    Ok(records)
}

/// Write records in the canonical CSV schema. Floats use the shortest
/// round-trip representation, so write-then-parse is lossless.
pub fn write_cost_csv<W: Write>(records: &[CostRecord], mut writer: W) -> Result<(), DataError> {
    writeln!(writer, "{COST_CSV_HEADER}")?;
    for r in records {
        writeln!(writer, "{},{},{}", r.unit_id, r.event_time_days, r.cost_eur)?;
    }
    Ok(())
}

/// Estimate the failure rate as events per unit-year plus cost summary
/// statistics. An empty record list is not an error: it yields lambda_hat 0
/// with the `no_events` flag set.
pub fn estimate_failure_rate(
    records: &[CostRecord],
    n_units: u64,
    window_days: f64,
) -> Result<FleetSummary, DataError> {
    if n_units == 0 {
        return Err(DataError::NoUnits);
    }
    if !(window_days > 0.0) {
        return Err(DataError::NonPositiveWindow(window_days));
    }
    let n_events = records.len() as u64;
    let unit_years = n_units as f64 * window_days / DAYS_PER_YEAR;
    let lambda_hat = n_events as f64 / unit_years;
    if n_events == 0 {
        return Ok(FleetSummary {
            n_units,
            observation_window_days: window_days,
            n_events: 0,
            lambda_hat: 0.0,
            mean_cost: 0.0,
            cost_quantiles: Vec::new(),
            no_events: true,
        });
    }
    let costs: Vec<f64> = records.iter().map(|r| r.cost_eur).collect();
    let mean_cost = numerics::pairwise_sum(&costs) / costs.len() as f64;
    let mut sorted = costs;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |p: f64| -> f64 {
        let idx = p * (sorted.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        let frac = idx - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    };
    let cost_quantiles = [0.10, 0.25, 0.50, 0.75, 0.90]
        .iter()
        .map(|&p| (p, quantile(p)))
        .collect();
    Ok(FleetSummary {
        n_units,
        observation_window_days: window_days,
        n_events,
        lambda_hat,
        mean_cost,
        cost_quantiles,
        no_events: false,
    })
}

/// Generate a reproducible synthetic fleet: each unit gets its own substream,
/// event times follow a homogeneous Poisson process at `lambda_per_unit_year`
/// and costs are drawn from `dist`. Records are ordered by unit then time.
pub fn generate_synthetic_fleet(
    lambda_per_unit_year: f64,
    dist: &JumpDistribution,
    n_units: u64,
    window_days: f64,
    master_seed: u64,
) -> Vec<CostRecord> {
    let daily_rate = lambda_per_unit_year / DAYS_PER_YEAR;
    let mut records = Vec::new();
    for unit in 0..n_units {
        let mut rng = path_stream(master_seed, unit);
        let times = sample_jump_times(daily_rate, window_days, &mut rng);
        for t in times {
            let cost = dist.sample(&mut rng);
            records.push(CostRecord {
                unit_id: format!("U{:05}", unit + 1),
                event_time_days: t,
                cost_eur: cost,
            });
        }
    }
    records
}

/// A rectangular table of named numeric columns, the exchange format behind
/// sweep and path outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, DataError> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(DataError::RaggedTable { row: i, got: r.len(), expected: columns.len() });
            }
        }
        Ok(Self { columns, rows })
    }
}

/// Export a table as CSV or JSON (object-per-row array). Numeric fields use
/// the shortest round-trip representation in both formats, so
/// `parse(export(x)) == x` and the two formats carry identical values.
pub fn export_results<W: Write>(
    table: &ResultTable,
    format: ExportFormat,
    mut writer: W,
) -> Result<(), DataError> {
    match format {
        ExportFormat::Csv => {
            writeln!(writer, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                writeln!(writer, "{}", line.join(","))?;
            }
        }
        ExportFormat::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = table
                .rows
                .iter()
                .map(|row| {
                    table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, &v)| (c.clone(), serde_json::json!(v)))
                        .collect()
                })
                .collect();
            serde_json::to_writer_pretty(&mut writer, &objs)?;
            writeln!(writer)?;
        }
    }
    Ok(())
}

/// Parse a CSV produced by [`export_results`].
pub fn parse_result_csv<R: Read>(reader: R) -> Result<ResultTable, DataError> {
    let mut content = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut content)?;
    let mut lines = content.lines();
    let header = lines
        .next()
        .ok_or_else(|| DataError::MalformedTable("missing header".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|_| DataError::MalformedTable(format!("bad number in row {}", i + 1)))?;
        if row.len() != columns.len() {
            return Err(DataError::RaggedTable { row: i, got: row.len(), expected: columns.len() });
        }
        rows.push(row);
    }
    ResultTable::new(columns, rows)
}

/// Parse a JSON array-of-objects produced by [`export_results`]. Column order
/// is taken from the table that wrote it, so pass the expected columns.
pub fn parse_result_json<R: Read>(reader: R, columns: &[String]) -> Result<ResultTable, DataError> {
    let objs: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_reader(reader)?;
    let mut rows = Vec::new();
    for (i, obj) in objs.iter().enumerate() {
        let mut row = Vec::with_capacity(columns.len());
        for c in columns {
            let v = obj
                .get(c)
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| DataError::MalformedTable(format!("row {i} missing column `{c}`")))?;
            row.push(v);
        }
        rows.push(row);
    }
    ResultTable::new(columns.to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn parse_empty_and_single_row() {
        let recs = parse_cost_csv("unit_id,event_time_days,cost_eur\n".as_bytes()).unwrap();
        assert!(recs.is_empty());
        let recs =
            parse_cost_csv("unit_id,event_time_days,cost_eur\nM17,412,1834.50\n".as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].unit_id, "M17");
        assert_relative_eq!(recs[0].event_time_days, 412.0);
        assert_relative_eq!(recs[0].cost_eur, 1834.5);
    }

    #[test]
    fn parse_errors_name_the_row() {
        let bad = "unit_id,event_time_days,cost_eur\nA,1,100\nB,2,-5\n";
        assert!(matches!(
            parse_cost_csv(bad.as_bytes()),
            Err(DataError::NonPositiveCost { row: 2, .. })
        ));
        let bad = "unit_id,event_time_days,cost_eur\nA,-1,100\n";
        assert!(matches!(
            parse_cost_csv(bad.as_bytes()),
            Err(DataError::NegativeTime { row: 1, .. })
        ));
        let bad = "unit_id,event_time_days,cost_eur\nA,x,100\n";
        assert!(matches!(
            parse_cost_csv(bad.as_bytes()),
            Err(DataError::MalformedNumber { row: 1, column: "event_time_days", .. })
        ));
        let bad = "unit_id,event_time_days,cost_eur\nA,1,0.5\n";
        assert!(matches!(
            parse_cost_csv(bad.as_bytes()),
            Err(DataError::CostBelowFloor { row: 1, .. })
        ));
        let bad = "id,t,c\nA,1,100\n";
        assert!(matches!(parse_cost_csv(bad.as_bytes()), Err(DataError::BadHeader(_))));
    }

    #[test]
    fn estimate_rate_examples() {
        // 100 events, 50 units, 730 days → 1.0 per unit-year
        let recs: Vec<CostRecord> = (0..100)
            .map(|i| CostRecord {
                unit_id: format!("U{i}"),
                event_time_days: i as f64,
                cost_eur: 100.0 + i as f64,
            })
            .collect();
        let s = estimate_failure_rate(&recs, 50, 730.0).unwrap();
        assert_relative_eq!(s.lambda_hat, 1.0, epsilon = 1e-12);
        assert_eq!(s.n_events, 100);
        assert!(!s.no_events);
        assert_relative_eq!(s.mean_cost, 149.5, epsilon = 1e-9);
        assert_eq!(s.cost_quantiles.len(), 5);

        let s = estimate_failure_rate(&[], 50, 730.0).unwrap();
        assert_eq!(s.lambda_hat, 0.0);
        assert!(s.no_events);

        assert!(estimate_failure_rate(&recs, 0, 730.0).is_err());
        assert!(estimate_failure_rate(&recs, 50, 0.0).is_err());
    }

    #[test]
    fn synthetic_fleet_reproducible_and_zero_rate_empty() {
        let dist = JumpDistribution::weibull_log(2.0, 2.2).unwrap();
        assert!(generate_synthetic_fleet(0.0, &dist, 100, 365.0, 1).is_empty());
        let a = generate_synthetic_fleet(1.5, &dist, 50, 365.0, 42);
        let b = generate_synthetic_fleet(1.5, &dist, 50, 365.0, 42);
        assert_eq!(a, b);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_cost_csv(&a, &mut buf_a).unwrap();
        write_cost_csv(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        // different seed, different bytes
        let c = generate_synthetic_fleet(1.5, &dist, 50, 365.0, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_fleet_event_count_near_expectation() {
        // λ=1/unit-year, 1000 units, 1 year → expect 1000 ± 4·√1000
        let dist = JumpDistribution::weibull_log(2.0, 2.2).unwrap();
        let recs = generate_synthetic_fleet(1.0, &dist, 1000, 365.0, 7);
        let n = recs.len() as f64;
        assert!((n - 1000.0).abs() < 4.0 * 1000.0_f64.sqrt(), "count {n}");
        let s = estimate_failure_rate(&recs, 1000, 365.0).unwrap();
        assert!((s.lambda_hat - 1.0).abs() < 4.0 * (1.0_f64 / 1000.0).sqrt());
    }

    #[test]
    fn cost_csv_round_trip() {
        let dist = JumpDistribution::weibull_log(2.0, 2.2).unwrap();
        let recs = generate_synthetic_fleet(2.0, &dist, 20, 365.0, 11);
        let mut buf = Vec::new();
        write_cost_csv(&recs, &mut buf).unwrap();
        let parsed = parse_cost_csv(buf.as_slice()).unwrap();
        assert_eq!(recs, parsed);
    }

    #[test]
    fn export_empty_table_is_header_only() {
        let table = ResultTable::new(vec!["a".into(), "b".into()], vec![]).unwrap();
        let mut buf = Vec::new();
        export_results(&table, ExportFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n");
    }

    #[test]
    fn csv_and_json_exports_carry_identical_values() {
        let table = ResultTable::new(
            vec!["lambda".into(), "premium".into()],
            vec![vec![0.5, 1.0 / 3.0], vec![2.0, 8.324_988_558_044_277]],
        )
        .unwrap();
        let mut csv_buf = Vec::new();
        export_results(&table, ExportFormat::Csv, &mut csv_buf).unwrap();
        let from_csv = parse_result_csv(csv_buf.as_slice()).unwrap();
        let mut json_buf = Vec::new();
        export_results(&table, ExportFormat::Json, &mut json_buf).unwrap();
        let from_json = parse_result_json(json_buf.as_slice(), &table.columns).unwrap();
        assert_eq!(from_csv, table);
        assert_eq!(from_json, table);
    }

    #[test]
    fn ragged_table_rejected() {
        assert!(matches!(
            ResultTable::new(vec!["a".into()], vec![vec![1.0, 2.0]]),
            Err(DataError::RaggedTable { row: 0, got: 2, expected: 1 })
        ));
    }

    proptest! {
        #[test]
        fn result_table_round_trips(
            rows in proptest::collection::vec(
                proptest::collection::vec(-1e12f64..1e12, 3),
                0..20,
            )
        ) {
            let table = ResultTable::new(
                vec!["x".into(), "y".into(), "z".into()],
                rows,
            ).unwrap();
            let mut buf = Vec::new();
            export_results(&table, ExportFormat::Csv, &mut buf).unwrap();
            let parsed = parse_result_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(parsed, table);
        }
    }
}
