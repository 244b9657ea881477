//! Deterministic table emission: CSV and a structured JSON mirror.

use serde::{Deserialize, Serialize};

use crate::analysis::{ComparisonRow, SweepRow, SweepTable};
use crate::error::Result;
use crate::solver::Equilibrium;

/// Column order of every emitted sweep table.
pub const TABLE_COLUMNS: [&str; 13] = [
    "tax_level",
    "lambda_per_min",
    "n_drivers",
    "p_f",
    "p_d",
    "wage_hr",
    "tp_min",
    "t0_min",
    "cost",
    "occupancy",
    "profit_hr",
    "tax_hr",
    "regime",
];

/// Serialize a float with 17 significant digits (enough to round-trip f64).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One emitted row; the JSON form mirrors the CSV columns field by field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub tax_level: f64,
    pub lambda_per_min: f64,
    pub n_drivers: f64,
    pub p_f: f64,
    pub p_d: f64,
    pub wage_hr: f64,
    pub tp_min: f64,
    pub t0_min: f64,
    pub cost: f64,
    pub occupancy: f64,
    pub profit_hr: f64,
    pub tax_hr: f64,
    pub regime: String,
}

impl TableRecord {
    pub fn from_equilibrium(tax_level: f64, eq: &Equilibrium) -> Self {
        let m = &eq.outcome;
        Self {
            tax_level,
            lambda_per_min: m.lam,
            n_drivers: m.n_drivers,
            p_f: m.p_f,
            p_d: m.p_d,
            wage_hr: m.wage_hr,
            tp_min: m.tp_min,
            t0_min: m.t0_min,
            cost: m.cost,
            occupancy: m.occupancy,
            profit_hr: m.profit_hr,
            tax_hr: m.tax_hr,
            regime: eq.regime.to_string(),
        }
    }

    fn csv_line(&self) -> String {
        let floats = [
            self.tax_level,
            self.lambda_per_min,
            self.n_drivers,
            self.p_f,
            self.p_d,
            self.wage_hr,
            self.tp_min,
            self.t0_min,
            self.cost,
            self.occupancy,
            self.profit_hr,
            self.tax_hr,
        ];
        let mut cells: Vec<String> = floats.iter().map(|&x| fmt_float(x)).collect();
        cells.push(self.regime.clone());
        cells.join(",")
    }
}

pub fn table_records(table: &SweepTable) -> Vec<TableRecord> {
    table
        .rows
        .iter()
        .map(|SweepRow { tax_level, eq }| TableRecord::from_equilibrium(*tax_level, eq))
        .collect()
}

/// Render records as CSV with the fixed column set.
pub fn records_csv(records: &[TableRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 256);
    out.push_str(&TABLE_COLUMNS.join(","));
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

pub fn table_csv(table: &SweepTable) -> String {
    records_csv(&table_records(table))
}

/// Structured mirror of an emitted table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDoc {
    pub scheme: String,
    pub w_min_hr: f64,
    pub rows: Vec<TableRecord>,
    /// Grid points whose solve failed, if any.
    pub failures: Vec<(f64, String)>,
}

impl TableDoc {
    pub fn from_table(table: &SweepTable) -> Self {
        Self {
            scheme: table.scheme.to_string(),
            w_min_hr: table.w_min,
            rows: table_records(table),
            failures: table
                .failures
                .iter()
                .map(|f| (f.tax_level, f.message.clone()))
                .collect(),
        }
    }
}

pub fn table_json(table: &SweepTable) -> String {
    let doc = TableDoc::from_table(table);
    serde_json::to_string_pretty(&doc).expect("table serialization cannot fail") + "\n"
}

/// Flat record of one equal-revenue comparison row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub target_tax_hr: f64,
    pub p_trip: f64,
    pub p_time: f64,
    pub trip_lambda: f64,
    pub time_lambda: f64,
    pub trip_cost: f64,
    pub time_cost: f64,
    pub trip_profit_hr: f64,
    pub time_profit_hr: f64,
    pub trip_n_drivers: f64,
    pub time_n_drivers: f64,
    pub trip_wage_hr: f64,
    pub time_wage_hr: f64,
    pub lambda_order: String,
    pub cost_order: String,
    pub profit_order: String,
}

pub fn comparison_records(rows: &[ComparisonRow]) -> Vec<ComparisonRecord> {
    rows.iter()
        .map(|r| ComparisonRecord {
            target_tax_hr: r.target_tax_hr,
            p_trip: r.p_trip,
            p_time: r.p_time,
            trip_lambda: r.trip.outcome.lam,
            time_lambda: r.time.outcome.lam,
            trip_cost: r.trip.outcome.cost,
            time_cost: r.time.outcome.cost,
            trip_profit_hr: r.trip.outcome.profit_hr,
            time_profit_hr: r.time.outcome.profit_hr,
            trip_n_drivers: r.trip.outcome.n_drivers,
            time_n_drivers: r.time.outcome.n_drivers,
            trip_wage_hr: r.trip.outcome.wage_hr,
            time_wage_hr: r.time.outcome.wage_hr,
            lambda_order: format!("{:?}", r.flags.lambda),
            cost_order: format!("{:?}", r.flags.cost),
            profit_order: format!("{:?}", r.flags.profit),
        })
        .collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let records = comparison_records(rows);
    let header = [
        "target_tax_hr",
        "p_trip",
        "p_time",
        "trip_lambda",
        "time_lambda",
        "trip_cost",
        "time_cost",
        "trip_profit_hr",
        "time_profit_hr",
        "trip_n_drivers",
        "time_n_drivers",
        "trip_wage_hr",
        "time_wage_hr",
        "lambda_order",
        "cost_order",
        "profit_order",
    ];
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in records {
        let floats = [
            r.target_tax_hr,
            r.p_trip,
            r.p_time,
            r.trip_lambda,
            r.time_lambda,
            r.trip_cost,
            r.time_cost,
            r.trip_profit_hr,
            r.time_profit_hr,
            r.trip_n_drivers,
            r.time_n_drivers,
            r.trip_wage_hr,
            r.time_wage_hr,
        ];
        let mut cells: Vec<String> = floats.iter().map(|&x| fmt_float(x)).collect();
        cells.push(r.lambda_order);
        cells.push(r.cost_order);
        cells.push(r.profit_order);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Write a string to a file, creating parent directories as needed.
pub fn write_string(path: &std::path::Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}
