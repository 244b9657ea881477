//! Configuration ingestion and plot-ready result emission.
//!
//! Keys at the I/O boundary carry their unit in the name
//! (`w_min_usd_hr`, `lambda0_per_min`, ...); unknown keys are rejected, so
//! a value supplied in the wrong unit fails loudly instead of parsing
//! silently. Emitted data files contain no timestamps and serialize floats
//! at full precision, so identical runs produce byte-identical files.

mod config;
mod emit;

pub use config::{
    parse_config, parse_config_str, sf_default_spec, sf_default_toml, CompareSpec, OutputFormat,
    OutputSpec, RunSpec, SensitivitySpec, SweepSpec,
};
pub use emit::{
    comparison_csv, comparison_records, fmt_float, records_csv, table_csv, table_json,
    table_records, write_string, ComparisonRecord, TableDoc, TableRecord, TABLE_COLUMNS,
};
