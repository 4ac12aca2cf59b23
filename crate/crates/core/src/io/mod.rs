//! Configuration files, binary snapshots and CSV series.

mod config;
mod series;
mod snapshot;

pub use config::{
    parse_config, parse_config_with, ConfigError, ConfigErrorKind, ConfigErrors, InitialCondition, MagneticInit,
    RadiusWindow, RunConfig, KEYS,
};
pub use series::{csv_header, fmt_f64, read_csv, write_csv, write_table, BASE_COLUMNS};
pub use snapshot::{
    read_header, read_snapshot, write_snapshot, Snapshot, SnapshotError, SnapshotHeader, FORMAT_VERSION,
    HEADER_LEN, LAYOUT_HALF_SPECTRUM, MAGIC,
};
