//! File formats and reports on top of `flopwatt-core`: the energy-record CSV
//! schema, JSON documents for laws, reports and FLOP breakdowns, and
//! relative-energy tables. The `flopwatt` binary is a thin front end over
//! these.

pub mod csv_io;
pub mod docs;
pub mod report;

pub use flopwatt_core;
