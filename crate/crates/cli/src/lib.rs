//! Command-line front end for `latentem`: table ingestion (dense CSV, edge
//! lists, raw text as character bigrams), multi-restart fits and JSON
//! outputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod inspect;
pub mod model;
pub mod run;
pub mod text;

pub use config::{Command, InputFormat, RunConfig};
pub use error::{CliError, Result};
pub use inspect::{inspect, inspect_table, Inspection};
pub use model::{Model, SavedModel};
pub use run::{execute, run, write_outputs, FitReport, RunOutput};
pub use text::{ingest_text, AlphabetPolicy, BigramTable};
