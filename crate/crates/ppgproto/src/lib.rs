//! File formats, pipeline orchestration and the `ppgproto` command line
//! on top of `ppgproto-core`, with `ppgproto-synth` cohorts as input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod io;
pub mod pipeline;

pub use error::{CliError, Result};
