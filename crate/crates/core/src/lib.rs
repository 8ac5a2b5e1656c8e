//! Exact small-system simulation of fluctuation-theorem based thermal-state
//! preparation: work statistics, work cutoffs, Fourier-series block encodings
//! (LCU and QSP), amplitude amplification and the end-to-end pipeline.

// validation uses !(x > 0.0) so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod circuitsim;
pub mod error;
pub mod experiments;
pub mod hamiltonians;
pub mod io;
pub mod linalg;
pub mod nonequilibrium;
pub mod optimize;
pub mod pipeline;
pub mod thermal;
pub mod workstats;

pub use error::{Error, Result};
