//! TeSSLa core: a stream specification language for runtime verification.
//!
//! The pipeline is `frontend` (surface syntax to [`ir::CoreSpec`]),
//! `depgraph` (well-formedness), and then either the centralized
//! [`engine`] or the message-passing [`dataflow`] simulator. The
//! [`fragments`] module compiles the boolean fragment to transducers.

// Errors carry exact times and values; they are large but rare.
#![allow(clippy::result_large_err)]

pub mod dataflow;
pub mod depgraph;
pub mod engine;
pub mod fragments;
pub mod frontend;
pub mod ir;
pub mod stream;
pub mod term;
pub mod time;
pub mod trace;
pub mod types;
pub mod value;

pub use ir::{CoreExpr, CoreSpec, StreamType};
pub use stream::{EventStream, Progress};
pub use term::{BinOp, FunctionTerm, Term};
pub use time::Time;
pub use value::{ExtValue, Value};
