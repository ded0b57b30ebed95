//! Mixed-dimensional Darcy–Forchheimer flow in a fractured reservoir.
//!
//! The bulk obeys Darcy's law, a single fracture carries Forchheimer flow
//! reduced to a line, and a well at the fracture root produces at a rate that
//! is either prescribed or driven to a pressure set-point.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod config;
pub mod error;
pub mod mesh;
pub mod output;
pub mod physics;
pub mod pipeline;
pub mod setpoint;
pub mod solver;
pub mod sparse;
pub mod sweep;
pub mod validator;

pub use error::{Error, Result};
