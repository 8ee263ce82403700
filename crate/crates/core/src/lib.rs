//! Nash equilibria of finite extensive-form games with perfect recall, computed by following
//! the sequence-form logit quantal response equilibrium path from an interior starting plan
//! down to its Nash limit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod error;
pub mod game;
pub mod homotopy;
pub mod oracle;
pub mod profile;
pub mod qre;
pub mod sequence;

pub use error::{Error, Result};
