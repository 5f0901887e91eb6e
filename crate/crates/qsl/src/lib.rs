//! Quantitative separation logic over a bounded heap model.

#![allow(clippy::should_implement_trait)]

pub mod casestudy;
pub mod cli;
pub mod error;
pub mod expect;
pub mod lawbench;
pub mod num;
pub mod operational;
pub mod parse;
pub mod sl;
pub mod state;
pub mod syntax;
pub mod transformer;

pub use error::{ModelError, ParseError, QslError};
pub use expect::Expectation;
pub use num::{ExtQ, Q};
pub use state::{DomainConfig, Heap, ProgState, Stack};
pub use syntax::{Arith, Guard, Program};
