pub mod error;
pub mod fg_abelian;
pub mod finite;
pub mod chabauty;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod goursat;
pub mod lattice;
pub mod perm_module;
pub mod poly;
pub mod rng;
pub mod selftest;
pub mod stability;
pub mod weiss;
pub mod wreath;

pub use error::{Error, Result};
