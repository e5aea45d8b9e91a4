//! Exact-arithmetic engine for probabilistic and explicit Szpiro-type bounds
//! derived from a theta-data inequality, together with brute-force oracles
//! for the local-field lemmas the bounds rest on.

pub mod arith;
pub mod error;
pub mod expectation;
pub mod global_model;
pub mod local_field;
pub mod padic_oracle;
pub mod suites;
pub mod synth;
pub mod szpiro;
pub mod tensor_packet;

pub use error::{Error, Result};
