//! Exact rational and integer arithmetic, high-precision reals, and the
//! elementary number-theoretic helpers used throughout.

pub mod logexpr;
pub mod primes;
pub mod rational;
pub mod real;

pub use logexpr::{Atom, LogCombination};
pub use primes::{
    dusart_bound, factorize, gl2_field_order, gl2_order, is_prime, omega_distinct, pi_exact,
    prime_sieve, rad,
};
pub use rational::{int, ratio, ExactRational};
pub use real::{LogValue, Provenance, Verdict};
