//! Arithmetic toolkit for locally split values of polynomials over the rationals.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`]: exact rationals, valuations, integer factorization and CRT.
//! * [`poly`]: polynomials over ℚ (Sturm sequences, resultants) and over finite fields.
//! * [`field`]: absolute number fields, relative extensions and places above primes.
//! * [`local`]: Hilbert symbols, Dirichlet characters and local norm tests.
//! * [`split`]: the instance model with its hypothesis and condition checkers,
//!   the witness search, change of coordinates and S-extension.
//! * [`approx`]: constructive strong approximation (line trick, norm multipliers)
//!   and local points on fibers.
//! * [`galois`]: Frobenius cycle types, the almost-abelian classifier and split primes.
//! * [`sieve`]: (HH₁) searches and the cubic-form construction with its scan.
//! * [`text`]: the line-oriented instance format and polynomial expression parser.

pub mod approx;
pub mod arith;
pub mod error;
pub mod field;
pub mod galois;
pub mod local;
pub mod poly;
pub mod ser;
pub mod sieve;
pub mod split;
pub mod text;

mod par;

pub use arith::Rational;
pub use error::{Error, Result};
