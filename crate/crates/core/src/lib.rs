//! Protograph LDPC codes over half-duplex Nakagami-m fading relay channels.
//!
//! Three views of the same system are provided and cross-checked:
//!
//! * [`pexit`]: fading-averaged protograph EXIT recursion and decoding
//!   threshold search,
//! * [`ber_theory`]: Gaussian-approximation BER curves for error-free (EF)
//!   and decode-and-forward (DF) relaying,
//! * [`harness`]: Monte-Carlo simulation with a lifted code and a
//!   sum-product decoder.

pub mod ber_theory;
pub mod channel;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod pexit;
pub mod protograph;

pub use error::{Error, Result};
