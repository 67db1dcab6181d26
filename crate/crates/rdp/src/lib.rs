//! Rate-distortion-perception trade-off regions and desk-scale simulations of
//! the coding constructions behind them.
//!
//! The crate has two halves:
//!
//! * **Region computation** ([`region`]): for a finite-alphabet memoryless
//!   source, compute the minimal distortion achievable under a compression
//!   rate `R`, a common-randomness rate `R_c` and a decoder-private-randomness
//!   rate `R_d`, subject to the output distribution matching the source
//!   (strong realism) or each output symbol matching the source marginal
//!   (per-symbol realism). The feasible set is a Markov-factored auxiliary
//!   joint `X - V - Y`; a multi-restart solver is cross-checked against an
//!   exhaustive grid oracle.
//! * **Finite-blocklength simulation** ([`codec`], [`derand`], [`synth`],
//!   [`perfect`], [`quant`]): random codebooks with likelihood encoders and
//!   memoryless decoders, derandomization of the encoder's private
//!   randomness, rate-limited local channel synthesis, exact enforcement of
//!   the output marginal, and Euclidean quantizers that lift the finite
//!   machinery to continuous sources. Small instances are evaluated exactly;
//!   asymptotic claims are checked as finite-`n` trends.
//!
//! Everything is deterministic given a seed: all randomness flows from a
//! master seed through [`seeding::derive_seed`].
//!
//! Start with the runnable examples (`cargo run --example region_tradeoff`,
//! `cargo run --example derandomize_encoder`, ...). A thin `rdp` binary
//! exposes the same capabilities as subcommands for file-based pipelines.
//!
//! Rates, entropies and information densities are in bits (log base 2)
//! throughout.

use thiserror::Error;

pub mod codec;
pub mod derand;
pub mod harness;
pub mod index;
pub mod perfect;
pub mod prob;
pub mod quant;
pub mod region;
pub mod seeding;
pub mod synth;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("unknown symbol {symbol:?}")]
    UnknownSymbol { symbol: String },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
