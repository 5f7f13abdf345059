//! MIMO DCT-OFDM transceiver simulation.
//!
//! The crate models a `2^σ × 2^σ` MIMO link that multiplexes with the
//! orthonormal DCT pair, passes through frequency-selective Rayleigh fading
//! with per-antenna-pair carrier frequency offsets, and is equalized in the
//! cosine domain. Besides the dense zero-forcing / MMSE baselines (cosine and
//! frequency domain) it implements a banded, regularized zero-forcing
//! equalizer whose normal matrix is inverted by recursive band-limited Schur
//! complements, together with an exact analytic flop model and a Monte Carlo
//! BER engine.
//!
//! Module map:
//!
//! * [`transforms`]: dense DCT/IDCT and unitary DFT/IDFT matrices
//! * [`channel`]: CP selectors, channel IRM, CFO operator, random draws
//! * [`system`]: composite cosine-domain matrix, transmit path, detection
//! * [`banded`]: banded matrices, band-limited arithmetic, op counting
//! * [`equalizers`]: the five equalizer solutions and their application
//! * [`flops`]: analytic operation / flop model and time reduction
//! * [`simulator`]: Monte Carlo BER runs, parameter sweeps, timing

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod channel;
pub mod equalizers;
mod error;
pub mod flops;
pub mod rng;
pub mod simulator;
pub mod system;
pub mod transforms;

pub use error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<num_complex::Complex64>;

pub use num_complex::Complex64;
