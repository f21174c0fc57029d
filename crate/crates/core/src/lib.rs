//! Synthesis of automotive ultrasonic ground-reflection signals with a
//! conditional GAN.
//!
//! The crate is organised along the data flow:
//!
//! * [`signal`] turns a 330 kHz raw capture into a 583-sample, 20 kHz
//!   envelope (bandpass, complex mixing, lowpass, rational resampling,
//!   modulus).
//! * [`stats`] splits envelopes into 0.25 m distance bins and describes each
//!   bin's amplitudes with a fitted Gamma distribution.
//! * [`corpus`] generates a parameterised reference measurement corpus and
//!   persists datasets.
//! * [`nn`] is a small dense-network core (forward, backward, Adam,
//!   gradient checking).
//! * [`cgan`] builds, trains, samples and checkpoints the conditional
//!   generator/discriminator pair.
//! * [`validation`] compares generated and reference populations bin by bin.
//! * [`cli`] binds everything into the `ulsgan` command.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cgan;
pub mod cli;
pub mod corpus;
mod error;
pub mod nn;
pub mod signal;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
