//! Simulation and benchmarking toolkit for a capacitively shunted flux qubit.
//!
//! The crate is layered bottom-up: [`circuit`] solves the device spectrum,
//! [`pulses`] builds drive schedules, [`dynamics`] propagates a few-level
//! model under those drives, and [`experiments`], [`calibrate`] and [`rb`]
//! assemble virtual measurement protocols on top. [`fit`] is the shared
//! least-squares engine.

pub mod calibrate;
pub mod circuit;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod linalg;
pub mod presets;
pub mod pulses;
pub mod rb;

pub use error::{Error, Result};
