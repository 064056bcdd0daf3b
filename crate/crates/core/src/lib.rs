//! Simulator core for a noncoherent silicon-photonic neural-network
//! accelerator.
//!
//! The crate models the hardware bottom-up:
//!
//! - [`devices`]: microring variability, hybrid EO/TO tuning, and
//!   thermal phase crosstalk with a collective compensation solver;
//! - [`link_budget`]: optical path losses, required laser power, and
//!   the inter-channel crosstalk noise that bounds analog resolution;
//! - [`workload`]: DNN layer descriptions lowered to dot-product
//!   schedules with partial-sum structure;
//! - [`vdp`]: functional execution of those schedules the way the
//!   vector-dot-product hardware computes them (chunked, quantized,
//!   optionally noisy);
//! - [`perf`]: latency, power, energy-per-bit, and area models;
//! - [`dse`]: exhaustive design-space sweeps, best-configuration
//!   selection by FPS/EPB, and the four-variant comparison.

pub mod devices;
pub mod dse;
pub mod error;
pub mod link_budget;
pub mod perf;
pub mod seeding;
pub mod vdp;
pub mod workload;

pub use error::{Error, Result};
