//! Simulation and design-budget toolkit for quantum logic spectroscopy of a
//! single electron (or positron) in a spectroscopy Penning trap, read out
//! through a second "logic" electron in a remote trap that shares a coupling
//! wire and an LCR resonator.
//!
//! The crate is organized bottom-up:
//!
//! * [`constants`]: CODATA 2018 constants, particle presets and unit helpers.
//! * [`circuit`]: equivalent-circuit model of the wire, the resonator and the
//!   two trapped particles; exchange rate, dissipation and the feasibility
//!   figure `t_ex * n_bar * gamma`.
//! * [`magnetics`]: on-axis field of a magnetized ring (the magnetic bottle).
//! * [`spectroscopy`]: bottle shifts, relativistic shift, thermal linewidth and
//!   anomalous heating.
//! * [`dynamics`]: Lindblad simulation of the wire-mediated axial exchange.
//! * [`protocol`]: Monte Carlo of the full seven-step readout sequence.
//! * [`config`] and [`report`]: strict TOML run configuration, bundled
//!   scenarios, and the tabular reports used by the `qls` binary.
//!
//! All quantities are SI. Angular frequencies are in rad/s; conversion from
//! Hz happens only at the configuration boundary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod magnetics;
pub mod protocol;
pub mod report;
pub mod spectroscopy;

pub use error::{Error, Result};
