//! Semiclassical propagation with anisotropic Gaussian wave packets.
//!
//! The crate integrates the characteristic system of a Gaussian packet under a
//! smooth Hamiltonian, evaluates the propagated packets on grids, assembles the
//! phase-space propagator from a cut-off lattice quadrature of packets, and
//! computes Van Vleck kernels from shot classical orbits. A split-step
//! spectral solver provides an independent reference for mechanical models.

pub mod error;
pub mod flow;
pub mod grid;
pub mod invariants;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod packet;
pub mod propagator;
pub mod reference;
pub mod vanvleck;

pub use error::{Error, Result};
pub use flow::{CharacteristicState, FlowOptions, Trajectory};
pub use grid::{Grid, GridFunction};
pub use linalg::CMatrix;
pub use model::{Hamiltonian, PhasePoint};
pub use packet::AnisotropicPacket;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats one CSV row of floats with 17 significant digits.
pub fn format_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}
