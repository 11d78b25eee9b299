//! Certified reduced-order modelling for 2D incompressible Navier-Stokes
//! on the periodic torus.
//!
//! The crate is organised as a pipeline:
//!
//! * [`spectral`] - Fourier-Galerkin full-order solver with dealiased
//!   pseudo-spectral products and an energy-consistent theta scheme.
//! * [`rom`] - POD basis extraction and reduced operator assembly with
//!   structure-exact convection storage and dissipative closures.
//! * [`certify`] - certified reduced time stepping: per-step energy
//!   ledger, structure-defect monitors and certification flags.
//! * [`estimate`] - residual-based a posteriori error certificates and
//!   a priori rate reports.
//! * [`transition`] - energy-barrier, enstrophy-threshold and resolvent
//!   transition indicators for base flows.
//! * [`fsi`] - added-mass margins for partitioned fluid-structure
//!   coupling and a 1D Robin-Robin testbed with an energy ledger.
//! * [`report`] - configuration parsing, pipeline orchestration and
//!   deterministic report emission backing the command line interface.

pub mod certify;
pub mod estimate;
pub mod fsi;
pub mod io;
pub mod report;
pub mod rom;
pub mod spectral;
pub mod transition;
