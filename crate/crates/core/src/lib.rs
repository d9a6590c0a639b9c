//! Simulation toolkit for a one-dimensional topological superatom.
//!
//! An array of V-shaped three-level atoms with coupler-mediated parallel
//! (`t_p`) and cross (`t_c`) hopping forms an SSH-like chain in the
//! single-excitation sector. The crate builds that chain, classifies its
//! phase, constructs its edge states in closed form and numerically, and
//! solves the cavity-driven linear response for transmission,
//! susceptibility and effective (collective) decay.
//!
//! Module map:
//! - [`model`]: validated parameter records
//! - [`lattice`]: Bloch and real-space Hamiltonians, winding number, spectrum
//! - [`edgestates`]: transfer-matrix edge states and numerical zero modes
//! - [`sw`]: dispersive coupler elimination and its exact-diagonalization check
//! - [`response`]: steady-state linear response of the driven cavity
//! - [`sweeps`]: parameter scans (coherence curves, scaling, disorder)
//! - [`cli`]: the `topo-superatom` command-line driver

pub mod cli;
pub mod config;
pub mod edgestates;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod output;
pub mod response;
pub mod sw;
pub mod sweeps;

pub use error::{Error, Result};
pub use model::{
    validate, DisorderSpec, DissipationParams, DriveSpec, DriveTarget, LatticeParams,
    MicroscopicParams, ValidatedConfig,
};
