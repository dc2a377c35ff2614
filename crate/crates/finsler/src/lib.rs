//! Numerical Finsler geometry: asymmetric norms, weighted Ricci curvature,
//! geodesic volume densities, comparison estimates, and a discrete
//! nonlinear heat flow in one dimension.
//!
//! The crate is organized bottom up:
//!
//! * [`jets`] fixed-lane forward-mode jets (nested dual numbers) that every
//!   geometric quantity differentiates through,
//! * [`metric`] the metric zoo on explicit charts,
//! * [`measure`] reference volume measures and densities,
//! * [`curvature`] spray coefficients, Ricci and S-curvature, and the
//!   weighted Ricci scan certificates,
//! * [`geodesics`] geodesic integration, Jacobi fields, and volume scans,
//! * [`comparison`] Laplacian and volume comparison checks against model
//!   densities, diameter and volume bounds,
//! * [`analysis`] the 1D staggered-grid Finsler Laplacian, heat flow, and
//!   spectral-gap estimates.
//!
//! Everything is deterministic: fixed seeds, fixed lattices, and parallel
//! sweeps that reduce in a fixed order.

pub mod analysis;
pub mod comparison;
pub mod curvature;
pub mod error;
pub mod geodesics;
pub mod jets;
pub(crate) mod linalg;
pub mod measure;
pub mod metric;
pub mod quad;

pub use error::{Error, Result};
