//! Steady-state inter-vehicle distance statistics and cascading-collision
//! risk for noise-driven platoons with communication delay.
//!
//! The pipeline is: build a [`graph::CommGraph`], take its Laplacian
//! [`graph::Spectrum`], check [`stability`], assemble the Gaussian
//! [`covariance::DistanceLaw`], then evaluate conditional risks with
//! [`risk`]. [`limits`] gives delay-induced bounds that hold for every
//! graph, and [`sim`] integrates the underlying stochastic delay equation
//! as an independent check.

pub mod covariance;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod limits;
pub mod normal;
pub mod params;
pub mod quadrature;
pub mod risk;
pub mod roots;
pub mod sim;
pub mod stability;
pub mod tridiag;

pub use covariance::{distance_covariance, special_graph_covariance, zero_delay_covariance, DistanceLaw};
pub use error::{Error, Result};
pub use graph::{closed_form_spectrum, spectral_decomposition, CommGraph, EdgeAction, GraphKind, Laplacian, Spectrum};
pub use kernel::{f_kernel, KernelValue};
pub use params::{PlatoonParams, RiskSpec};
pub use stability::{in_stability_set, platoon_stable, sbar_contains, sbar_s1_max, StabilityVerdict};
