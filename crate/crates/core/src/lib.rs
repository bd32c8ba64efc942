//! Simultaneous shape and topology optimization of plane trusses for minimum
//! compliance, using member force densities as design variables.
//!
//! The strain energy is split into its x- and y-coordinate components so that
//! a single two-objective run yields the optimal trusses for every aspect
//! ratio of the ground structure. The pipeline is:
//!
//! * [`ground`] builds the ground structure (grid, supports, loads).
//! * [`fdm`] solves the force-density equilibrium for free-node coordinates.
//! * [`fea`] runs a linear truss analysis to recover equilibrium-consistent
//!   force densities.
//! * [`energy`] evaluates the split objectives, the smoothed weighted sum and
//!   volume normalization.
//! * [`moga`] is a real-coded NSGA-III over the force densities.
//! * [`wsopt`] minimizes the weighted sum with a projected quasi-Newton method.
//! * [`pareto`] turns front slopes into weight ratios and aspect ratios.

pub mod energy;
pub mod error;
pub mod fdm;
pub mod fea;
pub mod ground;
pub mod linalg;
pub mod moga;
pub mod pareto;
pub mod wsopt;

pub use moga::{FrontArchive, GaConfig, Individual, NichingSpace};
pub use pareto::ParetoPoint;
pub use wsopt::WsConfig;

pub use energy::{Material, ObjectiveValues, VolumeNormalization};
pub use error::{Error, Result};
pub use fdm::{EquilibriumGeometry, ForceDensityMatrix, ForceDensityVector};
pub use fea::TrussDesign;
pub use ground::{GroundStructure, Load, Member, NodeId, Support};



