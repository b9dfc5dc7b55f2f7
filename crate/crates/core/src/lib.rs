//! Evaluation engine for probabilistic pedestrian-trajectory prediction in automated driving.
//!
//! The crate covers the full loop from scenes to system-level scores:
//!
//! - [`scene`], [`grid`], [`prediction`]: data model and file formats.
//! - [`kinematics`]: driving corridor, time-to-collision and minimum time gaps.
//! - [`comfort`]: speed-dependent comfort zones, in-zone probabilities and braking reactions.
//! - [`irs`]: in-ROI classification samples, ROC curves and in-ROI sensitivity (IRS).
//! - [`metrics`]: NLL and ADE.
//! - [`bootstrap`]: track-level BCa confidence intervals.
//! - [`simulator`], [`predictors`], [`toy`]: synthetic scenes, baselines and the metric toy example.
//! - [`evaluate`]: the end-to-end report.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod irs;
pub mod bootstrap;
pub mod comfort;
pub mod evaluate;
pub mod kinematics;
pub mod metrics;
pub mod prediction;
pub mod predictors;
pub mod rng;
pub mod scene;
pub mod simulator;
pub mod toy;

pub use error::{Error, Result};
pub use geometry::{PlannedPath, Point};
pub use grid::{CellClass, SemanticGrid};
pub use prediction::{GaussianMixture, HorizonDist, PredictiveDistribution, HORIZONS};
pub use rng::MonteCarloConfig;
pub use scene::{EgoState, PedState, PedTrack, Scene, DT};
