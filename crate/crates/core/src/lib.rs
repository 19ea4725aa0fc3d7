//! Extremes of Gaussian processes with trend: exact path simulation,
//! Pickands and Piterbarg constants, asymptotic tail and passage-time
//! approximations, and Monte Carlo validation.

pub mod asymptotics;
pub mod error;
pub mod exceedance;
pub mod passage;
pub mod pickands;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod special;
mod stats;
pub mod trend;

pub use asymptotics::{ApproxResult, Branch, ConstantsProvider, PeakPosition, RegimeParams};
pub use error::{Error, Result};
pub use exceedance::{mc_sup_prob, refine_extrapolate, MCEstimate};
pub use passage::{mc_conditional_passage, EmpiricalCdf, PassageScaling};
pub use pickands::{ConstantEstimate, McBudget};
pub use sim::{drifted_sup, sample_paths, CorrelationModel, Grid, PathBatch, PathSampler};
pub use trend::TrendFunction;
