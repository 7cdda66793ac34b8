//! Joint optimisation of a STAR-RIS assisted UAV downlink with NOMA users:
//! surface coefficients, UAV trajectory and power split, alternated until the
//! sum rate settles.

pub mod baselines;
pub mod beamforming;
pub mod beams;
pub mod channel;
pub mod driver;
pub mod error;
pub mod experiment;
pub mod power;
pub mod report;
pub mod scenario;
pub mod settings;
pub mod trajectory;

pub use error::{Error, Result, ScenarioError};
pub use scenario::{Point, Scenario, Space, UserSpec};
pub use settings::{Method, Settings};
