//! Two-stage incentive design for socially-aware crowdsensing.
//!
//! A crowdsensing service provider (CSP) posts rewards; mobile users (MUs)
//! embedded in a social network then choose participation levels. The
//! crate computes the MU equilibrium, the CSP's optimal rewards under
//! complete and incomplete information, and seeded experiment sweeps.

pub mod bayesian;
pub mod error;
pub mod experiments;
pub mod graphs;
pub mod model;
pub mod numerics;
pub mod par;
pub mod stage1;
pub mod stage2;

pub use error::{Error, Result};
pub use model::{
    csp_revenue, mu_utility, validate_assumption1, Assumption1Report, Diagnostics, EquilibriumOutcome, MarketParams,
    MuPopulation, RewardSchedule, SocialGraph, SolveMethod,
};
