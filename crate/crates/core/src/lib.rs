//! Causal mediation analysis for age-stratified case fatality data.
//!
//! Country (or any cohort label) is the treatment, age band the mediator and
//! fatality the outcome. Under causal sufficiency the interventional quantities
//! reduce to observational conditionals, so total, controlled-direct,
//! natural-direct and natural-indirect effects can be computed from case and
//! death counts alone. The [`scm`] module provides an exact counterfactual
//! oracle used to check those formulas.
//!
//! Module map:
//! - [`cohort`]: count data, bands, rates, case demographics
//! - [`ingest`]: text file format, bundled datasets, validation
//! - [`effects`]: effect estimators, Simpson verdicts, traces, pairwise matrices
//! - [`scm`]: discrete structural causal models, exact effects, sampling
//! - [`stats`]: rankings, rank deltas, correlation tests, sign discordance

pub mod cohort;
pub mod effects;
pub mod error;
pub mod ingest;
pub mod par;
pub mod scm;
pub mod stats;

pub use cohort::{AgeBand, BandSchema, CohortSeries, GroupDistribution, Rate, RateTable, StratifiedCohort};
pub use effects::{EffectEstimate, EffectKind, UndefinedBandPolicy};
pub use error::{Error, Result};
pub use par::Execution;
