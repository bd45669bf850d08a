//! Citation dynamics toolkit.
//!
//! The crate is organised along the pipeline that turns raw per-eprint
//! yearly citation counts into discipline-level models:
//!
//! * [`corpus`] ingests citation records and aggregates them into age panels.
//! * [`distfit`] fits lognormal and power-law models to citation-count
//!   distributions through quantile-plot regression.
//! * [`historyfit`] fits the jump–decay plus constant-attention curve to age
//!   panels and derives obsolescence metrics from it.
//! * [`gamma`] computes the normalised γ and standardised γ* citation indices.
//! * [`stochastic`] simulates the latent attention process whose mean follows
//!   the fitted history curve and checks its distributional properties.
//!
//! [`special`] and [`stats`] hold the numerical building blocks, [`report`]
//! the JSON result envelope and [`plot`] a small SVG writer.

pub mod corpus;
pub mod distfit;
pub mod error;
pub mod gamma;
pub mod historyfit;
pub mod plot;
pub mod report;
pub mod special;
pub mod stats;
pub mod stochastic;

pub use corpus::{AgePanel, CitationCorpus, Discipline, EprintRecord, PanelEntry, PercentileSummary};
pub use distfit::{LognormalFit, PowerLawFit, QuantilePoint, QuantileSeries};
pub use error::{Error, Result};
pub use gamma::{GammaScore, GammaStarScore, GroupComparison, ReadyReckoner};
pub use historyfit::{CumulativeSplit, DerivedMetrics, FitOptions, HistoryFit, HistoryParams};
pub use stochastic::{CountingMode, PathEnsemble, Scheme, SdeConfig, TimingSimConfig, VolatilityFit};
