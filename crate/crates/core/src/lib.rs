//! Goal-count models for football matches.
//!
//! Two joint score models share one rating parametrisation
//! (`log λ = γ + α_home + β_away`, `log μ = α_away + β_home`):
//!
//! - [`dixon_coles`]: Poisson marginals with the τ adjustment on the
//!   `{0,1}²` score block.
//! - [`marco`]: an equal-weight mixture of two marginal × conditional
//!   factorisations where the conditional Poisson mean depends on the logit
//!   of the opponent-rate Poisson CDF.
//!
//! Around them sit time-weighted estimation ([`estimation`]), market
//! probabilities ([`prediction`]), RPS backtesting and the reshuffle test
//! ([`evaluation`]), bootstrap diagnostics ([`diagnostics`]) and synthetic
//! league generation ([`simulate`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod data;
pub mod diagnostics;
pub mod dixon_coles;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod grid;
pub mod marco;
pub mod optim;
pub mod params;
pub mod poisson;
pub mod prediction;
pub mod seed;
pub mod simulate;
pub mod stats;

pub use data::{Day, LeagueDataset, MatchRecord, TeamId};
pub use dixon_coles::{DcParams, RatingSet};
pub use error::{Error, Result};
pub use estimation::{FitConfig, FitResult, ModelKind};
pub use grid::{Dependence, ScoreGrid};
pub use marco::{MarcoParams, Theta};
pub use prediction::{Market, MarketForecast};
