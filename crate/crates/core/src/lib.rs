//! α-Rank for normal-form games and α-Rank-collections for Bayesian games.
//!
//! A [`NormalFormGame`] is ranked by [`alpha_sweep`], which returns the
//! stationary distribution of the mutation-selection chain at the largest
//! selection intensity where it still exists. A [`BayesianGame`] is ranked by
//! averaging those distributions over its type prior, exactly for finite
//! priors ([`exact_collection`]) or by sampling ([`monte_carlo_collection`]).

pub mod alpha_rank;
pub mod collections;
pub mod error;
pub mod game;
pub mod graph;
pub mod io;
pub mod mechanisms;

pub use alpha_rank::{alpha_sweep, RankDistribution, SweepConfig, SweepMode, SweepResult};
pub use collections::{exact_collection, group_marginals, monte_carlo_collection, Collection};
pub use error::{Error, Result};
pub use game::{BayesianGame, NormalFormGame, Prior, ProfileSpace, TypeVector};
