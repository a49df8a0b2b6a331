//! Finite-population mutation-selection chain over joint profiles, its
//! stationary distribution, and the sweep over the selection intensity.

mod stationary;
mod sweep;
mod transition;

pub use stationary::{
    check_irreducible, gth_stationary, power_iteration, residual, stationary_distribution,
    stationary_distribution_with, support_graph, Backend, CONNECTIVITY_THRESHOLD,
    DEFAULT_TOLERANCE,
};
pub use sweep::{
    alpha_sweep, SweepConfig, SweepMode, SweepResult, DEFAULT_ALPHA0, DEFAULT_MAX_DOUBLINGS,
};
pub use transition::{
    fixation_ratio, transition_matrix, transition_matrix_from_graph, TransitionMatrix,
    DEFAULT_POPULATION,
};

/// A probability vector over joint profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDistribution {
    pub probabilities: Vec<f64>,
    /// Selection intensity at which the distribution was computed.
    pub alpha: f64,
    /// `||pi C - pi||_inf` of the solve.
    pub residual: f64,
    /// Set when the distribution is the end point of a completed sweep.
    pub converged: bool,
}

impl RankDistribution {
    /// Total mass on the given profile indices.
    pub fn mass_on(&self, profiles: &[usize]) -> f64 {
        profiles.iter().map(|&k| self.probabilities[k]).sum()
    }
}
