use serde::{Deserialize, Serialize};

use super::stationary::{check_irreducible, stationary_distribution, DEFAULT_TOLERANCE};
use super::transition::{transition_matrix_from_graph, DEFAULT_POPULATION};
use super::RankDistribution;
use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::graph::build_game_graph;

pub const DEFAULT_ALPHA0: f64 = 1e-5;
pub const DEFAULT_MAX_DOUBLINGS: usize = 60;

/// How the selection intensity is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepMode {
    /// Multiply alpha by `factor` from `alpha0` while the distribution exists
    /// and keep the last alpha that worked.
    Doubling {
        alpha0: f64,
        factor: f64,
        max_steps: usize,
    },
    /// Try `alpha_fixed`, then `alpha_fixed - step`, `alpha_fixed - 2 step`, ...
    /// until the distribution exists.
    FixedWithDecrement { alpha_fixed: f64, step: f64 },
}

impl Default for SweepMode {
    fn default() -> Self {
        SweepMode::Doubling {
            alpha0: DEFAULT_ALPHA0,
            factor: 2.0,
            max_steps: DEFAULT_MAX_DOUBLINGS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Population size.
    pub m: usize,
    pub mode: SweepMode,
    /// Residual tolerance of the stationary solve.
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_POPULATION,
            mode: SweepMode::default(),
            tol: DEFAULT_TOLERANCE,
        }
    }
}

impl SweepConfig {
    pub fn fixed(alpha_fixed: f64, step: f64) -> Self {
        Self {
            mode: SweepMode::FixedWithDecrement { alpha_fixed, step },
            ..Self::default()
        }
    }

    pub fn with_population(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    /// The schedule to use on payoffs multiplied by `a > 0`: every alpha
    /// divided by `a`, so that each step sees the same transition matrix.
    pub fn rescaled(mut self, a: f64) -> Self {
        self.mode = match self.mode {
            SweepMode::Doubling {
                alpha0,
                factor,
                max_steps,
            } => SweepMode::Doubling {
                alpha0: alpha0 / a,
                factor,
                max_steps,
            },
            SweepMode::FixedWithDecrement { alpha_fixed, step } => SweepMode::FixedWithDecrement {
                alpha_fixed: alpha_fixed / a,
                step: step / a,
            },
        };
        self
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Largest alpha tried at which the distribution exists.
    pub alpha_pre: f64,
    pub distribution: RankDistribution,
    /// Every alpha tried, in order, with whether the chain was irreducible.
    pub trajectory: Vec<(f64, bool)>,
}

/// Approximates the limiting distribution by the stationary distribution at
/// the largest workable selection intensity.
///
/// Irreducibility of the thresholded chain is monotone in alpha (worsening
/// moves only get rarer), so the sweep first walks the alpha schedule with the
/// cheap connectivity test and then solves at the last irreducible point. If
/// that solve misses the residual tolerance it falls back along the schedule.
pub fn alpha_sweep(game: &NormalFormGame, config: &SweepConfig) -> Result<SweepResult> {
    let graph = build_game_graph(game);
    let mut trajectory = Vec::new();
    let mut last_err = None;
    let solve = |alpha: f64| -> Result<RankDistribution> {
        let tm = transition_matrix_from_graph(&graph, alpha, config.m)?;
        stationary_distribution(&tm, config.tol)
    };

    match config.mode {
        SweepMode::Doubling {
            alpha0, max_steps, ..
        } => {
            let mut irreducible = Vec::new();
            for alpha in schedule(&config.mode)? {
                let tm = transition_matrix_from_graph(&graph, alpha, config.m)?;
                let ok = check_irreducible(&tm).is_ok();
                trajectory.push((alpha, ok));
                if !ok {
                    break;
                }
                if irreducible.len() == max_steps {
                    return Err(Error::Sweep(format!(
                        "distribution still exists after {max_steps} doublings (alpha = {alpha:e})"
                    )));
                }
                irreducible.push(alpha);
            }
            if irreducible.is_empty() {
                return Err(Error::Sweep(format!(
                    "distribution does not exist at the starting alpha {alpha0:e}"
                )));
            }
            for &alpha in irreducible.iter().rev() {
                match solve(alpha) {
                    Ok(d) => return Ok(finish(alpha, d, trajectory)),
                    Err(e @ Error::SolverFailure { .. }) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
        }
        SweepMode::FixedWithDecrement { .. } => {
            for alpha in schedule(&config.mode)? {
                let tm = transition_matrix_from_graph(&graph, alpha, config.m)?;
                let ok = check_irreducible(&tm).is_ok();
                trajectory.push((alpha, ok));
                if !ok {
                    continue;
                }
                match stationary_distribution(&tm, config.tol) {
                    Ok(d) => return Ok(finish(alpha, d, trajectory)),
                    Err(e @ Error::SolverFailure { .. }) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            if last_err.is_none() {
                return Err(Error::Sweep(
                    "alpha reached zero before the distribution existed".into(),
                ));
            }
        }
    }
    Err(Error::Sweep(format!(
        "no alpha on the schedule produced a distribution: {}",
        last_err.expect("a solver failure was recorded")
    )))
}

fn finish(
    alpha: f64,
    mut distribution: RankDistribution,
    trajectory: Vec<(f64, bool)>,
) -> SweepResult {
    distribution.converged = true;
    SweepResult {
        alpha_pre: alpha,
        distribution,
        trajectory,
    }
}

/// The alpha values a sweep visits, in order.
fn schedule(mode: &SweepMode) -> Result<Box<dyn Iterator<Item = f64>>> {
    match *mode {
        SweepMode::Doubling {
            alpha0,
            factor,
            max_steps,
        } => {
            if !(alpha0 > 0.0 && alpha0.is_finite()) || !(factor > 1.0 && factor.is_finite()) {
                return Err(Error::Domain(format!(
                    "doubling sweep needs alpha0 > 0 and factor > 1, got {alpha0} and {factor}"
                )));
            }
            Ok(Box::new(
                (0..=max_steps + 1).map(move |k| alpha0 * factor.powi(k as i32)),
            ))
        }
        SweepMode::FixedWithDecrement { alpha_fixed, step } => {
            if !(alpha_fixed > 0.0 && alpha_fixed.is_finite()) || !(step > 0.0 && step.is_finite())
            {
                return Err(Error::Domain(format!(
                    "fixed sweep needs alpha_fixed > 0 and step > 0, got {alpha_fixed} and {step}"
                )));
            }
            // computed from the start each time so the values do not drift
            Ok(Box::new(
                (0..)
                    .map(move |j| alpha_fixed - j as f64 * step)
                    .take_while(|&a| a > 0.0),
            ))
        }
    }
}
