//! Expected limiting distributions of Bayesian games: exact for finite
//! priors, Monte-Carlo for anything that can be sampled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha_rank::{alpha_sweep, SweepConfig, SweepMode};
use crate::error::{Error, Result};
use crate::game::{sample_type, BayesianGame, Prior, ProfileSpace, TypeVector};

pub use crate::mechanisms::hawk_dove::hawk_dove_closed_form;

/// Largest fraction of Monte-Carlo samples that may be skipped.
pub const MAX_SKIP_FRACTION: f64 = 0.1;

/// How one sample or support point was handled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    /// Alpha at which the distribution was taken; `None` if skipped.
    pub alpha: Option<f64>,
    /// Set when the first sweep failed and the retry policy was used.
    pub retried: bool,
}

#[derive(Debug, Clone)]
pub struct Collection {
    pub probabilities: Vec<f64>,
    /// Per-entry standard error of the mean; zeros for exact collections.
    pub stderr: Vec<f64>,
    /// Samples drawn (Monte-Carlo) or support points (exact).
    pub n_samples: usize,
    pub skipped: usize,
    pub config: SweepConfig,
    pub records: Vec<SampleRecord>,
    pub exact: bool,
}

impl Collection {
    pub fn mass_on(&self, profiles: &[usize]) -> f64 {
        profiles.iter().map(|&k| self.probabilities[k]).sum()
    }

    /// Alphas used, skipping the samples that failed.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| r.alpha)
    }
}

/// `sum_k p_k g(u(., v_k))` over a finite prior, with `g` from [`alpha_sweep`].
pub fn exact_collection(bg: &BayesianGame, config: &SweepConfig) -> Result<Collection> {
    let Prior::Finite(prior) = bg.prior() else {
        return Err(Error::Domain(
            "exact collection needs a finite prior".into(),
        ));
    };
    let support = prior.support();
    let results: Vec<Result<Option<(Vec<f64>, f64)>>> = support
        .par_iter()
        .enumerate()
        .map(|(k, (v, w))| {
            if *w == 0.0 {
                return Ok(None);
            }
            let wrap = |e: Error| Error::Sweep(format!("support point {k} ({:?}): {e}", v.0));
            let game = bg.realize(v).map_err(wrap)?;
            let r = alpha_sweep(&game, config).map_err(wrap)?;
            Ok(Some((r.distribution.probabilities, r.alpha_pre)))
        })
        .collect();

    let n = bg.space().len();
    let mut probabilities = vec![0.0; n];
    let mut records = Vec::with_capacity(support.len());
    for (k, (res, (_, w))) in results.into_iter().zip(support).enumerate() {
        let alpha = match res? {
            Some((d, alpha)) => {
                for (acc, x) in probabilities.iter_mut().zip(&d) {
                    *acc += w * x;
                }
                Some(alpha)
            }
            None => None,
        };
        records.push(SampleRecord {
            index: k,
            alpha,
            retried: false,
        });
    }
    Ok(Collection {
        probabilities,
        stderr: vec![0.0; n],
        n_samples: support.len(),
        skipped: 0,
        config: *config,
        records,
        exact: true,
    })
}

/// The random stream of sample `index` under `master_seed`.
pub fn sample_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

/// Sweep used for a sample whose first sweep failed: fixed mode from half
/// the smallest alpha the original schedule visits, in steps of one hundredth
/// of that.
pub fn retry_config(config: &SweepConfig) -> SweepConfig {
    let lowest = match config.mode {
        SweepMode::Doubling { alpha0, .. } => alpha0,
        SweepMode::FixedWithDecrement { alpha_fixed, step } => {
            let j = ((alpha_fixed / step).ceil() - 1.0).max(0.0);
            alpha_fixed - j * step
        }
    };
    let start = lowest / 2.0;
    SweepConfig {
        mode: SweepMode::FixedWithDecrement {
            alpha_fixed: start,
            step: start / 100.0,
        },
        ..*config
    }
}

/// The type vector at the prior mean: the weighted average of the support
/// for finite priors, the coordinate means for Gaussian ones.
pub fn prior_mean(prior: &Prior) -> TypeVector {
    match prior {
        Prior::Gaussian(g) => g.mean(),
        Prior::Finite(f) => {
            let mut acc: Vec<Vec<f64>> = prior.dims().iter().map(|&d| vec![0.0; d]).collect();
            for (v, w) in f.support() {
                for (a, p) in acc.iter_mut().zip(&v.0) {
                    for (x, y) in a.iter_mut().zip(p) {
                        *x += w * y;
                    }
                }
            }
            TypeVector::new(acc)
        }
    }
}

/// Fixed-mode sweep that starts every sample at the alpha found by `config`
/// for the prior-mean game and steps down by `step` (default: one hundredth
/// of that alpha) when a sample's chain is reducible there.
pub fn prior_mean_config(
    bg: &BayesianGame,
    config: &SweepConfig,
    step: Option<f64>,
) -> Result<SweepConfig> {
    let game = bg.realize(&prior_mean(bg.prior()))?;
    let alpha = alpha_sweep(&game, config)?.alpha_pre;
    Ok(SweepConfig {
        mode: SweepMode::FixedWithDecrement {
            alpha_fixed: alpha,
            step: step.unwrap_or(alpha / 100.0),
        },
        ..*config
    })
}

fn is_sweep_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::Sweep(_) | Error::SolverFailure { .. } | Error::NotIrreducible { .. }
    )
}

/// Mean of `n_samples` sweep distributions over types drawn from the prior.
///
/// Sample `i` draws from [`sample_rng`]`(master_seed, i)`, so the result does
/// not depend on the number of threads. A sample whose sweep fails is retried
/// once with [`retry_config`] and skipped if that fails too.
pub fn monte_carlo_collection(
    bg: &BayesianGame,
    n_samples: usize,
    master_seed: u64,
    config: &SweepConfig,
) -> Result<Collection> {
    if n_samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let results: Vec<Result<(SampleRecord, Option<Vec<f64>>)>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(master_seed, i);
            let v = sample_type(bg.prior(), &mut rng)?;
            let game = bg.realize(&v)?;
            let (res, retried) = match alpha_sweep(&game, config) {
                Err(e) if is_sweep_failure(&e) => (alpha_sweep(&game, &retry_config(config)), true),
                other => (other, false),
            };
            match res {
                Ok(r) => Ok((
                    SampleRecord {
                        index: i,
                        alpha: Some(r.alpha_pre),
                        retried,
                    },
                    Some(r.distribution.probabilities),
                )),
                Err(e) if is_sweep_failure(&e) => Ok((
                    SampleRecord {
                        index: i,
                        alpha: None,
                        retried,
                    },
                    None,
                )),
                Err(e) => Err(e),
            }
        })
        .collect();

    let n = bg.space().len();
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut used = 0usize;
    let mut records = Vec::with_capacity(n_samples);
    for res in results {
        let (record, dist) = res?;
        records.push(record);
        let Some(x) = dist else { continue };
        used += 1;
        let k = used as f64;
        for ((m, s), &xi) in mean.iter_mut().zip(m2.iter_mut()).zip(&x) {
            let d = xi - *m;
            *m += d / k;
            *s += d * (xi - *m);
        }
    }
    let skipped = n_samples - used;
    if skipped as f64 > MAX_SKIP_FRACTION * n_samples as f64 || used == 0 {
        return Err(Error::ExcessiveSkips {
            skipped,
            total: n_samples,
        });
    }
    let stderr = if used > 1 {
        let k = used as f64;
        m2.iter()
            .map(|s| (s.max(0.0) / (k - 1.0)).sqrt() / k.sqrt())
            .collect()
    } else {
        vec![0.0; n]
    };
    Ok(Collection {
        probabilities: mean,
        stderr,
        n_samples,
        skipped,
        config: *config,
        records,
        exact: false,
    })
}

/// For each group of players, the mass of each strategy averaged over the
/// group's per-player marginals.
pub fn group_marginals(
    probabilities: &[f64],
    space: &ProfileSpace,
    groups: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>> {
    if probabilities.len() != space.len() {
        return Err(Error::Domain(format!(
            "{} masses for {} profiles",
            probabilities.len(),
            space.len()
        )));
    }
    let mut seen = vec![false; space.n_players()];
    for g in groups {
        if g.is_empty() {
            return Err(Error::Domain("empty player group".into()));
        }
        for &p in g {
            if p >= seen.len() || seen[p] {
                return Err(Error::Domain(format!(
                    "groups {groups:?} do not partition the players"
                )));
            }
            seen[p] = true;
        }
        let c = space.counts()[g[0]];
        if g.iter().any(|&p| space.counts()[p] != c) {
            return Err(Error::Domain(format!(
                "players in group {g:?} differ in strategy count"
            )));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Domain(format!(
            "groups {groups:?} do not cover every player"
        )));
    }
    Ok(groups
        .iter()
        .map(|g| {
            let mut row = vec![0.0; space.counts()[g[0]]];
            for (k, &w) in probabilities.iter().enumerate() {
                for &p in g {
                    row[space.coord(k, p)] += w;
                }
            }
            row.iter().map(|x| x / g.len() as f64).collect()
        })
        .collect())
}
