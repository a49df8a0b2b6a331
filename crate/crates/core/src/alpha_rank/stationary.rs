//! Stationary distributions of the transition chain.
//!
//! The primary solver is the Grassmann-Taksar-Heyman (GTH) elimination on a
//! dense copy of the off-diagonal rates. GTH never subtracts: each pivot is
//! the sum of the remaining off-diagonal rates of its row and the Schur
//! complement updates only add nonnegative terms. That keeps every entry of
//! the result accurate to a small relative error even when the chain is
//! nearly reducible, which is exactly the regime the alpha sweep probes.
//!
//! The elimination is blocked: a panel of `BLOCK` states is eliminated with
//! rank-1 updates restricted to the panel, and the trailing rates are then
//! updated with one matrix product.

use rayon::prelude::*;

use super::transition::TransitionMatrix;
use super::RankDistribution;
use crate::error::{Error, Result};
use crate::graph::{closed_components, is_strongly_connected, Digraph};

/// Off-diagonal entries at or below this value do not count as edges when
/// testing whether the chain is irreducible.
pub const CONNECTIVITY_THRESHOLD: f64 = 1e-15;

/// Default bound on `||pi C - pi||_inf`.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Negative entries down to this value are treated as round-off.
const NEGATIVE_CLAMP: f64 = -1e-14;

const BLOCK: usize = 128;
const PANEL_ROWS: usize = 64;
const GEMM_ROWS: usize = 1024;

/// Stationary solver backends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Dense GTH elimination.
    Gth,
    /// `pi <- pi C` from the uniform vector until the L1 change drops below
    /// `step_tol` or `max_steps` is reached.
    PowerIteration { max_steps: usize, step_tol: f64 },
}

/// Graph of transitions whose probability exceeds `threshold`.
pub fn support_graph(tm: &TransitionMatrix, threshold: f64) -> Digraph {
    let n = tm.size();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for s in 0..n {
        targets.extend(tm.row(s).filter(|&(_, p)| p > threshold).map(|(t, _)| t));
        offsets.push(targets.len());
    }
    Digraph::from_csr(offsets, targets)
}

/// Checks that the thresholded chain is strongly connected.
pub fn check_irreducible(tm: &TransitionMatrix) -> Result<()> {
    let g = support_graph(tm, CONNECTIVITY_THRESHOLD);
    if is_strongly_connected(&g) {
        Ok(())
    } else {
        Err(Error::NotIrreducible {
            alpha: tm.alpha(),
            closed_classes: closed_components(&g).len(),
        })
    }
}

/// `||pi C - pi||_inf`.
pub fn residual(tm: &TransitionMatrix, pi: &[f64]) -> f64 {
    let next = step(tm, pi);
    next.iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn step(tm: &TransitionMatrix, pi: &[f64]) -> Vec<f64> {
    let mut next: Vec<f64> = pi
        .iter()
        .enumerate()
        .map(|(s, &x)| x * tm.diagonal(s))
        .collect();
    for (s, &x) in pi.iter().enumerate() {
        if x != 0.0 {
            for (t, p) in tm.row(s) {
                next[t] += x * p;
            }
        }
    }
    next
}

/// The unique stationary distribution, if the chain is irreducible.
pub fn stationary_distribution(tm: &TransitionMatrix, tol: f64) -> Result<RankDistribution> {
    stationary_distribution_with(tm, tol, Backend::Gth)
}

pub fn stationary_distribution_with(
    tm: &TransitionMatrix,
    tol: f64,
    backend: Backend,
) -> Result<RankDistribution> {
    check_irreducible(tm)?;
    let raw = match backend {
        Backend::Gth => gth(tm)?,
        Backend::PowerIteration {
            max_steps,
            step_tol,
        } => power_iteration(tm, max_steps, step_tol),
    };
    let probabilities = clamp_and_normalize(raw)?;
    let residual = residual(tm, &probabilities);
    if !(residual <= tol) {
        return Err(Error::SolverFailure { residual, tol });
    }
    Ok(RankDistribution {
        probabilities,
        alpha: tm.alpha(),
        residual,
        converged: false,
    })
}

fn clamp_and_normalize(mut pi: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(x) = pi.iter().find(|x| !x.is_finite() || **x < NEGATIVE_CLAMP) {
        return Err(Error::Numeric(format!(
            "stationary solve produced entry {x}"
        )));
    }
    for x in pi.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric(
            "stationary solve produced a zero vector".into(),
        ));
    }
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}

/// Power iteration from the uniform distribution. Returns the last iterate.
pub fn power_iteration(tm: &TransitionMatrix, max_steps: usize, step_tol: f64) -> Vec<f64> {
    let n = tm.size();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..max_steps {
        let next = step(tm, &pi);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < step_tol {
            break;
        }
    }
    pi
}

/// Stationary vector by GTH without the thresholded existence test. Entries
/// far below [`CONNECTIVITY_THRESHOLD`] still count, so this evaluates the
/// distribution wherever the chain is irreducible in exact arithmetic.
pub fn gth_stationary(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    clamp_and_normalize(gth(tm)?)
}

/// GTH elimination. States are eliminated in index order and the last state
/// is the root of the back substitution.
fn gth(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = tm.size();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut a = vec![0.0f64; n * n];
    for s in 0..n {
        let row = &mut a[s * n..(s + 1) * n];
        for (t, p) in tm.row(s) {
            row[t] += p;
        }
        row[s] = 0.0;
    }
    let sums = gth_eliminate(&mut a, n).map_err(|state| {
        Error::Numeric(format!(
            "GTH pivot for state {state} vanished; chain is reducible"
        ))
    })?;
    debug_assert_eq!(sums.len(), n - 1);
    Ok(gth_back_substitute(&a, n))
}

/// Eliminates states `0..n-1`, leaving multipliers `L[i][k] = a[i][k] / S_k`
/// below the diagonal. Returns the pivots `S_k`, or the failing state.
fn gth_eliminate(a: &mut [f64], n: usize) -> std::result::Result<Vec<f64>, usize> {
    let last = n - 1;
    let mut sums = vec![0.0; last];
    let mut k0 = 0;
    while k0 < last {
        let k1 = (k0 + BLOCK).min(last);

        // Panel rows: full elimination restricted to rows k0..k1.
        for k in k0..k1 {
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..];
            let s: f64 = row_k[k + 1..].iter().sum();
            if !(s > 0.0) {
                return Err(k);
            }
            sums[k] = s;
            for row_i in tail.chunks_exact_mut(n).take(k1 - k - 1) {
                let l = row_i[k] / s;
                row_i[k] = l;
                if l != 0.0 {
                    axpy(l, &row_k[k + 1..], &mut row_i[k + 1..]);
                }
            }
        }

        let (head, tail) = a.split_at_mut(k1 * n);
        let panel: &[f64] = &head[k0 * n..];
        let pivots = &sums[k0..k1];

        // Trailing rows: apply the panel's eliminations to columns k0..k1.
        tail.par_chunks_mut(PANEL_ROWS * n).for_each(|chunk| {
            for row_i in chunk.chunks_exact_mut(n) {
                for (kk, k) in (k0..k1).enumerate() {
                    let l = row_i[k] / pivots[kk];
                    row_i[k] = l;
                    if l != 0.0 {
                        let row_k = &panel[kk * n..(kk + 1) * n];
                        axpy(l, &row_k[k + 1..k1], &mut row_i[k + 1..k1]);
                    }
                }
            }
        });

        // Trailing update: rates[R][R] += L[R][K] * U[K][R].
        let rest = n - k1;
        let kb = k1 - k0;
        tail.par_chunks_mut(GEMM_ROWS * n).for_each(|chunk| {
            let rows = chunk.len() / n;
            let base = chunk.as_mut_ptr();
            // SAFETY: the left factor (columns k0..k1) and the output
            // (columns k1..n) are disjoint column ranges of `chunk`, the right
            // factor lives in `panel`, and all strides stay in bounds.
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    kb,
                    rest,
                    1.0,
                    base.add(k0) as *const f64,
                    n as isize,
                    1,
                    panel.as_ptr().add(k1),
                    n as isize,
                    1,
                    1.0,
                    base.add(k1),
                    n as isize,
                    1,
                );
            }
        });

        k0 = k1;
    }
    Ok(sums)
}

/// `pi_k = sum_{i > k} pi_i L[i][k]`, accumulated row by row from the root.
fn gth_back_substitute(a: &[f64], n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n];
    acc[n - 1] = 1.0;
    for i in (0..n).rev() {
        let mut v = acc[i];
        if v > 1e150 {
            // keep magnitudes bounded; only ratios matter
            let scale = 1.0 / v;
            acc.iter_mut().for_each(|x| *x *= scale);
            v = acc[i];
        }
        if v != 0.0 {
            axpy(v, &a[i * n..i * n + i], &mut acc[..i]);
        }
    }
    acc
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
