use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::graph::{build_game_graph, GameGraph};

/// Default finite population size.
pub const DEFAULT_POPULATION: usize = 50;

/// `(1 - e^{-x}) / (1 - e^{-m x})`, the fixation probability of a mutant with
/// fitness advantage `x = alpha * delta` in a population of size `m`.
///
/// Evaluated without overflow for any finite `x`. For `x < 0` the ratio is
/// rewritten as `e^{-(m-1)|x|} (1 - e^{-|x|}) / (1 - e^{-m|x|})`.
pub fn fixation_ratio(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        1.0 / m
    } else if x > 0.0 {
        (-x).exp_m1() / (-m * x).exp_m1()
    } else {
        let y = -x;
        (-(m - 1.0) * y).exp() * ((-y).exp_m1() / (-m * y).exp_m1())
    }
}

/// Row-stochastic transition matrix of the single-mutation chain.
///
/// Off-diagonal entries follow the game graph: node `s` has its outgoing
/// deviations stored at `s * degree .. (s + 1) * degree`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    alpha: f64,
    m: usize,
    eta: f64,
    degree: usize,
    targets: Vec<usize>,
    values: Vec<f64>,
    diagonal: Vec<f64>,
}

impl TransitionMatrix {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn population(&self) -> usize {
        self.m
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    /// Off-diagonal `(target, probability)` pairs of row `s`.
    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = s * self.degree..(s + 1) * self.degree;
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self, s: usize) -> f64 {
        self.diagonal[s]
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diagonal[from];
        }
        self.row(from)
            .find(|&(t, _)| t == to)
            .map_or(0.0, |(_, p)| p)
    }

    /// Dense copy, for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut d = vec![vec![0.0; n]; n];
        for (s, row) in d.iter_mut().enumerate() {
            row[s] = self.diagonal[s];
            for (t, p) in self.row(s) {
                row[t] += p;
            }
        }
        d
    }

    /// Two-state or small matrices given directly; rows must be stochastic.
    /// Used to exercise the stationary solvers on arbitrary chains.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("matrix must be square and nonempty".into()));
        }
        let degree = n - 1;
        let mut targets = Vec::with_capacity(n * degree);
        let mut values = Vec::with_capacity(n * degree);
        let mut diagonal = Vec::with_capacity(n);
        for (s, r) in rows.iter().enumerate() {
            if r.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Domain(format!(
                    "row {s} has an entry outside [0, 1]"
                )));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("row {s} sums to {sum}")));
            }
            for (t, &p) in r.iter().enumerate() {
                if t != s {
                    targets.push(t);
                    values.push(p);
                }
            }
            diagonal.push(r[s]);
        }
        Ok(Self {
            alpha: f64::NAN,
            m: 0,
            eta: f64::NAN,
            degree,
            targets,
            values,
            diagonal,
        })
    }
}

/// Builds the transition matrix for selection intensity `alpha` and
/// population size `m`.
pub fn transition_matrix(game: &NormalFormGame, alpha: f64, m: usize) -> Result<TransitionMatrix> {
    transition_matrix_from_graph(&build_game_graph(game), alpha, m)
}

/// Same as [`transition_matrix`] but reuses a prebuilt game graph.
pub fn transition_matrix_from_graph(
    graph: &GameGraph,
    alpha: f64,
    m: usize,
) -> Result<TransitionMatrix> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if m < 2 {
        return Err(Error::Domain(format!(
            "population size must be at least 2, got {m}"
        )));
    }
    let n = graph.node_count();
    let degree = graph.out_degree();
    let eta = if degree == 0 {
        1.0
    } else {
        1.0 / degree as f64
    };
    let mf = m as f64;
    let mut targets = Vec::with_capacity(n * degree);
    let mut values = Vec::with_capacity(n * degree);
    let mut diagonal = Vec::with_capacity(n);
    for s in 0..n {
        let mut out = 0.0;
        for e in graph.edges(s) {
            let p = eta * fixation_ratio(alpha * e.delta, mf);
            if !p.is_finite() {
                return Err(Error::Numeric(format!(
                    "transition probability {s} -> {} is not finite",
                    e.to
                )));
            }
            targets.push(e.to);
            values.push(p);
            out += p;
        }
        diagonal.push(1.0 - out);
    }
    Ok(TransitionMatrix {
        alpha,
        m,
        eta,
        degree,
        targets,
        values,
        diagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::hawk_dove;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_delta_is_eta_over_m() {
        assert_eq!(0.5 * fixation_ratio(0.0, 50.0), 0.01);
    }

    #[test]
    fn pd_improving_edge() {
        let tm = transition_matrix(&hawk_dove::prisoners_dilemma(), 10.0, 50).unwrap();
        assert_eq!(tm.eta(), 0.5);
        // (Dove,Dove) = 3 -> (Hawk,Dove) = 1, delta = +2
        let expected = 0.5 * (1.0 - (-20.0f64).exp()) / (1.0 - (-1000.0f64).exp());
        approx::assert_relative_eq!(tm.entry(3, 1), expected, max_relative = 1e-15);
        approx::assert_abs_diff_eq!(tm.entry(3, 1), 0.4999999990, epsilon = 1e-10);
    }

    #[test]
    fn pd_worsening_edge_underflows_to_zero() {
        let tm = transition_matrix(&hawk_dove::prisoners_dilemma(), 50.0, 50).unwrap();
        // (Hawk,Hawk) = 0 -> (Dove,Hawk) = 2, delta = -1
        assert!(tm.entry(0, 2) < 1e-300);
        assert_eq!(tm.entry(0, 2), 0.0);
        assert_eq!(tm.diagonal(0), 1.0);
    }

    #[test]
    fn no_overflow_at_extreme_arguments() {
        for x in [-1e308, -1e5, -710.0, -1e-300, 1e-300, 710.0, 1e5, 1e308] {
            let r = fixation_ratio(x, 50.0);
            assert!(r.is_finite() && (0.0..=1.0).contains(&r), "x = {x}: {r}");
        }
    }

    #[test]
    fn zero_delta_limit_is_continuous() {
        let eta = 0.25;
        let m = 50.0;
        for alpha in [0.1, 1.0, 5.0] {
            for d in [1e-9, -1e-9] {
                let e = eta * fixation_ratio(alpha * d, m);
                assert!((e - eta / m).abs() <= 1e-6 * eta);
            }
        }
    }

    #[test]
    fn matches_naive_formula_where_naive_is_safe() {
        for x in [-2.0, -0.3, -1e-4, 1e-4, 0.7, 3.0] {
            let naive = (1.0 - f64::exp(-x)) / (1.0 - f64::exp(-50.0 * x));
            approx::assert_relative_eq!(fixation_ratio(x, 50.0), naive, max_relative = 1e-10);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = hawk_dove::prisoners_dilemma();
        assert!(transition_matrix(&g, 0.0, 50).is_err());
        assert!(transition_matrix(&g, -1.0, 50).is_err());
        assert!(transition_matrix(&g, 1.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(seed in any::<u64>(), alpha in 1e-3f64..100.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let counts: Vec<usize> = (0..rng.random_range(1..4)).map(|_| rng.random_range(1..4)).collect();
            let game = NormalFormGame::from_fn(counts, |_, _| rng.random_range(-10.0..10.0)).unwrap();
            let tm = transition_matrix(&game, alpha, 50).unwrap();
            let deg = game.space().deviation_count();
            for s in 0..tm.size() {
                let mut sum = tm.diagonal(s);
                let mut nnz = 0;
                for (_, p) in tm.row(s) {
                    prop_assert!((0.0..=tm.eta() + 1e-15).contains(&p));
                    if p > 0.0 { nnz += 1; }
                    sum += p;
                }
                prop_assert!(nnz <= deg);
                prop_assert!((0.0..=1.0).contains(&tm.diagonal(s)));
                prop_assert!((sum - 1.0).abs() <= 1e-12);
            }
        }
    }
}
