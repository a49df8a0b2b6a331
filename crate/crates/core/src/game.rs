//! Normal-form and Bayesian games over finite strategy sets.
//!
//! Joint strategy profiles are stored as a single mixed-radix integer with
//! player 0 as the most significant digit, so for a 2x2 game the profiles
//! `(0,0), (0,1), (1,0), (1,1)` have indices `0, 1, 2, 3`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Shape of a joint strategy space and the mixed-radix codec for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSpace {
    counts: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl ProfileSpace {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Domain("a game needs at least one player".into()));
        }
        if let Some(p) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Domain(format!("player {p} has no strategies")));
        }
        let mut strides = vec![1usize; counts.len()];
        let mut size = 1usize;
        for p in (0..counts.len()).rev() {
            strides[p] = size;
            size = size
                .checked_mul(counts[p])
                .ok_or_else(|| Error::Domain("joint strategy space too large".into()))?;
        }
        Ok(Self {
            counts,
            strides,
            size,
        })
    }

    pub fn n_players(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Number of joint profiles, `prod_i |S_i|`.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Number of single-player deviations from any profile, `sum_k (|S_k| - 1)`.
    pub fn deviation_count(&self) -> usize {
        self.counts.iter().map(|c| c - 1).sum()
    }

    pub fn stride(&self, player: usize) -> usize {
        self.strides[player]
    }

    pub fn index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.counts.len() {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.counts.len(),
                coords.len()
            )));
        }
        let mut idx = 0;
        for (p, (&c, &n)) in coords.iter().zip(&self.counts).enumerate() {
            if c >= n {
                return Err(Error::Domain(format!(
                    "strategy {c} out of range for player {p} ({n} strategies)"
                )));
            }
            idx += c * self.strides[p];
        }
        Ok(idx)
    }

    pub fn coords(&self, index: usize) -> Result<Vec<usize>> {
        self.check_index(index)?;
        Ok((0..self.counts.len())
            .map(|p| self.coord(index, p))
            .collect())
    }

    /// Strategy of `player` in profile `index`. The index is not range-checked.
    #[inline]
    pub fn coord(&self, index: usize, player: usize) -> usize {
        (index / self.strides[player]) % self.counts[player]
    }

    /// The profile reached when `player` switches to `strategy`.
    #[inline]
    pub fn with_strategy(&self, index: usize, player: usize, strategy: usize) -> usize {
        let current = self.coord(index, player);
        index - current * self.strides[player] + strategy * self.strides[player]
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.size {
            return Err(Error::Domain(format!(
                "profile index {index} out of range ({} profiles)",
                self.size
            )));
        }
        Ok(())
    }

    pub fn profile(&self, index: usize) -> Result<JointProfile> {
        Ok(JointProfile {
            index,
            coords: self.coords(index)?,
        })
    }
}

/// Mixed-radix encoding of per-player strategy indices.
pub fn profile_index(coords: &[usize], strategy_counts: &[usize]) -> Result<usize> {
    ProfileSpace::new(strategy_counts.to_vec())?.index(coords)
}

/// Inverse of [`profile_index`].
pub fn profile_coords(index: usize, strategy_counts: &[usize]) -> Result<Vec<usize>> {
    ProfileSpace::new(strategy_counts.to_vec())?.coords(index)
}

/// A joint strategy profile in both representations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointProfile {
    pub index: usize,
    pub coords: Vec<usize>,
}

/// A finite normal-form game with one dense payoff vector per player.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    space: ProfileSpace,
    payoffs: Vec<Vec<f64>>,
}

impl NormalFormGame {
    /// `payoffs[i][k]` is player `i`'s utility at profile index `k`.
    pub fn new(strategy_counts: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let space = ProfileSpace::new(strategy_counts)?;
        if payoffs.len() != space.n_players() {
            return Err(Error::Domain(format!(
                "expected payoffs for {} players, got {}",
                space.n_players(),
                payoffs.len()
            )));
        }
        for (p, row) in payoffs.iter().enumerate() {
            if row.len() != space.len() {
                return Err(Error::Domain(format!(
                    "player {p} has {} payoffs, expected {}",
                    row.len(),
                    space.len()
                )));
            }
            if let Some(k) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite payoff for player {p} at profile {k}"
                )));
            }
        }
        Ok(Self { space, payoffs })
    }

    /// Builds a game by evaluating `f(player, profile_index)` everywhere.
    pub fn from_fn(
        strategy_counts: Vec<usize>,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let space = ProfileSpace::new(strategy_counts)?;
        let payoffs = (0..space.n_players())
            .map(|p| (0..space.len()).map(|k| f(p, k)).collect())
            .collect();
        Self::new(space.counts().to_vec(), payoffs)
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn n_players(&self) -> usize {
        self.space.n_players()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        self.space.counts()
    }

    pub fn payoffs(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    /// Unchecked payoff lookup.
    #[inline]
    pub fn payoff(&self, player: usize, profile: usize) -> f64 {
        self.payoffs[player][profile]
    }

    pub fn utility(&self, player: usize, profile: &JointProfile) -> Result<f64> {
        if player >= self.n_players() {
            return Err(Error::Domain(format!("no player {player}")));
        }
        let idx = self.space.index(&profile.coords)?;
        if idx != profile.index {
            return Err(Error::Domain(format!(
                "profile index {} does not match its coordinates",
                profile.index
            )));
        }
        Ok(self.payoffs[player][idx])
    }

    /// Applies `u -> a*u + b` to every payoff.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        let payoffs = self
            .payoffs
            .iter()
            .map(|row| row.iter().map(|u| a * u + b).collect())
            .collect();
        Self::new(self.space.counts().to_vec(), payoffs)
    }
}

/// Per-player type vectors, e.g. vNM values per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeVector(pub Vec<Vec<f64>>);

impl TypeVector {
    pub fn new(per_player: Vec<Vec<f64>>) -> Self {
        Self(per_player)
    }

    pub fn player(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }

    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self(
            self.0
                .iter()
                .map(|v| v.iter().map(|x| a * x + b).collect())
                .collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

/// Default cap on rejection-sampling attempts.
pub const DEFAULT_MAX_REJECTIONS: usize = 10_000;

/// One coordinate of a Gaussian type prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate {
    Normal { mean: f64, stddev: f64 },
    Fixed(f64),
}

/// Acceptance predicate for rejection-sampled types.
#[derive(Clone)]
pub struct Validity {
    name: String,
    accept: Arc<dyn Fn(&TypeVector) -> bool + Send + Sync>,
}

impl Validity {
    pub fn new(
        name: impl Into<String>,
        accept: impl Fn(&TypeVector) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            accept: Arc::new(accept),
        }
    }

    pub fn always() -> Self {
        Self::new("always", |_| true)
    }

    /// Each player's coordinates are strictly decreasing: `v_0 > v_1 > ...`.
    pub fn strictly_decreasing() -> Self {
        Self::new("strictly_decreasing", |v: &TypeVector| {
            v.0.iter().all(|p| p.windows(2).all(|w| w[0] > w[1]))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn accepts(&self, v: &TypeVector) -> bool {
        (self.accept)(v)
    }
}

impl fmt::Debug for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Validity").field(&self.name).finish()
    }
}

/// Independent per-coordinate normal prior with rejection of invalid draws.
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    coords: Vec<Vec<Coordinate>>,
    validity: Validity,
    max_rejections: usize,
}

impl GaussianPrior {
    pub fn new(
        coords: Vec<Vec<Coordinate>>,
        validity: Validity,
        max_rejections: usize,
    ) -> Result<Self> {
        for c in coords.iter().flatten() {
            match *c {
                Coordinate::Normal { mean, stddev } => {
                    if !(stddev > 0.0 && stddev.is_finite() && mean.is_finite()) {
                        return Err(Error::Domain(format!(
                            "invalid normal coordinate N({mean}, {stddev})"
                        )));
                    }
                }
                Coordinate::Fixed(x) if !x.is_finite() => {
                    return Err(Error::Domain("non-finite fixed coordinate".into()));
                }
                Coordinate::Fixed(_) => {}
            }
        }
        if max_rejections == 0 {
            return Err(Error::Domain("max_rejections must be at least 1".into()));
        }
        Ok(Self {
            coords,
            validity,
            max_rejections,
        })
    }

    pub fn coordinates(&self) -> &[Vec<Coordinate>] {
        &self.coords
    }

    pub fn validity(&self) -> &Validity {
        &self.validity
    }

    pub fn max_rejections(&self) -> usize {
        self.max_rejections
    }

    /// The type vector holding every coordinate's mean.
    pub fn mean(&self) -> TypeVector {
        TypeVector(
            self.coords
                .iter()
                .map(|p| {
                    p.iter()
                        .map(|c| match *c {
                            Coordinate::Normal { mean, .. } => mean,
                            Coordinate::Fixed(x) => x,
                        })
                        .collect()
                })
                .collect(),
        )
    }
}

/// A finite-support prior over type vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePrior {
    support: Vec<(TypeVector, f64)>,
}

impl FinitePrior {
    pub fn new(support: Vec<(TypeVector, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Domain("finite prior has empty support".into()));
        }
        if support.iter().any(|(_, p)| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::Domain(
                "prior probabilities must be nonnegative".into(),
            ));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "prior probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { support })
    }

    pub fn point(v: TypeVector) -> Self {
        Self {
            support: vec![(v, 1.0)],
        }
    }

    pub fn support(&self) -> &[(TypeVector, f64)] {
        &self.support
    }
}

#[derive(Debug, Clone)]
pub enum Prior {
    Finite(FinitePrior),
    Gaussian(GaussianPrior),
}

impl Prior {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            Prior::Finite(f) => f.support[0].0.dims(),
            Prior::Gaussian(g) => g.coords.iter().map(Vec::len).collect(),
        }
    }
}

/// Draws one type vector from `prior` using `rng`.
pub fn sample_type<R: Rng + ?Sized>(prior: &Prior, rng: &mut R) -> Result<TypeVector> {
    match prior {
        Prior::Finite(f) => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (v, p) in &f.support {
                acc += p;
                if u < acc {
                    return Ok(v.clone());
                }
            }
            // u landed in the rounding gap above the cumulative sum
            let (v, _) = f
                .support
                .iter()
                .rev()
                .find(|(_, p)| *p > 0.0)
                .expect("prior has positive mass");
            Ok(v.clone())
        }
        Prior::Gaussian(g) => {
            for _ in 0..g.max_rejections {
                let v = TypeVector(
                    g.coords
                        .iter()
                        .map(|p| {
                            p.iter()
                                .map(|c| match *c {
                                    Coordinate::Normal { mean, stddev } => {
                                        Normal::new(mean, stddev)
                                            .expect("validated stddev")
                                            .sample(rng)
                                    }
                                    Coordinate::Fixed(x) => x,
                                })
                                .collect()
                        })
                        .collect(),
                );
                if g.validity.accepts(&v) {
                    return Ok(v);
                }
            }
            Err(Error::Sampling {
                attempts: g.max_rejections,
            })
        }
    }
}

/// Utility of a player at a profile given the full type vector.
pub trait TypeUtility: Send + Sync {
    fn utility(&self, player: usize, profile: usize, types: &TypeVector) -> f64;
}

impl<F> TypeUtility for F
where
    F: Fn(usize, usize, &TypeVector) -> f64 + Send + Sync,
{
    fn utility(&self, player: usize, profile: usize, types: &TypeVector) -> f64 {
        self(player, profile, types)
    }
}

/// A Bayesian game: a normal-form game family indexed by types, plus a prior.
#[derive(Clone)]
pub struct BayesianGame {
    space: ProfileSpace,
    type_dims: Vec<usize>,
    prior: Prior,
    utility: Arc<dyn TypeUtility>,
    private_values: bool,
}

impl BayesianGame {
    pub fn new(
        strategy_counts: Vec<usize>,
        type_dims: Vec<usize>,
        prior: Prior,
        utility: Arc<dyn TypeUtility>,
        private_values: bool,
    ) -> Result<Self> {
        let space = ProfileSpace::new(strategy_counts)?;
        if type_dims.len() != space.n_players() {
            return Err(Error::Domain(
                "one type dimension per player required".into(),
            ));
        }
        if prior.dims() != type_dims {
            return Err(Error::Domain(format!(
                "prior dimensions {:?} do not match type dimensions {:?}",
                prior.dims(),
                type_dims
            )));
        }
        Ok(Self {
            space,
            type_dims,
            prior,
            utility,
            private_values,
        })
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn type_dims(&self) -> &[usize] {
        &self.type_dims
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn private_values(&self) -> bool {
        self.private_values
    }

    /// Same game with a different prior.
    pub fn with_prior(&self, prior: Prior) -> Result<Self> {
        Self::new(
            self.space.counts().to_vec(),
            self.type_dims.clone(),
            prior,
            Arc::clone(&self.utility),
            self.private_values,
        )
    }

    pub fn utility(&self, player: usize, profile: usize, types: &TypeVector) -> f64 {
        self.utility.utility(player, profile, types)
    }

    /// The normal-form game induced by the type vector `v`.
    pub fn realize(&self, v: &TypeVector) -> Result<NormalFormGame> {
        if v.dims() != self.type_dims {
            return Err(Error::Domain(format!(
                "type vector dimensions {:?} do not match {:?}",
                v.dims(),
                self.type_dims
            )));
        }
        let n = self.space.len();
        let mut payoffs = Vec::with_capacity(self.space.n_players());
        for p in 0..self.space.n_players() {
            let row: Vec<f64> = (0..n).map(|k| self.utility.utility(p, k, v)).collect();
            if let Some(k) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!(
                    "utility of player {p} at profile {k} is not finite"
                )));
            }
            payoffs.push(row);
        }
        NormalFormGame::new(self.space.counts().to_vec(), payoffs)
    }
}

impl fmt::Debug for BayesianGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BayesianGame")
            .field("strategy_counts", &self.space.counts())
            .field("type_dims", &self.type_dims)
            .field("prior", &self.prior)
            .field("private_values", &self.private_values)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_corner_cases() {
        assert_eq!(profile_index(&[0, 0], &[2, 2]).unwrap(), 0);
        assert_eq!(profile_index(&[1, 1], &[2, 2]).unwrap(), 3);
        assert_eq!(profile_index(&[0, 1], &[2, 2]).unwrap(), 1);
        assert!(matches!(
            profile_index(&[2, 0], &[2, 2]),
            Err(Error::Domain(_))
        ));
        assert!(profile_index(&[0], &[2, 2]).is_err());
        assert!(profile_coords(4, &[2, 2]).is_err());
    }

    #[test]
    fn round_trip_matching_shape_exhaustive() {
        let counts = [6, 6, 6, 6, 6];
        let space = ProfileSpace::new(counts.to_vec()).unwrap();
        assert_eq!(space.len(), 7776);
        for k in 0..space.len() {
            let c = space.coords(k).unwrap();
            assert_eq!(space.index(&c).unwrap(), k);
        }
        let k = space.index(&[5, 0, 3, 2, 1]).unwrap();
        assert_eq!(space.coords(k).unwrap(), vec![5, 0, 3, 2, 1]);
    }

    #[test]
    fn with_strategy_matches_codec() {
        let space = ProfileSpace::new(vec![3, 2, 4]).unwrap();
        for k in 0..space.len() {
            for p in 0..3 {
                for s in 0..space.counts()[p] {
                    let mut c = space.coords(k).unwrap();
                    c[p] = s;
                    assert_eq!(space.with_strategy(k, p, s), space.index(&c).unwrap());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_games() {
        assert!(NormalFormGame::new(vec![2, 0], vec![vec![], vec![]]).is_err());
        assert!(NormalFormGame::new(vec![2], vec![vec![0.0]]).is_err());
        assert!(matches!(
            NormalFormGame::new(vec![2], vec![vec![0.0, f64::NAN]]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn finite_prior_validation() {
        let v = TypeVector::new(vec![vec![1.0]]);
        assert!(FinitePrior::new(vec![(v.clone(), 0.5)]).is_err());
        assert!(FinitePrior::new(vec![(v.clone(), -0.5), (v.clone(), 1.5)]).is_err());
        assert!(FinitePrior::new(vec![(v.clone(), 0.25), (v, 0.75)]).is_ok());
    }

    #[test]
    fn degenerate_finite_prior_always_returns_its_point() {
        let v = TypeVector::new(vec![vec![4.0, 0.0, -2.0]]);
        let prior = Prior::Finite(FinitePrior::point(v.clone()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_type(&prior, &mut rng).unwrap(), v);
        }
    }

    fn matching_like_prior() -> Prior {
        let student = vec![
            Coordinate::Normal {
                mean: 100.0,
                stddev: 6.0,
            },
            Coordinate::Normal {
                mean: 70.0,
                stddev: 3.0,
            },
            Coordinate::Normal {
                mean: 25.0,
                stddev: 2.0,
            },
            Coordinate::Fixed(0.0),
        ];
        Prior::Gaussian(
            GaussianPrior::new(
                vec![student; 5],
                Validity::strictly_decreasing(),
                DEFAULT_MAX_REJECTIONS,
            )
            .unwrap(),
        )
    }

    #[test]
    fn gaussian_samples_satisfy_predicate() {
        let prior = matching_like_prior();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let v = sample_type(&prior, &mut rng).unwrap();
            for p in &v.0 {
                assert!(p[0] > p[1] && p[1] > p[2] && p[2] > 0.0 && p[3] == 0.0);
            }
        }
    }

    #[test]
    fn gaussian_sampler_is_deterministic() {
        let prior = matching_like_prior();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_type(&prior, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn exhausted_rejection_budget_reports_attempts() {
        let prior = Prior::Gaussian(
            GaussianPrior::new(
                vec![vec![Coordinate::Normal {
                    mean: 0.0,
                    stddev: 1.0,
                }]],
                Validity::new("never", |_| false),
                100,
            )
            .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_type(&prior, &mut rng),
            Err(Error::Sampling { attempts: 100 })
        );
    }

    #[test]
    fn gaussian_prior_rejects_nonpositive_stddev() {
        let c = vec![vec![Coordinate::Normal {
            mean: 0.0,
            stddev: 0.0,
        }]];
        assert!(GaussianPrior::new(c, Validity::always(), 10).is_err());
    }

    proptest! {
        #[test]
        fn codec_round_trip(counts in prop::collection::vec(1usize..6, 1..5), seed in any::<u64>()) {
            let space = ProfileSpace::new(counts).unwrap();
            let k = (seed % space.len() as u64) as usize;
            let c = space.coords(k).unwrap();
            prop_assert_eq!(space.index(&c).unwrap(), k);
            for (p, &x) in c.iter().enumerate() {
                prop_assert!(x < space.counts()[p]);
            }
        }
    }
}
