//! The Hawk-Dove game parameterized by each player's vNM values for
//! winning the resource, getting nothing, and paying the cost of a fight.
//!
//! Strategy 0 is Hawk, strategy 1 is Dove.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::game::{BayesianGame, FinitePrior, NormalFormGame, Prior, TypeVector};

pub const HAWK: usize = 0;
pub const DOVE: usize = 1;

/// vNM values `(V, N, C)`: resource, nothing, cost of war.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkDoveType {
    pub resource: f64,
    pub nothing: f64,
    pub cost: f64,
}

impl HawkDoveType {
    /// Type that turns the symmetric game into a Prisoner's Dilemma.
    pub const PRISONERS_DILEMMA: Self = Self {
        resource: 4.0,
        nothing: 0.0,
        cost: -2.0,
    };
    /// Type that turns the symmetric game into an anti-coordination game.
    pub const ANTI_COORDINATION: Self = Self {
        resource: 2.0,
        nothing: 0.0,
        cost: -4.0,
    };

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.resource, self.nothing, self.cost]
    }
}

/// Expected utility from the outcome lottery of each action pair, for a
/// player with values `(v, n, c)` given as a slice.
fn payoff(values: &[f64], own: usize, other: usize) -> f64 {
    let (v, n, c) = (values[0], values[1], values[2]);
    match (own, other) {
        (HAWK, HAWK) => 0.5 * v + 0.5 * c,
        (HAWK, _) => v,
        (_, HAWK) => n,
        _ => 0.5 * v + 0.5 * n,
    }
}

fn utility(player: usize, profile: usize, types: &TypeVector) -> f64 {
    // profile = 2 * s_0 + s_1
    let (s0, s1) = (profile / 2, profile % 2);
    let (own, other) = if player == 0 { (s0, s1) } else { (s1, s0) };
    payoff(types.player(player), own, other)
}

/// The normal-form game for a pair of player types.
pub fn instance(row: HawkDoveType, column: HawkDoveType) -> NormalFormGame {
    let types = TypeVector::new(vec![row.to_vec(), column.to_vec()]);
    NormalFormGame::from_fn(vec![2, 2], |p, k| utility(p, k, &types))
        .expect("hawk-dove payoffs are finite")
}

/// Both players of Prisoner's Dilemma type.
pub fn prisoners_dilemma() -> NormalFormGame {
    instance(
        HawkDoveType::PRISONERS_DILEMMA,
        HawkDoveType::PRISONERS_DILEMMA,
    )
}

/// Both players of anti-coordination type.
pub fn anti_coordination() -> NormalFormGame {
    instance(
        HawkDoveType::ANTI_COORDINATION,
        HawkDoveType::ANTI_COORDINATION,
    )
}

/// Row player of Prisoner's Dilemma type, column player of anti-coordination type.
pub fn mixed() -> NormalFormGame {
    instance(
        HawkDoveType::PRISONERS_DILEMMA,
        HawkDoveType::ANTI_COORDINATION,
    )
}

/// Two-player Hawk-Dove game where each player independently has the
/// Prisoner's Dilemma type with probability `p` and the anti-coordination
/// type otherwise.
///
/// The support is ordered `[PD,PD], [PD,AC], [AC,PD], [AC,AC]`.
pub fn hawk_dove_bayesian_game(p: f64) -> Result<BayesianGame> {
    check_probability(p)?;
    let pd = HawkDoveType::PRISONERS_DILEMMA.to_vec();
    let ac = HawkDoveType::ANTI_COORDINATION.to_vec();
    let q = 1.0 - p;
    let support = vec![
        (TypeVector::new(vec![pd.clone(), pd.clone()]), p * p),
        (TypeVector::new(vec![pd.clone(), ac.clone()]), p * q),
        (TypeVector::new(vec![ac.clone(), pd]), q * p),
        (TypeVector::new(vec![ac.clone(), ac]), q * q),
    ];
    bayesian_game_with_prior(Prior::Finite(FinitePrior::new(support)?))
}

/// The Hawk-Dove family with an arbitrary prior over `(V, N, C)` per player.
pub fn bayesian_game_with_prior(prior: Prior) -> Result<BayesianGame> {
    BayesianGame::new(vec![2, 2], vec![3, 3], prior, Arc::new(utility), true)
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} is outside [0, 1]")));
    }
    Ok(())
}

/// Expected limiting mass on `(HH, HD, DH, DD)` when each player is of
/// Prisoner's Dilemma type with probability `p`: `(p^2, (1-p^2)/2, (1-p^2)/2, 0)`.
pub fn hawk_dove_closed_form(p: f64) -> Result<[f64; 4]> {
    check_probability(p)?;
    let off = (1.0 - p * p) / 2.0;
    Ok([p * p, off, off, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointProfile;

    fn matrix(game: &NormalFormGame) -> Vec<(f64, f64)> {
        (0..4)
            .map(|k| (game.payoff(0, k), game.payoff(1, k)))
            .collect()
    }

    #[test]
    fn instances_match_reference_tables() {
        assert_eq!(
            matrix(&prisoners_dilemma()),
            vec![(1.0, 1.0), (4.0, 0.0), (0.0, 4.0), (2.0, 2.0)]
        );
        assert_eq!(
            matrix(&anti_coordination()),
            vec![(-1.0, -1.0), (2.0, 0.0), (0.0, 2.0), (1.0, 1.0)]
        );
        assert_eq!(
            matrix(&mixed()),
            vec![(1.0, -1.0), (4.0, 0.0), (0.0, 2.0), (2.0, 1.0)]
        );
    }

    #[test]
    fn utility_lookups() {
        let hh = JointProfile {
            index: 0,
            coords: vec![HAWK, HAWK],
        };
        let hd = JointProfile {
            index: 1,
            coords: vec![HAWK, DOVE],
        };
        assert_eq!(prisoners_dilemma().utility(0, &hh).unwrap(), 1.0);
        assert_eq!(anti_coordination().utility(0, &hh).unwrap(), -1.0);
        assert_eq!(mixed().utility(1, &hd).unwrap(), 0.0);
        assert!(mixed().utility(2, &hd).is_err());
    }

    #[test]
    fn bayesian_game_realizes_the_instances() {
        let bg = hawk_dove_bayesian_game(0.5).unwrap();
        let Prior::Finite(f) = bg.prior() else {
            panic!("finite prior expected")
        };
        assert!(f.support().iter().all(|(_, w)| *w == 0.25));
        let games: Vec<_> = f
            .support()
            .iter()
            .map(|(v, _)| bg.realize(v).unwrap())
            .collect();
        assert_eq!(games[0], prisoners_dilemma());
        assert_eq!(games[1], mixed());
        assert_eq!(games[3], anti_coordination());
        // [AC, PD] is [PD, AC] with the players swapped
        let swapped = |k: usize| (k % 2) * 2 + k / 2;
        for k in 0..4 {
            assert_eq!(games[2].payoff(0, k), games[1].payoff(1, swapped(k)));
            assert_eq!(games[2].payoff(1, k), games[1].payoff(0, swapped(k)));
        }
    }

    #[test]
    fn realization_is_affine_in_types() {
        let bg = hawk_dove_bayesian_game(0.3).unwrap();
        let v = TypeVector::new(vec![vec![4.0, 0.0, -2.0], vec![2.0, 0.0, -4.0]]);
        let (a, b) = (2.5, -3.0);
        let base = bg.realize(&v).unwrap();
        let moved = bg.realize(&v.affine(a, b)).unwrap();
        for p in 0..2 {
            for k in 0..4 {
                assert_eq!(moved.payoff(p, k), a * base.payoff(p, k) + b);
            }
        }
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(hawk_dove_closed_form(0.0).unwrap(), [0.0, 0.5, 0.5, 0.0]);
        let c = hawk_dove_closed_form(0.98).unwrap();
        assert!((c[0] - 0.9604).abs() < 1e-12 && (c[1] + c[2] - 0.0396).abs() < 1e-12);
        let c = hawk_dove_closed_form(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] + c[2] - 0.5).abs() < 1e-12);
        assert!(hawk_dove_closed_form(1.5).is_err());
        assert!(hawk_dove_bayesian_game(-0.1).is_err());
    }
}
