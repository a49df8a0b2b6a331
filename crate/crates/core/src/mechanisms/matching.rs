//! The aligned school-choice environment: five students (three Tops, two
//! Averages) and three schools, Gold with two seats and Silver and Bronze
//! with one each. Every school ranks all Tops above all Averages and a
//! single uniform lottery breaks ties within each group.
//!
//! Students are indexed `T1, T2, T3, A1, A2 = 0..5`. Each student reports a
//! full ranking of the schools, so the game has `6^5 = 7776` profiles.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    profile_coords, BayesianGame, Coordinate, FinitePrior, GaussianPrior, NormalFormGame, Prior,
    TypeVector, Validity, DEFAULT_MAX_REJECTIONS,
};

pub const STUDENTS: usize = 5;
pub const TOPS: [usize; 3] = [0, 1, 2];
pub const AVERAGES: [usize; 2] = [3, 4];
pub const STUDENT_NAMES: [&str; STUDENTS] = ["T1", "T2", "T3", "A1", "A2"];
pub const CAPACITIES: [usize; 3] = [2, 1, 1];
/// Number of tie-break orders: `3! * 2!`.
pub const TIE_BREAKS: usize = 12;
pub const STRATEGY_COUNTS: [usize; STUDENTS] = [6; STUDENTS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum School {
    Gold,
    Silver,
    Bronze,
}

impl School {
    pub fn index(self) -> usize {
        self as usize
    }

    fn letter(self) -> char {
        match self {
            School::Gold => 'G',
            School::Silver => 'S',
            School::Bronze => 'B',
        }
    }
}

/// What a student ends up with. Indices follow the type coordinates
/// `(v_G, v_S, v_B, v_U)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Gold,
    Silver,
    Bronze,
    Unmatched,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Gold,
        Outcome::Silver,
        Outcome::Bronze,
        Outcome::Unmatched,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    fn seat(school: School) -> Self {
        match school {
            School::Gold => Outcome::Gold,
            School::Silver => Outcome::Silver,
            School::Bronze => Outcome::Bronze,
        }
    }
}

/// A student's reported ranking of the three schools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PreferenceOrder(pub [School; 3]);

impl PreferenceOrder {
    /// Strategy order used for profile indices.
    pub const ALL: [PreferenceOrder; 6] = {
        use School::*;
        [
            PreferenceOrder([Gold, Silver, Bronze]),
            PreferenceOrder([Gold, Bronze, Silver]),
            PreferenceOrder([Silver, Gold, Bronze]),
            PreferenceOrder([Silver, Bronze, Gold]),
            PreferenceOrder([Bronze, Gold, Silver]),
            PreferenceOrder([Bronze, Silver, Gold]),
        ]
    };
    pub const TRUTHFUL: PreferenceOrder = Self::ALL[0];

    pub fn index(self) -> usize {
        Self::ALL
            .iter()
            .position(|&p| p == self)
            .expect("every order is listed")
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("preference order index {i} out of range")))
    }

    pub fn first(self) -> School {
        self.0[0]
    }
}

impl fmt::Display for PreferenceOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0.map(School::letter);
        write!(f, "({a},{b},{c})")
    }
}

/// A strict priority order over students: all Tops first, then all Averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TieBreakOrder {
    order: [usize; STUDENTS],
    rank: [usize; STUDENTS],
}

impl TieBreakOrder {
    /// `order` lists students from highest to lowest priority.
    pub fn new(order: [usize; STUDENTS]) -> Result<Self> {
        let mut rank = [usize::MAX; STUDENTS];
        for (r, &s) in order.iter().enumerate() {
            if s >= STUDENTS || rank[s] != usize::MAX {
                return Err(Error::Domain(format!(
                    "{order:?} is not a permutation of students"
                )));
            }
            rank[s] = r;
        }
        if TOPS.iter().any(|&t| rank[t] >= TOPS.len()) {
            return Err(Error::Domain(format!(
                "{order:?} does not rank every Top above the Averages"
            )));
        }
        Ok(Self { order, rank })
    }

    /// All 12 orders compatible with the school priorities.
    pub fn all() -> Vec<Self> {
        let tops = permutations(&TOPS);
        let averages = permutations(&AVERAGES);
        let mut out = Vec::with_capacity(TIE_BREAKS);
        for t in &tops {
            for a in &averages {
                let order = [t[0], t[1], t[2], a[0], a[1]];
                out.push(Self::new(order).expect("valid by construction"));
            }
        }
        out
    }

    pub fn order(&self) -> &[usize; STUDENTS] {
        &self.order
    }

    /// Position of `student` in the order; lower is better.
    pub fn rank(&self, student: usize) -> usize {
        self.rank[student]
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    #[serde(rename = "da")]
    DeferredAcceptance,
    Boston,
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "da" | "deferred_acceptance" => Ok(Mechanism::DeferredAcceptance),
            "boston" | "bo" => Ok(Mechanism::Boston),
            _ => Err(Error::Parse(format!(
                "unknown mechanism '{s}', expected 'da' or 'boston'"
            ))),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::DeferredAcceptance => "da",
            Mechanism::Boston => "boston",
        })
    }
}

pub type Assignment = [Outcome; STUDENTS];
pub type Profile = [PreferenceOrder; STUDENTS];

/// Student-proposing deferred acceptance.
pub fn run_da(profile: &Profile, tb: &TieBreakOrder) -> Assignment {
    let mut next = [0usize; STUDENTS];
    let mut held: [Vec<usize>; 3] = Default::default();
    let mut result = [Outcome::Unmatched; STUDENTS];
    let mut free: Vec<usize> = (0..STUDENTS).rev().collect();
    while let Some(s) = free.pop() {
        if next[s] == 3 {
            continue;
        }
        let school = profile[s].0[next[s]];
        next[s] += 1;
        let h = &mut held[school.index()];
        h.push(s);
        if h.len() > CAPACITIES[school.index()] {
            let (worst, _) = h
                .iter()
                .enumerate()
                .max_by_key(|(_, &x)| tb.rank(x))
                .expect("nonempty");
            free.push(h.swap_remove(worst));
        }
    }
    for (school, h) in [School::Gold, School::Silver, School::Bronze]
        .into_iter()
        .zip(&held)
    {
        for &s in h {
            result[s] = Outcome::seat(school);
        }
    }
    result
}

/// The Boston mechanism: in round `k` every unassigned student applies to
/// their `k`-th choice and admissions are final.
pub fn run_boston(profile: &Profile, tb: &TieBreakOrder) -> Assignment {
    let mut remaining = CAPACITIES;
    let mut result = [Outcome::Unmatched; STUDENTS];
    let mut assigned = [false; STUDENTS];
    for round in 0..3 {
        // visiting students in priority order admits the best applicants first
        for &s in tb.order() {
            if assigned[s] {
                continue;
            }
            let school = profile[s].0[round];
            if remaining[school.index()] > 0 {
                remaining[school.index()] -= 1;
                assigned[s] = true;
                result[s] = Outcome::seat(school);
            }
        }
    }
    result
}

pub fn run(mechanism: Mechanism, profile: &Profile, tb: &TieBreakOrder) -> Assignment {
    match mechanism {
        Mechanism::DeferredAcceptance => run_da(profile, tb),
        Mechanism::Boston => run_boston(profile, tb),
    }
}

/// A lottery over `(G, S, B, U)` with probabilities in twelfths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OutcomeLottery {
    counts: [u8; 4],
}

impl OutcomeLottery {
    /// How many of the 12 tie-break orders produce each outcome.
    pub fn counts(&self) -> [u8; 4] {
        self.counts
    }

    pub fn probability(&self, o: Outcome) -> Ratio<u32> {
        Ratio::new(self.counts[o.index()] as u32, TIE_BREAKS as u32)
    }

    pub fn probabilities(&self) -> [Ratio<u32>; 4] {
        Outcome::ALL.map(|o| self.probability(o))
    }

    pub fn to_f64(&self) -> [f64; 4] {
        self.counts.map(|c| c as f64 / TIE_BREAKS as f64)
    }

    /// `sum_o P(o) v_o` for values `(v_G, v_S, v_B, v_U)`.
    pub fn expected_utility(&self, v: &[f64]) -> f64 {
        let s: f64 = self.counts.iter().zip(v).map(|(&c, &x)| c as f64 * x).sum();
        s / TIE_BREAKS as f64
    }

    /// First-order stochastic dominance with respect to `G > S > B > U`:
    /// then `self` is weakly preferred to `other` for every valid type.
    pub fn dominates(&self, other: &Self) -> bool {
        let (mut a, mut b) = (0u8, 0u8);
        for k in 0..4 {
            a += self.counts[k];
            b += other.counts[k];
            if a < b {
                return false;
            }
        }
        true
    }
}

/// Each student's outcome lottery under the uniform tie-break lottery.
pub fn outcome_lottery(mechanism: Mechanism, profile: &Profile) -> [OutcomeLottery; STUDENTS] {
    let mut out = [OutcomeLottery::default(); STUDENTS];
    for tb in tie_breaks() {
        for (s, o) in run(mechanism, profile, tb).into_iter().enumerate() {
            out[s].counts[o.index()] += 1;
        }
    }
    out
}

fn tie_breaks() -> &'static [TieBreakOrder] {
    static ALL: OnceLock<Vec<TieBreakOrder>> = OnceLock::new();
    ALL.get_or_init(TieBreakOrder::all)
}

/// Decodes a profile index (student 0 most significant).
pub fn profile_orders(index: usize) -> Result<Profile> {
    let c = profile_coords(index, &STRATEGY_COUNTS)?;
    let mut p = [PreferenceOrder::TRUTHFUL; STUDENTS];
    for (slot, &k) in p.iter_mut().zip(&c) {
        *slot = PreferenceOrder::from_index(k)?;
    }
    Ok(p)
}

pub fn profile_index(profile: &Profile) -> usize {
    profile.iter().fold(0, |acc, p| acc * 6 + p.index())
}

/// Outcome lotteries for every profile of one mechanism.
#[derive(Debug)]
pub struct LotteryTable {
    mechanism: Mechanism,
    lotteries: Vec<[OutcomeLottery; STUDENTS]>,
}

impl LotteryTable {
    pub fn new(mechanism: Mechanism) -> Self {
        let n: usize = STRATEGY_COUNTS.iter().product();
        let lotteries = (0..n)
            .into_par_iter()
            .map(|k| outcome_lottery(mechanism, &profile_orders(k).expect("in range")))
            .collect();
        Self {
            mechanism,
            lotteries,
        }
    }

    /// Shared table, built on first use.
    pub fn get(mechanism: Mechanism) -> &'static Self {
        static DA: OnceLock<LotteryTable> = OnceLock::new();
        static BO: OnceLock<LotteryTable> = OnceLock::new();
        match mechanism {
            Mechanism::DeferredAcceptance => DA.get_or_init(|| Self::new(mechanism)),
            Mechanism::Boston => BO.get_or_init(|| Self::new(mechanism)),
        }
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    pub fn len(&self) -> usize {
        self.lotteries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lotteries.is_empty()
    }

    pub fn lottery(&self, profile: usize, student: usize) -> OutcomeLottery {
        self.lotteries[profile][student]
    }
}

fn check_type(v: &TypeVector) -> Result<()> {
    if v.dims() != [4; STUDENTS] {
        return Err(Error::Domain(format!(
            "matching types need 4 values for each of 5 students, got {:?}",
            v.dims()
        )));
    }
    Ok(())
}

/// Expected-utility game for a fixed type vector.
pub fn build_matching_game(mechanism: Mechanism, v: &TypeVector) -> Result<NormalFormGame> {
    check_type(v)?;
    let table = LotteryTable::get(mechanism);
    NormalFormGame::from_fn(STRATEGY_COUNTS.to_vec(), |i, k| {
        table.lottery(k, i).expected_utility(v.player(i))
    })
}

/// The matching environment as a Bayesian game over `(v_G, v_S, v_B, v_U)`
/// per student.
pub fn matching_bayesian_game(mechanism: Mechanism, prior: Prior) -> Result<BayesianGame> {
    let table = LotteryTable::get(mechanism);
    BayesianGame::new(
        STRATEGY_COUNTS.to_vec(),
        vec![4; STUDENTS],
        prior,
        Arc::new(move |i: usize, k: usize, v: &TypeVector| {
            table.lottery(k, i).expected_utility(v.player(i))
        }),
        true,
    )
}

/// Every student has the values `(v_G, v_S, v_B, v_U)`.
pub fn uniform_type(values: [f64; 4]) -> TypeVector {
    TypeVector::new(vec![values.to_vec(); STUDENTS])
}

pub fn point_prior(values: [f64; 4]) -> Prior {
    Prior::Finite(FinitePrior::point(uniform_type(values)))
}

/// Independent `v_G ~ N(100, 6)`, `v_S ~ N(70, 3)`, `v_B ~ N(25, 2)`, `v_U = 0`
/// per student, redrawn until every student has `v_G > v_S > v_B > v_U`.
pub fn default_prior() -> Prior {
    let per_student = vec![
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
            vec![per_student; STUDENTS],
            Validity::strictly_decreasing(),
            DEFAULT_MAX_REJECTIONS,
        )
        .expect("constant parameters are valid"),
    )
}

/// Profiles where the Tops report `tops` and the Averages report any order in `averages`.
fn profiles_with(tops: PreferenceOrder, averages: &[PreferenceOrder]) -> Vec<usize> {
    let mut out = Vec::new();
    for &a1 in averages {
        for &a2 in averages {
            out.push(profile_index(&[tops, tops, tops, a1, a2]));
        }
    }
    out.sort_unstable();
    out
}

/// Tops truthful, Averages arbitrary: 36 profiles.
pub fn ne_da() -> Vec<usize> {
    profiles_with(PreferenceOrder::TRUTHFUL, &PreferenceOrder::ALL)
}

/// Tops rank Gold then Bronze, Averages rank Silver first: 4 profiles.
pub fn ne_bo() -> Vec<usize> {
    let silver_first: Vec<_> = PreferenceOrder::ALL
        .into_iter()
        .filter(|p| p.first() == School::Silver)
        .collect();
    profiles_with(PreferenceOrder::ALL[1], &silver_first)
}

/// The reference equilibrium profile set of a mechanism.
pub fn named_profile_set(mechanism: Mechanism) -> Vec<usize> {
    match mechanism {
        Mechanism::DeferredAcceptance => ne_da(),
        Mechanism::Boston => ne_bo(),
    }
}

/// Student groups in reporting order: Tops, Averages.
pub fn groups() -> Vec<Vec<usize>> {
    vec![TOPS.to_vec(), AVERAGES.to_vec()]
}

/// `(2/3) v_G + (1/3) v_B - v_S`. When negative for some Top, that Top
/// prefers ranking Silver first to the Boston equilibrium report.
pub fn boston_deviation_margin(v: &[f64]) -> f64 {
    2.0 / 3.0 * v[0] + 1.0 / 3.0 * v[2] - v[1]
}

/// Expected outcome distribution per group when profiles are drawn from
/// `masses`, averaged over the group's members.
pub fn group_outcomes(mechanism: Mechanism, masses: &[f64]) -> Result<Vec<[f64; 4]>> {
    let table = LotteryTable::get(mechanism);
    if masses.len() != table.len() {
        return Err(Error::Domain(format!(
            "expected {} profile masses, got {}",
            table.len(),
            masses.len()
        )));
    }
    Ok(groups()
        .iter()
        .map(|g| {
            let mut acc = [0.0; 4];
            for (k, &w) in masses.iter().enumerate() {
                for &s in g {
                    let l = table.lottery(k, s).to_f64();
                    for o in 0..4 {
                        acc[o] += w * l[o];
                    }
                }
            }
            acc.map(|x| x / g.len() as f64)
        })
        .collect())
}
