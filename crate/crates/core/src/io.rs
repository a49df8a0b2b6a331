//! File formats: profile-mass CSV, DOT export, and JSON game specs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{
    BayesianGame, Coordinate, GaussianPrior, NormalFormGame, Prior, ProfileSpace, Validity,
    DEFAULT_MAX_REJECTIONS,
};
use crate::graph::GameGraph;
use crate::mechanisms::{hawk_dove, matching};

/// Formats a double with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("io: {e}"))
}

/// Writes `profile_index, coord_0.., mass[, stderr]` rows.
pub fn write_profile_csv<W: Write>(
    w: W,
    space: &ProfileSpace,
    mass: &[f64],
    stderr: Option<&[f64]>,
) -> Result<()> {
    if mass.len() != space.len() || stderr.is_some_and(|s| s.len() != space.len()) {
        return Err(Error::Domain(format!(
            "expected {} values per column",
            space.len()
        )));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["profile_index".to_string()];
    header.extend((0..space.n_players()).map(|p| format!("coord_{p}")));
    header.push("mass".into());
    if stderr.is_some() {
        header.push("stderr".into());
    }
    out.write_record(&header).map_err(csv_err)?;
    for (k, &m) in mass.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(space.coords(k)?.iter().map(usize::to_string));
        row.push(format_real(m));
        if let Some(s) = stderr {
            row.push(format_real(s[k]));
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

/// Profile masses read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub coords: Vec<Vec<usize>>,
    pub mass: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl ProfileTable {
    /// Checks that rows are exactly the profiles of `space` in index order.
    pub fn check_shape(&self, space: &ProfileSpace) -> Result<()> {
        if self.coords.len() != space.len() {
            return Err(Error::Domain(format!(
                "table has {} rows, game has {} profiles",
                self.coords.len(),
                space.len()
            )));
        }
        for (k, c) in self.coords.iter().enumerate() {
            if space.index(c)? != k {
                return Err(Error::Domain(format!("row {k} has coordinates {c:?}")));
            }
        }
        Ok(())
    }
}

pub fn read_profile_csv<R: Read>(r: R) -> Result<ProfileTable> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let n_coords = cols.iter().filter(|c| c.starts_with("coord_")).count();
    let has_stderr = cols.last() == Some(&"stderr");
    let expected = 2 + n_coords + has_stderr as usize;
    if cols.first() != Some(&"profile_index")
        || cols.get(1 + n_coords) != Some(&"mass")
        || cols.len() != expected
    {
        return Err(Error::Parse(format!("unexpected header {cols:?}")));
    }
    let mut table = ProfileTable {
        coords: vec![],
        mass: vec![],
        stderr: has_stderr.then(Vec::new),
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| Error::Parse(format!("row {}: bad value '{}'", line + 1, field(i)));
        if field(0).parse::<usize>().map_err(|_| bad(0))? != line {
            return Err(Error::Parse(format!("row {} is out of order", line + 1)));
        }
        let coords = (1..=n_coords)
            .map(|i| field(i).parse::<usize>().map_err(|_| bad(i)))
            .collect::<Result<Vec<_>>>()?;
        table.coords.push(coords);
        table
            .mass
            .push(field(1 + n_coords).parse().map_err(|_| bad(1 + n_coords))?);
        if let Some(s) = table.stderr.as_mut() {
            s.push(field(2 + n_coords).parse().map_err(|_| bad(2 + n_coords))?);
        }
    }
    Ok(table)
}

/// Writes a DOT digraph with node weights and deviation edges.
///
/// Edges that lower the deviator's utility are left out unless `full` is set.
pub fn write_dot<W: Write>(
    mut w: W,
    space: &ProfileSpace,
    graph: &GameGraph,
    mass: &[f64],
    full: bool,
) -> Result<()> {
    if mass.len() != space.len() || graph.node_count() != space.len() {
        return Err(Error::Domain(format!(
            "{} masses and {} graph nodes for {} profiles",
            mass.len(),
            graph.node_count(),
            space.len()
        )));
    }
    let label = |k: usize| -> Result<String> {
        let c = space.coords(k)?;
        Ok(format!(
            "({})",
            c.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        ))
    };
    let mut s = String::from("digraph game {\n");
    for (k, &m) in mass.iter().enumerate() {
        s += &format!(
            "  {k} [label=\"{}\", weight={}];\n",
            label(k)?,
            format_real(m)
        );
    }
    for k in 0..graph.node_count() {
        for e in graph.edges(k) {
            if full || e.delta >= 0.0 {
                s += &format!(
                    "  {k} -> {} [player={}, delta={}];\n",
                    e.to,
                    e.player,
                    format_real(e.delta)
                );
            }
        }
    }
    s += "}\n";
    w.write_all(s.as_bytes()).map_err(io_err)
}

/// A normal-form game in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormSpec {
    pub players: usize,
    pub strategies: Vec<usize>,
    /// One row per player, indexed by profile (player 0 most significant).
    pub payoffs: Vec<Vec<f64>>,
}

/// Prior of the matching generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatchingPriorSpec {
    /// The built-in normal prior on `(v_G, v_S, v_B)` with `v_U = 0`.
    Default,
    /// Every student has the same values.
    Point { values: [f64; 4] },
    /// Independent normals per outcome; a zero stddev fixes the coordinate.
    Gaussian {
        means: [f64; 4],
        stddevs: [f64; 4],
        #[serde(default)]
        max_rejections: Option<usize>,
    },
}

/// A Bayesian game produced by a built-in generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Each player is of Prisoner's Dilemma type with probability `p`.
    HawkDove { p: f64 },
    Matching {
        mechanism: matching::Mechanism,
        prior: MatchingPriorSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    NormalForm(NormalFormSpec),
    Generator(GeneratorSpec),
}

impl GameSpec {
    /// Parses a spec. Syntax errors report line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let schema = |e: serde_json::Error| Error::Parse(format!("invalid game spec: {e}"));
        if value.get("generator").is_some() {
            serde_json::from_value(value)
                .map(GameSpec::Generator)
                .map_err(schema)
        } else {
            serde_json::from_value(value)
                .map(GameSpec::NormalForm)
                .map_err(schema)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    pub fn build(&self) -> Result<Model> {
        match self {
            GameSpec::NormalForm(s) => {
                if s.players != s.strategies.len() {
                    return Err(Error::Domain(format!(
                        "players = {} but {} strategy counts given",
                        s.players,
                        s.strategies.len()
                    )));
                }
                NormalFormGame::new(s.strategies.clone(), s.payoffs.clone()).map(Model::Normal)
            }
            GameSpec::Generator(GeneratorSpec::HawkDove { p }) => {
                Ok(Model::Bayesian(hawk_dove::hawk_dove_bayesian_game(*p)?))
            }
            GameSpec::Generator(GeneratorSpec::Matching { mechanism, prior }) => {
                let prior = match prior {
                    MatchingPriorSpec::Default => matching::default_prior(),
                    MatchingPriorSpec::Point { values } => matching::point_prior(*values),
                    MatchingPriorSpec::Gaussian {
                        means,
                        stddevs,
                        max_rejections,
                    } => {
                        let coords: Vec<Coordinate> = means
                            .iter()
                            .zip(stddevs)
                            .map(|(&mean, &stddev)| {
                                if stddev == 0.0 {
                                    Coordinate::Fixed(mean)
                                } else {
                                    Coordinate::Normal { mean, stddev }
                                }
                            })
                            .collect();
                        Prior::Gaussian(GaussianPrior::new(
                            vec![coords; matching::STUDENTS],
                            Validity::strictly_decreasing(),
                            max_rejections.unwrap_or(DEFAULT_MAX_REJECTIONS),
                        )?)
                    }
                };
                Ok(Model::Bayesian(matching::matching_bayesian_game(
                    *mechanism, prior,
                )?))
            }
        }
    }

    /// Player groups used for marginal tables: Tops and Averages for
    /// matching, one group per player otherwise.
    pub fn groups(&self, n_players: usize) -> Vec<Vec<usize>> {
        match self {
            GameSpec::Generator(GeneratorSpec::Matching { .. }) => matching::groups(),
            _ => (0..n_players).map(|p| vec![p]).collect(),
        }
    }
}

impl From<&NormalFormGame> for NormalFormSpec {
    fn from(g: &NormalFormGame) -> Self {
        Self {
            players: g.n_players(),
            strategies: g.strategy_counts().to_vec(),
            payoffs: (0..g.n_players()).map(|p| g.payoffs(p).to_vec()).collect(),
        }
    }
}

/// What a spec describes.
pub enum Model {
    Normal(NormalFormGame),
    Bayesian(BayesianGame),
}

impl Model {
    pub fn space(&self) -> &ProfileSpace {
        match self {
            Model::Normal(g) => g.space(),
            Model::Bayesian(bg) => bg.space(),
        }
    }

    /// The game itself, or the realization at a point prior.
    pub fn single_game(&self) -> Result<NormalFormGame> {
        match self {
            Model::Normal(g) => Ok(g.clone()),
            Model::Bayesian(bg) => match bg.prior() {
                Prior::Finite(f) if f.support().len() == 1 => bg.realize(&f.support()[0].0),
                _ => Err(Error::Domain(
                    "spec describes a Bayesian game with more than one type".into(),
                )),
            },
        }
    }

    /// Game graph with prior-weighted deltas. Gaussian priors use the
    /// game at the prior mean, which is exact for games linear in types.
    pub fn expected_graph(&self) -> Result<GameGraph> {
        match self {
            Model::Normal(g) => Ok(crate::graph::build_game_graph(g)),
            Model::Bayesian(bg) => match bg.prior() {
                Prior::Finite(f) => {
                    let parts = f
                        .support()
                        .iter()
                        .map(|(v, w)| Ok((crate::graph::build_game_graph(&bg.realize(v)?), *w)))
                        .collect::<Result<Vec<_>>>()?;
                    GameGraph::weighted_mean(&parts)
                }
                Prior::Gaussian(g) => {
                    let mean = bg.realize(&g.mean())?;
                    Ok(crate::graph::build_game_graph(&mean))
                }
            },
        }
    }
}

/// Convenience for tests and examples: a one-type Bayesian game spec.
pub fn point_matching_spec(mechanism: matching::Mechanism, values: [f64; 4]) -> GameSpec {
    GameSpec::Generator(GeneratorSpec::Matching {
        mechanism,
        prior: MatchingPriorSpec::Point { values },
    })
}
