use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::Instant;

use arc_core::alpha_rank::{alpha_sweep, stationary_distribution, transition_matrix, SweepConfig};
use arc_core::collections::{
    exact_collection, group_marginals, monte_carlo_collection, prior_mean_config, Collection,
};
use arc_core::io::{
    format_real, read_profile_csv, write_dot, write_profile_csv, GameSpec, GeneratorSpec, Model,
};
use arc_core::mechanisms::matching::{
    self, build_matching_game, ne_bo, ne_da, uniform_type, Mechanism, PreferenceOrder,
};
use arc_core::{NormalFormGame, Prior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifest::{sibling, RunManifest};
use crate::Failure;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::input(format!("cannot write {}: {e}", path.display()))
}

fn load_spec(path: &Path) -> Result<GameSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    GameSpec::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn rank(
    game: &Path,
    config: &SweepConfig,
    out: &Path,
    args: &[String],
    threads: usize,
) -> Result<(), Failure> {
    let spec = load_spec(game)?;
    let mut manifest = RunManifest::new("rank", args, threads);
    let g = manifest.time("build", || spec.build().and_then(|m| m.single_game()))?;
    let r = manifest.time("sweep", || alpha_sweep(&g, config))?;
    write_profile_csv(create(out)?, g.space(), &r.distribution.probabilities, None)?;
    manifest.game = Some(spec);
    manifest.sweep = Some(*config);
    manifest.alpha_pre = Some(r.alpha_pre);
    manifest.outputs.push(out.display().to_string());
    manifest.write(out)?;
    eprintln!(
        "alpha_pre = {}, residual = {:e}",
        r.alpha_pre, r.distribution.residual
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn collection(
    game: &Path,
    samples: Option<usize>,
    seed: u64,
    alpha_from_mean: Option<Option<f64>>,
    config: &SweepConfig,
    out: &Path,
    args: &[String],
    threads: usize,
) -> Result<(), Failure> {
    if samples == Some(0) {
        return Err(Failure::input("--samples must be at least 1"));
    }
    let spec = load_spec(game)?;
    let mut manifest = RunManifest::new("collection", args, threads);
    let Model::Bayesian(bg) = spec.build()? else {
        return Err(Failure::input(
            "collection needs a generator spec (a Bayesian game)",
        ));
    };
    let config = match alpha_from_mean {
        Some(step) => manifest.time("prior_mean_alpha", || prior_mean_config(&bg, config, step))?,
        None => *config,
    };
    let coll: Collection = match (samples, bg.prior()) {
        (None, Prior::Finite(_)) => manifest.time("exact", || exact_collection(&bg, &config))?,
        (None, Prior::Gaussian(_)) => {
            return Err(Failure::input("a continuous prior needs --samples"));
        }
        (Some(n), _) => manifest.time("monte_carlo", || {
            monte_carlo_collection(&bg, n, seed, &config)
        })?,
    };
    let space = bg.space();
    write_profile_csv(create(out)?, space, &coll.probabilities, Some(&coll.stderr))?;
    manifest.outputs.push(out.display().to_string());

    let groups = spec.groups(space.n_players());
    let marginals = group_marginals(&coll.probabilities, space, &groups)?;
    let path = sibling(out, "groups.csv");
    let mut w = create(&path)?;
    let is_matching = matches!(spec, GameSpec::Generator(GeneratorSpec::Matching { .. }));
    writeln!(w, "group,players,strategy,label,mass").map_err(write_err(&path))?;
    for (g, row) in groups.iter().zip(&marginals) {
        let players = g.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        for (s, m) in row.iter().enumerate() {
            let label = if is_matching {
                PreferenceOrder::ALL[s].to_string()
            } else {
                s.to_string()
            };
            writeln!(
                w,
                "{},{players},{s},\"{label}\",{}",
                group_name(&spec, g),
                format_real(*m)
            )
            .map_err(write_err(&path))?;
        }
    }
    w.flush().map_err(write_err(&path))?;
    manifest.outputs.push(path.display().to_string());

    if let GameSpec::Generator(GeneratorSpec::Matching { mechanism, .. }) = &spec {
        let rows = matching::group_outcomes(*mechanism, &coll.probabilities)?;
        let path = sibling(out, "outcomes.csv");
        let mut w = create(&path)?;
        writeln!(w, "group,gold,silver,bronze,unmatched").map_err(write_err(&path))?;
        for (name, row) in ["tops", "averages"].iter().zip(rows) {
            let cells: Vec<String> = row.iter().map(|&x| format_real(x)).collect();
            writeln!(w, "{name},{}", cells.join(",")).map_err(write_err(&path))?;
        }
        w.flush().map_err(write_err(&path))?;
        manifest.outputs.push(path.display().to_string());
    }

    manifest.game = Some(spec);
    manifest.sweep = Some(config);
    manifest.seed = samples.map(|_| seed);
    manifest.n_samples = Some(coll.n_samples);
    manifest.skipped = Some(coll.skipped);
    manifest.samples = coll.records.clone();
    manifest.write(out)?;
    eprintln!("{} samples, {} skipped", coll.n_samples, coll.skipped);
    Ok(())
}

fn group_name(spec: &GameSpec, group: &[usize]) -> String {
    match spec {
        GameSpec::Generator(GeneratorSpec::Matching { .. }) if group[0] == matching::TOPS[0] => {
            "tops".into()
        }
        GameSpec::Generator(GeneratorSpec::Matching { .. }) => "averages".into(),
        _ => format!("player_{}", group[0]),
    }
}

/// Parses `start:end:step` into the inclusive grid.
pub fn parse_grid(grid: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = grid
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::input(format!("grid '{grid}' is not start:end:step")))?;
    let [start, end, step] = parts[..] else {
        return Err(Failure::input(format!(
            "grid '{grid}' is not start:end:step"
        )));
    };
    if !(step > 0.0) || end < start || !start.is_finite() || !end.is_finite() {
        return Err(Failure::input(format!(
            "grid '{grid}' is empty or unbounded"
        )));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn parse_base(base: &str) -> Result<[f64; 4], Failure> {
    let v: Vec<f64> = base
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::input(format!("base '{base}' is not four numbers")))?;
    v.try_into()
        .map_err(|_| Failure::input(format!("base '{base}' is not four numbers")))
}

#[allow(clippy::too_many_arguments)]
pub fn sweep(
    mechanism: Mechanism,
    param: usize,
    grid: &str,
    base: &str,
    config: &SweepConfig,
    out: &Path,
    args: &[String],
    threads: usize,
) -> Result<(), Failure> {
    let values = parse_grid(grid)?;
    let base = parse_base(base)?;
    let mut manifest = RunManifest::new("sweep", args, threads);
    let (da, bo) = (ne_da(), ne_bo());
    let mut w = create(out)?;
    writeln!(
        w,
        "value,alpha_pre,ne_da_mass,ne_bo_mass,ne_da_max_deviation"
    )
    .map_err(write_err(out))?;
    for x in values {
        let mut v = base;
        v[param] = x;
        let r = manifest.time(&format!("point {x}"), || {
            build_matching_game(mechanism, &uniform_type(v)).and_then(|g| alpha_sweep(&g, config))
        })?;
        let d = &r.distribution;
        let spread = da
            .iter()
            .map(|&k| (d.probabilities[k] - 1.0 / da.len() as f64).abs())
            .fold(0.0, f64::max);
        writeln!(
            w,
            "{x},{},{},{},{}",
            format_real(r.alpha_pre),
            format_real(d.mass_on(&da)),
            format_real(d.mass_on(&bo)),
            format_real(spread)
        )
        .map_err(write_err(out))?;
        eprintln!(
            "{x}: alpha_pre = {}, NE_DA {:.4}, NE_Bo {:.4}",
            r.alpha_pre,
            d.mass_on(&da),
            d.mass_on(&bo)
        );
    }
    w.flush().map_err(write_err(out))?;
    manifest.sweep = Some(*config);
    manifest.outputs.push(out.display().to_string());
    manifest.write(out)?;
    Ok(())
}

pub fn graph(game: &Path, dist: &Path, full: bool, out: &Path) -> Result<(), Failure> {
    let spec = load_spec(game)?;
    let model = spec.build()?;
    let file = File::open(dist)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", dist.display())))?;
    let table = read_profile_csv(file)?;
    table.check_shape(model.space())?;
    let graph = model.expected_graph()?;
    write_dot(create(out)?, model.space(), &graph, &table.mass, full)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn bench(
    agents: usize,
    actions: RangeInclusive<usize>,
    m: usize,
    alpha: f64,
    seed: u64,
    out: &Path,
    args: &[String],
    threads: usize,
) -> Result<(), Failure> {
    if agents == 0 || actions.is_empty() || *actions.start() == 0 {
        return Err(Failure::input(
            "bench needs at least one agent and one action",
        ));
    }
    let mut manifest = RunManifest::new("bench", args, threads);
    let mut w = create(out)?;
    writeln!(w, "actions,profiles,seconds,residual").map_err(write_err(out))?;
    for a in actions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ a as u64);
        let game = NormalFormGame::from_fn(vec![a; agents], |_, _| rng.random::<f64>())?;
        let start = Instant::now();
        let tm = transition_matrix(&game, alpha, m)?;
        let res = match stationary_distribution(&tm, 1e-10) {
            Ok(d) => d.residual,
            Err(_) => f64::NAN,
        };
        let secs = start.elapsed().as_secs_f64();
        writeln!(w, "{a},{},{secs:.3},{res:e}", game.space().len()).map_err(write_err(out))?;
        eprintln!("{a} actions, {} profiles: {secs:.3} s", game.space().len());
        manifest.phases.push(crate::manifest::Phase {
            name: format!("{a} actions"),
            seconds: secs,
        });
    }
    w.flush().map_err(write_err(out))?;
    manifest.outputs.push(out.display().to_string());
    manifest.write(out)?;
    Ok(())
}
