use arc_core::alpha_rank::{
    check_irreducible, gth_stationary, power_iteration, residual, stationary_distribution,
    transition_matrix,
};
use arc_core::mechanisms::hawk_dove::hawk_dove_bayesian_game;
use arc_core::{NormalFormGame, TypeVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_game(rng: &mut ChaCha8Rng, max_profiles: usize) -> NormalFormGame {
    loop {
        let players = rng.random_range(1..=3);
        let counts: Vec<usize> = (0..players).map(|_| rng.random_range(1..=4)).collect();
        if counts.iter().product::<usize>() <= max_profiles {
            return NormalFormGame::from_fn(counts, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        }
    }
}

#[test]
fn affine_payoffs_equal_scaled_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let game = random_game(&mut rng, 64);
        let a = 10f64.powf(rng.random_range(-2.0..2.0));
        let b = rng.random_range(-100.0..100.0);
        let alpha = 10f64.powf(rng.random_range(-3.0..1.0));
        let lhs = transition_matrix(&game.affine(a, b).unwrap(), alpha, 50).unwrap();
        let rhs = transition_matrix(&game, a * alpha, 50).unwrap();
        for s in 0..lhs.size() {
            worst = worst.max((lhs.diagonal(s) - rhs.diagonal(s)).abs());
            for ((t1, p1), (t2, p2)) in lhs.row(s).zip(rhs.row(s)) {
                assert_eq!(t1, t2);
                worst = worst.max((p1 - p2).abs());
            }
        }
    }
    assert!(worst <= 1e-12, "max entry difference {worst:e}");
}

#[test]
fn small_games_agree_with_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut solved = 0;
    for _ in 0..300 {
        let game = random_game(&mut rng, 12);
        let alpha = [0.05, 0.2][rng.random_range(0..2)];
        let tm = transition_matrix(&game, alpha, 50).unwrap();
        for s in 0..tm.size() {
            let sum: f64 = tm.diagonal(s) + tm.row(s).map(|(_, p)| p).sum::<f64>();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
        if game.space().len() == 1 || check_irreducible(&tm).is_err() {
            continue;
        }
        let d = stationary_distribution(&tm, 1e-10).unwrap();
        assert!(d.residual <= 1e-10);
        let oracle = power_iteration(&tm, 2_000_000, 1e-16);
        assert!(residual(&tm, &oracle) <= 1e-10);
        for (x, y) in d.probabilities.iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
        }
        solved += 1;
    }
    assert!(solved > 200, "only {solved} games were irreducible");
}

#[test]
fn vanishing_delta_gives_eta_over_m() {
    for eps in [1e-9, -1e-9, 1e-12] {
        let game =
            NormalFormGame::new(vec![2, 3], vec![vec![0.0, eps, 0.0, 0.0, 0.0, -eps]; 2]).unwrap();
        for alpha in [0.1, 1.0, 5.0] {
            let tm = transition_matrix(&game, alpha, 50).unwrap();
            let eta = tm.eta();
            assert_eq!(eta, 1.0 / 3.0);
            for s in 0..tm.size() {
                for (_, p) in tm.row(s) {
                    assert!((p - eta / 50.0).abs() <= 1e-6 * eta);
                }
            }
        }
    }
}

/// Distribution of the Hawk-Dove game with player 0's resource value moved by `x`.
fn hawk_dove_at(alpha: f64, x: f64) -> Vec<f64> {
    let bg = hawk_dove_bayesian_game(0.5).unwrap();
    let v = TypeVector::new(vec![vec![4.0 + x, 0.0, -2.0], vec![2.0, 0.0, -4.0]]);
    let tm = transition_matrix(&bg.realize(&v).unwrap(), alpha, 50).unwrap();
    gth_stationary(&tm).unwrap()
}

#[test]
fn central_differences_converge_quadratically() {
    for alpha in [0.1, 1.0, 5.0] {
        let derivative = |h: f64| -> Vec<f64> {
            let (up, down) = (hawk_dove_at(alpha, h), hawk_dove_at(alpha, -h));
            up.iter()
                .zip(&down)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect()
        };
        // the distribution varies on the scale 1 / alpha
        let h = 1e-2 / alpha;
        let (d1, d2, d4) = (derivative(h), derivative(h / 2.0), derivative(h / 4.0));
        let base = hawk_dove_at(alpha, 0.0);
        let mut checked = 0;
        for k in 0..4 {
            let e1 = (d1[k] - d2[k]).abs();
            let e2 = (d2[k] - d4[k]).abs();
            // GTH is accurate relative to each entry; below this is rounding noise
            if e1 <= 1e-9 * base[k] / h {
                continue;
            }
            let ratio = e1 / e2;
            assert!(
                (3.0..=5.0).contains(&ratio),
                "alpha {alpha}, entry {k}: ratio {ratio}"
            );
            checked += 1;
        }
        eprintln!("alpha {alpha}: {checked} entries above the noise floor");
        assert!(checked >= 2, "alpha {alpha}");
    }
}
