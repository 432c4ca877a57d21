use gpnash::game::{nash_extract, PayoffTensor};
use gpnash::problems::{
    build_factorial_grid, diffgame_final_state, DifferentialGame, DifferentialGameSpec, ExternalProblem, GameProblem,
    GridScheme, ProblemSpec,
};
use gpnash::sequential::{run, RunConfig};

// `-W interactive` keeps mawk from buffering its input; gawk ignores it.
fn awk_game() -> ExternalProblem {
    let script = "{ print ($1 - 0.4)^2 + $2, ($2 + 0.2)^2 - $1; fflush() }";
    ExternalProblem::new(
        vec!["awk".into(), "-W".into(), "interactive".into(), script.into()],
        vec![1, 1],
        vec![(-1.0, 1.0), (-1.0, 1.0)],
    )
    .unwrap()
}

#[test]
fn external_process_answers_line_by_line() {
    let game = awk_game();
    let y = game.evaluate(&[0.5, -0.5]).unwrap();
    assert!((y[0] - (0.01 - 0.5)).abs() < 1e-9);
    assert!((y[1] - (0.09 - 0.5)).abs() < 1e-9);
    let grid = build_factorial_grid(&[1, 1], &game.bounds(), &[11, 11], GridScheme::Regular, 0).unwrap();
    let tensor = PayoffTensor::evaluate(&grid, |x| game.evaluate(x)).unwrap();
    let ne = nash_extract(&tensor);
    assert_eq!(ne.indices.len(), 1);
    let x = grid.point(ne.indices[0]);
    assert!((x[0] - 0.4).abs() < 1e-12, "{x:?}");
    assert!((x[1] + 0.2).abs() < 1e-12, "{x:?}");
}

#[test]
fn external_failures_are_evaluation_errors() {
    let game = ExternalProblem::new(vec!["awk".into(), "-W".into(), "interactive".into(), "{ print \"oops\"; fflush() }".into()], vec![1], vec![(0.0, 1.0)])
        .unwrap();
    assert!(matches!(game.evaluate(&[0.5]), Err(gpnash::Error::Evaluation { .. })));
    let missing = ExternalProblem::new(vec!["/nonexistent/solver".into()], vec![1], vec![(0.0, 1.0)]).unwrap();
    assert!(missing.evaluate(&[0.5]).is_err());
}

#[test]
fn sequential_run_drives_an_external_problem() {
    let game = awk_game();
    let grid = build_factorial_grid(&[1, 1], &game.bounds(), &[11, 11], GridScheme::Regular, 0).unwrap();
    let mut config = RunConfig {
        n0: 5,
        n_max: 12,
        ..RunConfig::default()
    };
    config.cfg.n_sim = 121;
    config.cfg.n_cand = 49;
    let log = run(&game, &grid, &config).unwrap();
    assert_eq!(log.evaluations(), 12);
    assert!(log.header.problem.starts_with("external:"));
}

#[test]
fn registry_specs_build_every_problem() {
    let specs = [
        r#"{"name": "p1"}"#,
        r#"{"name": "diffgame", "kappa": 2}"#,
        r#"{"name": "quadratic", "block_dims": [1, 2], "seed": 3}"#,
        r#"{"name": "external", "command": ["cat"], "block_dims": [1], "bounds": [[0, 1]]}"#,
    ];
    let dims: Vec<usize> = specs
        .iter()
        .map(|s| serde_json::from_str::<ProblemSpec>(s).unwrap().build().unwrap().dim())
        .collect();
    assert_eq!(dims, vec![2, 16, 3, 1]);
}

// Equal discounts, targets on a circle around z0: each player's best reply is
// u_i = (t_i - T s_i) / (T + 1) for the others' sum s_i, so the equilibrium
// u_i = t_i steers z(T) to the centre. The coupling through z(T) leaves many
// discrete equilibria on a coarse grid; zero controls are not among them.
#[test]
fn symmetric_game_ends_at_the_centre() {
    let spec = DifferentialGameSpec {
        horizon: 2.0,
        z0: [0.0, 0.0],
        thetas: vec![0.0; 4],
        bound: 1.0,
        ..DifferentialGameSpec::default()
    };
    let game = DifferentialGame::new(spec.clone()).unwrap();
    let grid = build_factorial_grid(&game.block_dims(), &game.bounds(), &[25; 4], GridScheme::Regular, 0).unwrap();
    let tensor = PayoffTensor::evaluate(&grid, |x| game.evaluate(x)).unwrap();
    let ne = nash_extract(&tensor).indices;
    let expected: Vec<f64> = spec.targets.iter().flatten().copied().collect();
    let k = grid.nearest_point(&expected);
    assert_eq!(grid.point(k), expected);
    assert!(ne.contains(&k));
    let z = diffgame_final_state(&spec, &expected).unwrap();
    assert!(z[0].abs() < 1e-12 && z[1].abs() < 1e-12, "{z:?}");
    assert!(!ne.contains(&grid.nearest_point(&[0.0; 8])));
}
