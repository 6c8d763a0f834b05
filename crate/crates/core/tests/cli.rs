use std::process::{Command, Output};

use scg_core::scenario::{builtin, builtin_config, load_scenario, BUILTINS};

fn scg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scg"))
        .args(args)
        .env_remove("SCG_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn pure_nash_on_pigou() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eq.csv");
    let o = scg(&[
        "solve",
        "--scenario",
        "pigou",
        "--criterion",
        "nash",
        "--mode",
        "pure",
        "--n",
        "10",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PoA 1.33333"));
    let body = std::fs::read_to_string(csv).unwrap();
    assert!(body.starts_with("equilibrium,owner,path,frac,social_delay,opt_delay,poa\n"));
    assert!(body.contains("1,pair0,1,1,1,0.75,1.33333\n"));
    assert!(!body.contains('\r'));
}

#[test]
fn nonatomic_cvar_on_braess() {
    let o = scg(&[
        "solve",
        "--scenario",
        "braess",
        "--criterion",
        "cvar",
        "--alpha",
        "0.1",
        "--mode",
        "nonatomic",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("fractions [0.3044"), "{out}");
    assert!(out.contains("PoA 1.051"), "{out}");
}

#[test]
fn mean_variance_choice_on_ex4() {
    let o = scg(&[
        "solve",
        "--scenario",
        "ex4",
        "--criterion",
        "mv",
        "--rho",
        "1",
        "--mode",
        "pure",
        "--n",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("counts [[0, 1]]"));
    let o = scg(&[
        "solve",
        "--scenario",
        "ex4",
        "--criterion",
        "mv",
        "--rho",
        "2",
        "--n",
        "1",
    ]);
    assert!(stdout(&o).contains("counts [[1, 0]]"));
}

fn example(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn missing_pure_equilibrium_exits_with_two() {
    let path = example("no_pure_cvar.toml");
    let o = scg(&["solve", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("no pure equilibrium"));
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));

    // the mixed search still finds the symmetric coin flip
    let o = scg(&["solve", "--scenario", &path, "--mode", "mixed"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("1 equilibria (0 pure)"), "{out}");
    assert!(out.contains("player 1: [0.5, 0.5]"), "{out}");
}

#[test]
fn errors_carry_codes() {
    let o = scg(&["solve", "--scenario", "nowhere", "--criterion", "nash"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[UNSUPPORTED]"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nnodes = [\"S\"\n").unwrap();
    let o = scg(&[
        "solve",
        "--scenario",
        bad.to_str().unwrap(),
        "--criterion",
        "nash",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).starts_with("error[PARSE_ERROR]"),
        "{}",
        stderr(&o)
    );

    let o = scg(&[
        "solve",
        "--scenario",
        "pigou",
        "--criterion",
        "cvar",
        "--alpha",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error["));
    assert!(stdout(&o).is_empty());

    let o = scg(&[
        "solve",
        "--scenario",
        "pigou",
        "--criterion",
        "nash",
        "--mode",
        "mixed",
        "--n",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let csv = dir.path().join(name);
        let o = scg(&[
            "sweep",
            "--scenario",
            "pigou",
            "--criteria",
            "nash,rae",
            "--n-min",
            "2",
            "--n-max",
            "6",
            "--replications",
            "20000",
            "--seed",
            seed,
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(csv).unwrap()
    };
    let a = run("a.csv", "11");
    let b = run("b.csv", "11");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,criterion,path,frac,social_delay,opt_delay,poa,status")
    );
    assert_eq!(text.lines().count(), 1 + 5 * 2 * 2);
    for line in lines.filter(|l| l.contains(",nash,1,")) {
        assert!(line.contains(",nash,1,1,1,"), "{line}");
    }
}

#[test]
fn seed_flag_beats_environment() {
    let args = [
        "solve",
        "--scenario",
        "pigou",
        "--criterion",
        "rae",
        "--n",
        "3",
        "--replications",
        "2000",
    ];
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_scg"));
        cmd.args(args);
        match env {
            Some(s) => cmd.env("SCG_SEED", s),
            None => cmd.env_remove("SCG_SEED"),
        };
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("x.csv");
        cmd.args(["--out", csv.to_str().unwrap()]);
        assert!(cmd.output().unwrap().status.success());
        std::fs::read_to_string(csv).unwrap()
    };
    assert_eq!(run(Some("5"), Some("9")), run(None, Some("9")));
    assert_eq!(run(Some("9"), None), run(None, Some("9")));
}

#[test]
fn sweep_plot_is_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("p.svg");
    let o = scg(&[
        "sweep",
        "--scenario",
        "braess",
        "--criteria",
        "nash",
        "--n-min",
        "2",
        "--n-max",
        "5",
        "--plot",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let body = std::fs::read_to_string(svg).unwrap();
    assert!(body.starts_with("<svg"));
    assert_eq!(body.matches("<polyline").count(), 2);
    // nash on braess: PoA column is 2 / D(o)
    for line in stdout(&o).lines().skip(1).filter(|l| l.contains(",1-5-4,")) {
        let cols: Vec<&str> = line.split(',').collect();
        let n: f64 = cols[0].parse().unwrap();
        let odd = if cols[0].parse::<usize>().unwrap() % 2 == 1 {
            1.0
        } else {
            0.0
        };
        let expected = 2.0 / (1.5 + odd / (2.0 * n * n));
        assert!(
            (cols[6].parse::<f64>().unwrap() - expected).abs() < 1e-5,
            "{line}"
        );
        assert_eq!(cols[3], "1");
    }
}

#[test]
fn builtins_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in BUILTINS {
        let sc = builtin(name).unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, sc.to_config().to_toml().unwrap()).unwrap();
        let back = load_scenario(path.to_str().unwrap()).unwrap();
        assert_eq!(back.game, sc.game, "{name}");
        assert_eq!(back.symmetry, sc.symmetry);
        assert_eq!(builtin_config(name).unwrap().build().unwrap(), sc);
    }
}
