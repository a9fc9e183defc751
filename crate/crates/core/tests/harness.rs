use heavytail::harness::{fit_rate_points, run_experiment, ExperimentConfig};

fn config(method: &str, schedule: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
method = "{method}"
T_grid = [64, 128, 256, 512]
seeds = 8
base_seed = 3
{extra}

[problem]
name = "quadratic"
dim = 5

[oracle]
kind = "symmetric-pareto"
shape = 1.7
p = 1.5

[schedule]
{schedule}
"#
    );
    ExperimentConfig::from_toml_str(&text).unwrap()
}

#[test]
fn identical_config_gives_identical_files() {
    let cfg = config("nsgdm", "kind = \"known_p\"", "");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg).unwrap().write(a.path()).unwrap();
    run_experiment(&cfg).unwrap().write(b.path()).unwrap();
    for f in ["results.csv", "results.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("results.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "T,mean_avg_grad_norm,stderr,n_seeds,n_diverged");
    let ts: Vec<u64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ts, vec![64, 128, 256, 512]);
}

#[test]
fn seed_list_names_the_cells() {
    let mut count = config("nsgdm", "kind = \"unknown_p\"", "");
    count.seeds = heavytail::harness::SeedsConfig::Count(2);
    let mut list = count.clone();
    list.seeds = heavytail::harness::SeedsConfig::List(vec![1, 0]);
    let a = run_experiment(&count).unwrap();
    let b = run_experiment(&list).unwrap();
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert!((x.mean_avg_grad_norm - y.mean_avg_grad_norm).abs() < 1e-12);
    }
    list.seeds = heavytail::harness::SeedsConfig::List(vec![5]);
    let single = run_experiment(&list).unwrap();
    assert!(single
        .cells
        .iter()
        .all(|c| c.n_seeds == 1 && c.stderr.is_nan()));
}

#[test]
fn every_method_runs() {
    for (method, sched, extra) in [
        ("nsgdm", "kind = \"unknown_p\"", ""),
        ("ssgdm", "kind = \"manual\"\nbeta = 0.9\neta = 0.01", ""),
        (
            "clipped-sgd",
            "kind = \"manual\"\neta = 0.05",
            "[clip]\ntau = 1.0",
        ),
        (
            "sgd",
            "kind = \"manual\"\neta = 1.0\neta_exponent = -0.5",
            "",
        ),
    ] {
        let res = run_experiment(&config(method, sched, extra)).unwrap();
        for c in &res.cells {
            assert!(c.error.is_none(), "{method}: {:?}", c.error);
            assert_eq!(c.n_used() + c.n_diverged, c.n_seeds);
        }
        assert!(fit_rate_points(&res.rate_points()).is_ok());
    }
}

#[test]
fn divergence_is_counted_not_averaged() {
    // a huge manual step makes SGD on this quadratic overflow
    let res = run_experiment(&config("sgd", "kind = \"manual\"\neta = 1e3", "")).unwrap();
    for c in &res.cells {
        assert_eq!(c.n_diverged, c.n_seeds);
        assert!(c.mean_avg_grad_norm.is_nan());
    }
    assert!(!res.warnings().is_empty());
}

#[test]
fn known_p_needs_a_gap_for_the_chain() {
    let text = r#"
method = "nsgdm"
T_grid = [8, 16, 32]
seeds = 2
[problem]
name = "chain"
d = 4
[oracle]
kind = "gaussian"
p = 2.0
[schedule]
kind = "known_p"
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let res = run_experiment(&cfg).unwrap();
    assert!(res.cells.iter().all(|c| c.error.is_some()));
    let fixed = text.replace("kind = \"known_p\"", "kind = \"known_p\"\ndelta1 = 10.0");
    let res = run_experiment(&ExperimentConfig::from_toml_str(&fixed).unwrap()).unwrap();
    assert!(res.cells.iter().all(|c| c.error.is_none()));
}
