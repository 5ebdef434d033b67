use gsamp::config::{reference_noise_grid, Config, ModeChoice};
use gsamp::Error;
use gsamp_core::{AggregatorKind, ErrorMode, EstimatorConfig, SasParams};

fn config_error(text: &str) -> (Option<usize>, String) {
    match Config::parse(text, None) {
        Err(Error::Config(c)) => (c.line, c.message),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn defaults_mirror_reference_setup() {
    let c = Config::default();
    assert_eq!((c.trials, c.k, c.cutoff_ratio), (100, 5, 0.4));
    assert_eq!(c.observed_for(197), 130);
    assert_eq!(c.observed_for(60), 40);
    assert_eq!(c.table1, reference_noise_grid());
    let names: Vec<&str> = c.estimators.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["gsamp-sum", "gsamp-median", "gsamp-smooth", "glms", "g-sign", "gdlms", "gsd"]);
    assert!(c.estimators.iter().all(|e| e.mode == ModeChoice::Auto));
}

#[test]
fn auto_mode_follows_noise() {
    let c = Config::default();
    let mode = |alpha: f64| {
        let rc = c.run_config(10, SasParams::new(alpha, 0.1, 0.0).unwrap(), None);
        match &rc.estimators[0].config {
            EstimatorConfig::Gsamp(g) => g.mode,
            _ => unreachable!(),
        }
    };
    assert_eq!(mode(2.0), ErrorMode::Lms);
    assert_eq!(mode(1.3), ErrorMode::Sign);
}

#[test]
fn full_config_parses() {
    let text = r#"
seed = 9
trials = 3
k = 4
observed = 12
bandwidth = 6
cutoff_ratio = 0.3
local_ratio = 0.5

[noise]
alpha = 1.3
gamma = 0.2

[synthetic]
nodes = 20
steps = 30

[[estimator]]
name = "m"
kind = "gsamp"
mode = "sign"
aggregator = "median"
weights = [0.1, 0.2, 0.3, 0.4]
khop = 2
degree_normalized = true
stability_guard = true

[[estimator]]
kind = "gdlms"
step_size = 0.5
order = 12

[table1]
noise = [{ alpha = 2.0, gamma = 0.3 }]
"#;
    let c = Config::parse(text, None).unwrap();
    assert_eq!((c.seed, c.trials, c.k, c.observed, c.bandwidth), (9, 3, 4, Some(12), Some(6)));
    assert_eq!(c.noise, SasParams::new(1.3, 0.2, 0.0).unwrap());
    assert_eq!((c.synthetic.nodes, c.synthetic.steps), (20, 30));
    assert_eq!(c.estimators.len(), 2);
    let m = &c.estimators[0];
    assert_eq!((m.name.as_str(), m.mode), ("m", ModeChoice::Sign));
    match &m.config {
        EstimatorConfig::Gsamp(g) => {
            assert_eq!(g.aggregator, AggregatorKind::Median);
            assert_eq!(g.weights.w, [0.1, 0.2, 0.3, 0.4]);
            assert!(g.weights.degree_normalized && g.stability_guard);
            assert_eq!(g.khop, 2);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(c.estimators[1].name, "gdlms");
    assert_eq!(c.estimators[1].config, EstimatorConfig::Gdlms { step_size: 0.5, order: 12 });
    assert_eq!(c.table1, vec![SasParams::new(2.0, 0.3, 0.0).unwrap()]);
}

#[test]
fn unknown_key_is_named_with_its_line() {
    let (line, msg) = config_error("seed = 1\n\n[[estimator]]\nkind = \"glms\"\nstepsize = 1.0\n");
    assert_eq!(line, Some(5));
    assert!(msg.contains("stepsize"), "{msg}");
    let (line, msg) = config_error("trials = 2\nbogus = 3\n");
    assert_eq!(line, Some(2));
    assert!(msg.contains("bogus"), "{msg}");
    let (line, _) = config_error("[noise]\nalpha = 2.0\nsigma = 1\n");
    assert_eq!(line, Some(3));
}

#[test]
fn keys_foreign_to_the_kind_are_rejected() {
    let (line, msg) = config_error("seed = 1\n[[estimator]]\nkind = \"glms\"\naggregator = \"sum\"\n");
    assert_eq!(line, Some(4));
    assert!(msg.contains("aggregator") && msg.contains("glms"), "{msg}");
    let (_, msg) = config_error("[[estimator]]\nkind = \"gsamp\"\nstep_size = 1.0\n");
    assert!(msg.contains("step_size"), "{msg}");
}

#[test]
fn invalid_values_are_config_errors() {
    for text in [
        "trials = 0\n",
        "cutoff_ratio = 1.5\n",
        "[noise]\nalpha = 2.5\n",
        "[[estimator]]\nkind = \"gsamp\"\nweights = [1, 2]\n",
        "[[estimator]]\nkind = \"gsamp\"\nkhop = 0\n",
        "[[estimator]]\nkind = \"unknown\"\n",
        "[[estimator]]\nkind = \"glms\"\n[[estimator]]\nkind = \"glms\"\n",
        "[synthetic]\nsteps = 1\n",
        "seed = \"x\"\n",
    ] {
        let err = Config::parse(text, None).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}: {err}");
    }
}

#[test]
fn mask_path_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    std::fs::write(&p, "mask = \"m.csv\"\n").unwrap();
    let c = Config::load(&p).unwrap();
    assert_eq!(c.mask.unwrap(), dir.path().join("m.csv"));
    assert_eq!(c.source, "mask = \"m.csv\"\n");
}
