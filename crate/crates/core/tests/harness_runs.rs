use std::fs;
use std::path::PathBuf;

use spectral_subgraph::harness::{
    records_csv, run_monte_carlo, statistics, summarize, ExperimentConfig, Hypothesis,
};
use spectral_subgraph::roc::roc;
use spectral_subgraph::Execution;

const SMALL: &str = r#"
[experiment]
trials = 6
seed = 5

[noise]
model = "cl"
levels = 8

[signal]
model = "cluster"
size = 10
p = 0.9

[[detector]]
kind = "specnorm"

[[detector]]
kind = "chi2"
grid = 128

[[detector]]
kind = "l1"
m = 10
calibration_trials = 8

[[detector]]
kind = "spca"
lambda_scale = 1.0
max_iters = 5
"#;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse() {
    let mut count = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if text.contains("[experiment]") {
            let cfg =
                ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.noise.model().unwrap();
            count += 1;
        }
    }
    assert!(count >= 4);
}

#[test]
fn runs_are_reproducible_and_order_free() {
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let a = run_monte_carlo(&cfg, Execution::Parallel).unwrap();
    let b = run_monte_carlo(&cfg, Execution::Sequential).unwrap();
    assert_eq!(records_csv(&a, false), records_csv(&b, false));
    let c = run_monte_carlo(&cfg, Execution::Parallel).unwrap();
    assert_eq!(records_csv(&a, false), records_csv(&c, false));

    let mut other = cfg.clone();
    other.experiment.seed += 1;
    let d = run_monte_carlo(&other, Execution::Parallel).unwrap();
    assert_ne!(records_csv(&a, false), records_csv(&d, false));
}

#[test]
fn records_are_well_formed() {
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let records = run_monte_carlo(&cfg, Execution::Parallel).unwrap();
    assert_eq!(records.len(), 12);
    for r in &records {
        assert_eq!(r.results.len(), 4);
        match r.hypothesis {
            Hypothesis::H0 => assert!(r.planted.is_empty()),
            Hypothesis::H1 => assert_eq!(r.planted.len(), 10),
        }
        for d in &r.results {
            assert!(d.statistic.is_finite());
            assert_eq!(d.scores.len(), 256);
            assert!(d.scores.iter().all(|s| s.is_finite()));
            assert!(d.flagged.iter().all(|&v| v < 256));
        }
    }

    let csv = records_csv(&records, false);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "trial,hypothesis,detector,statistic,planted,flagged"
    );
    assert_eq!(lines.count(), 12 * 4);
    let timed = records_csv(&records, true);
    assert!(timed.lines().nth(1).unwrap().contains("runtime_ms"));

    let summary = summarize(&cfg, &records).unwrap();
    for (d, s) in summary.detectors.iter().enumerate() {
        let h0 = statistics(&records, d, Hypothesis::H0);
        let h1 = statistics(&records, d, Hypothesis::H1);
        assert_eq!(s.auc, Some(roc(&h0, &h1).unwrap().auc));
        let p = s.precision_at_recall.unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }
}

#[test]
fn bad_configs_are_rejected() {
    let cases = [
        SMALL.replace("trials = 6", "trials = 0"),
        SMALL.replace("p = 0.9", "p = 1.5"),
        SMALL.replace("lambda_scale = 1.0", "lambda_scale = 1.0\nlambda = 0.1"),
        SMALL.replace("model = \"cl\"", "model = \"xx\""),
        SMALL.replace("[signal]\nmodel = \"cluster\"\nsize = 10\np = 0.9\n", ""),
        SMALL.replace("seed = 5", "seed = 5\nunknown = 1"),
    ];
    for text in cases {
        assert!(ExperimentConfig::from_toml(&text).is_err(), "accepted:\n{text}");
    }
}
