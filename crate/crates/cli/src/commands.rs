use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::json;
use spectral_subgraph::detection::{calibrate_null, NullCalibration};
use spectral_subgraph::generators::SignalModel;
use spectral_subgraph::graph::{parse_edge_list, write_edge_list};
use spectral_subgraph::harness::{
    evaluate_detectors, records_csv, summarize, DetectorConfig, DetectorSpec, EmbeddingSpec, Experiment,
    ExperimentConfig, ExperimentSection, Hypotheses, Hypothesis, MetricsSection, NoiseSpec, PolicyKind,
    RmatSpec,
};
use spectral_subgraph::lanczos::LanczosOptions;
use spectral_subgraph::residuals::{
    modularity_operator, top_eigenpairs, write_eigenvalues_csv, write_eigenvectors_csv, write_eigs_binary,
    ExpectedValueMode,
};
use spectral_subgraph::verify::{parse_checks, run_check};
use spectral_subgraph::{Error, Execution, Result, RngSeed};

use crate::{
    CalibrateArgs, DetectArgs, EigsArgs, GenerateArgs, HypothesisArg, McArgs, NoiseKind, SignalKind,
    StatKind, VerifyArgs,
};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn generate_config(a: &GenerateArgs) -> Result<ExperimentConfig> {
    let noise = match a.noise {
        NoiseKind::Er => NoiseSpec::Er {
            n: a.n,
            p: a.p,
            average_degree: a.average_degree,
        },
        NoiseKind::Cl => NoiseSpec::Cl {
            weights: None,
            levels: Some(a.levels),
            per_vertex: 12,
        },
        NoiseKind::Rmat => NoiseSpec::Rmat(RmatSpec {
            levels: a.levels,
            per_vertex: 12,
            base: spectral_subgraph::generators::RMAT_DEFAULT_BASE,
            keep_diagonal: true,
        }),
    };
    let signal = match a.signal {
        SignalKind::None => None,
        SignalKind::Cluster => Some(SignalModel::Cluster {
            size: a.size,
            p: a.signal_p,
        }),
        SignalKind::Bipartite => Some(SignalModel::Bipartite {
            left: a.left,
            right: a.right,
            p: a.signal_p,
        }),
    };
    let embedding = match a.low_degree {
        Some(threshold) => EmbeddingSpec {
            policy: PolicyKind::LowDegree,
            threshold,
        },
        None => EmbeddingSpec::default(),
    };
    Ok(ExperimentConfig {
        experiment: ExperimentSection {
            trials: a.trial + 1,
            seed: a.seed,
            hypotheses: if signal.is_some() {
                Hypotheses::Both
            } else {
                Hypotheses::H0
            },
        },
        noise,
        residuals: ExpectedValueMode::default(),
        signal,
        embedding,
        detectors: vec![DetectorConfig::new(DetectorSpec::specnorm())],
        metrics: MetricsSection::default(),
    })
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => {
            let mut c = ExperimentConfig::from_toml(&read(path)?)?;
            c.experiment.seed = a.seed;
            c.experiment.trials = c.experiment.trials.max(a.trial + 1);
            c
        }
        None => generate_config(&a)?,
    };
    // Only the samplers are needed; this avoids calibrating L1 detectors.
    config.detectors = vec![DetectorConfig::new(DetectorSpec::specnorm())];
    let hypothesis = match a.hypothesis {
        Some(HypothesisArg::H0) => Hypothesis::H0,
        Some(HypothesisArg::H1) => Hypothesis::H1,
        None if config.signal.is_some() => Hypothesis::H1,
        None => Hypothesis::H0,
    };
    let exp = Experiment::prepare(config, Execution::Sequential)?;
    let (g, planted) = exp.sample_trial(hypothesis, a.trial)?;
    let mut text = String::new();
    if hypothesis == Hypothesis::H1 {
        let ids: Vec<String> = planted.iter().map(usize::to_string).collect();
        text.push_str(&format!("# planted: {}\n", ids.join(";")));
    }
    text.push_str(&write_edge_list(&g));
    emit(a.output.as_deref(), &text)
}

pub fn eigs(a: EigsArgs) -> Result<()> {
    let parsed = parse_edge_list(&read(&a.graph)?)?;
    let op = modularity_operator(&parsed.graph)?;
    let opts = LanczosOptions::default().with_tol(a.tol).with_seed(a.seed);
    let eigs = top_eigenpairs(&op, a.m, &opts)?;
    match &a.out_prefix {
        Some(prefix) => {
            let with = |ext: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(ext);
                std::path::PathBuf::from(p)
            };
            write_eigenvalues_csv(&eigs, io::BufWriter::new(fs::File::create(with(".values.csv"))?))?;
            write_eigenvectors_csv(&eigs, io::BufWriter::new(fs::File::create(with(".vectors.csv"))?))?;
            write_eigs_binary(&eigs, io::BufWriter::new(fs::File::create(with(".eigs.bin"))?))?;
        }
        None => write_eigenvalues_csv(&eigs, io::stdout().lock())?,
    }
    Ok(())
}

/// The parts of an experiment config that describe the null model. Other
/// sections are ignored so a full experiment file can be reused.
#[derive(Deserialize)]
struct NullModelFile {
    noise: NoiseSpec,
    #[serde(default)]
    residuals: ExpectedValueMode,
}

pub fn calibrate(a: CalibrateArgs) -> Result<()> {
    let file: NullModelFile = toml::from_str(&read(&a.config)?).map_err(|e| Error::Config(e.to_string()))?;
    let model = file.noise.model()?;
    let m = a.m.min(model.n().saturating_sub(1));
    let cal = calibrate_null(
        &model,
        file.residuals,
        m,
        a.trials,
        RngSeed::new(a.seed, 0),
        execution(a.sequential),
    )?;
    emit(a.output.as_deref(), &(cal.to_json()? + "\n"))
}

pub fn detect(a: DetectArgs) -> Result<()> {
    let parsed = parse_edge_list(&read(&a.graph)?)?;
    let g = &parsed.graph;
    let mut calibration = None;
    let mut spec = match a.stat {
        StatKind::Specnorm => DetectorSpec::specnorm(),
        StatKind::Chi2 => {
            let mut s = DetectorSpec::chi2();
            if let DetectorSpec::Chi2 { exact, .. } = &mut s {
                *exact = a.exact;
            }
            s
        }
        StatKind::L1 => {
            let path = a
                .calibration
                .as_ref()
                .ok_or_else(|| Error::Config("the l1 statistic needs --calibration".into()))?;
            let cal = NullCalibration::from_json(&read(path)?)?;
            let m = a.m.unwrap_or(cal.m).min(cal.m);
            calibration = Some(cal);
            DetectorSpec::l1(m, 0)
        }
        StatKind::Spca => {
            let mut s = DetectorSpec::spca_scaled(a.lambda_scale.unwrap_or(1.0), a.max_iters);
            if let (
                Some(l),
                DetectorSpec::Spca {
                    lambda, lambda_scale, ..
                },
            ) = (a.lambda, &mut s)
            {
                *lambda = Some(l);
                *lambda_scale = None;
            }
            s
        }
    };
    if let Some(t) = a.threshold {
        match &mut spec {
            DetectorSpec::Specnorm { threshold }
            | DetectorSpec::L1 { threshold, .. }
            | DetectorSpec::Spca { threshold, .. } => *threshold = t,
            DetectorSpec::Chi2 { .. } => {
                return Err(Error::Config(
                    "--threshold does not apply to chi2 (k-means)".into(),
                ))
            }
        }
    }
    let detector = DetectorConfig::new(spec);
    let op = modularity_operator(g)?;
    let result = evaluate_detectors(&op, &[detector], &[calibration], RngSeed::new(a.seed, 0))?.remove(0);
    let flagged: Vec<i64> = result.flagged.iter().map(|&v| parsed.original_ids[v]).collect();
    let out = json!({
        "detector": result.detector,
        "statistic": result.statistic,
        "vertices": g.n(),
        "edges": g.m(),
        "flagged": flagged,
    });
    emit(None, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(())
}

pub fn mc(a: McArgs) -> Result<()> {
    let mut config = ExperimentConfig::from_toml(&read(&a.config)?)?;
    if let Some(seed) = a.seed {
        config.experiment.seed = seed;
    }
    if let Some(trials) = a.trials {
        config.experiment.trials = trials;
    }
    config.validate()?;
    let exec = execution(a.sequential);
    let exp = Experiment::prepare(config, exec)?;
    let records = exp.run(exec)?;
    emit(a.output.as_deref(), &records_csv(&records, a.timing))?;
    if let Some(path) = &a.summary {
        let summary = summarize(&exp.config, &records)?;
        fs::write(path, serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(())
}

pub fn verify(a: VerifyArgs) -> Result<()> {
    let checks = parse_checks(&a.check)?;
    let exec = execution(a.sequential);
    let mut reports = Vec::new();
    for c in checks {
        reports.push(run_check(
            c,
            a.trials.unwrap_or(c.default_trials()),
            a.seed,
            exec,
        )?);
    }
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let out = json!({ "violations": violations, "checks": reports });
    emit(None, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    if violations > 0 {
        eprintln!("error: {violations} violations");
        io::stdout().flush()?;
        std::process::exit(2);
    }
    Ok(())
}
