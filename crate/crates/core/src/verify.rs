//! Randomized suites that pit the fast path against the dense and exhaustive
//! oracles, or check the analytic bounds on sampled instances. Each suite
//! returns a [`CheckReport`] whose `violations` must be zero.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detection::chi_squared_rotated;
use crate::error::{Error, Result};
use crate::generators::{
    choose_embedding_vertices, sample_er, sample_regular, sample_signal, EmbeddingPolicy, NoiseModel,
    RmatModel, SignalModel, RMAT_DEFAULT_BASE,
};
use crate::graph::{Graph, Placement};
use crate::lanczos::LanczosOptions;
use crate::linalg::norm2;
use crate::oracle::{
    delta_k_exact_and_bound, log_likelihood_ratio_bayes, log_likelihood_ratio_er, partition_norms,
    signal_mass, signal_mass_bound, verify_concentration,
};
use crate::par::{self, Execution};
use crate::residuals::{exact_operator, modularity_operator, top_eigenpairs, LowRankFactors};
use crate::rng::{tag, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    LikelihoodRatio,
    SignalMass,
    Concentration,
    DeltaK,
    NullSpace,
    Chi2Period,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::LikelihoodRatio,
        Check::SignalMass,
        Check::Concentration,
        Check::DeltaK,
        Check::NullSpace,
        Check::Chi2Period,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::LikelihoodRatio => "likelihood-ratio",
            Check::SignalMass => "signal-mass",
            Check::Concentration => "concentration",
            Check::DeltaK => "delta-k",
            Check::NullSpace => "null-space",
            Check::Chi2Period => "chi2-period",
        }
    }

    /// Trial count used when none is given.
    pub fn default_trials(self) -> usize {
        match self {
            Check::LikelihoodRatio => 500,
            Check::Concentration => 50,
            _ => 100,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Check> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub trials: usize,
    /// Comparisons actually made (a trial may contribute several).
    pub evaluated: usize,
    /// Trials skipped because a precondition of the claim did not hold.
    pub excluded: usize,
    pub violations: usize,
    /// What `worst` measures.
    pub metric: String,
    /// Worst observed value of `metric` over the evaluated comparisons.
    pub worst: Option<f64>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// One outcome per comparison: `Some(value)` with whether it violated the
/// claim, or `None` when excluded.
type Outcome = Option<(f64, bool)>;

fn collect(
    check: Check,
    trials: usize,
    metric: &str,
    larger_is_worse: bool,
    rows: Vec<Vec<Outcome>>,
) -> CheckReport {
    let mut report = CheckReport {
        check: check.name().into(),
        trials,
        evaluated: 0,
        excluded: 0,
        violations: 0,
        metric: metric.into(),
        worst: None,
    };
    for row in rows {
        for o in row {
            match o {
                None => report.excluded += 1,
                Some((value, bad)) => {
                    report.evaluated += 1;
                    report.violations += bad as usize;
                    report.worst = Some(match report.worst {
                        None => value,
                        Some(w) if larger_is_worse => w.max(value),
                        Some(w) => w.min(value),
                    });
                }
            }
        }
    }
    report
}

pub fn run_check(check: Check, trials: usize, seed: u64, exec: Execution) -> Result<CheckReport> {
    let base = RngSeed::new(seed, 0).derive(0x7e51 + check as u64);
    match check {
        Check::LikelihoodRatio => likelihood_ratio(trials, base, exec),
        Check::SignalMass => signal_mass_suite(trials, base, exec),
        Check::Concentration => concentration(trials, base, exec),
        Check::DeltaK => delta_k(trials, base, exec),
        Check::NullSpace => null_space(trials, base, exec),
        Check::Chi2Period => chi2_period(trials, base, exec),
    }
}

/// Closed-form likelihood ratio against per-placement Bayes enumeration on
/// random graphs with at most 8 vertices.
fn likelihood_ratio(trials: usize, base: RngSeed, exec: Execution) -> Result<CheckReport> {
    let rows = par::try_map(exec, trials, |t| {
        let mut rng = base.with_stream(t as u64).rng();
        let n = rng.random_range(3..=8);
        let density = rng.random_range(0.1..0.9);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(density) {
                    pairs.push((i, j));
                }
            }
        }
        let g = Graph::from_edges(n, pairs)?;
        let mut row = Vec::new();
        for n_s in [2, 3] {
            for p in [0.2, 0.5] {
                for p_s in [0.0, 0.5, 0.9] {
                    let fast = log_likelihood_ratio_er(&g, n_s, p, p_s)?;
                    let slow = log_likelihood_ratio_bayes(&g, n_s, p, p_s)?;
                    let rel = (fast - slow).exp_m1().abs();
                    row.push(Some((rel, !(rel <= 1e-9))));
                }
            }
        }
        Ok(row)
    })?;
    Ok(collect(
        Check::LikelihoodRatio,
        trials,
        "relative error",
        true,
        rows,
    ))
}

/// ER background edge probability for the signal-mass check.
pub const SIGNAL_MASS_P: f64 = 4e-4 * 4.0;
pub const SIGNAL_MASS_N: usize = 1024;

/// One signal-mass trial: `None` when the norm hypothesis fails, else the
/// measured `‖u_S‖²` and the bound.
pub fn signal_mass_trial(n: usize, p: f64, signal: SignalModel, seed: RngSeed) -> Result<Option<(f64, f64)>> {
    let background = sample_er(n, p, seed.derive(tag::BACKGROUND))?;
    let sg = sample_signal(&signal, seed.derive(tag::SIGNAL))?;
    let chosen = choose_embedding_vertices(
        &vec![0.0; n],
        sg.n(),
        EmbeddingPolicy::Uniform,
        seed.derive(tag::EMBEDDING),
    )?;
    let placement = Placement::new(chosen.to_vec());
    let ahat = background.foreground_residual(&sg, &placement)?;
    let factors = LowRankFactors::erdos_renyi(n, p);
    let pn = partition_norms(&background, &factors, &chosen, &ahat)?;
    let bound = match signal_mass_bound(&pn) {
        Ok(b) => b,
        Err(Error::HypothesisViolated(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let observed = background.union(&sg, &placement)?;
    let op = exact_operator(&observed, factors)?;
    let opts = LanczosOptions::default()
        .with_tol(1e-10)
        .with_seed(seed.derive(tag::EIGEN_START).master);
    let eigs = top_eigenpairs(&op, 1, &opts)?;
    Ok(Some((signal_mass(&eigs.vectors[0], &chosen), bound)))
}

fn signal_mass_suite(trials: usize, base: RngSeed, exec: Execution) -> Result<CheckReport> {
    let signal = SignalModel::Cluster { size: 15, p: 0.9 };
    let rows = par::try_map(exec, trials, |t| {
        let r = signal_mass_trial(SIGNAL_MASS_N, SIGNAL_MASS_P, signal, base.with_stream(t as u64))?;
        Ok(vec![r.map(|(mass, bound)| (mass - bound, mass < bound - 1e-9))])
    })?;
    Ok(collect(
        Check::SignalMass,
        trials,
        "measured mass minus bound",
        false,
        rows,
    ))
}

pub const CONCENTRATION_LEVELS: u32 = 8;
/// Signal size and degree; dense enough that the bound is informative.
pub const CONCENTRATION_SIGNAL: (usize, usize) = (16, 10);

/// One concentration trial on a Chung–Lu background whose weights are the
/// R-MAT expected degrees, with a random regular signal placed on low
/// expected-degree vertices.
pub fn concentration_trial(seed: RngSeed) -> Result<crate::oracle::ConcentrationReport> {
    let weights = RmatModel::new(RMAT_DEFAULT_BASE, CONCENTRATION_LEVELS, 12)?.expected_degrees();
    let model = NoiseModel::Cl {
        weights: weights.clone(),
    };
    let background = model.sample(seed.derive(tag::BACKGROUND))?;
    let (n_s, d_s) = CONCENTRATION_SIGNAL;
    let signal = sample_regular(n_s, d_s, seed.derive(tag::SIGNAL))?;
    let chosen = choose_embedding_vertices(
        &weights,
        n_s,
        EmbeddingPolicy::low_degree(),
        seed.derive(tag::EMBEDDING),
    )?;
    verify_concentration(
        &background,
        &LowRankFactors::chung_lu(&weights)?,
        &signal,
        &chosen,
    )
}

fn concentration(trials: usize, base: RngSeed, exec: Execution) -> Result<CheckReport> {
    let rows = par::try_map(exec, trials, |t| {
        let r = concentration_trial(base.with_stream(t as u64))?;
        Ok(vec![r.applicable.then_some((
            r.b - r.b_lower_bound,
            r.b < r.b_lower_bound - 1e-9,
        ))])
    })?;
    Ok(collect(
        Check::Concentration,
        trials,
        "measured b minus bound",
        false,
        rows,
    ))
}

fn delta_k(trials: usize, base: RngSeed, exec: Execution) -> Result<CheckReport> {
    let rows = par::try_map(exec, trials, |t| {
        let mut rng = base.with_stream(t as u64).rng();
        let n = rng.random_range(2..=64);
        let k: Vec<f64> = (0..n).map(|_| rng.random_range(1..=40) as f64).collect();
        let fraction = rng.random_range(0.05..1.0);
        let mut khat: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(fraction) {
                    rng.random_range(0..=15) as f64
                } else {
                    0.0
                }
            })
            .collect();
        if khat.iter().all(|&v| v == 0.0) {
            khat[0] = 1.0;
        }
        let (exact, bound) = delta_k_exact_and_bound(&k, &khat)?;
        Ok(vec![Some((bound - exact, exact > bound * (1.0 + 1e-12) + 1e-12))])
    })?;
    Ok(collect(Check::DeltaK, trials, "bound minus exact", false, rows))
}

/// A random small instance of each background family, cycling by trial.
pub fn random_background(t: usize, seed: RngSeed) -> Result<Graph> {
    let mut rng = seed.rng();
    let model = match t % 3 {
        0 => NoiseModel::Er {
            n: rng.random_range(16..=256),
            p: rng.random_range(0.02..0.3),
        },
        1 => {
            let n = rng.random_range(16..=256);
            NoiseModel::Cl {
                weights: (0..n).map(|_| rng.random_range(0.5..20.0)).collect(),
            }
        }
        _ => NoiseModel::Rmat(RmatModel::new(RMAT_DEFAULT_BASE, rng.random_range(4..=8), 12)?),
    };
    model.sample(seed.derive(tag::BACKGROUND))
}

fn null_space(trials: usize, base: RngSeed, exec: Execution) -> Result<CheckReport> {
    let rows = par::try_map(exec, trials, |t| {
        let g = random_background(t, base.with_stream(t as u64))?;
        if g.m() == 0 {
            return Ok(vec![None]);
        }
        let op = modularity_operator(&g)?;
        let k = g.degrees().as_f64();
        let r = norm2(&op.matvec(&vec![1.0; g.n()])) / norm2(&k);
        Ok(vec![Some((r, !(r <= 1e-9)))])
    })?;
    Ok(collect(Check::NullSpace, trials, "‖B1‖/‖k‖", true, rows))
}

fn chi2_period(trials: usize, base: RngSeed, exec: Execution) -> Result<CheckReport> {
    let rows = par::try_map(exec, trials, |t| {
        let mut rng = base.with_stream(t as u64).rng();
        let n = rng.random_range(5..=400);
        let (u1, u2): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .unzip();
        let mut row = Vec::with_capacity(65);
        for k in 0..64 {
            let theta = FRAC_PI_2 * k as f64 / 64.0;
            let gap = (chi_squared_rotated(&u1, &u2, theta)
                - chi_squared_rotated(&u1, &u2, theta + FRAC_PI_2))
            .abs();
            row.push(Some((gap, !(gap <= 1e-9))));
        }
        let a: Vec<f64> = u1.iter().map(|v| v.abs() + 0.01).collect();
        let b: Vec<f64> = u2.iter().map(|v| v.abs() + 0.01).collect();
        let degenerate = chi_squared_rotated(&a, &b, 0.0);
        row.push(Some((degenerate, degenerate != 0.0)));
        Ok(row)
    })?;
    Ok(collect(Check::Chi2Period, trials, "χ² difference", true, rows))
}

/// Resolves check names; `all` expands to every check.
pub fn parse_checks(names: &[String]) -> Result<Vec<Check>> {
    if names.iter().any(|n| n == "all") {
        return Ok(Check::ALL.to_vec());
    }
    names.iter().map(|n| n.parse()).collect()
}
