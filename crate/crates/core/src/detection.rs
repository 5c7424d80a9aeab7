//! Detection statistics computed from the residuals eigenspace, and vertex
//! identification from eigenvectors.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::NoiseModel;
use crate::graph::VertexSubset;
use crate::lanczos::{EigenPairs, LanczosOptions};
use crate::linalg::norm1;
use crate::par::{self, Execution};
use crate::residuals::{top_eigenpairs, ExpectedValueMode, ResidualsBuilder};
use crate::rng::{tag, RngSeed};

/// Floor applied to null standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-12;

pub const DEFAULT_CHI2_GRID: usize = 1024;
pub const DEFAULT_THRESHOLD_FRAC: f64 = 0.3;

/// Statistic value plus an identification result.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub statistic: f64,
    pub flagged: VertexSubset,
    /// Per-vertex ranking scores; higher means more likely in the subgraph.
    pub scores: Vec<f64>,
}

/// Largest eigenvalue of the residuals matrix.
pub fn stat_spectral_norm(eigs: &EigenPairs) -> Result<f64> {
    eigs.values
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidParameter("need at least one eigenpair".into()))
}

/// Pearson χ² of a 2×2 table; 0 when a row or column is empty.
pub fn chi_squared_table(counts: [[u64; 2]; 2]) -> f64 {
    let rows = [counts[0][0] + counts[0][1], counts[1][0] + counts[1][1]];
    let cols = [counts[0][0] + counts[1][0], counts[0][1] + counts[1][1]];
    if rows.contains(&0) || cols.contains(&0) {
        return 0.0;
    }
    let total = (rows[0] + rows[1]) as f64;
    let mut chi = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let expect = rows[r] as f64 * cols[c] as f64 / total;
            let diff = counts[r][c] as f64 - expect;
            chi += diff * diff / expect;
        }
    }
    chi
}

/// Quadrant counts by sign; zero counts as positive.
fn quadrant_counts(points: impl Iterator<Item = (f64, f64)>) -> [[u64; 2]; 2] {
    let mut counts = [[0u64; 2]; 2];
    for (x, y) in points {
        counts[(x < 0.0) as usize][(y < 0.0) as usize] += 1;
    }
    counts
}

/// χ² of the quadrant table formed by the signs of `(u1_i, u2_i)`.
pub fn chi_squared_quadrant(u1: &[f64], u2: &[f64]) -> f64 {
    chi_squared_rotated(u1, u2, 0.0)
}

/// χ² after rotating the point cloud by `−θ`.
pub fn chi_squared_rotated(u1: &[f64], u2: &[f64], theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    chi_squared_table(quadrant_counts(
        u1.iter().zip(u2).map(|(&a, &b)| (a * c + b * s, b * c - a * s)),
    ))
}

/// How the rotation maximizing χ² is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationSearch {
    /// Uniform grid over `[0, π/2)`, then a golden-section pass around the best angle.
    Grid(usize),
    /// Every cell between consecutive breakpoints of the piecewise-constant χ²(θ).
    Exact,
}

impl Default for RotationSearch {
    fn default() -> Self {
        RotationSearch::Grid(DEFAULT_CHI2_GRID)
    }
}

/// Maximum of χ²(θ) over rotations of the plane.
pub fn stat_chi2_max(u1: &[f64], u2: &[f64], search: RotationSearch) -> Result<f64> {
    if u1.len() != u2.len() {
        return Err(Error::Shape(format!(
            "eigenvectors of lengths {} and {}",
            u1.len(),
            u2.len()
        )));
    }
    match search {
        RotationSearch::Grid(grid) => {
            if grid < 2 {
                return Err(Error::InvalidParameter(format!("grid {grid} < 2")));
            }
            let step = FRAC_PI_2 / grid as f64;
            let mut best = (f64::NEG_INFINITY, 0.0);
            for k in 0..grid {
                let theta = k as f64 * step;
                let v = chi_squared_rotated(u1, u2, theta);
                if v > best.0 {
                    best = (v, theta);
                }
            }
            let refined = golden_section_max(
                |t| chi_squared_rotated(u1, u2, t),
                best.1 - step,
                best.1 + step,
                30,
            );
            Ok(best.0.max(refined))
        }
        RotationSearch::Exact => {
            let mut cuts: Vec<f64> = u1
                .iter()
                .zip(u2)
                .filter(|(a, b)| **a != 0.0 || **b != 0.0)
                .map(|(&a, &b)| b.atan2(a).rem_euclid(FRAC_PI_2))
                .collect();
            if cuts.is_empty() {
                return Ok(chi_squared_quadrant(u1, u2));
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut best = 0.0f64;
            for (i, &lo) in cuts.iter().enumerate() {
                let hi = cuts.get(i + 1).copied().unwrap_or(cuts[0] + FRAC_PI_2);
                best = best.max(chi_squared_rotated(u1, u2, 0.5 * (lo + hi)));
            }
            Ok(best)
        }
    }
}

/// Best value seen by a golden-section search on `[lo, hi]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut best = fa.max(fb);
    for _ in 0..iters {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
            best = best.max(fa);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
            best = best.max(fb);
        }
    }
    best
}

/// Per-index mean and standard deviation of eigenvector L1 norms under H0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub version: u32,
    pub m: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub trials_used: usize,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub seed: Option<RngSeed>,
}

impl NullCalibration {
    pub const VERSION: u32 = 1;

    /// `norms[t][i]` is ‖u_i‖₁ in trial `t`.
    pub fn from_l1_norms(norms: &[Vec<f64>]) -> Result<NullCalibration> {
        if norms.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "calibration needs at least 2 trials, got {}",
                norms.len()
            )));
        }
        let m = norms.iter().map(Vec::len).min().unwrap_or(0);
        let k = norms.len() as f64;
        let mut mu = vec![0.0; m];
        let mut sigma = vec![0.0; m];
        let mut floored = 0;
        for i in 0..m {
            let mean = norms.iter().map(|t| t[i]).sum::<f64>() / k;
            let var = norms.iter().map(|t| (t[i] - mean).powi(2)).sum::<f64>() / (k - 1.0);
            mu[i] = mean;
            sigma[i] = var.sqrt();
            if !(sigma[i] >= SIGMA_FLOOR) {
                sigma[i] = SIGMA_FLOOR;
                floored += 1;
            }
        }
        if floored > 0 {
            log::warn!("{floored} of {m} null standard deviations floored at {SIGMA_FLOOR:e}");
        }
        Ok(NullCalibration {
            version: Self::VERSION,
            m,
            mu,
            sigma,
            trials_used: norms.len(),
            model: String::new(),
            seed: None,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<NullCalibration> {
        let cal: NullCalibration = serde_json::from_str(text)?;
        if cal.version != Self::VERSION {
            return Err(Error::Config(format!(
                "calibration version {} is not supported",
                cal.version
            )));
        }
        if cal.mu.len() != cal.m || cal.sigma.len() != cal.m {
            return Err(Error::Config("calibration vectors do not match m".into()));
        }
        Ok(cal)
    }
}

/// Samples `trials` background graphs and records the L1 norms of their top
/// `m` residuals eigenvectors.
pub fn calibrate_null(
    model: &NoiseModel,
    mode: ExpectedValueMode,
    m: usize,
    trials: usize,
    seed: RngSeed,
    exec: Execution,
) -> Result<NullCalibration> {
    if trials < 2 {
        return Err(Error::InvalidParameter(format!(
            "calibration needs at least 2 trials, got {trials}"
        )));
    }
    let builder = ResidualsBuilder::new(model, mode)?;
    let base = seed.derive(tag::CALIBRATION);
    let norms = par::try_map(exec, trials, |t| {
        let trial_seed = base.with_stream(t as u64);
        let run = || -> Result<Vec<f64>> {
            let g = model.sample(trial_seed.derive(tag::BACKGROUND))?;
            let op = builder.operator(&g)?;
            let opts = LanczosOptions::default().with_seed(trial_seed.derive(tag::EIGEN_START).master);
            let eigs = top_eigenpairs(&op, m, &opts)?;
            Ok(eigs.vectors.iter().map(|u| norm1(u)).collect())
        };
        run().map_err(|e| e.in_trial(t))
    })?;
    let mut cal = NullCalibration::from_l1_norms(&norms)?;
    cal.model = model.fingerprint();
    cal.seed = Some(seed);
    Ok(cal)
}

/// `−min_i (‖u_i‖₁ − μ_i)/σ_i` and the minimizing index, over the indices
/// both the eigenpairs and the calibration cover.
pub fn stat_l1_deviation(eigs: &EigenPairs, cal: &NullCalibration) -> Result<(f64, usize)> {
    let m = eigs.len().min(cal.m);
    if m == 0 {
        return Err(Error::InvalidParameter("no eigenvectors to compare".into()));
    }
    let mut best = (f64::INFINITY, 0);
    for i in 0..m {
        let z = (norm1(&eigs.vectors[i]) - cal.mu[i]) / cal.sigma[i];
        if z < best.0 {
            best = (z, i);
        }
    }
    Ok((-best.0, best.1))
}

/// Flags components on the dominant side of `vec` at or above `frac` of its
/// largest magnitude.
pub fn identify_threshold(vec: &[f64], frac: f64) -> Result<DetectionOutcome> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold fraction {frac} outside (0, 1]"
        )));
    }
    let n = vec.len();
    let lead = vec
        .iter()
        .copied()
        .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    if lead == 0.0 {
        return Ok(DetectionOutcome {
            statistic: 0.0,
            flagged: VertexSubset::new([], n)?,
            scores: vec![0.0; n],
        });
    }
    let s = lead.signum();
    let scores: Vec<f64> = vec.iter().map(|v| s * v).collect();
    let top = lead.abs();
    let flagged = VertexSubset::new((0..n).filter(|&i| scores[i] >= frac * top), n)?;
    Ok(DetectionOutcome {
        statistic: top,
        flagged,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmeansParams {
    pub k: usize,
    pub min_size: usize,
    pub restarts: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            k: 3,
            min_size: 5,
            restarts: 20,
        }
    }
}

const KMEANS_MAX_ITERS: usize = 100;

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: [f64; 2], centers: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, &center) in centers.iter().enumerate() {
        let d = dist2(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// One k-means++ seeded Lloyd run; returns labels, centers and inertia.
fn kmeans_once<R: Rng>(points: &[[f64; 2]], k: usize, rng: &mut R) -> (Vec<usize>, Vec<[f64; 2]>, f64) {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick]);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, points[pick]));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (label, &p) in labels.iter_mut().zip(points) {
            let c = nearest(p, &centers).0;
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = labels
        .iter()
        .zip(points)
        .map(|(&l, &p)| dist2(p, centers[l]))
        .sum();
    (labels, centers, inertia)
}

/// k-means in the plane of two eigenvectors; flags the smallest cluster with
/// at least `min_size` members.
pub fn identify_kmeans(
    u1: &[f64],
    u2: &[f64],
    params: KmeansParams,
    seed: RngSeed,
) -> Result<DetectionOutcome> {
    let n = u1.len();
    if u2.len() != n {
        return Err(Error::Shape(format!(
            "eigenvectors of lengths {n} and {}",
            u2.len()
        )));
    }
    let KmeansParams {
        k,
        min_size,
        restarts,
    } = params;
    if k < 2 || min_size < 1 || restarts < 1 || n < k {
        return Err(Error::InvalidParameter(format!(
            "k-means needs k >= 2, min_size >= 1, restarts >= 1 and N >= k (k={k}, min_size={min_size}, restarts={restarts}, N={n})"
        )));
    }
    let points: Vec<[f64; 2]> = u1.iter().zip(u2).map(|(&a, &b)| [a, b]).collect();
    let mut rng = seed.rng();
    let mut best: Option<(Vec<usize>, Vec<[f64; 2]>, f64)> = None;
    for _ in 0..restarts {
        let run = kmeans_once(&points, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (labels, centers, _) = best.expect("at least one restart");

    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let radius = |c: usize| (centers[c][0].powi(2) + centers[c][1].powi(2)).sqrt();
    let chosen = (0..k)
        .filter(|&c| sizes[c] >= min_size)
        .min_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(radius(b).total_cmp(&radius(a))));

    let own: Vec<f64> = points
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .collect();
    let lift = own.iter().copied().fold(0.0f64, f64::max) + 1.0;
    let (flagged, statistic, scores) = match chosen {
        Some(c) => (
            VertexSubset::new((0..n).filter(|&i| labels[i] == c), n)?,
            radius(c),
            (0..n)
                .map(|i| if labels[i] == c { lift + own[i] } else { own[i] })
                .collect(),
        ),
        None => (VertexSubset::new([], n)?, 0.0, own),
    };
    Ok(DetectionOutcome {
        statistic,
        flagged,
        scores,
    })
}
