//! Robust mean estimation under strong contamination.
//!
//! Two filters share the same skeleton: compute a weighted spectral statistic
//! of the centered data, stop when it passes the family-level gate, otherwise
//! score each sample by its squared projection on the top eigenvector and apply
//! multiplicative downweighting. The degree-2 filter gates on the weighted
//! covariance; the degree-4 filter gates on the symmetric flattening of the
//! weighted fourth-moment tensor, the `D x D` matrix (`D = d(d+1)/2`) whose
//! top eigenvalue is the degree-4 relaxation of the injective norm. The
//! degree-4 gate consumes the certified constant produced by the certifier on
//! the clean family, never a per-adversary tuning.
//!
//! Weights only decrease, the sample with the current top score is zeroed
//! each round, and total removed mass is capped at twice the contamination
//! budget, which bounds the iteration count and keeps termination trivial.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::certify;
use crate::distributions::{
    contaminate, population_moment_tensor, sample, Adversary, ContaminationSpec, DistributionSpec,
};
use crate::tensor::SampleSet;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("epsilon {0} out of range [0, 1/4)")]
    EpsilonOutOfRange(f64),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("certifier failed while deriving the gate: {0}")]
    GateDerivation(String),
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    /// Degree-2 gate constant; the gate is `1 + c2 s^2 spectral_threshold`.
    pub c2: f64,
    /// Degree-4 gate constant; the gate is `c4 B^4 + q_scale s^4 (2 + d^2)`
    /// with `B` the certified degree-4 constant. The quadratic term is the
    /// flattening value of the inlier family's covariance bound
    /// `Sigma <= s^2 I` (max of `2 ||A Sigma||_F^2-type terms over unit A`),
    /// taken at the family level rather than from the weighted sample so the
    /// gate cannot be inflated by the adversary.
    pub c4: f64,
    pub spectral_threshold: f64,
    pub q_scale: f64,
    /// Certified degree-4 constant of the clean family. `None` falls back to
    /// the family-level bound `2 s`.
    pub deg4_cert_bound: Option<f64>,
    pub min_n: usize,
    pub max_iters: usize,
    /// Record per-iteration weight vectors (tests only; memory-heavy).
    pub record_weights: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            c2: 6.0,
            c4: 9.0,
            spectral_threshold: 1.0,
            q_scale: 1.0,
            deg4_cert_bound: None,
            min_n: 10,
            max_iters: 500,
            record_weights: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MethodTag {
    Deg2,
    Deg4,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub spectral_score: f64,
    pub total_weight: f64,
}

#[derive(Debug, Clone)]
pub struct FilterState {
    pub weights: Vec<f64>,
    pub iteration: usize,
    pub weighted_mean: Vec<f64>,
    pub spectral_score: f64,
    pub history: Vec<HistoryRow>,
    pub weight_snapshots: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub mu_hat: Vec<f64>,
    pub iterations: usize,
    pub removed_mass: f64,
    pub final_spectral_score: f64,
    pub method: MethodTag,
    /// Set when the weight floor was reached before the spectral gate; the
    /// estimate is the best partial result.
    pub budget_exhausted: bool,
}

fn weighted_mean(samples: &SampleSet, w: &[f64]) -> (Vec<f64>, f64) {
    let d = samples.d;
    let mut mu = vec![0.0; d];
    let mut sw = 0.0;
    for (row, &wi) in samples.rows().zip(w) {
        sw += wi;
        for (m, x) in mu.iter_mut().zip(row) {
            *m += wi * x;
        }
    }
    for m in mu.iter_mut() {
        *m /= sw;
    }
    (mu, sw)
}

fn weighted_covariance(samples: &SampleSet, w: &[f64], mu: &[f64], sw: f64) -> DMatrix<f64> {
    let d = samples.d;
    let mut cov = DMatrix::zeros(d, d);
    for (row, &wi) in samples.rows().zip(w) {
        if wi == 0.0 {
            continue;
        }
        for i in 0..d {
            let yi = row[i] - mu[i];
            for j in i..d {
                let yj = row[j] - mu[j];
                cov[(i, j)] += wi * yi * yj;
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= sw;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

fn top_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (
        eig.eigenvalues[best],
        eig.eigenvectors.column(best).into_owned(),
    )
}

/// Packed symmetric flattening of `y y^T` with off-diagonals scaled by
/// sqrt(2): `<flat(y), flat(z)> = <y, z>^2`.
fn sym_flatten(y: &[f64], out: &mut [f64]) {
    let d = y.len();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            out[k] = if i == j { y[i] * y[j] } else { sqrt2 * y[i] * y[j] };
            k += 1;
        }
    }
}

enum SpectralKind {
    Deg2 { gate: f64 },
    Deg4 { gate: f64 },
}

fn run_filter(
    samples: &SampleSet,
    epsilon: f64,
    kind: SpectralKind,
    method: MethodTag,
    config: &FilterConfig,
) -> Result<(EstimateReport, FilterState), FilterError> {
    if !(0.0..0.25).contains(&epsilon) {
        return Err(FilterError::EpsilonOutOfRange(epsilon));
    }
    if samples.n < config.min_n {
        return Err(FilterError::TooFewSamples {
            min: config.min_n,
            got: samples.n,
        });
    }
    let n = samples.n;
    let d = samples.d;
    let floor = (1.0 - 2.0 * epsilon) * n as f64;
    let mut w = vec![1.0f64; n];
    let mut history = Vec::new();
    let mut snapshots = if config.record_weights {
        Some(vec![w.clone()])
    } else {
        None
    };

    let flat_dim = d * (d + 1) / 2;
    let mut flat = vec![0.0; flat_dim];
    let mut budget_exhausted = false;
    let mut iteration = 0usize;

    loop {
        let (mu, sw) = weighted_mean(samples, &w);
        let (score, gate, scores): (f64, f64, Vec<f64>) = match &kind {
            SpectralKind::Deg2 { gate } => {
                let cov = weighted_covariance(samples, &w, &mu, sw);
                let (lam, u) = top_eigenpair(&cov);
                let scores = samples
                    .rows()
                    .map(|row| {
                        let proj: f64 = row
                            .iter()
                            .zip(&mu)
                            .zip(u.iter())
                            .map(|((x, m), ui)| (x - m) * ui)
                            .sum();
                        proj * proj
                    })
                    .collect();
                (lam, *gate, scores)
            }
            SpectralKind::Deg4 { gate } => {
                let mut m4 = DMatrix::zeros(flat_dim, flat_dim);
                let mut y = vec![0.0; d];
                for (row, &wi) in samples.rows().zip(&w) {
                    if wi == 0.0 {
                        continue;
                    }
                    for (yj, (x, m)) in y.iter_mut().zip(row.iter().zip(&mu)) {
                        *yj = x - m;
                    }
                    sym_flatten(&y, &mut flat);
                    for a in 0..flat_dim {
                        let fa = wi * flat[a];
                        for b in a..flat_dim {
                            m4[(a, b)] += fa * flat[b];
                        }
                    }
                }
                for a in 0..flat_dim {
                    for b in a..flat_dim {
                        m4[(a, b)] /= sw;
                        m4[(b, a)] = m4[(a, b)];
                    }
                }
                let (lam4, u4) = top_eigenpair(&m4);
                let scores = samples
                    .rows()
                    .map(|row| {
                        for (yj, (x, m)) in y.iter_mut().zip(row.iter().zip(&mu)) {
                            *yj = x - m;
                        }
                        sym_flatten(&y, &mut flat);
                        let proj: f64 = flat.iter().zip(u4.iter()).map(|(a, b)| a * b).sum();
                        proj * proj
                    })
                    .collect();
                (lam4, *gate, scores)
            }
        };

        history.push(HistoryRow {
            iteration,
            spectral_score: score,
            total_weight: sw,
        });

        if score <= gate || iteration >= config.max_iters {
            if iteration >= config.max_iters && score > gate {
                budget_exhausted = true;
            }
            let state = FilterState {
                weights: w,
                iteration,
                weighted_mean: mu.clone(),
                spectral_score: score,
                history,
                weight_snapshots: snapshots,
            };
            return Ok((
                EstimateReport {
                    mu_hat: mu,
                    iterations: iteration,
                    removed_mass: n as f64 - state.weights.iter().sum::<f64>(),
                    final_spectral_score: score,
                    method,
                    budget_exhausted,
                },
                state,
            ));
        }

        // max score among samples that still carry weight; that sample is
        // zeroed, so the loop runs at most n rounds
        let mut smax = 0.0f64;
        for (i, &s) in scores.iter().enumerate() {
            if w[i] > 0.0 && s > smax {
                smax = s;
            }
        }
        if smax <= 0.0 {
            let state = FilterState {
                weights: w,
                iteration,
                weighted_mean: mu.clone(),
                spectral_score: score,
                history,
                weight_snapshots: snapshots,
            };
            return Ok((
                EstimateReport {
                    mu_hat: mu,
                    iterations: iteration,
                    removed_mass: n as f64 - state.weights.iter().sum::<f64>(),
                    final_spectral_score: score,
                    method,
                    budget_exhausted: true,
                },
                state,
            ));
        }
        let new_w: Vec<f64> = w
            .iter()
            .zip(&scores)
            .map(|(&wi, &s)| wi * (1.0 - s / smax).max(0.0))
            .collect();
        let new_total: f64 = new_w.iter().sum();
        if new_total < floor {
            budget_exhausted = true;
            let state = FilterState {
                weights: w,
                iteration,
                weighted_mean: mu.clone(),
                spectral_score: score,
                history,
                weight_snapshots: snapshots,
            };
            return Ok((
                EstimateReport {
                    mu_hat: mu,
                    iterations: iteration,
                    removed_mass: n as f64 - state.weights.iter().sum::<f64>(),
                    final_spectral_score: score,
                    method,
                    budget_exhausted,
                },
                state,
            ));
        }
        w = new_w;
        if let Some(snaps) = snapshots.as_mut() {
            snaps.push(w.clone());
        }
        iteration += 1;
    }
}

/// Degree-2 spectral filter: gate `lambda_max(weighted covariance) <= 1 +
/// c2 s^2 threshold`.
pub fn mean_filter_deg2(
    samples: &SampleSet,
    epsilon: f64,
    s: f64,
    config: &FilterConfig,
) -> Result<(EstimateReport, FilterState), FilterError> {
    let gate = 1.0 + config.c2 * s * s * config.spectral_threshold;
    run_filter(
        samples,
        epsilon,
        SpectralKind::Deg2 { gate },
        MethodTag::Deg2,
        config,
    )
}

/// Degree-4 flattening filter: gate `lambda_max(M) <= c4 B^4 + q_scale s^4
/// (2 + d^2)` with `B` the certified constant (falling back to the
/// family-level `2 s`).
pub fn mean_filter_deg4(
    samples: &SampleSet,
    epsilon: f64,
    s: f64,
    config: &FilterConfig,
) -> Result<(EstimateReport, FilterState), FilterError> {
    let b = config.deg4_cert_bound.unwrap_or(2.0 * s);
    let d2 = (samples.d * samples.d) as f64;
    let gate = config.c4 * b.powi(4) + config.q_scale * s.powi(4) * (2.0 + d2);
    run_filter(
        samples,
        epsilon,
        SpectralKind::Deg4 { gate },
        MethodTag::Deg4,
        config,
    )
}

// --- error sweep ---------------------------------------------------------------

/// Adversary placement for the sweep. The scaled cluster sits at the
/// degree-2 evasion radius `center_scale / sqrt(eps)` with proportional
/// radial spread, which is what separates the two filters: the degree-2 gate
/// never fires on it while the degree-4 gate prunes it down to its own
/// detection boundary.
#[derive(Debug, Clone, Serialize)]
pub enum SweepAdversary {
    ScaledShiftedCluster { center_scale: f64, spread_ratio: f64 },
    FixedPointMass { distance: f64 },
}

impl SweepAdversary {
    fn contamination(&self, epsilon: f64, d: usize, seed: u64) -> ContaminationSpec {
        match self {
            SweepAdversary::ScaledShiftedCluster {
                center_scale,
                spread_ratio,
            } => {
                let r = center_scale / epsilon.sqrt();
                let mut center = vec![0.0; d];
                center[0] = r;
                ContaminationSpec {
                    epsilon,
                    adversary: Adversary::ShiftedCluster {
                        center,
                        spread: spread_ratio * r,
                    },
                    seed,
                }
            }
            SweepAdversary::FixedPointMass { distance } => {
                let mut loc = vec![0.0; d];
                loc[0] = *distance;
                ContaminationSpec {
                    epsilon,
                    adversary: Adversary::PointMass(loc),
                    seed,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub trial: usize,
    pub method: String,
    pub error: f64,
    pub iterations: usize,
    pub removed_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `(epsilon, method, median error)`
    pub medians: Vec<(f64, String, f64)>,
    /// Fitted log-log slope of median error against epsilon, per method.
    pub exponents: Vec<(String, f64)>,
    /// Clean-set resilience at 2 eps per epsilon: the information-theoretic
    /// error scale used as a sanity denominator in reports.
    pub resilience_scale: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub spec: DistributionSpec,
    pub n: usize,
    pub epsilon_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub adversary: SweepAdversary,
    pub filter: FilterConfig,
    /// Derive the degree-4 gate constant by certifying the clean family's
    /// order-4 population tensor (kept on unless the family has no analytic
    /// tensor).
    pub certify_gate: bool,
}

impl SweepConfig {
    pub fn new(spec: DistributionSpec, n: usize, epsilon_list: Vec<f64>, trials: usize, seed: u64) -> Self {
        SweepConfig {
            spec,
            n,
            epsilon_list,
            trials,
            seed,
            adversary: SweepAdversary::ScaledShiftedCluster {
                center_scale: 2.2,
                spread_ratio: 1.0 / 3.0,
            },
            filter: FilterConfig::default(),
            certify_gate: true,
        }
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.max(1e-300).ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Runs the full contamination sweep: per `(epsilon, trial)` the clean mean,
/// the naive contaminated mean, and both filters, with errors measured
/// against the true (population) mean. Trials are seeded independently and
/// may run in parallel; aggregation is deterministic by `(epsilon, trial)`.
pub fn error_sweep(config: &SweepConfig) -> Result<SweepTable, FilterError> {
    use rayon::prelude::*;

    let s_known = config.spec.known_subgaussian_s().unwrap_or(1.0);
    let mut filter = config.filter.clone();
    if config.certify_gate && filter.deg4_cert_bound.is_none() {
        if let Some(t4) = population_moment_tensor(&config.spec, 4) {
            let res = certify::certify_bounded(&t4, certify::DEFAULT_REPORT_TOL)
                .map_err(|e| FilterError::GateDerivation(e.to_string()))?;
            filter.deg4_cert_bound = Some(res.b_min);
        }
    }

    let mut jobs = Vec::new();
    for (ei, &eps) in config.epsilon_list.iter().enumerate() {
        for trial in 0..config.trials {
            jobs.push((ei, eps, trial));
        }
    }
    let results: Result<Vec<Vec<SweepRow>>, FilterError> = jobs
        .par_iter()
        .map(|&(ei, eps, trial)| {
            let draw_seed = config
                .seed
                .wrapping_add((ei as u64) << 32)
                .wrapping_add(trial as u64 * 2 + 1);
            let clean = sample(&config.spec, config.n, draw_seed)
                .map_err(|e| FilterError::GateDerivation(e.to_string()))?;
            let corrupted = if eps > 0.0 {
                let cspec = config
                    .adversary
                    .contamination(eps, config.spec.d, draw_seed ^ 0x9e3779b97f4a7c15);
                contaminate(&clean, &cspec)
                    .map_err(|e| FilterError::GateDerivation(e.to_string()))?
            } else {
                clean.clone()
            };
            let err_of = |mu: &[f64]| -> f64 {
                mu.iter().map(|x| x * x).sum::<f64>().sqrt()
            };
            let clean_err = err_of(&clean.mean());
            let naive_err = err_of(&corrupted.mean());
            let (deg2, _) = mean_filter_deg2(&corrupted, eps, s_known, &filter)?;
            let (deg4, _) = mean_filter_deg4(&corrupted, eps, s_known, &filter)?;
            Ok(vec![
                SweepRow {
                    epsilon: eps,
                    trial,
                    method: "clean".into(),
                    error: clean_err,
                    iterations: 0,
                    removed_mass: 0.0,
                },
                SweepRow {
                    epsilon: eps,
                    trial,
                    method: "naive".into(),
                    error: naive_err,
                    iterations: 0,
                    removed_mass: 0.0,
                },
                SweepRow {
                    epsilon: eps,
                    trial,
                    method: "deg2".into(),
                    error: err_of(&deg2.mu_hat),
                    iterations: deg2.iterations,
                    removed_mass: deg2.removed_mass,
                },
                SweepRow {
                    epsilon: eps,
                    trial,
                    method: "deg4".into(),
                    error: err_of(&deg4.mu_hat),
                    iterations: deg4.iterations,
                    removed_mass: deg4.removed_mass,
                },
            ])
        })
        .collect();
    let rows: Vec<SweepRow> = results?.into_iter().flatten().collect();

    let mut medians = Vec::new();
    for &eps in &config.epsilon_list {
        for method in ["clean", "naive", "deg2", "deg4"] {
            let mut vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.epsilon == eps && r.method == method)
                .map(|r| r.error)
                .collect();
            medians.push((eps, method.to_string(), median(&mut vals)));
        }
    }
    let mut exponents = Vec::new();
    for method in ["deg2", "deg4"] {
        let pts: Vec<(f64, f64)> = medians
            .iter()
            .filter(|(e, m, _)| *e > 0.0 && m == method)
            .map(|(e, _, v)| (*e, *v))
            .collect();
        if pts.len() >= 2 {
            exponents.push((method.to_string(), fit_loglog_slope(&pts)));
        }
    }

    let mut resilience_scale = Vec::new();
    for &eps in &config.epsilon_list {
        if eps > 0.0 {
            let clean = sample(&config.spec, config.n, config.seed ^ 0x5bd1e995)
                .map_err(|e| FilterError::GateDerivation(e.to_string()))?;
            if let Ok(est) = crate::oracles::resilience(&clean, (2.0 * eps).min(1.0), 6, config.seed)
            {
                resilience_scale.push((eps, est.delta));
            }
        }
    }

    Ok(SweepTable {
        rows,
        medians,
        exponents,
        resilience_scale,
    })
}

/// Plot-ready CSV of the sweep medians: one row per epsilon, columns per
/// method. An empty sweep produces the header only.
pub fn plot_data_csv(table: &SweepTable) -> String {
    let methods = ["clean", "naive", "deg2", "deg4"];
    let mut out = String::from("epsilon,clean,naive,deg2,deg4\n");
    let mut eps_list: Vec<f64> = table.medians.iter().map(|(e, _, _)| *e).collect();
    eps_list.sort_by(|a, b| a.total_cmp(b));
    eps_list.dedup();
    for eps in eps_list {
        out.push_str(&format!("{eps}"));
        for method in methods {
            let v = table
                .medians
                .iter()
                .find(|(e, m, _)| *e == eps && m == method)
                .map(|(_, _, v)| *v)
                .unwrap_or(f64::NAN);
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
