//! Ground-truth estimators used to validate certifier output.
//!
//! Both oracles report certified-from-below quantities: the injective norm
//! search returns the best sphere point it visited (a lower bound on the true
//! maximum, which is all the dominance tests need), and the resilience search
//! returns an explicit subset and direction achieving its bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::tensor::{MomentTensor, SampleSet};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("Grid2D method requires dimension 2, got {0}")]
    GridNeedsDimTwo(usize),
    #[error("epsilon {0} out of range (0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("need at least ceil(1/epsilon) samples, got {0}")]
    TooFewSamples(usize),
    #[error("degree must be even, got {0}")]
    OddDegree(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InjectiveMethod {
    /// Dense angle sweep with local refinement; `d = 2` only.
    Grid2D,
    /// Shifted symmetric higher-order power iteration from random unit
    /// starts; any dimension.
    PowerIterationMultiStart,
}

#[derive(Debug, Clone, Serialize)]
pub struct InjectiveNormEstimate {
    /// Lower bound on `max_{||v|| = 1} p(v)`.
    pub value: f64,
    pub argmax: Vec<f64>,
    pub method: InjectiveMethod,
    pub starts: usize,
    pub note: String,
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Maximizes the moment polynomial over the unit sphere.
pub fn injective_norm(
    tensor: &MomentTensor,
    method: InjectiveMethod,
    starts: usize,
    seed: u64,
) -> Result<InjectiveNormEstimate, OracleError> {
    if tensor.m % 2 != 0 {
        return Err(OracleError::OddDegree(tensor.m));
    }
    let p = tensor.to_polynomial();
    match method {
        InjectiveMethod::Grid2D => {
            if tensor.d != 2 {
                return Err(OracleError::GridNeedsDimTwo(tensor.d));
            }
            let eval = |th: f64| p.eval(&[th.cos(), th.sin()]).expect("dim 2");
            let steps = 100_000usize;
            let mut best_th = 0.0;
            let mut best = f64::NEG_INFINITY;
            for k in 0..steps {
                let th = std::f64::consts::TAU * k as f64 / steps as f64;
                let v = eval(th);
                if v > best {
                    best = v;
                    best_th = th;
                }
            }
            // golden-section refinement around the best bracket
            let gr = (5.0f64.sqrt() - 1.0) / 2.0;
            let width = std::f64::consts::TAU / steps as f64;
            let (mut a, mut b) = (best_th - width, best_th + width);
            for _ in 0..80 {
                let c = b - gr * (b - a);
                let dd = a + gr * (b - a);
                if eval(c) > eval(dd) {
                    b = dd;
                } else {
                    a = c;
                }
            }
            let th = 0.5 * (a + b);
            let argmax = vec![th.cos(), th.sin()];
            let value = eval(th).max(best);
            Ok(InjectiveNormEstimate {
                value,
                argmax,
                method,
                starts: steps,
                note: "dense circle sweep with golden-section refinement".into(),
            })
        }
        InjectiveMethod::PowerIterationMultiStart => {
            let d = tensor.d;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best_val = f64::NEG_INFINITY;
            let mut best_v = vec![0.0; d];
            for _ in 0..starts.max(1) {
                let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
                if normalize(&mut v) == 0.0 {
                    v[0] = 1.0;
                }
                let mut val = p.eval(&v).expect("dims match");
                for _ in 0..500 {
                    // shifted fixed point: w = T v^{m-1} + (|val| + 1) v;
                    // the adaptive shift keeps the even-order ascent monotone
                    let grad = p.gradient(&v).expect("dims match");
                    let shift = val.abs() + 1.0;
                    let mut w: Vec<f64> = grad
                        .iter()
                        .zip(&v)
                        .map(|(g, x)| g / tensor.m as f64 + shift * x)
                        .collect();
                    if normalize(&mut w) == 0.0 {
                        break;
                    }
                    let new_val = p.eval(&w).expect("dims match");
                    v = w;
                    if (new_val - val).abs() <= 1e-13 * (1.0 + val.abs()) {
                        val = new_val;
                        break;
                    }
                    val = new_val;
                }
                if val > best_val {
                    best_val = val;
                    best_v = v;
                }
            }
            normalize(&mut best_v);
            let value = p.eval(&best_v).expect("dims match");
            Ok(InjectiveNormEstimate {
                value,
                argmax: best_v,
                method,
                starts: starts.max(1),
                note: format!("best of {} shifted power iterations", starts.max(1)),
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResilienceEstimate {
    pub epsilon: f64,
    /// `(1/n) sum_{i in subset} <x_i - mean, direction>` at the best found
    /// direction; an explicit lower bound on the true resilience.
    pub delta: f64,
    pub witness_direction: Vec<f64>,
    pub witness_subset: Vec<usize>,
}

/// Largest mean shift any `ceil(eps n)`-subset induces in some direction,
/// centered at the empirical mean of the full set.
///
/// For a fixed direction the optimal subset is exactly the top `k` samples by
/// projection, so the objective is a support function (a max of linear
/// functions of `v`); the iteration `v <- normalize(sum of the active
/// subset)` increases it monotonically and is run from `dirs` random starts.
pub fn resilience(
    samples: &SampleSet,
    epsilon: f64,
    dirs: usize,
    seed: u64,
) -> Result<ResilienceEstimate, OracleError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(OracleError::EpsilonOutOfRange(epsilon));
    }
    let n = samples.n;
    if (n as f64) < 1.0 / epsilon {
        return Err(OracleError::TooFewSamples(n));
    }
    let d = samples.d;
    let k = (epsilon * n as f64).ceil() as usize;
    let mean = samples.mean();
    let centered: Vec<Vec<f64>> = samples
        .rows()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let top_subset = |v: &[f64]| -> Vec<usize> {
        let mut scored: Vec<(usize, f64)> = centered
            .iter()
            .enumerate()
            .map(|(i, y)| (i, y.iter().zip(v).map(|(a, b)| a * b).sum()))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        let mut idx: Vec<usize> = scored.into_iter().map(|(i, _)| i).collect();
        idx.sort_unstable();
        idx
    };
    let subset_sum = |subset: &[usize]| -> Vec<f64> {
        let mut s = vec![0.0; d];
        for &i in subset {
            for (acc, y) in s.iter_mut().zip(&centered[i]) {
                *acc += y;
            }
        }
        for acc in s.iter_mut() {
            *acc /= n as f64;
        }
        s
    };
    let delta_of = |subset: &[usize], v: &[f64]| -> f64 {
        subset_sum(subset).iter().zip(v).map(|(a, b)| a * b).sum()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_delta = f64::NEG_INFINITY;
    let mut best_dir = vec![0.0; d];
    let mut best_subset = Vec::new();
    for _ in 0..dirs.max(1) {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
        if normalize(&mut v) == 0.0 {
            v[0] = 1.0;
        }
        let mut subset = top_subset(&v);
        for _ in 0..100 {
            let mut s = subset_sum(&subset);
            if normalize(&mut s) == 0.0 {
                break;
            }
            let next = top_subset(&s);
            v = s;
            if next == subset {
                subset = next;
                break;
            }
            subset = next;
        }
        let delta = delta_of(&subset, &v);
        if delta > best_delta {
            best_delta = delta;
            best_dir = v;
            best_subset = subset;
        }
    }
    Ok(ResilienceEstimate {
        epsilon,
        delta: best_delta,
        witness_direction: best_dir,
        witness_subset: best_subset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{population_moment_tensor, sample, DistributionSpec, Family};
    use crate::tensor::{empirical_moment_tensor, SampleSet};

    #[test]
    fn gaussian_injective_norm_is_three() {
        for d in [2usize, 3] {
            let t = population_moment_tensor(&DistributionSpec::new(Family::GaussianIso, d), 4)
                .unwrap();
            let est =
                injective_norm(&t, InjectiveMethod::PowerIterationMultiStart, 8, 1).unwrap();
            assert!((est.value - 3.0).abs() <= 1e-6, "value = {}", est.value);
            let norm: f64 = est.argmax.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn rademacher_injective_norm_is_two() {
        let t = population_moment_tensor(&DistributionSpec::new(Family::RademacherProduct, 2), 4)
            .unwrap();
        for method in [InjectiveMethod::Grid2D, InjectiveMethod::PowerIterationMultiStart] {
            let est = injective_norm(&t, method, 16, 3).unwrap();
            assert!((est.value - 2.0).abs() <= 1e-6, "{method:?}: {}", est.value);
            // maximizer is (1, 1)/sqrt(2) up to symmetry
            let prod = (est.argmax[0] * est.argmax[1]).abs();
            assert!((prod - 0.5).abs() <= 1e-5, "argmax = {:?}", est.argmax);
        }
    }

    #[test]
    fn rank_one_tensor_norm_is_sample_norm_power() {
        let x = vec![1.5, -2.0, 0.5];
        let s = SampleSet::from_rows(vec![x.clone()]).unwrap();
        for m in [4usize, 6] {
            let t = empirical_moment_tensor(&s, m, false).unwrap();
            let est =
                injective_norm(&t, InjectiveMethod::PowerIterationMultiStart, 8, 5).unwrap();
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let expected = norm.powi(m as i32);
            assert!(
                (est.value - expected).abs() <= 1e-9 * expected,
                "m={m}: {} vs {expected}",
                est.value
            );
        }
    }

    #[test]
    fn grid_requires_dim_two() {
        let t = population_moment_tensor(&DistributionSpec::new(Family::GaussianIso, 3), 4)
            .unwrap();
        assert!(matches!(
            injective_norm(&t, InjectiveMethod::Grid2D, 1, 0),
            Err(OracleError::GridNeedsDimTwo(3))
        ));
    }

    #[test]
    fn resilience_half_and_half() {
        // d = 1, half the samples at +1 and half at -1, eps = 0.1
        let mut rows = vec![vec![1.0]; 5];
        rows.extend(vec![vec![-1.0]; 5]);
        let s = SampleSet::from_rows(rows).unwrap();
        let est = resilience(&s, 0.1, 4, 0).unwrap();
        assert!((est.delta - 0.1).abs() <= 1e-12, "delta = {}", est.delta);
        assert_eq!(est.witness_subset.len(), 1);
    }

    #[test]
    fn identical_samples_have_zero_resilience() {
        let s = SampleSet::from_rows(vec![vec![2.0, -1.0]; 40]).unwrap();
        for eps in [0.05, 0.25, 0.5] {
            let est = resilience(&s, eps, 4, 0).unwrap();
            assert!(est.delta.abs() <= 1e-12);
        }
    }

    #[test]
    fn gaussian_resilience_matches_quantile_formula() {
        let spec = DistributionSpec::new(Family::GaussianIso, 2);
        let s = sample(&spec, 10_000, 21).unwrap();
        let est = resilience(&s, 0.05, 8, 2).unwrap();
        let formula = 0.05 * (2.0 * (1.0f64 / 0.05).ln()).sqrt();
        assert!(
            est.delta <= formula * 1.5 && est.delta >= formula / 1.5,
            "delta = {}, formula = {formula}",
            est.delta
        );
        assert_eq!(est.witness_subset.len(), 500);
    }

    #[test]
    fn subset_choice_matches_brute_force() {
        // for a fixed direction the chosen subset must beat all C(n, k)
        let rows = vec![
            vec![0.3, -1.2],
            vec![1.1, 0.4],
            vec![-0.9, 0.8],
            vec![0.05, -0.3],
            vec![2.0, 0.1],
            vec![-1.5, -0.5],
            vec![0.7, 0.7],
            vec![-0.2, 1.9],
            vec![0.9, -1.1],
            vec![-0.6, 0.2],
        ];
        let s = SampleSet::from_rows(rows.clone()).unwrap();
        let n = rows.len();
        let k = 2; // eps = 0.2
        let mean = s.mean();
        let v = [0.8, -0.6];
        let centered_proj: Vec<f64> = rows
            .iter()
            .map(|r| (r[0] - mean[0]) * v[0] + (r[1] - mean[1]) * v[1])
            .collect();
        // brute force over all pairs
        let mut brute = f64::NEG_INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                brute = brute.max((centered_proj[i] + centered_proj[j]) / n as f64);
            }
        }
        let mut scored: Vec<f64> = centered_proj.clone();
        scored.sort_by(|a, b| b.total_cmp(a));
        let topk: f64 = scored[..k].iter().sum::<f64>() / n as f64;
        assert!((topk - brute).abs() <= 1e-12, "top-k {topk} vs brute {brute}");
    }
}
