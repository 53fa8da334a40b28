//! Pseudoexpectations as first-class objects.
//!
//! A degree-`t` pseudoexpectation is a linear functional on polynomials of
//! degree at most `t` with `E~[1] = 1` and `E~[q^2] >= 0` for every `q` of
//! degree at most `t/2`; the second condition is exactly PSD-ness of the
//! moment matrix `M[beta, gamma] = moments[beta + gamma]`. Moments are stored
//! once per multi-index, so the different `beta + gamma` splits of the same
//! monomial agree by construction and only normalization and PSD-ness need
//! checking.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::PseudomomentWitness;
use crate::tensor::{enumerate_indices, MultiIndex, Polynomial};

#[derive(Debug, Error)]
pub enum PexpError {
    #[error("polynomial degree {got} exceeds pseudoexpectation degree {max}")]
    DegreeExceeded { max: usize, got: usize },
    #[error("variable count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights must be nonnegative and sum to one (sum = {0})")]
    WeightViolation(f64),
    #[error("degree must be even, got {0}")]
    OddDegree(usize),
    #[error("pseudoexpectation degree {have} is below the required {need}")]
    DegreeTooLow { need: usize, have: usize },
    #[error("paired-variable operation needs an even variable count, got {0}")]
    OddVariableCount(usize),
    #[error("witness embedding failed validation: {0}")]
    EmbeddingFailure(String),
    #[error("malformed pseudoexpectation file: {0}")]
    MalformedFile(String),
}

/// Result of [`Pseudoexpectation::validate`]. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Validation {
    Valid,
    Violations(Vec<String>),
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pseudoexpectation {
    pub num_vars: usize,
    /// Even degree bound `t`.
    pub degree: usize,
    /// Moments for every multi-index of degree `<= t`.
    pub moments: BTreeMap<MultiIndex, f64>,
}

impl Pseudoexpectation {
    fn moment(&self, idx: &MultiIndex) -> f64 {
        self.moments.get(idx).copied().unwrap_or(0.0)
    }

    /// Basis of the moment matrix: all indices of degree `<= t/2`.
    pub fn matrix_basis(&self) -> Vec<MultiIndex> {
        let mut basis = Vec::new();
        for deg in 0..=(self.degree / 2) {
            basis.extend(enumerate_indices(self.num_vars, deg));
        }
        basis
    }

    /// The moment matrix `M[beta, gamma] = moments[beta + gamma]`, a view of
    /// the stored moments.
    pub fn moment_matrix(&self) -> DMatrix<f64> {
        let basis = self.matrix_basis();
        let n = basis.len();
        DMatrix::from_fn(n, n, |i, j| self.moment(&basis[i].add(&basis[j])))
    }

    /// Checks normalization and PSD-ness of the moment matrix.
    pub fn validate(&self, tol: f64) -> Validation {
        let mut violations = Vec::new();
        if self.degree % 2 != 0 {
            violations.push(format!("degree {} is odd", self.degree));
        }
        let one = self.moment(&MultiIndex::zeros(self.num_vars));
        if (one - 1.0).abs() > tol {
            violations.push(format!("normalization E~[1] = {one}, expected 1"));
        }
        let min_eig = nalgebra::SymmetricEigen::new(self.moment_matrix())
            .eigenvalues
            .min();
        if min_eig < -tol {
            violations.push(format!("moment matrix min eigenvalue {min_eig:.3e}"));
        }
        if violations.is_empty() {
            Validation::Valid
        } else {
            Validation::Violations(violations)
        }
    }

    /// `sum_alpha c_alpha moments[alpha]`; linear in `p`.
    pub fn evaluate(&self, p: &Polynomial) -> Result<f64, PexpError> {
        if p.num_vars != self.num_vars {
            return Err(PexpError::DimensionMismatch {
                expected: self.num_vars,
                got: p.num_vars,
            });
        }
        let deg = p.degree();
        if deg > self.degree {
            return Err(PexpError::DegreeExceeded {
                max: self.degree,
                got: deg,
            });
        }
        Ok(p.coeffs.iter().map(|(idx, c)| c * self.moment(idx)).sum())
    }

    /// Weighted monomial averages of a point set; always a valid
    /// pseudoexpectation (true expectations are pseudoexpectations).
    pub fn from_mixture(
        points: &[Vec<f64>],
        weights: &[f64],
        degree: usize,
    ) -> Result<Self, PexpError> {
        if degree % 2 != 0 {
            return Err(PexpError::OddDegree(degree));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(PexpError::WeightViolation(sum));
        }
        if points.len() != weights.len() || points.is_empty() {
            return Err(PexpError::WeightViolation(sum));
        }
        let num_vars = points[0].len();
        for p in points {
            if p.len() != num_vars {
                return Err(PexpError::DimensionMismatch {
                    expected: num_vars,
                    got: p.len(),
                });
            }
        }
        let mut moments = BTreeMap::new();
        for deg in 0..=degree {
            for idx in enumerate_indices(num_vars, deg) {
                let v: f64 = points
                    .iter()
                    .zip(weights)
                    .map(|(x, w)| w * idx.eval(x))
                    .sum();
                moments.insert(idx, v);
            }
        }
        Ok(Pseudoexpectation {
            num_vars,
            degree,
            moments,
        })
    }

    /// Point evaluation as a pseudoexpectation.
    pub fn point_mass(point: &[f64], degree: usize) -> Result<Self, PexpError> {
        Self::from_mixture(&[point.to_vec()], &[1.0], degree)
    }

    /// The substitution `u_i := <v, x_i>`: produces the pseudoexpectation over
    /// `(u_1..u_n, v_1..v_d)` with
    /// `E~'[q(u, v)] = E~[q(<v,x_1>, ..., <v,x_n>, v)]`. Degree-preserving by
    /// construction, and valid because every substituted square stays a
    /// square.
    pub fn substitute_linear(&self, xs: &[Vec<f64>]) -> Result<Pseudoexpectation, PexpError> {
        if self.degree % 2 != 0 {
            return Err(PexpError::OddDegree(self.degree));
        }
        let d = self.num_vars;
        let n = xs.len();
        for x in xs {
            if x.len() != d {
                return Err(PexpError::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
        }
        let total = n + d;
        let mut moments = BTreeMap::new();
        for deg in 0..=self.degree {
            for idx in enumerate_indices(total, deg) {
                // expand prod_i <v,x_i>^{a_i} * v^b into a polynomial in v
                let mut expanded = Polynomial::constant(d, 1.0);
                for (i, &e) in idx.0[..n].iter().enumerate() {
                    let form = Polynomial::linear_form(xs[i].clone());
                    for _ in 0..e {
                        expanded = expanded.mul(&form);
                    }
                }
                let v_part = MultiIndex(idx.0[n..].to_vec());
                expanded = expanded.mul(&Polynomial::monomial(d, v_part, 1.0));
                let value = self.evaluate(&expanded)?;
                moments.insert(idx, value);
            }
        }
        Ok(Pseudoexpectation {
            num_vars: total,
            degree: self.degree,
            moments,
        })
    }
}

/// Both sides of the pseudo-Holder inequality
/// `E~[(1/n) sum g_i^{m-1} h_i] <= (E~[(1/n) sum g_i^m])^{1-1/m}
/// (E~[(1/n) sum h_i^m])^{1/m}`, over a pseudoexpectation in `2n` paired
/// variables `(g, h)`. The SoS proof of the AM-GM inequality gives the
/// constant exactly 1, so `satisfied` uses slack `1e-9` only.
#[derive(Debug, Clone, Serialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

pub fn holder_check(pe: &Pseudoexpectation, m: usize) -> Result<HolderCheck, PexpError> {
    if m % 2 != 0 {
        return Err(PexpError::OddDegree(m));
    }
    if pe.num_vars % 2 != 0 {
        return Err(PexpError::OddVariableCount(pe.num_vars));
    }
    if pe.degree < m {
        return Err(PexpError::DegreeTooLow {
            need: m,
            have: pe.degree,
        });
    }
    let n = pe.num_vars / 2;
    let vars = pe.num_vars;
    let inv_n = 1.0 / n as f64;

    let mut cross = Polynomial::zero(vars);
    let mut g_pow = Polynomial::zero(vars);
    let mut h_pow = Polynomial::zero(vars);
    for i in 0..n {
        let mut e = vec![0u32; vars];
        e[i] = (m - 1) as u32;
        e[n + i] = 1;
        cross = cross.add(&Polynomial::monomial(vars, MultiIndex(e), inv_n));
        let mut eg = vec![0u32; vars];
        eg[i] = m as u32;
        g_pow = g_pow.add(&Polynomial::monomial(vars, MultiIndex(eg), inv_n));
        let mut eh = vec![0u32; vars];
        eh[n + i] = m as u32;
        h_pow = h_pow.add(&Polynomial::monomial(vars, MultiIndex(eh), inv_n));
    }
    let lhs = pe.evaluate(&cross)?;
    // E~ of even powers is nonnegative up to roundoff; clamp before the root
    let g_val = pe.evaluate(&g_pow)?.max(0.0);
    let h_val = pe.evaluate(&h_pow)?.max(0.0);
    let mf = m as f64;
    let rhs = g_val.powf(1.0 - 1.0 / mf) * h_val.powf(1.0 / mf);
    Ok(HolderCheck {
        lhs,
        rhs,
        satisfied: lhs <= rhs + 1e-9,
    })
}

/// Both sides of the variational characterization at the substituted
/// pseudoexpectation, with `p(v) = ||v||^m`:
/// left `E~[(1/n) sum <v,x_i>^m] / E~[||v||^m]`, right the Holder-shaped
/// expression evaluated at `u_i := <v, x_i>`, raised to the `m`. The two
/// sides go through fully separate code paths and agree exactly at this
/// choice of extension.
pub fn variational_characterization_sides(
    pe: &Pseudoexpectation,
    xs: &[Vec<f64>],
) -> Result<(f64, f64), PexpError> {
    let d = pe.num_vars;
    let n = xs.len();
    let m = pe.degree;

    // left side, in the v variables only
    let mut avg_pow = Polynomial::zero(d);
    for x in xs {
        let form = Polynomial::linear_form(x.clone());
        let mut pw = Polynomial::constant(d, 1.0);
        for _ in 0..m {
            pw = pw.mul(&form);
        }
        avg_pow = avg_pow.add(&pw.scale(1.0 / n as f64));
    }
    let norm_m = norm_power_as_polynomial(d, m);
    let lhs = pe.evaluate(&avg_pow)? / pe.evaluate(&norm_m)?;

    // right side, in the (u, v) variables through the substituted pe
    let sub = pe.substitute_linear(xs)?;
    let vars = n + d;
    let mut numer = Polynomial::zero(vars);
    for (i, x) in xs.iter().enumerate() {
        let mut e = vec![0u32; vars];
        e[i] = (m - 1) as u32;
        let u_pow = Polynomial::monomial(vars, MultiIndex(e), 1.0 / n as f64);
        let mut padded = vec![0.0; vars];
        padded[n..].copy_from_slice(x);
        numer = numer.add(&u_pow.mul(&Polynomial::linear_form(padded)));
    }
    let mut u_m = Polynomial::zero(vars);
    for i in 0..n {
        let mut e = vec![0u32; vars];
        e[i] = m as u32;
        u_m = u_m.add(&Polynomial::monomial(vars, MultiIndex(e), 1.0 / n as f64));
    }
    let mut norm_pad = Polynomial::zero(vars);
    for (idx, c) in norm_m.coeffs {
        let mut e = vec![0u32; vars];
        e[n..].copy_from_slice(&idx.0);
        norm_pad = norm_pad.add(&Polynomial::monomial(vars, MultiIndex(e), c));
    }
    let mf = m as f64;
    let num = sub.evaluate(&numer)?;
    let den = sub.evaluate(&norm_pad)?.max(0.0).powf(1.0 / mf)
        * sub.evaluate(&u_m)?.max(0.0).powf(1.0 - 1.0 / mf);
    let rhs = (num / den).powi(m as i32);
    Ok((lhs, rhs))
}

fn norm_power_as_polynomial(d: usize, m: usize) -> Polynomial {
    let hp = crate::tensor::norm_power_poly(d, m).expect("even degree");
    Polynomial::from(&hp)
}

/// Embeds a homogeneous pseudomoment witness into a full inhomogeneous
/// degree-`m` pseudoexpectation: degree-m moments are the witness entries,
/// `E~[1] = 1`, and all intermediate moments vanish. The moment matrix is then
/// block diagonal (the `1` and the witness's moment matrix), so validity
/// reduces to the witness's own PSD-ness; a failure to validate is reported,
/// never silently passed.
pub fn embed_homogeneous_witness(w: &PseudomomentWitness) -> Result<Pseudoexpectation, PexpError> {
    if w.m % 2 != 0 {
        return Err(PexpError::OddDegree(w.m));
    }
    let mut moments = BTreeMap::new();
    moments.insert(MultiIndex::zeros(w.d), 1.0);
    for deg in 1..w.m {
        for idx in enumerate_indices(w.d, deg) {
            moments.insert(idx, 0.0);
        }
    }
    for idx in enumerate_indices(w.d, w.m) {
        moments.insert(idx.clone(), w.y.get(&idx).copied().unwrap_or(0.0));
    }
    let pe = Pseudoexpectation {
        num_vars: w.d,
        degree: w.m,
        moments,
    };
    match pe.validate(1e-8) {
        Validation::Valid => Ok(pe),
        Validation::Violations(v) => Err(PexpError::EmbeddingFailure(v.join("; "))),
    }
}

// --- JSON dump (mirrors the moment-tensor format, degree-graded) -----------

#[derive(Serialize, Deserialize)]
struct PexpFile {
    num_vars: usize,
    degree: usize,
    entries: Vec<(Vec<u32>, f64)>,
}

pub fn write_pexp_json(pe: &Pseudoexpectation, path: &std::path::Path) -> Result<(), PexpError> {
    let mut entries = Vec::new();
    for deg in 0..=pe.degree {
        for idx in enumerate_indices(pe.num_vars, deg) {
            let v = pe.moment(&idx);
            entries.push((idx.0, v));
        }
    }
    let file = PexpFile {
        num_vars: pe.num_vars,
        degree: pe.degree,
        entries,
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| PexpError::MalformedFile(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| PexpError::MalformedFile(e.to_string()))
}

pub fn read_pexp_json(path: &std::path::Path) -> Result<Pseudoexpectation, PexpError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| PexpError::MalformedFile(e.to_string()))?;
    let file: PexpFile =
        serde_json::from_str(&text).map_err(|e| PexpError::MalformedFile(e.to_string()))?;
    if file.degree % 2 != 0 {
        return Err(PexpError::OddDegree(file.degree));
    }
    let mut moments = BTreeMap::new();
    for (e, v) in file.entries {
        if e.len() != file.num_vars {
            return Err(PexpError::MalformedFile(format!(
                "entry {:?} has {} exponents, expected {}",
                e,
                e.len(),
                file.num_vars
            )));
        }
        let idx = MultiIndex(e);
        if idx.degree() > file.degree {
            return Err(PexpError::MalformedFile(format!(
                "entry {idx} exceeds degree {}",
                file.degree
            )));
        }
        moments.insert(idx, v);
    }
    Ok(Pseudoexpectation {
        num_vars: file.num_vars,
        degree: file.degree,
        moments,
    })
}

/// Seeded generator of valid pseudoexpectations: mixtures of up to
/// `max_points` random points. Convexity of the pseudoexpectation set keeps
/// every draw valid without any projection step.
pub fn random_mixture_pexp(
    rng: &mut impl rand::Rng,
    num_vars: usize,
    degree: usize,
    max_points: usize,
) -> Pseudoexpectation {
    let k = rng.gen_range(1..=max_points.max(1));
    let points: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..num_vars).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    Pseudoexpectation::from_mixture(&points, &weights, degree).expect("valid mixture")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn point_evaluation_is_valid() {
        let pe = Pseudoexpectation::point_mass(&[1.0, 0.0], 4).unwrap();
        assert!(pe.validate(1e-8).is_valid());
    }

    #[test]
    fn mixtures_are_valid() {
        let pe = Pseudoexpectation::from_mixture(
            &[vec![1.0, -0.5], vec![-2.0, 0.25]],
            &[0.3, 0.7],
            4,
        )
        .unwrap();
        assert!(pe.validate(1e-8).is_valid());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pe = random_mixture_pexp(&mut rng, 2, 4, 3);
            let m = pe.moment_matrix();
            let min_eig = nalgebra::SymmetricEigen::new(m).eigenvalues.min();
            assert!(min_eig >= -1e-10, "mixture min eig {min_eig}");
        }
    }

    #[test]
    fn hand_built_psd_failure_is_reported() {
        // k=1, t=2, second moment forced to -0.5
        let mut moments = BTreeMap::new();
        moments.insert(MultiIndex(vec![0]), 1.0);
        moments.insert(MultiIndex(vec![1]), 0.0);
        moments.insert(MultiIndex(vec![2]), -0.5);
        let pe = Pseudoexpectation {
            num_vars: 1,
            degree: 2,
            moments,
        };
        match pe.validate(1e-8) {
            Validation::Violations(v) => assert!(v.iter().any(|s| s.contains("eigenvalue"))),
            Validation::Valid => panic!("negative moment matrix passed validation"),
        }
    }

    #[test]
    fn evaluate_examples() {
        let pe = Pseudoexpectation::point_mass(&[2.0], 4).unwrap();
        let v4 = Polynomial::monomial(1, MultiIndex(vec![4]), 1.0);
        assert_eq!(pe.evaluate(&v4).unwrap(), 16.0);
        assert_eq!(pe.evaluate(&Polynomial::constant(1, 1.0)).unwrap(), 1.0);

        // uniform on {+1, -1}: odd moments vanish
        let pe = Pseudoexpectation::from_mixture(&[vec![1.0], vec![-1.0]], &[0.5, 0.5], 4).unwrap();
        let v3 = Polynomial::monomial(1, MultiIndex(vec![3]), 1.0);
        assert_eq!(pe.evaluate(&v3).unwrap(), 0.0);

        let v6 = Polynomial::monomial(1, MultiIndex(vec![6]), 1.0);
        assert!(matches!(
            pe.evaluate(&v6),
            Err(PexpError::DegreeExceeded { .. })
        ));
    }

    #[test]
    fn mixture_of_pm_one_moments() {
        let pe = Pseudoexpectation::from_mixture(&[vec![1.0], vec![-1.0]], &[0.5, 0.5], 2).unwrap();
        assert_eq!(pe.moment(&MultiIndex(vec![0])), 1.0);
        assert_eq!(pe.moment(&MultiIndex(vec![1])), 0.0);
        assert_eq!(pe.moment(&MultiIndex(vec![2])), 1.0);
    }

    #[test]
    fn substitution_example_and_restriction() {
        // n=1, x=(2), pe point mass at v=1: q = u1 evaluates to 2
        let pe = Pseudoexpectation::point_mass(&[1.0], 4).unwrap();
        let sub = pe.substitute_linear(&[vec![2.0]]).unwrap();
        let u1 = Polynomial::monomial(2, MultiIndex(vec![1, 0]), 1.0);
        assert_eq!(sub.evaluate(&u1).unwrap(), 2.0);
        assert!(sub.validate(1e-8).is_valid());

        // restriction to v-polynomials agrees exactly
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let pe = random_mixture_pexp(&mut rng, 2, 4, 3);
            let xs = vec![vec![0.7, -1.1], vec![0.2, 0.4]];
            let sub = pe.substitute_linear(&xs).unwrap();
            let p_v = Polynomial::monomial(2, MultiIndex(vec![2, 0]), 1.0);
            let p_uv = Polynomial::monomial(4, MultiIndex(vec![0, 0, 2, 0]), 1.0);
            let a = pe.evaluate(&p_v).unwrap();
            let b = sub.evaluate(&p_uv).unwrap();
            assert_eq!(a, b, "restriction must agree exactly");
            assert!(sub.validate(1e-8).is_valid());
        }
    }

    #[test]
    fn holder_examples() {
        // point mass g = h = 1: equality at 1
        let pe = Pseudoexpectation::point_mass(&[1.0, 1.0], 4).unwrap();
        let h = holder_check(&pe, 4).unwrap();
        assert!((h.lhs - 1.0).abs() <= 1e-12);
        assert!((h.rhs - 1.0).abs() <= 1e-12);
        assert!(h.satisfied);

        // point mass g=2, h=1, m=4: lhs = 8, rhs = 16^{3/4} = 8
        let pe = Pseudoexpectation::point_mass(&[2.0, 1.0], 4).unwrap();
        let h = holder_check(&pe, 4).unwrap();
        assert!((h.lhs - 8.0).abs() <= 1e-12, "lhs = {}", h.lhs);
        assert!((h.rhs - 8.0).abs() <= 1e-9, "rhs = {}", h.rhs);
        assert!(h.satisfied);
    }

    #[test]
    fn holder_random_sweep() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for m in [2usize, 4] {
            for _ in 0..50 {
                let n = rng.gen_range(1..=3usize);
                let pe = random_mixture_pexp(&mut rng, 2 * n, m, m + 1);
                let h = holder_check(&pe, m).unwrap();
                assert!(
                    h.satisfied,
                    "m={m}, n={n}: lhs {} > rhs {}",
                    h.lhs, h.rhs
                );
            }
        }
    }

    #[test]
    fn variational_equality_at_substituted_pe() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut done = 0;
        while done < 10 {
            let d = rng.gen_range(1..=3usize);
            let n = rng.gen_range(1..=4usize);
            let pe = random_mixture_pexp(&mut rng, d, 4, 4);
            let xs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let norm_m = norm_power_as_polynomial(d, 4);
            if pe.evaluate(&norm_m).unwrap() < 1e-3 {
                continue;
            }
            let (lhs, rhs) = variational_characterization_sides(&pe, &xs).unwrap();
            if lhs.abs() < 1e-9 {
                continue;
            }
            let rel = (lhs - rhs).abs() / lhs.abs().max(1e-12);
            assert!(rel <= 1e-8, "lhs {lhs} rhs {rhs} rel {rel}");
            done += 1;
        }
    }

    #[test]
    fn embedding_negative_quartic() {
        use crate::certify::{is_sos, SosDecision, DEFAULT_FEASIBILITY_TOL};
        let mut p = crate::tensor::HomogeneousPolynomial::zero(2, 4);
        p.set_coeff(MultiIndex(vec![4, 0]), -1.0);
        let w = match is_sos(&p, DEFAULT_FEASIBILITY_TOL).unwrap() {
            SosDecision::NotSos(w) => w,
            other => panic!("expected NotSos, got {other:?}"),
        };
        let pe = embed_homogeneous_witness(&w).unwrap();
        assert!(pe.validate(1e-8).is_valid());
        let val = pe.evaluate(&Polynomial::from(&p)).unwrap();
        assert!((val + 1.0).abs() <= 1e-5, "E~[p] = {val}");
    }

    #[test]
    fn embedding_motzkin_witness() {
        use crate::certify::{is_sos, SosDecision, DEFAULT_FEASIBILITY_TOL};
        let mut p = crate::tensor::HomogeneousPolynomial::zero(3, 6);
        p.set_coeff(MultiIndex(vec![4, 2, 0]), 1.0);
        p.set_coeff(MultiIndex(vec![2, 4, 0]), 1.0);
        p.set_coeff(MultiIndex(vec![2, 2, 2]), -3.0);
        p.set_coeff(MultiIndex(vec![0, 0, 6]), 1.0);
        let w = match is_sos(&p, DEFAULT_FEASIBILITY_TOL).unwrap() {
            SosDecision::NotSos(w) => w,
            other => panic!("expected NotSos, got {other:?}"),
        };
        let pe = embed_homogeneous_witness(&w).unwrap();
        assert!(pe.validate(1e-8).is_valid());
        let val = pe.evaluate(&Polynomial::from(&p)).unwrap();
        assert!(val < 0.0, "E~[Motzkin] = {val}");
    }

    #[test]
    fn pexp_json_round_trip() {
        let pe = Pseudoexpectation::from_mixture(
            &[vec![0.5, -1.0], vec![1.0, 0.25]],
            &[0.4, 0.6],
            4,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("momentcert_pexp_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pe.json");
        write_pexp_json(&pe, &path).unwrap();
        let back = read_pexp_json(&path).unwrap();
        assert_eq!(pe.num_vars, back.num_vars);
        assert_eq!(pe.degree, back.degree);
        assert_eq!(pe.moments, back.moments);
    }
}
