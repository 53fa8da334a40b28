//! Multi-indices, homogeneous polynomials, and moment tensors.
//!
//! Everything downstream (Gram assembly, pseudoexpectations, oracles) agrees
//! on one monomial order: graded lexicographic, degree ascending, and within a
//! degree the variable with the smaller index dominates, so for `d = 2, m = 2`
//! the order is `v1^2, v1 v2, v2^2`. Coefficient maps are dense over all
//! degree-`m` indices; at the dimensions this crate targets
//! (`C(d+m-1, m)` at most a few hundred) sparsity buys nothing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree must be even, got {0}")]
    OddDegree(usize),
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("multi-index of degree {got} where degree {expected} is required")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("malformed tensor file: {0}")]
    MalformedFile(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Exponent vector of a monomial `v^alpha`.
///
/// Ordering is graded lexicographic and total: first by degree, then by
/// exponents with earlier variables ranked higher (`v1^2` before `v1 v2`
/// before `v2^2`). `BTreeMap` keyed by `MultiIndex` therefore iterates in
/// enumeration order, which keeps Gram row/column identity reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// Componentwise sum `alpha + beta`.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Evaluates the monomial `v^alpha` at a point.
    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(self.dim(), v.len());
        self.0
            .iter()
            .zip(v.iter())
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }

    /// Multinomial coefficient `degree! / (alpha_1! ... alpha_d!)`, exact in f64
    /// for the degrees this crate handles.
    pub fn multinomial(&self) -> f64 {
        let mut value = 1.0f64;
        let mut seen = 0u32;
        for &e in &self.0 {
            for j in 1..=e {
                seen += 1;
                value *= f64::from(seen) / f64::from(j);
            }
        }
        value.round()
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            // reversed lexicographic comparison ranks (2,0) before (1,1)
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All `C(d+m-1, m)` multi-indices of degree `m` in `d` variables, in
/// graded-lex order. Deterministic.
pub fn enumerate_indices(d: usize, m: usize) -> Vec<MultiIndex> {
    assert!(d >= 1, "dimension must be at least 1");
    let mut out = Vec::with_capacity(n_monomials(d, m));
    let mut current = vec![0u32; d];
    fill(&mut out, &mut current, 0, m as u32);
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

/// `C(d+m-1, m)`, the number of degree-`m` monomials in `d` variables.
pub fn n_monomials(d: usize, m: usize) -> usize {
    let mut value = 1usize;
    for k in 1..=m {
        value = value * (d - 1 + k) / k;
    }
    value
}

/// Dense homogeneous polynomial of degree `m` in `d` variables, stored in the
/// plain monomial basis (multinomial factors are folded into coefficients at
/// conversion time, never kept implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPolynomial {
    pub d: usize,
    pub m: usize,
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

impl HomogeneousPolynomial {
    pub fn zero(d: usize, m: usize) -> Self {
        HomogeneousPolynomial {
            d,
            m,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_coeffs(
        d: usize,
        m: usize,
        coeffs: BTreeMap<MultiIndex, f64>,
    ) -> Result<Self, TensorError> {
        for idx in coeffs.keys() {
            if idx.dim() != d {
                return Err(TensorError::DimensionMismatch {
                    expected: d,
                    got: idx.dim(),
                });
            }
            if idx.degree() != m {
                return Err(TensorError::DegreeMismatch {
                    expected: m,
                    got: idx.degree(),
                });
            }
        }
        Ok(HomogeneousPolynomial { d, m, coeffs })
    }

    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.coeffs.get(idx).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, idx: MultiIndex, value: f64) {
        debug_assert_eq!(idx.dim(), self.d);
        debug_assert_eq!(idx.degree(), self.m);
        if value == 0.0 {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, value);
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// `sum_alpha c_alpha v^alpha`.
    pub fn eval(&self, v: &[f64]) -> Result<f64, TensorError> {
        if v.len() != self.d {
            return Err(TensorError::DimensionMismatch {
                expected: self.d,
                got: v.len(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .map(|(idx, c)| c * idx.eval(v))
            .sum())
    }

    /// Gradient at `v`, divided by nothing; callers needing the symmetric
    /// tensor contraction `T v^{m-1}` divide by `m`.
    pub fn gradient(&self, v: &[f64]) -> Result<Vec<f64>, TensorError> {
        if v.len() != self.d {
            return Err(TensorError::DimensionMismatch {
                expected: self.d,
                got: v.len(),
            });
        }
        let mut grad = vec![0.0; self.d];
        for (idx, c) in &self.coeffs {
            for j in 0..self.d {
                let e = idx.0[j];
                if e == 0 {
                    continue;
                }
                let mut term = c * f64::from(e);
                for (k, &ek) in idx.0.iter().enumerate() {
                    let p = if k == j { ek - 1 } else { ek };
                    term *= v[k].powi(p as i32);
                }
                grad[j] += term;
            }
        }
        Ok(grad)
    }

    pub fn scale(&self, factor: f64) -> HomogeneousPolynomial {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(idx, c)| (idx.clone(), c * factor))
            .collect();
        HomogeneousPolynomial {
            d: self.d,
            m: self.m,
            coeffs,
        }
    }

    /// `self - other`, requiring equal `(d, m)`.
    pub fn sub(&self, other: &HomogeneousPolynomial) -> HomogeneousPolynomial {
        assert_eq!(self.d, other.d);
        assert_eq!(self.m, other.m);
        let mut coeffs = self.coeffs.clone();
        for (idx, c) in &other.coeffs {
            let entry = coeffs.entry(idx.clone()).or_insert(0.0);
            *entry -= c;
            if *entry == 0.0 {
                coeffs.remove(idx);
            }
        }
        HomogeneousPolynomial {
            d: self.d,
            m: self.m,
            coeffs,
        }
    }

    /// Substitutes `v -> W v` for a `d x d` matrix `W` (rows index the original
    /// variables), expanding products of the linear forms `sum_j W[i][j] v_j`.
    pub fn compose_linear(&self, w: &nalgebra::DMatrix<f64>) -> HomogeneousPolynomial {
        assert_eq!(w.nrows(), self.d);
        assert_eq!(w.ncols(), self.d);
        let mut out = Polynomial::zero(self.d);
        for (idx, &c) in &self.coeffs {
            let mut term = Polynomial::constant(self.d, c);
            for (i, &e) in idx.0.iter().enumerate() {
                for _ in 0..e {
                    let form = Polynomial::linear_form(
                        (0..self.d).map(|j| w[(i, j)]).collect::<Vec<_>>(),
                    );
                    term = term.mul(&form);
                }
            }
            out = out.add(&term);
        }
        let coeffs = out
            .coeffs
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .collect();
        HomogeneousPolynomial {
            d: self.d,
            m: self.m,
            coeffs,
        }
    }
}

/// The expansion of `(v_1^2 + ... + v_d^2)^{m/2}`: coefficient
/// `multinomial(m/2; beta)` on `v^{2 beta}`, zero elsewhere.
pub fn norm_power_poly(d: usize, m: usize) -> Result<HomogeneousPolynomial, TensorError> {
    if m % 2 != 0 {
        return Err(TensorError::OddDegree(m));
    }
    let mut coeffs = BTreeMap::new();
    for beta in enumerate_indices(d, m / 2) {
        let doubled = MultiIndex(beta.0.iter().map(|&e| 2 * e).collect());
        coeffs.insert(doubled, beta.multinomial());
    }
    Ok(HomogeneousPolynomial { d, m, coeffs })
}

/// Inhomogeneous polynomial, used by the pseudoexpectation layer. Kept
/// deliberately small: addition, multiplication and evaluation are all the
/// certifier and tests need.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub num_vars: usize,
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != 0.0 {
            coeffs.insert(MultiIndex::zeros(num_vars), c);
        }
        Polynomial { num_vars, coeffs }
    }

    /// The linear form `sum_j w_j v_j`.
    pub fn linear_form(w: Vec<f64>) -> Self {
        let num_vars = w.len();
        let mut coeffs = BTreeMap::new();
        for (j, &c) in w.iter().enumerate() {
            if c != 0.0 {
                let mut e = vec![0u32; num_vars];
                e[j] = 1;
                coeffs.insert(MultiIndex(e), c);
            }
        }
        Polynomial { num_vars, coeffs }
    }

    pub fn monomial(num_vars: usize, idx: MultiIndex, c: f64) -> Self {
        debug_assert_eq!(idx.dim(), num_vars);
        let mut coeffs = BTreeMap::new();
        if c != 0.0 {
            coeffs.insert(idx, c);
        }
        Polynomial { num_vars, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|idx| idx.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, other.num_vars);
        let mut coeffs = self.coeffs.clone();
        for (idx, c) in &other.coeffs {
            let entry = coeffs.entry(idx.clone()).or_insert(0.0);
            *entry += c;
            if *entry == 0.0 {
                coeffs.remove(idx);
            }
        }
        Polynomial {
            num_vars: self.num_vars,
            coeffs,
        }
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        Polynomial {
            num_vars: self.num_vars,
            coeffs: self
                .coeffs
                .iter()
                .map(|(idx, c)| (idx.clone(), c * factor))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, other.num_vars);
        let mut coeffs: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let idx = a.add(b);
                *coeffs.entry(idx).or_insert(0.0) += ca * cb;
            }
        }
        coeffs.retain(|_, c| *c != 0.0);
        Polynomial {
            num_vars: self.num_vars,
            coeffs,
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().map(|(idx, c)| c * idx.eval(v)).sum()
    }
}

impl From<&HomogeneousPolynomial> for Polynomial {
    fn from(p: &HomogeneousPolynomial) -> Self {
        Polynomial {
            num_vars: p.d,
            coeffs: p.coeffs.clone(),
        }
    }
}

/// Symmetric order-`m` moment array `mu_alpha = E[X^alpha]`, stored once per
/// multi-index (symmetry is implicit in the representation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTensor {
    pub d: usize,
    pub m: usize,
    pub mu: BTreeMap<MultiIndex, f64>,
    pub centered: bool,
}

impl MomentTensor {
    pub fn zero(d: usize, m: usize) -> Self {
        MomentTensor {
            d,
            m,
            mu: BTreeMap::new(),
            centered: true,
        }
    }

    pub fn from_entries(
        d: usize,
        m: usize,
        centered: bool,
        entries: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self, TensorError> {
        let mut mu = BTreeMap::new();
        for (idx, value) in entries {
            if idx.dim() != d {
                return Err(TensorError::DimensionMismatch {
                    expected: d,
                    got: idx.dim(),
                });
            }
            if idx.degree() != m {
                return Err(TensorError::DegreeMismatch {
                    expected: m,
                    got: idx.degree(),
                });
            }
            mu.insert(idx, value);
        }
        Ok(MomentTensor { d, m, mu, centered })
    }

    pub fn get(&self, idx: &MultiIndex) -> f64 {
        self.mu.get(idx).copied().unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.mu.values().all(|v| v.is_finite())
    }

    /// Scales every moment by `lambda^m`, the moment tensor of `lambda * X`.
    pub fn scale_data(&self, lambda: f64) -> MomentTensor {
        let factor = lambda.powi(self.m as i32);
        MomentTensor {
            d: self.d,
            m: self.m,
            mu: self
                .mu
                .iter()
                .map(|(idx, v)| (idx.clone(), v * factor))
                .collect(),
            centered: self.centered,
        }
    }

    /// The moment polynomial `E <v,X>^m = sum_alpha multinomial(m; alpha)
    /// mu_alpha v^alpha`.
    pub fn to_polynomial(&self) -> HomogeneousPolynomial {
        let mut coeffs = BTreeMap::new();
        for (idx, &mu) in &self.mu {
            let c = idx.multinomial() * mu;
            if c != 0.0 {
                coeffs.insert(idx.clone(), c);
            }
        }
        HomogeneousPolynomial {
            d: self.d,
            m: self.m,
            coeffs,
        }
    }

    /// The order-2 tensor as a covariance matrix.
    pub fn to_matrix(&self) -> Result<nalgebra::DMatrix<f64>, TensorError> {
        if self.m != 2 {
            return Err(TensorError::DegreeMismatch {
                expected: 2,
                got: self.m,
            });
        }
        let mut sigma = nalgebra::DMatrix::zeros(self.d, self.d);
        for (idx, &mu) in &self.mu {
            let nz: Vec<usize> = (0..self.d).filter(|&j| idx.0[j] > 0).collect();
            match nz.len() {
                1 => sigma[(nz[0], nz[0])] = mu,
                2 => {
                    sigma[(nz[0], nz[1])] = mu;
                    sigma[(nz[1], nz[0])] = mu;
                }
                _ => unreachable!("degree-2 index has at most two nonzero slots"),
            }
        }
        Ok(sigma)
    }
}

/// Raw data matrix plus the provenance needed to regenerate it bitwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSet {
    pub n: usize,
    pub d: usize,
    /// Row-major `n x d`.
    pub data: Vec<f64>,
    pub seed: u64,
    pub spec_provenance: Option<String>,
    pub contamination_provenance: Option<String>,
}

impl SampleSet {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, TensorError> {
        if rows.is_empty() {
            return Err(TensorError::EmptySampleSet);
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in &rows {
            if r.len() != d {
                return Err(TensorError::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(SampleSet {
            n: rows.len(),
            d,
            data,
            seed: 0,
            spec_provenance: None,
            contamination_provenance: None,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.d];
        for row in self.rows() {
            for (m, x) in mu.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mu {
            *m /= self.n as f64;
        }
        mu
    }
}

/// Empirical order-`m` moment tensor `mu_alpha = (1/n) sum_i (x_i - mu_hat)^alpha`.
/// When `center` is unset the raw monomial averages are used.
pub fn empirical_moment_tensor(
    samples: &SampleSet,
    m: usize,
    center: bool,
) -> Result<MomentTensor, TensorError> {
    if samples.n == 0 {
        return Err(TensorError::EmptySampleSet);
    }
    let d = samples.d;
    let mean = if center { samples.mean() } else { vec![0.0; d] };
    let indices = enumerate_indices(d, m);
    let mut sums = vec![0.0f64; indices.len()];
    // power table per sample: powers[j][e] = (x_j - mean_j)^e
    let mut powers = vec![vec![1.0f64; m + 1]; d];
    for row in samples.rows() {
        for j in 0..d {
            let y = row[j] - mean[j];
            let table = &mut powers[j];
            for e in 1..=m {
                table[e] = table[e - 1] * y;
            }
        }
        for (k, idx) in indices.iter().enumerate() {
            let mut prod = 1.0;
            for (j, &e) in idx.0.iter().enumerate() {
                prod *= powers[j][e as usize];
            }
            sums[k] += prod;
        }
    }
    let n = samples.n as f64;
    let mu = indices
        .into_iter()
        .zip(sums)
        .map(|(idx, s)| (idx, s / n))
        .collect();
    Ok(MomentTensor {
        d,
        m,
        mu,
        centered: center,
    })
}

// --- file formats ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TensorFile {
    d: usize,
    m: usize,
    centered: bool,
    entries: Vec<(Vec<u32>, f64)>,
}

/// Writes the JSON tensor format: entries complete and sorted graded-lex.
pub fn write_tensor_json(tensor: &MomentTensor, path: &Path) -> Result<(), TensorError> {
    let entries = enumerate_indices(tensor.d, tensor.m)
        .into_iter()
        .map(|idx| {
            let v = tensor.get(&idx);
            (idx.0, v)
        })
        .collect();
    let file = TensorFile {
        d: tensor.d,
        m: tensor.m,
        centered: tensor.centered,
        entries,
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| TensorError::MalformedFile(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_tensor_json(path: &Path) -> Result<MomentTensor, TensorError> {
    let text = std::fs::read_to_string(path)?;
    let file: TensorFile =
        serde_json::from_str(&text).map_err(|e| TensorError::MalformedFile(e.to_string()))?;
    let expected = enumerate_indices(file.d, file.m);
    if file.entries.len() != expected.len() {
        return Err(TensorError::MalformedFile(format!(
            "expected {} entries, got {}",
            expected.len(),
            file.entries.len()
        )));
    }
    for (slot, (exps, _)) in expected.iter().zip(file.entries.iter()) {
        if slot.0 != *exps {
            return Err(TensorError::MalformedFile(format!(
                "entries not complete and graded-lex sorted at {}",
                slot
            )));
        }
    }
    MomentTensor::from_entries(
        file.d,
        file.m,
        file.centered,
        file.entries
            .into_iter()
            .map(|(e, v)| (MultiIndex(e), v)),
    )
}

/// CSV sample format: one row per sample, `d` float columns, no header.
/// Floats are written with shortest-roundtrip formatting so a read-back is
/// bit-exact.
pub fn samples_csv_string(samples: &SampleSet) -> String {
    let mut out = String::new();
    for row in samples.rows() {
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{x}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_samples_csv(samples: &SampleSet, path: &Path) -> Result<(), TensorError> {
    std::fs::write(path, samples_csv_string(samples))?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<SampleSet, TensorError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                return Err(TensorError::MalformedFile(format!(
                    "line {}: {e}",
                    lineno + 1
                )))
            }
        }
    }
    SampleSet::from_rows(rows)
}

/// Double factorial `(k)!! = k (k-2) (k-4) ...`, with `(-1)!! = 0!! = 1`.
/// `(m-1)!!` is the m-th moment of the standard Gaussian.
pub fn double_factorial(k: i64) -> f64 {
    let mut value = 1.0;
    let mut j = k;
    while j > 1 {
        value *= j as f64;
        j -= 2;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_matches_counting_formula() {
        // C(4,2) = 6 for d=3, m=2
        assert_eq!(enumerate_indices(3, 2).len(), 6);
        assert_eq!(enumerate_indices(1, 3), vec![MultiIndex(vec![3])]);
        assert_eq!(
            enumerate_indices(2, 2),
            vec![
                MultiIndex(vec![2, 0]),
                MultiIndex(vec![1, 1]),
                MultiIndex(vec![0, 2])
            ]
        );
        for (d, m) in [(2, 4), (3, 6), (4, 8), (5, 3)] {
            assert_eq!(enumerate_indices(d, m).len(), n_monomials(d, m));
        }
    }

    #[test]
    fn enumeration_is_strictly_increasing() {
        for (d, m) in [(2, 4), (3, 5), (4, 6)] {
            let idx = enumerate_indices(d, m);
            for w in idx.windows(2) {
                assert!(w[0] < w[1], "{} !< {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn multinomial_small_cases() {
        assert_eq!(MultiIndex(vec![2, 0]).multinomial(), 1.0);
        assert_eq!(MultiIndex(vec![1, 1]).multinomial(), 2.0);
        assert_eq!(MultiIndex(vec![2, 2]).multinomial(), 6.0);
        assert_eq!(MultiIndex(vec![1, 1, 1, 1]).multinomial(), 24.0);
        assert_eq!(MultiIndex(vec![4, 4]).multinomial(), 70.0);
    }

    #[test]
    fn norm_power_examples() {
        // (d=2, m=4): v1^4 + 2 v1^2 v2^2 + v2^4
        let p = norm_power_poly(2, 4).unwrap();
        assert_eq!(p.coeff(&MultiIndex(vec![4, 0])), 1.0);
        assert_eq!(p.coeff(&MultiIndex(vec![2, 2])), 2.0);
        assert_eq!(p.coeff(&MultiIndex(vec![0, 4])), 1.0);
        assert_eq!(p.coeffs.len(), 3);

        let p = norm_power_poly(1, 6).unwrap();
        assert_eq!(p.coeff(&MultiIndex(vec![6])), 1.0);
        assert_eq!(p.coeffs.len(), 1);

        let p = norm_power_poly(3, 2).unwrap();
        for j in 0..3 {
            let mut e = vec![0u32; 3];
            e[j] = 2;
            assert_eq!(p.coeff(&MultiIndex(e)), 1.0);
        }

        assert!(norm_power_poly(2, 3).is_err());
    }

    #[test]
    fn norm_power_matches_norm_numerically() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        for (d, m) in [(2, 4), (3, 6), (4, 2), (2, 8)] {
            let p = norm_power_poly(d, m).unwrap();
            for _ in 0..20 {
                let v: Vec<f64> = (0..d).map(|_| next()).collect();
                let norm_sq: f64 = v.iter().map(|x| x * x).sum();
                let expected = norm_sq.powi((m / 2) as i32);
                let got = p.eval(&v).unwrap();
                let rel = (got - expected).abs() / expected.abs().max(1e-300);
                assert!(rel <= 1e-10, "rel error {rel} at d={d} m={m}");
            }
        }
    }

    #[test]
    fn poly_eval_examples() {
        let p = norm_power_poly(2, 4).unwrap();
        assert_eq!(p.eval(&[1.0, 1.0]).unwrap(), 4.0);

        let mut q = HomogeneousPolynomial::zero(1, 4);
        q.set_coeff(MultiIndex(vec![4]), 3.0);
        assert_eq!(q.eval(&[2.0]).unwrap(), 48.0);

        let motzkin = motzkin();
        assert_eq!(motzkin.eval(&[1.0, 1.0, 1.0]).unwrap(), 0.0);

        assert!(p.eval(&[1.0]).is_err());
    }

    pub(crate) fn motzkin() -> HomogeneousPolynomial {
        let mut p = HomogeneousPolynomial::zero(3, 6);
        p.set_coeff(MultiIndex(vec![4, 2, 0]), 1.0);
        p.set_coeff(MultiIndex(vec![2, 4, 0]), 1.0);
        p.set_coeff(MultiIndex(vec![2, 2, 2]), -3.0);
        p.set_coeff(MultiIndex(vec![0, 0, 6]), 1.0);
        p
    }

    #[test]
    fn moment_to_poly_examples() {
        // standard Gaussian d=1 m=4: mu_(4)=3 -> 3 v^4
        let t = MomentTensor::from_entries(1, 4, true, [(MultiIndex(vec![4]), 3.0)]).unwrap();
        let p = t.to_polynomial();
        assert_eq!(p.coeff(&MultiIndex(vec![4])), 3.0);

        let z = MomentTensor::zero(3, 4);
        assert!(z.to_polynomial().coeffs.is_empty());

        // isotropic covariance d=2: v1^2 + v2^2
        let t = MomentTensor::from_entries(
            2,
            2,
            true,
            [
                (MultiIndex(vec![2, 0]), 1.0),
                (MultiIndex(vec![1, 1]), 0.0),
                (MultiIndex(vec![0, 2]), 1.0),
            ],
        )
        .unwrap();
        let p = t.to_polynomial();
        assert_eq!(p.coeff(&MultiIndex(vec![2, 0])), 1.0);
        assert_eq!(p.coeff(&MultiIndex(vec![0, 2])), 1.0);
        assert_eq!(p.coeff(&MultiIndex(vec![1, 1])), 0.0);
    }

    #[test]
    fn empirical_tensor_examples() {
        let s = SampleSet::from_rows(vec![vec![1.0], vec![-1.0]]).unwrap();
        let t = empirical_moment_tensor(&s, 2, true).unwrap();
        assert_eq!(t.get(&MultiIndex(vec![2])), 1.0);

        let s = SampleSet::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let t = empirical_moment_tensor(&s, 1, false).unwrap();
        assert_eq!(t.get(&MultiIndex(vec![1, 0])), 0.5);
        assert_eq!(t.get(&MultiIndex(vec![0, 1])), 0.5);
    }

    #[test]
    fn moment_poly_matches_brute_force_on_empirical_data() {
        // moment_to_poly(T)(v) == (1/n) sum_i <v, x_i>^m for empirical T
        let rows = vec![
            vec![0.3, -1.2, 0.7],
            vec![1.1, 0.4, -0.5],
            vec![-0.9, 0.8, 0.2],
            vec![0.05, -0.3, 1.4],
        ];
        let s = SampleSet::from_rows(rows.clone()).unwrap();
        for m in [2usize, 3, 4] {
            let t = empirical_moment_tensor(&s, m, false).unwrap();
            let p = t.to_polynomial();
            for v in [[0.2, -0.7, 0.5], [1.0, 1.0, 1.0], [-0.3, 0.9, -1.1]] {
                let brute: f64 = rows
                    .iter()
                    .map(|x| {
                        let dot: f64 = x.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                        dot.powi(m as i32)
                    })
                    .sum::<f64>()
                    / rows.len() as f64;
                let got = p.eval(&v).unwrap();
                assert!(
                    (got - brute).abs() <= 1e-12 * brute.abs().max(1.0),
                    "m={m} got {got} brute {brute}"
                );
            }
        }
    }

    #[test]
    fn tensor_json_round_trip() {
        let s = SampleSet::from_rows(vec![vec![1.0, 2.0], vec![-0.5, 0.25], vec![3.0, -1.0]])
            .unwrap();
        let t = empirical_moment_tensor(&s, 4, true).unwrap();
        let dir = std::env::temp_dir().join("momentcert_tensor_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.json");
        write_tensor_json(&t, &path).unwrap();
        let back = read_tensor_json(&path).unwrap();
        assert_eq!(t.d, back.d);
        assert_eq!(t.m, back.m);
        for idx in enumerate_indices(t.d, t.m) {
            assert_eq!(t.get(&idx), back.get(&idx));
        }
    }

    #[test]
    fn samples_csv_round_trip_is_bit_exact() {
        let s = SampleSet::from_rows(vec![
            vec![1.0 / 3.0, -2.0f64.sqrt()],
            vec![1e-17, 123456.789],
        ])
        .unwrap();
        let dir = std::env::temp_dir().join("momentcert_tensor_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.csv");
        write_samples_csv(&s, &path).unwrap();
        let back = read_samples_csv(&path).unwrap();
        assert_eq!(s.data, back.data);
    }

    #[test]
    fn monte_carlo_gaussian_fourth_moment() {
        // n = 1e5 standard Gaussian d=1, m=4 -> mu_4 = 3 +- 0.15 (3 sigma)
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let normal = rand_distr::StandardNormal;
        let rows: Vec<Vec<f64>> = (0..100_000)
            .map(|_| vec![normal.sample(&mut rng)])
            .collect();
        let s = SampleSet::from_rows(rows).unwrap();
        let t = empirical_moment_tensor(&s, 4, false).unwrap();
        let mu4 = t.get(&MultiIndex(vec![4]));
        assert!((mu4 - 3.0).abs() <= 0.15, "mu4 = {mu4}");
    }

    #[test]
    fn compose_linear_substitutes() {
        // p(v) = v1^2, W = [[0,1],[1,0]] -> p(Wv) = v2^2
        let mut p = HomogeneousPolynomial::zero(2, 2);
        p.set_coeff(MultiIndex(vec![2, 0]), 1.0);
        let w = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let q = p.compose_linear(&w);
        assert_eq!(q.coeff(&MultiIndex(vec![0, 2])), 1.0);
        assert_eq!(q.coeff(&MultiIndex(vec![2, 0])), 0.0);
    }

    #[test]
    fn double_factorial_values() {
        assert_eq!(double_factorial(-1), 1.0);
        assert_eq!(double_factorial(1), 1.0);
        assert_eq!(double_factorial(3), 3.0);
        assert_eq!(double_factorial(5), 15.0);
        assert_eq!(double_factorial(7), 105.0);
    }
}
