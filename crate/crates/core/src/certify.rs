//! SoS membership of homogeneous polynomials and minimal certifiable
//! moment bounds.
//!
//! A degree-`m` homogeneous polynomial `p` is a sum of squares exactly when
//! the affine Gram set `{Q : sum_{beta+gamma=alpha} Q[beta,gamma] = p_alpha}`
//! over the degree-`m/2` monomial basis contains a PSD matrix. [`is_sos`]
//! feeds this to the margin solver and keeps both sides of the verdict:
//! an explicit PSD Gram matrix with extracted square terms, or the solver's
//! dual multipliers repackaged as a pseudomoment vector `y` with PSD moment
//! matrix, pseudo-value of `||v||^m` equal to one, and `<p, y> < 0`.
//!
//! Homogeneous completeness is assumed throughout: decompositions use only
//! degree-`m/2` monomials.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::sdp::{self, SdpProblem, SdpStatus};
use crate::tensor::{
    enumerate_indices, norm_power_poly, HomogeneousPolynomial, MomentTensor, MultiIndex,
};

/// Feasibility tolerance for the underlying SDP margin.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-7;
/// Relative accuracy of reported `B_min` values.
pub const DEFAULT_REPORT_TOL: f64 = 1e-3;
/// Relative bisection width. Tighter than the reported tolerance so that
/// independent runs of rescaled instances agree to 1e-5.
const BISECT_REL_WIDTH: f64 = 4e-6;
const MAX_BISECT_STEPS: usize = 40;
const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("degree must be even, got {0}")]
    OddDegree(usize),
    #[error("moment tensor contains non-finite entries")]
    NonFiniteMoments,
    #[error("covariance is not PSD (lambda_min = {0:.3e})")]
    NonPsdCovariance(f64),
    #[error("covariance tensor must have order 2, got {0}")]
    NotACovariance(usize),
    #[error("dimension mismatch between tensors: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

impl From<sdp::SdpError> for CertifyError {
    fn from(e: sdp::SdpError) -> Self {
        CertifyError::SolverFailure(e.to_string())
    }
}

/// Explicit SoS decomposition data.
#[derive(Debug, Clone)]
pub struct GramCertificate {
    /// Degree-`m/2` monomial basis indexing `q`.
    pub basis: Vec<MultiIndex>,
    pub q: DMatrix<f64>,
    /// Max coefficient-matching error `|sum_{beta+gamma=alpha} Q - p_alpha|`.
    pub residual: f64,
    pub min_eig: f64,
    /// Square terms with `p ~ sum_i q_i^2`, from diagonally pivoted Cholesky.
    pub square_terms: Vec<HomogeneousPolynomial>,
}

impl GramCertificate {
    /// Coefficientwise recomposition `sum_i q_i^2`.
    pub fn recompose(&self) -> HomogeneousPolynomial {
        let d = self.square_terms.first().map_or(1, |q| q.d);
        let m = self.square_terms.first().map_or(0, |q| q.m * 2);
        let mut coeffs: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for q in &self.square_terms {
            for (a, ca) in &q.coeffs {
                for (b, cb) in &q.coeffs {
                    *coeffs.entry(a.add(b)).or_insert(0.0) += ca * cb;
                }
            }
        }
        HomogeneousPolynomial { d, m, coeffs }
    }
}

/// Dual certificate of non-membership: homogeneous pseudomoments with PSD
/// moment matrix, normalized so the pseudo-value of `||v||^m` is one, and
/// negative value on the tested polynomial.
#[derive(Debug, Clone)]
pub struct PseudomomentWitness {
    pub d: usize,
    pub m: usize,
    pub y: BTreeMap<MultiIndex, f64>,
    pub moment_matrix: DMatrix<f64>,
    pub value: f64,
    pub min_eig: f64,
}

impl PseudomomentWitness {
    /// `sum_alpha p_alpha y_alpha`.
    pub fn pair(&self, p: &HomogeneousPolynomial) -> f64 {
        p.coeffs
            .iter()
            .map(|(idx, c)| c * self.y.get(idx).copied().unwrap_or(0.0))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub enum SosDecision {
    Sos(GramCertificate),
    NotSos(PseudomomentWitness),
    /// The margin sits inside the tolerance band; callers must treat the
    /// instance as a boundary case (bisection counts it as infeasible).
    Undecided,
}

impl SosDecision {
    pub fn is_sos(&self) -> bool {
        matches!(self, SosDecision::Sos(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceLabel {
    Feasible,
    Infeasible,
    Undecided,
}

#[derive(Debug, Clone)]
pub struct CertifyResult {
    pub b_min: f64,
    pub trace: Vec<(f64, TraceLabel)>,
    pub boundary_certificate: Option<GramCertificate>,
    pub boundary_witness: Option<PseudomomentWitness>,
}

// --- Gram assembly ----------------------------------------------------------

struct GramSystem {
    basis: Vec<MultiIndex>,
    full: Vec<MultiIndex>,
    /// per degree-m index, the list of basis pairs `(i, j)` with `i <= j`
    pairs: Vec<Vec<(usize, usize)>>,
}

fn gram_system(d: usize, m: usize) -> GramSystem {
    let basis = enumerate_indices(d, m / 2);
    let full = enumerate_indices(d, m);
    let pos: BTreeMap<&MultiIndex, usize> = full.iter().zip(0..).collect();
    let mut pairs = vec![Vec::new(); full.len()];
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let alpha = basis[i].add(&basis[j]);
            pairs[pos[&alpha]].push((i, j));
        }
    }
    GramSystem { basis, full, pairs }
}

impl GramSystem {
    fn problem(&self, p: &HomogeneousPolynomial, solver_tol: f64) -> SdpProblem {
        let n = self.basis.len();
        let constraints = self
            .full
            .iter()
            .zip(self.pairs.iter())
            .map(|(alpha, pairs)| {
                let mut a = DMatrix::zeros(n, n);
                for &(i, j) in pairs {
                    a[(i, j)] = 1.0;
                    a[(j, i)] = 1.0;
                }
                (a, p.coeff(alpha))
            })
            .collect();
        SdpProblem::new(n, constraints).with_tolerance(solver_tol)
    }

    /// Max coefficient-matching error of a candidate Gram matrix.
    fn residual(&self, q: &DMatrix<f64>, p: &HomogeneousPolynomial) -> f64 {
        let mut worst = 0.0f64;
        for (alpha, pairs) in self.full.iter().zip(self.pairs.iter()) {
            let mut acc = 0.0;
            for &(i, j) in pairs {
                acc += if i == j { q[(i, i)] } else { 2.0 * q[(i, j)] };
            }
            worst = worst.max((acc - p.coeff(alpha)).abs());
        }
        worst
    }

    /// Exact orthogonal projection onto `{Q : <A_alpha, Q> = p_alpha}`. The
    /// constraint matrices have pairwise disjoint supports, so one pass over
    /// the coefficient groups is the full projection.
    fn affine_project(&self, q: &mut DMatrix<f64>, p: &HomogeneousPolynomial) {
        for (alpha, pairs) in self.full.iter().zip(self.pairs.iter()) {
            let mut val = 0.0;
            let mut norm2 = 0.0;
            for &(i, j) in pairs {
                if i == j {
                    val += q[(i, i)];
                    norm2 += 1.0;
                } else {
                    val += 2.0 * q[(i, j)];
                    norm2 += 2.0;
                }
            }
            let corr = (val - p.coeff(alpha)) / norm2;
            for &(i, j) in pairs {
                if i == j {
                    q[(i, i)] -= corr;
                } else {
                    q[(i, j)] -= corr;
                    q[(j, i)] -= corr;
                }
            }
        }
    }

    /// Alternating-projection polish between the coefficient-matching affine
    /// set and the PSD cone, used when the solver's Gram matrix sits a hair
    /// outside certificate tolerance (degenerate boundary optima floor the
    /// interior-point residual around 1e-8). Returns a PSD matrix; callers
    /// re-check the residual.
    fn polish(&self, q0: &DMatrix<f64>, p: &HomogeneousPolynomial, gate: f64) -> DMatrix<f64> {
        let mut q = q0.clone();
        for _ in 0..200 {
            self.affine_project(&mut q, p);
            q = eigen_clean_psd(&q);
            if self.residual(&q, p) <= 0.25 * gate {
                break;
            }
        }
        q
    }
}

fn eigen_clean_psd(q: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(q.clone());
    let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0)));
    let back = &eig.eigenvectors * clamped * eig.eigenvectors.transpose();
    (&back + back.transpose()) * 0.5
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Diagonally pivoted Cholesky peeling `Q ~ sum_i l_i l_i^T`, tolerant of
/// semidefinite input. Each peeled column becomes one square term.
fn square_terms(
    q: &DMatrix<f64>,
    basis: &[MultiIndex],
    d: usize,
    half_m: usize,
) -> Vec<HomogeneousPolynomial> {
    let n = q.nrows();
    let mut resid = q.clone();
    let max_diag = (0..n).map(|i| q[(i, i)]).fold(0.0f64, f64::max);
    let drop_tol = 1e-13 * max_diag.max(1e-300);
    let mut terms = Vec::new();
    for _ in 0..n {
        let (pivot, pivot_val) = (0..n)
            .map(|i| (i, resid[(i, i)]))
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        if pivot_val <= drop_tol {
            break;
        }
        let scale = pivot_val.sqrt();
        let col: DVector<f64> = resid.column(pivot) / scale;
        let mut poly = HomogeneousPolynomial::zero(d, half_m);
        for (j, &c) in col.iter().enumerate() {
            if c != 0.0 {
                poly.set_coeff(basis[j].clone(), c);
            }
        }
        terms.push(poly);
        resid.ger(-1.0, &col, &col, 1.0);
    }
    terms
}

/// Decides SoS membership of a homogeneous even-degree polynomial.
///
/// Verdicts are certificate-driven: `Sos` is returned when an eigenvalue-
/// cleaned Gram matrix reproduces the coefficients within `1e-8` of the
/// polynomial's scale (so boundary polynomials with nontrivial zeros, whose
/// margin is exactly zero, still certify); `NotSos` when the rescaled dual
/// witness has value at most `-tol`; `Undecided` in the band between.
pub fn is_sos(p: &HomogeneousPolynomial, tol: f64) -> Result<SosDecision, CertifyError> {
    if p.m % 2 != 0 {
        return Err(CertifyError::OddDegree(p.m));
    }
    if !p.coeffs.values().all(|c| c.is_finite()) {
        return Err(CertifyError::NonFiniteMoments);
    }
    let sys = gram_system(p.d, p.m);
    let scale = p.max_abs_coeff();
    if scale == 0.0 {
        // the zero polynomial is a (trivial) sum of squares
        let n = sys.basis.len();
        return Ok(SosDecision::Sos(GramCertificate {
            basis: sys.basis,
            q: DMatrix::zeros(n, n),
            residual: 0.0,
            min_eig: 0.0,
            square_terms: Vec::new(),
        }));
    }
    let p_scaled = p.scale(1.0 / scale);
    let solver_tol = (tol * 1e-2).min(1e-9);
    let prob = sys.problem(&p_scaled, solver_tol);
    let sol = sdp::solve_margin(&prob)?;

    let cert_gate = 1e-8;
    let mut q_clean = eigen_clean_psd(&sol.q);
    let mut resid_scaled = sys.residual(&q_clean, &p_scaled);
    if resid_scaled > cert_gate && sol.t_star > -tol {
        // boundary case: the margin says (near-)feasible but the returned
        // Gram matrix misses certificate tolerance; polish it
        q_clean = sys.polish(&q_clean, &p_scaled, cert_gate);
        resid_scaled = sys.residual(&q_clean, &p_scaled);
    }
    if resid_scaled <= cert_gate {
        let q = &q_clean * scale;
        let residual = sys.residual(&q, p);
        let min_eig = min_eigenvalue(&q);
        let terms = square_terms(&q, &sys.basis, p.d, p.m / 2);
        return Ok(SosDecision::Sos(GramCertificate {
            basis: sys.basis,
            q,
            residual,
            min_eig,
            square_terms: terms,
        }));
    }

    // Dual side: y_tilde = -y has PSD moment matrix and unit sum over the
    // diagonal-monomial entries; rescale so the pseudo-value of ||v||^m is 1.
    let n = sys.basis.len();
    let mut y_map = BTreeMap::new();
    for (alpha, yk) in sys.full.iter().zip(sol.y.iter()) {
        y_map.insert(alpha.clone(), -yk);
    }
    let norm_poly = norm_power_poly(p.d, p.m).expect("even degree");
    let nu: f64 = norm_poly
        .coeffs
        .iter()
        .map(|(idx, c)| c * y_map.get(idx).copied().unwrap_or(0.0))
        .sum();
    if !(nu.is_finite() && nu > 1e-12) {
        return Ok(SosDecision::Undecided);
    }
    for v in y_map.values_mut() {
        *v /= nu;
    }
    let mut moment_matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            moment_matrix[(i, j)] = y_map[&sys.basis[i].add(&sys.basis[j])];
        }
    }
    let min_eig = min_eigenvalue(&moment_matrix);
    let value_scaled: f64 = p_scaled
        .coeffs
        .iter()
        .map(|(idx, c)| c * y_map.get(idx).copied().unwrap_or(0.0))
        .sum();
    if value_scaled <= -tol && min_eig >= -1e-8 {
        let value = value_scaled * scale;
        return Ok(SosDecision::NotSos(PseudomomentWitness {
            d: p.d,
            m: p.m,
            y: y_map,
            moment_matrix,
            value,
            min_eig,
        }));
    }
    // neither side produced a checkable certificate: boundary when the solve
    // was clean, a propagated failure otherwise
    if sol.status != SdpStatus::Optimal {
        return Err(CertifyError::SolverFailure(format!(
            "no certificate on either side; solver status {:?} (gap {:.3e})",
            sol.status, sol.gap
        )));
    }
    Ok(SosDecision::Undecided)
}

/// Gap polynomial `B^m ||v||^m - p_T(v)` for the given tensor.
pub fn gap_polynomial(tensor: &MomentTensor, b: f64) -> HomogeneousPolynomial {
    let norm = norm_power_poly(tensor.d, tensor.m).expect("even degree");
    norm.scale(b.powi(tensor.m as i32))
        .sub(&tensor.to_polynomial())
}

/// Minimal certifiable constant `B_min = inf { B : B^m ||v||^m - p_T is SoS }`
/// by geometric doubling from `B = 1` followed by bisection. Undecided solver
/// verdicts count as infeasible, so the reported value is the certified
/// (feasible) endpoint and never under-reports.
pub fn certify_bounded(tensor: &MomentTensor, tol: f64) -> Result<CertifyResult, CertifyError> {
    if tensor.m % 2 != 0 {
        return Err(CertifyError::OddDegree(tensor.m));
    }
    if !tensor.is_finite() {
        return Err(CertifyError::NonFiniteMoments);
    }
    let mut trace = Vec::new();
    let probe = |trace: &mut Vec<(f64, TraceLabel)>, b: f64| -> Result<TraceLabel, CertifyError> {
        let verdict = is_sos(&gap_polynomial(tensor, b), DEFAULT_FEASIBILITY_TOL)?;
        let label = match verdict {
            SosDecision::Sos(_) => TraceLabel::Feasible,
            SosDecision::NotSos(_) => TraceLabel::Infeasible,
            SosDecision::Undecided => TraceLabel::Undecided,
        };
        trace.push((b, label));
        Ok(label)
    };

    let (mut lo, mut hi);
    if probe(&mut trace, 1.0)? == TraceLabel::Feasible {
        if probe(&mut trace, 0.0)? == TraceLabel::Feasible {
            // the zero bound already certifies: p_T must be the zero form
            let boundary_certificate = match is_sos(
                &gap_polynomial(tensor, tol),
                DEFAULT_FEASIBILITY_TOL,
            )? {
                SosDecision::Sos(c) => Some(c),
                _ => None,
            };
            return Ok(CertifyResult {
                b_min: 0.0,
                trace,
                boundary_certificate,
                boundary_witness: None,
            });
        }
        lo = 0.0;
        hi = 1.0;
    } else {
        lo = 1.0;
        hi = 2.0;
        let mut doublings = 0;
        while probe(&mut trace, hi)? != TraceLabel::Feasible {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(CertifyError::SolverFailure(
                    "no feasible bound found by doubling".into(),
                ));
            }
        }
    }

    let mut steps = 0;
    while hi - lo > BISECT_REL_WIDTH * hi && steps < MAX_BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if probe(&mut trace, mid)? == TraceLabel::Feasible {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }

    let b_min = hi;
    let boundary_certificate =
        match is_sos(&gap_polynomial(tensor, b_min * (1.0 + tol)), DEFAULT_FEASIBILITY_TOL)? {
            SosDecision::Sos(c) => Some(c),
            _ => None,
        };
    let boundary_witness = if b_min > 0.0 {
        match is_sos(&gap_polynomial(tensor, b_min * (1.0 - tol)), DEFAULT_FEASIBILITY_TOL)? {
            SosDecision::NotSos(w) => Some(w),
            _ => None,
        }
    } else {
        None
    };
    Ok(CertifyResult {
        b_min,
        trace,
        boundary_certificate,
        boundary_witness,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub m: usize,
    pub b_min: f64,
    /// `B_min / (s sqrt(m))`; the subgaussian story is that this stays bounded.
    pub ratio: f64,
}

/// Per-order certification of a family of centered moment tensors against a
/// known subgaussian constant. No judgment is applied here; the acceptance
/// layer imposes its bound on the ratios.
pub fn certify_subgaussian_profile(
    tensors: &[MomentTensor],
    s_known: f64,
    tol: f64,
) -> Result<Vec<ProfileRow>, CertifyError> {
    use rayon::prelude::*;
    let mut rows = tensors
        .par_iter()
        .map(|t| {
            let res = certify_bounded(t, tol)?;
            Ok(ProfileRow {
                m: t.m,
                b_min: res.b_min,
                ratio: res.b_min / (s_known * (t.m as f64).sqrt()),
            })
        })
        .collect::<Result<Vec<_>, CertifyError>>()?;
    rows.sort_by_key(|r| r.m);
    Ok(rows)
}

/// Pseudoinverse square root of a PSD matrix, eigenvalues below
/// `1e-10 * lambda_max` treated as zero. Exactly-diagonal input takes the
/// entrywise path so that whitening by e.g. `diag(4, 1)` is bit-exact.
pub fn pseudo_inv_sqrt(sigma: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>, CertifyError> {
    let n = sigma.nrows();
    let sym = (sigma + sigma.transpose()) * 0.5;
    let diag_only = (0..n).all(|i| (0..n).all(|j| i == j || sym[(i, j)] == 0.0));
    if diag_only {
        let max = (0..n).map(|i| sym[(i, i)]).fold(0.0f64, f64::max);
        if (0..n).any(|i| sym[(i, i)] < -tol * max.max(1.0)) {
            return Err(CertifyError::NonPsdCovariance(
                (0..n).map(|i| sym[(i, i)]).fold(f64::INFINITY, f64::min),
            ));
        }
        let cut = 1e-10 * max;
        return Ok(DMatrix::from_fn(n, n, |i, j| {
            if i == j && sym[(i, i)] > cut {
                1.0 / sym[(i, i)].sqrt()
            } else {
                0.0
            }
        }));
    }
    let eig = nalgebra::SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max().max(0.0);
    let min = eig.eigenvalues.min();
    if min < -tol * max.max(1.0) {
        return Err(CertifyError::NonPsdCovariance(min));
    }
    let cut = 1e-10 * max;
    let f = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| {
        if v > cut {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    }));
    let w = &eig.eigenvectors * f * eig.eigenvectors.transpose();
    Ok((&w + w.transpose()) * 0.5)
}

/// Certifies the hypercontractive constant: whitens the order-`m` tensor by
/// the pseudoinverse square root of the covariance (rank-deficient
/// covariances restrict to their range) and certifies the result.
pub fn certify_hypercontractive(
    t2: &MomentTensor,
    tm: &MomentTensor,
    tol: f64,
) -> Result<CertifyResult, CertifyError> {
    if t2.m != 2 {
        return Err(CertifyError::NotACovariance(t2.m));
    }
    if t2.d != tm.d {
        return Err(CertifyError::DimensionMismatch(t2.d, tm.d));
    }
    if tm.m % 2 != 0 {
        return Err(CertifyError::OddDegree(tm.m));
    }
    if !(t2.is_finite() && tm.is_finite()) {
        return Err(CertifyError::NonFiniteMoments);
    }
    let sigma = t2.to_matrix().expect("order-2 tensor");
    let w = pseudo_inv_sqrt(&sigma, 1e-8)?;
    let whitened_poly = tm.to_polynomial().compose_linear(&w);
    let mut mu = BTreeMap::new();
    for idx in enumerate_indices(tm.d, tm.m) {
        let c = whitened_poly.coeff(&idx);
        mu.insert(idx.clone(), c / idx.multinomial());
    }
    let whitened = MomentTensor {
        d: tm.d,
        m: tm.m,
        mu,
        centered: tm.centered,
    };
    certify_bounded(&whitened, tol)
}

// --- CLI-facing result schema ------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub basis: Vec<Vec<u32>>,
    pub q: Vec<Vec<f64>>,
    pub residual: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessJson {
    pub entries: Vec<(Vec<u32>, f64)>,
    pub value: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub d: usize,
    pub m: usize,
    pub b_min: f64,
    pub ratio: Option<f64>,
    pub trace: Vec<(f64, TraceLabel)>,
    pub certificate: Option<CertificateJson>,
    pub witness: Option<WitnessJson>,
}

impl CertifyReport {
    pub fn from_result(d: usize, m: usize, result: &CertifyResult, s_known: Option<f64>) -> Self {
        CertifyReport {
            d,
            m,
            b_min: result.b_min,
            ratio: s_known.map(|s| result.b_min / (s * (m as f64).sqrt())),
            trace: result.trace.clone(),
            certificate: result.boundary_certificate.as_ref().map(|c| CertificateJson {
                basis: c.basis.iter().map(|b| b.0.clone()).collect(),
                q: (0..c.q.nrows())
                    .map(|i| (0..c.q.ncols()).map(|j| c.q[(i, j)]).collect())
                    .collect(),
                residual: c.residual,
                min_eig: c.min_eig,
            }),
            witness: result.boundary_witness.as_ref().map(|w| WitnessJson {
                entries: w.y.iter().map(|(idx, v)| (idx.0.clone(), *v)).collect(),
                value: w.value,
                min_eig: w.min_eig,
            }),
        }
    }
}
