//! Dense semidefinite solver for the phase-I margin problem
//!
//! ```text
//!   maximize    t
//!   subject to  <A_k, Q> = b_k   (k = 1..K)
//!               Q >= t I
//! ```
//!
//! solved on the shifted variables `X = Q - t I >= 0` by an infeasible-start
//! primal-dual path-following method with Nesterov-Todd scaling. The free
//! scalar `t` rides along in the Schur system as one extra row/column. The
//! dual multipliers `y` satisfy `sum_k y_k A_k <= 0` and
//! `sum_k y_k tr(A_k) = -1` at optimality, which is exactly the (negated,
//! unnormalized) pseudomoment vector the certification layer consumes.
//!
//! Problems are preprocessed before the first iteration: constraint matrices
//! are symmetrized and normalized to unit Frobenius norm, the right-hand side
//! is scaled by its max entry, and dependent constraint rows are dropped via
//! Gram-Schmidt on their `svec` images (an inconsistent system is an error,
//! not a solver failure). All reported quantities are mapped back to the
//! original scale.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("inconsistent affine constraints (least-squares residual {residual:.3e})")]
    InconsistentConstraints { residual: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("margin objective is unbounded (all constraint matrices traceless)")]
    UnboundedMargin,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SdpStatus {
    Optimal,
    MaxIters,
    NumericalFailure,
}

/// A margin problem instance. Constraint matrices must be symmetric.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub n: usize,
    pub constraints: Vec<(DMatrix<f64>, f64)>,
    pub tolerance: f64,
    pub max_iters: usize,
}

impl SdpProblem {
    pub fn new(n: usize, constraints: Vec<(DMatrix<f64>, f64)>) -> Self {
        SdpProblem {
            n,
            constraints,
            tolerance: 1e-8,
            max_iters: 200,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }
}

/// One row of the iterate log. Objectives are in minimization orientation
/// (`primal_obj = -t`, `dual_obj = b^T y`), so weak duality reads
/// `dual_obj <= primal_obj` once both residuals are small.
#[derive(Debug, Clone, Serialize)]
pub struct IterateLog {
    pub iter: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub min_eig: f64,
    pub primal_resid: f64,
    pub dual_resid: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub t_star: f64,
    pub q: DMatrix<f64>,
    pub y: DVector<f64>,
    pub status: SdpStatus,
    pub gap: f64,
    pub iterates: Vec<IterateLog>,
}

/// Independent recomputation of the solution quality numbers.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    /// `max_k |<A_k, Q> - b_k|`
    pub feasibility_inf: f64,
    /// `lambda_min(Q) - t_star`
    pub min_eig_shift: f64,
    /// `|(-t_star) - b^T y|`
    pub duality_gap: f64,
    /// `lambda_min(-sum_k y_k A_k)`; nonnegative for a feasible dual
    pub dual_min_eig: f64,
    /// `|sum_k y_k tr(A_k) + 1|`
    pub dual_trace_resid: f64,
}

// --- packed symmetric storage ----------------------------------------------

/// Dimension of the packed upper triangle.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packs a symmetric matrix into upper-triangle column-major order with
/// off-diagonals scaled by sqrt(2), so that `svec(a) . svec(b) = <a, b>`.
pub fn svec(mat: &DMatrix<f64>) -> DVector<f64> {
    let n = mat.nrows();
    let mut out = DVector::zeros(svec_len(n));
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            out[k] = if i == j { mat[(i, j)] } else { sqrt2 * mat[(i, j)] };
            k += 1;
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                out[(i, j)] = v[k];
            } else {
                out[(i, j)] = v[k] * inv_sqrt2;
                out[(j, i)] = v[k] * inv_sqrt2;
            }
            k += 1;
        }
    }
    out
}

// --- preprocessed problem ---------------------------------------------------

/// Upper-triangle triplet form of one symmetric constraint matrix.
type Triplets = Vec<(usize, usize, f64)>;

struct Prepared {
    n: usize,
    /// normalized triplets, all original constraints
    tri: Vec<Triplets>,
    /// traces of normalized constraints
    g: Vec<f64>,
    /// fully scaled rhs (row-normalized and divided by `sigma_b`)
    b: Vec<f64>,
    /// per-row Frobenius norms used for normalization
    row_scale: Vec<f64>,
    sigma_b: f64,
    /// indices of rows kept after dependency elimination
    kept: Vec<usize>,
    /// orthonormal basis of the constraint row space in svec coordinates (r x S)
    u_basis: DMatrix<f64>,
    /// affine set is `{q : U q = z_star}` (in row-normalized, sigma-scaled units)
    z_star: DVector<f64>,
    /// least-squares residual of the affine system (row-normalized units)
    ls_residual: f64,
}

fn prepare(prob: &SdpProblem) -> Result<Prepared, SdpError> {
    let n = prob.n;
    if n == 0 {
        return Err(SdpError::InvalidProblem("matrix side must be >= 1".into()));
    }
    if prob.constraints.is_empty() {
        return Err(SdpError::InvalidProblem("constraint list is empty".into()));
    }
    let s_dim = svec_len(n);
    let k_total = prob.constraints.len();

    let mut tri = Vec::with_capacity(k_total);
    let mut g = Vec::with_capacity(k_total);
    let mut row_scale = Vec::with_capacity(k_total);
    let mut b_rownorm = Vec::with_capacity(k_total);
    let mut rows = DMatrix::zeros(k_total, s_dim);

    for (k, (a, bk)) in prob.constraints.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(SdpError::InvalidProblem(format!(
                "constraint {k} has shape {}x{}, expected {n}x{n}",
                a.nrows(),
                a.ncols()
            )));
        }
        let max_abs = a.amax();
        let asym = (a - a.transpose()).amax();
        if asym > 1e-9 * (1.0 + max_abs) {
            return Err(SdpError::InvalidProblem(format!(
                "constraint {k} is not symmetric (asymmetry {asym:.3e})"
            )));
        }
        let sym = (a + a.transpose()) * 0.5;
        let fro = sym.norm();
        if fro <= 1e-300 {
            if bk.abs() > 1e-12 {
                return Err(SdpError::InconsistentConstraints { residual: bk.abs() });
            }
            // zero row with zero rhs: keep as all-zero, it will be dropped
            tri.push(Vec::new());
            g.push(0.0);
            row_scale.push(1.0);
            b_rownorm.push(0.0);
            continue;
        }
        let scaled = &sym / fro;
        let mut t: Triplets = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                let v = scaled[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        rows.row_mut(k).copy_from(&svec(&scaled).transpose());
        g.push(scaled.trace());
        tri.push(t);
        row_scale.push(fro);
        b_rownorm.push(bk / fro);
    }

    let sigma_b = b_rownorm.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let b: Vec<f64> = b_rownorm.iter().map(|v| v / sigma_b).collect();

    // Gram-Schmidt over constraint rows: pick an independent subset and an
    // orthonormal row-space basis, then check the rhs is consistent on the
    // dropped rows via least squares.
    let mut kept = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for k in 0..k_total {
        let mut v: DVector<f64> = rows.row(k).transpose();
        let orig_norm = v.norm();
        if orig_norm <= 1e-300 {
            continue;
        }
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&v);
                v.axpy(-c, u, 1.0);
            }
        }
        if v.norm() > 1e-10 {
            v /= v.norm();
            basis.push(v);
            kept.push(k);
        }
    }
    let r = basis.len();
    let mut u_basis = DMatrix::zeros(r, s_dim);
    for (i, u) in basis.iter().enumerate() {
        u_basis.row_mut(i).copy_from(&u.transpose());
    }

    // Row k of the system reads  c_k . (U q) = b_k  with c_k the basis
    // coefficients of row k; least squares over z = U q gives the residual.
    let c = &rows * u_basis.transpose(); // K x r
    let b_vec = DVector::from_column_slice(&b);
    let ctc = c.transpose() * &c;
    let ctb = c.transpose() * &b_vec;
    let z_star = ctc
        .lu()
        .solve(&ctb)
        .ok_or_else(|| SdpError::NumericalFailure("rank-reduced normal equations".into()))?;
    let resid_vec = &c * &z_star - &b_vec;
    let ls_residual = resid_vec.amax() * sigma_b;
    if ls_residual > 1e-6 {
        return Err(SdpError::InconsistentConstraints {
            residual: ls_residual,
        });
    }

    Ok(Prepared {
        n,
        tri,
        g,
        b,
        row_scale,
        sigma_b,
        kept,
        u_basis,
        z_star,
        ls_residual,
    })
}

impl Prepared {
    fn apply_row(&self, k: usize, x: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for &(i, j, v) in &self.tri[k] {
            acc += if i == j { v * x[(i, i)] } else { 2.0 * v * x[(i, j)] };
        }
        acc
    }

    /// `sum_k y_k A_k` over the kept subset.
    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (pos, &k) in self.kept.iter().enumerate() {
            let yk = y[pos];
            if yk == 0.0 {
                continue;
            }
            for &(i, j, v) in &self.tri[k] {
                out[(i, j)] += yk * v;
                if i != j {
                    out[(j, i)] += yk * v;
                }
            }
        }
        out
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Largest step `alpha` with `X + alpha D` staying PD, times a 0.98
/// fraction-to-boundary factor, capped at 1.
fn step_length(chol_l: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<f64, SdpError> {
    let m1 = chol_l
        .clone()
        .solve_lower_triangular(d)
        .ok_or_else(|| SdpError::NumericalFailure("singular Cholesky factor".into()))?;
    let m2 = chol_l
        .clone()
        .solve_lower_triangular(&m1.transpose())
        .ok_or_else(|| SdpError::NumericalFailure("singular Cholesky factor".into()))?;
    let sym = (&m2 + m2.transpose()) * 0.5;
    let lam = min_eigenvalue(&sym);
    if lam >= -1e-14 {
        Ok(1.0)
    } else {
        Ok((0.98 / (-lam)).min(1.0))
    }
}

/// Solves the margin problem. Deterministic: identical inputs produce
/// bitwise-identical iterates.
pub fn solve_margin(prob: &SdpProblem) -> Result<SdpSolution, SdpError> {
    let prep = prepare(prob)?;
    let n = prep.n;
    let r = prep.kept.len();
    let g_kept = DVector::from_iterator(r, prep.kept.iter().map(|&k| prep.g[k]));
    let b_kept = DVector::from_iterator(r, prep.kept.iter().map(|&k| prep.b[k]));
    if g_kept.amax() <= 1e-12 {
        // t never enters the constraints: any feasible Q stays feasible after
        // adding c I, so the margin grows without bound.
        return Err(SdpError::UnboundedMargin);
    }

    // Spec'd starting point: X = rho I strictly interior, rho from the data.
    let rho = 1.0 + b_kept.amax();
    let mut x = DMatrix::<f64>::identity(n, n) * rho;
    let mut z = DMatrix::<f64>::identity(n, n);
    let mut t = 0.0f64;
    let mut y = DVector::<f64>::zeros(r);

    let tol = prob.tolerance;
    let target = (0.2 * tol).max(1e-13);
    let mut log = Vec::new();
    let mut stalls = 0usize;
    // metric-minimal iterate, kept so late-stage roundoff breakdown (X or Z
    // grazing the cone boundary once mu hits the floating-point floor) still
    // returns the converged point instead of an error
    let mut best: Option<(f64, DMatrix<f64>, f64, DVector<f64>)> = None;
    let mut hit_target = false;
    let mut broke_down = false;

    let nf = |msg: &str| SdpError::NumericalFailure(msg.to_string());

    for iter in 0..prob.max_iters {
        // residuals (scaled units)
        let mut r_p = DVector::zeros(r);
        for (pos, &k) in prep.kept.iter().enumerate() {
            r_p[pos] = b_kept[pos] - prep.apply_row(k, &x) - g_kept[pos] * t;
        }
        let r_d = -(prep.adjoint(&y) + &z);
        let r_g = -1.0 - g_kept.dot(&y);

        let pobj = -t;
        let dobj = b_kept.dot(&y);
        let mu = x.dot(&z) / n as f64;

        // original-unit quality metrics
        let pinf = (0..r)
            .map(|pos| (r_p[pos] * prep.row_scale[prep.kept[pos]] * prep.sigma_b).abs())
            .fold(0.0f64, f64::max);
        let dinf = r_d.amax().max(r_g.abs());
        let gap_orig = prep.sigma_b * (pobj - dobj).abs();
        let quality = pinf
            .max(dinf)
            .max(gap_orig / (1.0 + (prep.sigma_b * t).abs()));

        log.push(IterateLog {
            iter,
            primal_obj: prep.sigma_b * pobj,
            dual_obj: prep.sigma_b * dobj,
            gap: gap_orig,
            min_eig: prep.sigma_b * (min_eigenvalue(&x) + t),
            primal_resid: pinf,
            dual_resid: dinf,
        });

        if x.iter().all(|v| v.is_finite())
            && t.is_finite()
            && best.as_ref().map_or(true, |(q, ..)| quality < *q)
        {
            best = Some((quality, x.clone(), t, y.clone()));
        }
        if quality <= target {
            hit_target = true;
            break;
        }
        if t.abs() > 1e10 {
            return Err(SdpError::UnboundedMargin);
        }

        let step = || -> Result<(DMatrix<f64>, f64, DVector<f64>, DMatrix<f64>), SdpError> {
            // Nesterov-Todd scaling point: W Z W = X with W = L G^{-1/2} L^T,
            // G = L^T Z L, X = L L^T.
            let chol_x =
                nalgebra::Cholesky::new(x.clone()).ok_or_else(|| nf("X left the cone"))?;
            let l = chol_x.l();
            let gmat = l.transpose() * &z * &l;
            let eig = nalgebra::SymmetricEigen::new((&gmat + gmat.transpose()) * 0.5);
            if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
                return Err(nf("Z left the cone"));
            }
            let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
            let w =
                &l * &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * l.transpose();
            let w = (&w + w.transpose()) * 0.5;

            // Schur complement S_kl = <A_k, W A_l W> over kept constraints.
            let mut schur = DMatrix::zeros(r, r);
            for (lpos, &lk) in prep.kept.iter().enumerate() {
                // T_l = W A_l W assembled from rank-one updates of W's columns
                let mut t_l = DMatrix::<f64>::zeros(n, n);
                for &(i, j, v) in &prep.tri[lk] {
                    let wi = w.column(i);
                    let wj = w.column(j);
                    if i == j {
                        t_l.ger(v, &wi, &wj, 1.0);
                    } else {
                        t_l.ger(v, &wi, &wj, 1.0);
                        t_l.ger(v, &wj, &wi, 1.0);
                    }
                }
                for (kpos, &kk) in prep.kept.iter().enumerate() {
                    schur[(kpos, lpos)] = {
                        let mut acc = 0.0;
                        for &(i, j, v) in &prep.tri[kk] {
                            acc += if i == j {
                                v * t_l[(i, i)]
                            } else {
                                2.0 * v * t_l[(i, j)]
                            };
                        }
                        acc
                    };
                }
            }
            let schur = (&schur + schur.transpose()) * 0.5;

            // KKT system [[S, g],[g^T, 0]] shared by predictor and corrector.
            let mut kkt = DMatrix::zeros(r + 1, r + 1);
            kkt.view_mut((0, 0), (r, r)).copy_from(&schur);
            for pos in 0..r {
                kkt[(pos, r)] = g_kept[pos];
                kkt[(r, pos)] = g_kept[pos];
            }
            let lu = kkt.full_piv_lu();

            let w_rd_w = &w * &r_d * &w;
            let solve_for = |rc: &DMatrix<f64>| -> Result<_, SdpError> {
                let mut rhs = DVector::zeros(r + 1);
                for (pos, &k) in prep.kept.iter().enumerate() {
                    rhs[pos] = r_p[pos] - prep.apply_row(k, rc) + prep.apply_row(k, &w_rd_w);
                }
                rhs[r] = r_g;
                let sol = lu.solve(&rhs).ok_or_else(|| nf("singular KKT system"))?;
                let dy = DVector::from_iterator(r, (0..r).map(|i| sol[i]));
                let dt = sol[r];
                let dz = &r_d - prep.adjoint(&dy);
                let dz = (&dz + dz.transpose()) * 0.5;
                let dx = rc - &w * &dz * &w;
                let dx = (&dx + dx.transpose()) * 0.5;
                Ok((dx, dt, dy, dz))
            };

            // predictor (sigma = 0)
            let rc_aff = -x.clone();
            let (dx_a, _dt_a, _dy_a, dz_a) = solve_for(&rc_aff)?;
            let chol_z =
                nalgebra::Cholesky::new(z.clone()).ok_or_else(|| nf("Z left the cone"))?;
            let alpha_p_aff = step_length(&chol_x.l(), &dx_a)?;
            let alpha_d_aff = step_length(&chol_z.l(), &dz_a)?;
            let x_aff = &x + &dx_a * alpha_p_aff;
            let z_aff = &z + &dz_a * alpha_d_aff;
            let mu_aff = x_aff.dot(&z_aff) / n as f64;
            let sigma = ((mu_aff / mu).powi(3)).clamp(1e-12, 1.0);

            // corrector (recentred target)
            let z_inv = chol_z.inverse();
            let rc = &z_inv * (sigma * mu) - &x;
            let rc = (&rc + rc.transpose()) * 0.5;
            let (dx, dt, dy, dz) = solve_for(&rc)?;
            let alpha_p = step_length(&chol_x.l(), &dx)?;
            let alpha_d = step_length(&chol_z.l(), &dz)?;
            Ok((
                &x + &dx * alpha_p,
                t + dt * alpha_p,
                &y + &dy * alpha_d,
                &z + &dz * alpha_d,
            ))
        };

        match step() {
            Ok((nx, nt, ny, nz)) => {
                let dt_progress = (nt - t).abs();
                let dx_progress = (&nx - &x).amax();
                x = (&nx + nx.transpose()) * 0.5;
                z = (&nz + nz.transpose()) * 0.5;
                t = nt;
                y = ny;
                if dt_progress < 1e-14 * (1.0 + t.abs()) && dx_progress < 1e-14 * rho {
                    stalls += 1;
                    if stalls >= 5 {
                        broke_down = true;
                        break;
                    }
                } else {
                    stalls = 0;
                }
            }
            Err(_) => {
                broke_down = true;
                break;
            }
        }
    }

    let (best_quality, bx, bt, by) = best.ok_or_else(|| nf("no finite iterate produced"))?;
    let status = if hit_target || best_quality <= tol {
        SdpStatus::Optimal
    } else if broke_down {
        SdpStatus::NumericalFailure
    } else {
        SdpStatus::MaxIters
    };

    // map back to original units
    let q = (&bx + DMatrix::<f64>::identity(n, n) * bt) * prep.sigma_b;
    let t_star = prep.sigma_b * bt;
    let mut y_full = DVector::zeros(prob.constraints.len());
    for (pos, &k) in prep.kept.iter().enumerate() {
        y_full[k] = by[pos] / prep.row_scale[k];
    }
    let dobj = prep.sigma_b * b_kept.dot(&by);
    let gap = (-t_star - dobj).abs();

    Ok(SdpSolution {
        t_star,
        q: (&q + q.transpose()) * 0.5,
        y: y_full,
        status,
        gap,
        iterates: log,
    })
}

/// Independently recomputes feasibility, spectral margin, and duality gap.
pub fn verify_solution(prob: &SdpProblem, sol: &SdpSolution) -> VerifyReport {
    let mut feasibility_inf = 0.0f64;
    for (a, b) in &prob.constraints {
        let val = a.dot(&sol.q);
        feasibility_inf = feasibility_inf.max((val - b).abs());
    }
    let min_eig_shift = min_eigenvalue(&sol.q) - sol.t_star;
    let mut adj = DMatrix::zeros(prob.n, prob.n);
    let mut trace_dot = 0.0;
    let mut dual_obj = 0.0;
    for (k, (a, b)) in prob.constraints.iter().enumerate() {
        adj += a * sol.y[k];
        trace_dot += a.trace() * sol.y[k];
        dual_obj += b * sol.y[k];
    }
    VerifyReport {
        feasibility_inf,
        min_eig_shift,
        duality_gap: (-sol.t_star - dual_obj).abs(),
        dual_min_eig: min_eigenvalue(&(-adj)),
        dual_trace_resid: (trace_dot + 1.0).abs(),
    }
}

/// Outcome of the alternating-projection cross-check at a fixed margin `t`.
#[derive(Debug, Clone)]
pub enum FeasibilityOutcome {
    Feasible(DMatrix<f64>),
    /// Certified lower bound on the distance between the affine set and the
    /// shifted cone (positive distance proves infeasibility).
    Infeasible(f64),
    Undecided,
}

/// Dykstra-style alternation between `{A(Q) = b}` and `{Q >= t I}`. Used only
/// to cross-validate [`solve_margin`]; the infeasibility certificate is a
/// separating direction cleaned to lie in the constraint row space and in the
/// polar of the cone, with the cleanup error subtracted from the reported
/// bound.
pub fn alternating_projection_feasibility(
    prob: &SdpProblem,
    t: f64,
    max_iters: usize,
) -> Result<FeasibilityOutcome, SdpError> {
    let prep = prepare(prob)?;
    let n = prep.n;
    let tol = prob.tolerance.max(1e-10);
    // Work in row-normalized units but undo the global rhs scaling so the
    // affine set is the original one.
    let z_aff = &prep.z_star * prep.sigma_b;

    let project_affine = |q: &DVector<f64>| -> DVector<f64> {
        q - prep.u_basis.transpose() * (&prep.u_basis * q - &z_aff)
    };
    let project_cone = |q: &DVector<f64>| -> DVector<f64> {
        let m = smat(q, n);
        let eig = nalgebra::SymmetricEigen::new(m);
        let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(t)));
        let back = &eig.eigenvectors * clamped * eig.eigenvectors.transpose();
        svec(&((&back + back.transpose()) * 0.5))
    };

    let mut a_pt = project_affine(&svec(&(DMatrix::<f64>::identity(n, n) * (1.0 + t.abs()))));
    let mut increment = DVector::<f64>::zeros(svec_len(n));
    let mut prev_gap = f64::INFINITY;
    let mut stall_count = 0usize;

    for _ in 0..max_iters {
        let c_pt = project_cone(&(&a_pt + &increment));
        increment = &a_pt + &increment - &c_pt;
        a_pt = project_affine(&c_pt);

        let gap_vec = &a_pt - &c_pt;
        let gap = gap_vec.norm();
        if gap <= tol {
            let q = smat(&a_pt, n);
            if min_eigenvalue(&q) >= t - 10.0 * tol {
                return Ok(FeasibilityOutcome::Feasible(q));
            }
        }

        if gap > prev_gap - 1e-12 * (1.0 + gap) {
            stall_count += 1;
        } else {
            stall_count = 0;
        }
        prev_gap = gap;

        if stall_count >= 20 && gap > 10.0 * tol {
            // Certificate attempt: direction must lie in the constraint row
            // space and be negative semidefinite.
            let dir = gap_vec.clone();
            let in_rowspace = prep.u_basis.transpose() * (&prep.u_basis * &dir);
            let m = smat(&in_rowspace, n);
            let eig = nalgebra::SymmetricEigen::new(m.clone());
            let pos_part: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
            let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.min(0.0)));
            let nsd = &eig.eigenvectors * clamped * eig.eigenvectors.transpose();
            let nsd_vec = svec(&((&nsd + nsd.transpose()) * 0.5));
            let reproj = prep.u_basis.transpose() * (&prep.u_basis * &nsd_vec);
            let drift = (&nsd_vec - &reproj).norm();
            let norm = nsd_vec.norm();
            if norm > 1e-12 {
                let unit = &nsd_vec / norm;
                let umat = smat(&unit, n);
                let raw = unit.dot(&a_pt) - t * umat.trace();
                let slack =
                    (pos_part + drift) / norm * (a_pt.norm() + t.abs() * (n as f64).sqrt() + 1.0);
                let bound = raw - slack;
                if bound > tol {
                    return Ok(FeasibilityOutcome::Infeasible(bound));
                }
            }
            stall_count = 0;
        }
    }
    let _ = prep.ls_residual;
    Ok(FeasibilityOutcome::Undecided)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_problem(b: f64) -> SdpProblem {
        SdpProblem::new(1, vec![(DMatrix::from_element(1, 1, 1.0), b)])
    }

    fn identity_problem() -> SdpProblem {
        let e11 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e22 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let e12 = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        SdpProblem::new(2, vec![(e11, 1.0), (e22, 1.0), (e12, 0.0)])
    }

    fn ones_problem() -> SdpProblem {
        let e11 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e22 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let e12 = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        SdpProblem::new(2, vec![(e11, 1.0), (e22, 1.0), (e12, 1.0)])
    }

    #[test]
    fn scalar_margin() {
        let sol = solve_margin(&scalar_problem(5.0)).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.t_star - 5.0).abs() <= 1e-7, "t* = {}", sol.t_star);
        assert!((sol.q[(0, 0)] - 5.0).abs() <= 1e-7);
        let report = verify_solution(&scalar_problem(5.0), &sol);
        assert!(report.feasibility_inf <= 1e-8);
        assert!(report.duality_gap <= 1e-8);
        assert!(report.min_eig_shift.abs() <= 1e-8);
    }

    #[test]
    fn identity_margin() {
        let prob = identity_problem();
        let sol = solve_margin(&prob).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.t_star - 1.0).abs() <= 1e-7, "t* = {}", sol.t_star);
        assert!((&sol.q - DMatrix::<f64>::identity(2, 2)).amax() <= 1e-6);
    }

    #[test]
    fn rank_one_boundary_margin() {
        // eigenvalues of the all-ones 2x2 matrix are {0, 2}
        let prob = ones_problem();
        let sol = solve_margin(&prob).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(sol.t_star.abs() <= 1e-7, "t* = {}", sol.t_star);
        let report = verify_solution(&prob, &sol);
        assert!(report.feasibility_inf <= 1e-7);
        // lambda_min(Q - t* I) within the boundary band
        let shifted = &sol.q - DMatrix::<f64>::identity(2, 2) * sol.t_star;
        let lam = nalgebra::SymmetricEigen::new(shifted)
            .eigenvalues
            .min();
        assert!(lam.abs() <= 1e-6, "lambda = {lam}");
    }

    #[test]
    fn verify_reports_perturbation() {
        let prob = identity_problem();
        let mut sol = solve_margin(&prob).unwrap();
        sol.q[(0, 1)] += 0.1;
        sol.q[(1, 0)] += 0.1;
        let report = verify_solution(&prob, &sol);
        assert!((report.feasibility_inf - 0.1).abs() <= 1e-6);
    }

    #[test]
    fn weak_duality_on_dual_feasible_iterates() {
        for prob in [scalar_problem(5.0), identity_problem(), ones_problem()] {
            let sol = solve_margin(&prob).unwrap();
            for it in &sol.iterates {
                if it.primal_resid <= 1e-6 && it.dual_resid <= 1e-6 {
                    assert!(
                        it.dual_obj <= it.primal_obj + 1e-6,
                        "weak duality violated at iter {}: dual {} primal {}",
                        it.iter,
                        it.dual_obj,
                        it.primal_obj
                    );
                }
            }
        }
    }

    #[test]
    fn scaling_equivariance() {
        // scaling all (A_k, b_k) by lambda leaves the constraint set unchanged
        let base = identity_problem();
        let sol0 = solve_margin(&base).unwrap();
        for lambda in [0.5, 2.0] {
            let scaled = SdpProblem::new(
                2,
                base.constraints
                    .iter()
                    .map(|(a, b)| (a * lambda, b * lambda))
                    .collect(),
            );
            let sol = solve_margin(&scaled).unwrap();
            assert!((sol.t_star - sol0.t_star).abs() <= 1e-6);
            assert!((&sol.q - &sol0.q).amax() <= 1e-6);
        }
    }

    #[test]
    fn determinism_bitwise() {
        let prob = ones_problem();
        let a = solve_margin(&prob).unwrap();
        let b = solve_margin(&prob).unwrap();
        assert_eq!(a.t_star.to_bits(), b.t_star.to_bits());
        assert_eq!(a.status, b.status);
        for (x, y) in a.q.iter().zip(b.q.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn inconsistent_constraints_detected() {
        // Q11 = 1 and Q11 = 2 cannot both hold
        let e11 = DMatrix::from_row_slice(1, 1, &[1.0]);
        let prob = SdpProblem::new(1, vec![(e11.clone(), 1.0), (e11, 2.0)]);
        match solve_margin(&prob) {
            Err(SdpError::InconsistentConstraints { .. }) => {}
            other => panic!("expected InconsistentConstraints, got {other:?}"),
        }
    }

    #[test]
    fn redundant_constraints_allowed() {
        // duplicated row is dropped, not an error
        let e11 = DMatrix::from_row_slice(1, 1, &[1.0]);
        let prob = SdpProblem::new(1, vec![(e11.clone(), 5.0), (e11 * 2.0, 10.0)]);
        let sol = solve_margin(&prob).unwrap();
        assert!((sol.t_star - 5.0).abs() <= 1e-7);
    }

    #[test]
    fn unbounded_margin_detected() {
        // single traceless constraint: Q can shift by c I freely
        let e12 = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let prob = SdpProblem::new(2, vec![(e12, 0.0)]);
        match solve_margin(&prob) {
            Err(SdpError::UnboundedMargin) => {}
            other => panic!("expected UnboundedMargin, got {other:?}"),
        }
    }

    #[test]
    fn alternating_projection_examples() {
        // identity example with t = 0.5 is feasible
        let out = alternating_projection_feasibility(&identity_problem(), 0.5, 4000).unwrap();
        match out {
            FeasibilityOutcome::Feasible(q) => {
                assert!((q - DMatrix::<f64>::identity(2, 2)).amax() <= 1e-5)
            }
            other => panic!("expected Feasible, got {other:?}"),
        }

        // all-ones example with t = 0.5: never feasible (t* = 0)
        let out = alternating_projection_feasibility(&ones_problem(), 0.5, 4000).unwrap();
        match out {
            FeasibilityOutcome::Feasible(_) => panic!("all-ones at t=0.5 reported feasible"),
            FeasibilityOutcome::Infeasible(bound) => assert!(bound > 0.0),
            FeasibilityOutcome::Undecided => {}
        }

        // scalar q = 5 with t = 10: infeasible with distance 5
        let out = alternating_projection_feasibility(&scalar_problem(5.0), 10.0, 4000).unwrap();
        match out {
            FeasibilityOutcome::Infeasible(bound) => {
                assert!(bound > 1.0, "bound = {bound}");
                assert!(bound <= 5.0 + 1e-6);
            }
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn margin_halved_is_ap_feasible() {
        for prob in [scalar_problem(5.0), identity_problem()] {
            let sol = solve_margin(&prob).unwrap();
            if sol.status == SdpStatus::Optimal && sol.t_star >= prob.tolerance {
                let out =
                    alternating_projection_feasibility(&prob, sol.t_star / 2.0, 4000).unwrap();
                assert!(matches!(out, FeasibilityOutcome::Feasible(_)));
            }
        }
    }

    #[test]
    fn svec_is_an_isometry() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 4.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, -2.0, 1.0, 2.0, 1.0, 0.0]);
        let inner = a.dot(&b);
        let packed = svec(&a).dot(&svec(&b));
        assert!((inner - packed).abs() <= 1e-12);
        let back = smat(&svec(&a), 3);
        assert!((&back - &a).amax() <= 1e-14);
    }
}
