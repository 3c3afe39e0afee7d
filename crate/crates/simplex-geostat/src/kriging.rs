//! Kriging of the mean: single-variable GLS, simultaneous cokriging of the
//! p means, nonnegativity-constrained kriging via an active-set method, and
//! compositional kriging with per-part weights as a contrast.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covariance::{build_block_matrix, BlockCovMatrix, CovModel};
use crate::error::{Error, Result};
use crate::simplex::{CompositionalDataset, SiteSet};

/// Weight layout of a kriging solution.
#[derive(Debug, Clone, PartialEq)]
pub enum KrigingWeights {
    /// One n-vector shared by all variables (Lambda = I_p kron lambda).
    Shared(DVector<f64>),
    /// Full np x p weight matrix in variable-major row order.
    Full(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingSolution {
    pub weights: KrigingWeights,
    /// Lagrange multipliers of the unbiasedness constraints: p x p for the
    /// simultaneous system, 1 x 1 for single-variable problems.
    pub mu: DMatrix<f64>,
    /// Dual multipliers of the nonnegativity constraints, when imposed.
    pub alpha: Option<DVector<f64>>,
    /// Indices where the nonnegativity constraint binds (lambda_i = 0).
    pub active_set: Option<Vec<usize>>,
    /// Estimation variance(s), when meaningful.
    pub variance: Option<Vec<f64>>,
    pub n: usize,
    pub p: usize,
}

impl KrigingSolution {
    /// The full np x p weight matrix, expanding a shared weight vector to
    /// I_p kron lambda.
    pub fn lambda_matrix(&self) -> DMatrix<f64> {
        match &self.weights {
            KrigingWeights::Full(m) => m.clone(),
            KrigingWeights::Shared(lam) => {
                let mut m = DMatrix::zeros(self.n * self.p, self.p);
                for k in 0..self.p {
                    for i in 0..self.n {
                        m[(k * self.n + i, k)] = lam[i];
                    }
                }
                m
            }
        }
    }

    /// Own-variable weight vector of variable k (the k-th diagonal block
    /// of the weight matrix).
    pub fn own_weights(&self, k: usize) -> DVector<f64> {
        match &self.weights {
            KrigingWeights::Shared(lam) => lam.clone(),
            KrigingWeights::Full(m) => {
                DVector::from_fn(self.n, |i, _| m[(k * self.n + i, k)])
            }
        }
    }

    /// Max-norm of J^T Lambda - I_p, the unbiasedness residual.
    pub fn unbiasedness_residual(&self) -> f64 {
        let lam = self.lambda_matrix();
        let mut worst = 0.0_f64;
        for k in 0..self.p {
            for l in 0..self.p {
                let col_sum: f64 = (0..self.n).map(|i| lam[(k * self.n + i, l)]).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((col_sum - target).abs());
            }
        }
        worst
    }
}

fn cholesky_solve(c: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = c
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularCovariance("Cholesky factorization failed".into()))?;
    Ok(chol.solve(rhs))
}

/// Kriging of the mean for a single variable with covariance matrix C:
/// lambda = C^{-1} 1 / (1^T C^{-1} 1), mu = variance = 1 / (1^T C^{-1} 1).
pub fn krige_mean_single(c: &DMatrix<f64>) -> Result<(DVector<f64>, f64, f64)> {
    let n = c.nrows();
    if n == 0 || c.ncols() != n {
        return Err(Error::DimensionMismatch("covariance matrix must be square".into()));
    }
    let ones = DMatrix::from_element(n, 1, 1.0);
    let y = cholesky_solve(c, &ones)?;
    let denom = y.sum();
    if denom.abs() < f64::EPSILON {
        return Err(Error::SingularCovariance("1^T C^{-1} 1 is zero".into()));
    }
    let mu = 1.0 / denom;
    let lambda = DVector::from_fn(n, |i, _| y[(i, 0)] * mu);
    Ok((lambda, mu, mu))
}

/// Shared-weight kriging solution for a single covariance matrix.
pub fn krige_mean_single_solution(c: &DMatrix<f64>) -> Result<KrigingSolution> {
    let n = c.nrows();
    let (lambda, mu, variance) = krige_mean_single(c)?;
    Ok(KrigingSolution {
        weights: KrigingWeights::Shared(lambda),
        mu: DMatrix::from_element(1, 1, mu),
        alpha: None,
        active_set: None,
        variance: Some(vec![variance]),
        n,
        p: 1,
    })
}

/// The np x p unbiasedness constraint matrix J = I_p kron 1_n.
pub fn j_matrix(n: usize, p: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(n * p, p);
    for k in 0..p {
        for i in 0..n {
            j[(k * n + i, k)] = 1.0;
        }
    }
    j
}

/// Simultaneous kriging of the p means: solves the bordered system whose
/// general solution is Lambda = C^{-1} J mu with mu = (J^T C^{-1} J)^{-1}.
pub fn cokrige_means(model: &CovModel, sites: &SiteSet) -> Result<KrigingSolution> {
    let block = build_block_matrix(model, sites)?;
    cokrige_from_block(&block)
}

/// Cokriging from an already-assembled block covariance matrix.
pub fn cokrige_from_block(block: &BlockCovMatrix) -> Result<KrigingSolution> {
    let (n, p) = (block.n(), block.p());
    let j = j_matrix(n, p);
    let x = cholesky_solve(block.matrix(), &j)?; // C^{-1} J
    let jtx = j.transpose() * &x; // J^T C^{-1} J
    let mu = jtx
        .lu()
        .solve(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularCovariance("J^T C^{-1} J is singular".into()))?;
    let lambda = &x * &mu;
    let variance = (0..p).map(|k| mu[(k, k)]).collect();
    Ok(KrigingSolution {
        weights: KrigingWeights::Full(lambda),
        mu,
        alpha: None,
        active_set: None,
        variance: Some(variance),
        n,
        p,
    })
}

const KKT_TOL: f64 = 1e-12;

/// Equality-restricted kriging on an inactive index set: weights outside
/// `inactive` are zero, the rest solve C_FF lambda_F = mu 1, 1^T lambda_F = 1.
fn reduced_solution(c: &DMatrix<f64>, inactive: &[usize]) -> Result<(DVector<f64>, f64)> {
    let m = inactive.len();
    let cff = DMatrix::from_fn(m, m, |a, b| c[(inactive[a], inactive[b])]);
    let ones = DMatrix::from_element(m, 1, 1.0);
    let y = cholesky_solve(&cff, &ones)?;
    let denom = y.sum();
    if denom.abs() < f64::EPSILON {
        return Err(Error::SingularCovariance("reduced system is degenerate".into()));
    }
    let mu = 1.0 / denom;
    let n = c.nrows();
    let mut lambda = DVector::zeros(n);
    for (a, &i) in inactive.iter().enumerate() {
        lambda[i] = y[(a, 0)] * mu;
    }
    Ok((lambda, mu))
}

/// Nonnegativity-constrained kriging of the mean:
/// min lambda^T C lambda subject to 1^T lambda = 1, lambda >= 0,
/// solved by a primal active-set method. Constraints are added one at a
/// time at the most-negative weight and dropped at the most-negative dual
/// multiplier, with smallest-index tie-breaking.
pub fn nonneg_krige_mean(c: &DMatrix<f64>) -> Result<KrigingSolution> {
    let n = c.nrows();
    if n == 0 || c.ncols() != n {
        return Err(Error::DimensionMismatch("covariance matrix must be square".into()));
    }
    let mut active = vec![false; n];
    let max_iter = 1usize << n.min(30);
    for _ in 0..=max_iter {
        let inactive: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        if inactive.is_empty() {
            return Err(Error::SolverFailure("all constraints became active".into()));
        }
        let (lambda, mu) = reduced_solution(c, &inactive)?;
        // most-negative inactive weight, smallest index on ties
        let mut worst: Option<(usize, f64)> = None;
        for &i in &inactive {
            if lambda[i] < -KKT_TOL {
                let better = match worst {
                    None => true,
                    Some((_, w)) => lambda[i] < w,
                };
                if better {
                    worst = Some((i, lambda[i]));
                }
            }
        }
        if let Some((i, _)) = worst {
            active[i] = true;
            continue;
        }
        // primal feasible; check dual feasibility on the active set
        let clam = c * &lambda;
        let mut alpha = DVector::zeros(n);
        let mut drop: Option<(usize, f64)> = None;
        for i in 0..n {
            if active[i] {
                let a = clam[i] - mu;
                alpha[i] = a;
                if a < -KKT_TOL {
                    let better = match drop {
                        None => true,
                        Some((_, w)) => a < w,
                    };
                    if better {
                        drop = Some((i, a));
                    }
                }
            }
        }
        if let Some((i, _)) = drop {
            active[i] = false;
            continue;
        }
        // report the minimal active set: degenerate lambda_i = 0, alpha_i = 0
        // entries stay listed only if the constraint was genuinely forced
        let active_set: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let variance = (&lambda.transpose() * c * &lambda)[(0, 0)];
        return Ok(KrigingSolution {
            weights: KrigingWeights::Shared(lambda),
            mu: DMatrix::from_element(1, 1, mu),
            alpha: Some(alpha),
            active_set: Some(active_set),
            variance: Some(vec![variance]),
            n,
            p: 1,
        });
    }
    Err(Error::SolverFailure(format!(
        "active-set method did not terminate within {max_iter} iterations"
    )))
}

/// The n x n objective matrix sum_k C_kk of the shared-weight problems.
pub fn summed_diagonal_blocks(model: &CovModel, sites: &SiteSet) -> Result<DMatrix<f64>> {
    let block = build_block_matrix(model, sites)?;
    let (n, p) = (block.n(), block.p());
    let mut s = DMatrix::zeros(n, n);
    for k in 0..p {
        s += block.block(k, k);
    }
    Ok(s)
}

/// Shared-weight nonnegative cokriging: min sum_k lambda^T C_kk lambda with
/// one lambda for all variables. The objective matrix is sum_k C_kk.
pub fn nonneg_cokrige_means(model: &CovModel, sites: &SiteSet) -> Result<KrigingSolution> {
    let block = build_block_matrix(model, sites)?;
    let p = block.p();
    let s = summed_diagonal_blocks(model, sites)?;
    let mut sol = nonneg_krige_mean(&s)?;
    sol.p = p;
    // expand shared lambda bookkeeping to p variables
    let lam = match &sol.weights {
        KrigingWeights::Shared(l) => l.clone(),
        KrigingWeights::Full(_) => unreachable!(),
    };
    sol.variance = Some(
        (0..p)
            .map(|k| (lam.transpose() * block.block(k, k) * &lam)[(0, 0)])
            .collect(),
    );
    Ok(sol)
}

/// Residuals of the Kuhn-Tucker conditions for a single-variable
/// nonnegativity-constrained solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

/// KKT residuals of a nonnegativity-constrained solution against C.
pub fn kkt_residuals(c: &DMatrix<f64>, sol: &KrigingSolution) -> KktResiduals {
    let lam = match &sol.weights {
        KrigingWeights::Shared(l) => l.clone(),
        KrigingWeights::Full(m) => DVector::from_fn(sol.n, |i, _| m[(i, 0)]),
    };
    let mu = sol.mu[(0, 0)];
    let alpha = sol
        .alpha
        .clone()
        .unwrap_or_else(|| DVector::zeros(sol.n));
    let clam = c * &lam;
    let stationarity = (0..sol.n)
        .map(|i| (clam[i] - mu - alpha[i]).abs())
        .fold(0.0_f64, f64::max);
    let primal = (lam.sum() - 1.0)
        .abs()
        .max((0..sol.n).map(|i| (-lam[i]).max(0.0)).fold(0.0, f64::max));
    let dual = (0..sol.n).map(|i| (-alpha[i]).max(0.0)).fold(0.0, f64::max);
    let complementarity = (0..sol.n)
        .map(|i| (alpha[i] * lam[i]).abs())
        .fold(0.0_f64, f64::max);
    KktResiduals {
        stationarity,
        primal,
        dual,
        complementarity,
    }
}

/// Per-part weights and estimates of compositional kriging.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionalKrige {
    /// One n-vector of weights per part, generally all different.
    pub weights: Vec<DVector<f64>>,
    /// Estimated parts (lambda^k)^T x^k; nonnegative and summing to one.
    pub estimates: Vec<f64>,
    /// Parts whose nonnegativity constraint binds.
    pub active_parts: Vec<usize>,
    pub objective: f64,
}

/// Compositional kriging: minimize the sum of the p prediction variances
/// sum_k (lambda^k)^T C_kk lambda^k subject to per-part unbiasedness
/// 1^T lambda^k = 1, sum-to-one of the estimated parts, and nonnegativity
/// of each estimated part. The weights depend on the data, which is what
/// distinguishes this estimator from shared-weight kriging of the mean.
pub fn walvoort_compositional_krige(
    model: &CovModel,
    sites: &SiteSet,
    ds: &CompositionalDataset,
) -> Result<CompositionalKrige> {
    if ds.len() != sites.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} data rows for {} sites",
            ds.len(),
            sites.len()
        )));
    }
    let block = build_block_matrix(model, sites)?;
    let (n, p) = (block.n(), block.p());
    if p != ds.part_count() {
        return Err(Error::DimensionMismatch(format!(
            "model has {p} variables, dataset has {} parts",
            ds.part_count()
        )));
    }
    let nv = n * p;
    // block-diagonal objective matrix
    let mut h = DMatrix::zeros(nv, nv);
    for k in 0..p {
        let ckk = block.block(k, k);
        for i in 0..n {
            for jj in 0..n {
                h[(k * n + i, k * n + jj)] = ckk[(i, jj)];
            }
        }
    }
    // equality rows: p per-part sums to 1, plus estimate sum to 1
    let mut eq = DMatrix::zeros(p + 1, nv);
    let mut rhs = DVector::zeros(p + 1);
    for k in 0..p {
        for i in 0..n {
            eq[(k, k * n + i)] = 1.0;
        }
        rhs[k] = 1.0;
    }
    let columns: Vec<Vec<f64>> = (0..p).map(|k| ds.column(k)).collect();
    for k in 0..p {
        for i in 0..n {
            eq[(p, k * n + i)] = columns[k][i];
        }
    }
    rhs[p] = 1.0;
    // inequality rows: estimated part k >= 0
    let ineq_row = |k: usize| {
        let mut g = DVector::zeros(nv);
        for i in 0..n {
            g[k * n + i] = columns[k][i];
        }
        g
    };

    // Only p inequality constraints exist, so enumerate their active
    // subsets and keep the best KKT-consistent candidate.
    let mut best: Option<CompositionalKrige> = None;
    for mask in 0..(1u32 << p) {
        let active: Vec<usize> = (0..p).filter(|&k| mask & (1 << k) != 0).collect();
        let n_eq = p + 1 + active.len();
        let dim = nv + n_eq;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut b = DVector::zeros(dim);
        for a in 0..nv {
            for c in 0..nv {
                kkt[(a, c)] = h[(a, c)];
            }
        }
        let fill_row = |row: usize, v: &DVector<f64>, kkt: &mut DMatrix<f64>| {
            for c in 0..nv {
                kkt[(nv + row, c)] = v[c];
                kkt[(c, nv + row)] = -v[c];
            }
        };
        for r in 0..=p {
            let v = DVector::from_fn(nv, |c, _| eq[(r, c)]);
            fill_row(r, &v, &mut kkt);
            b[nv + r] = rhs[r];
        }
        for (idx, &k) in active.iter().enumerate() {
            let g = ineq_row(k);
            fill_row(p + 1 + idx, &g, &mut kkt);
            b[nv + p + 1 + idx] = 0.0;
        }
        let Some(sol) = kkt.clone().lu().solve(&b) else {
            continue;
        };
        let v = DVector::from_fn(nv, |i, _| sol[i]);
        // primal feasibility of the inactive inequalities
        let estimates: Vec<f64> = (0..p).map(|k| ineq_row(k).dot(&v)).collect();
        if estimates.iter().any(|&e| e < -1e-9) {
            continue;
        }
        // dual feasibility of the active inequalities
        let duals_ok = active
            .iter()
            .enumerate()
            .all(|(idx, _)| sol[nv + p + 1 + idx] >= -1e-9);
        if !duals_ok {
            continue;
        }
        let objective = (v.transpose() * &h * &v)[(0, 0)];
        let candidate = CompositionalKrige {
            weights: (0..p)
                .map(|k| DVector::from_fn(n, |i, _| v[k * n + i]))
                .collect(),
            estimates,
            active_parts: active,
            objective,
        };
        let replace = match &best {
            None => true,
            Some(b) => candidate.objective < b.objective - 1e-14,
        };
        if replace {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::SolverFailure("no KKT-consistent active set found".into()))
}

/// Whether a cokriging solution has equal weights across variables: all
/// off-diagonal weight blocks vanish and the diagonal-block weight vectors
/// coincide, up to `tol`.
pub fn weights_equal_across_variables(sol: &KrigingSolution, tol: f64) -> (bool, f64) {
    if sol.p <= 1 {
        return (true, 0.0);
    }
    let lam = sol.lambda_matrix();
    let mut max_dev = 0.0_f64;
    for l in 0..sol.p {
        for k in 0..sol.p {
            for i in 0..sol.n {
                let v = lam[(k * sol.n + i, l)];
                if k != l {
                    max_dev = max_dev.max(v.abs());
                }
            }
        }
    }
    let first = sol.own_weights(0);
    for k in 1..sol.p {
        let w = sol.own_weights(k);
        for i in 0..sol.n {
            max_dev = max_dev.max((w[i] - first[i]).abs());
        }
    }
    (max_dev <= tol, max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{correlation_matrix, CorrelationFunction, LmcTerm};
    use crate::simplex::Composition;
    use approx::assert_abs_diff_eq;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        // deterministic random-ish SPD matrix
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| next());
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    /// Exhaustive active-set enumeration oracle: the optimum is the best
    /// nonnegative equality-restricted solution over all inactive subsets.
    fn brute_force_nonneg(c: &DMatrix<f64>) -> (DVector<f64>, f64) {
        let n = c.nrows();
        let mut best: Option<(DVector<f64>, f64)> = None;
        for mask in 1u32..(1 << n) {
            let inactive: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let Ok((lambda, _)) = reduced_solution(c, &inactive) else {
                continue;
            };
            if (0..n).any(|i| lambda[i] < -1e-12) {
                continue;
            }
            let obj = (lambda.transpose() * c * &lambda)[(0, 0)];
            if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                best = Some((lambda, obj));
            }
        }
        best.unwrap()
    }

    #[test]
    fn single_mean_trivial_cases() {
        let c = DMatrix::from_element(1, 1, 2.0);
        let (lam, _, _) = krige_mean_single(&c).unwrap();
        assert_eq!(lam.as_slice(), &[1.0]);
        for rho in [-0.9, 0.0, 0.5, 0.99] {
            let c = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
            let (lam, _, _) = krige_mean_single(&c).unwrap();
            assert_abs_diff_eq!(lam[0], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(lam[1], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_mean_matches_bordered_solve() {
        // clustered pair 0, 0.1 plus a distant site: solve the bordered
        // (n+1) system directly as an independent oracle
        let sites = SiteSet::line(&[0.0, 0.1, 3.0]).unwrap();
        let r = correlation_matrix(&CorrelationFunction::exponential(1.0), &sites).unwrap();
        let (lam, mu, _) = krige_mean_single(&r).unwrap();
        let n = 3;
        let mut bordered = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                bordered[(i, j)] = r[(i, j)];
            }
            bordered[(i, n)] = 1.0;
            bordered[(n, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let sol = bordered.lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(lam[i], sol[i], epsilon = 1e-12);
        }
        // the bordered system solves C lambda + nu 1 = 0, so nu = -mu
        assert_abs_diff_eq!(mu, -sol[n], epsilon = 1e-12);
        assert_abs_diff_eq!(lam.sum(), 1.0, epsilon = 1e-12);
        // the clustered pair shares what a lone site would carry
        assert!(lam[0] + lam[1] < 2.0 * lam[2] + 0.5);
    }

    #[test]
    fn cokrige_single_site_is_identity() {
        let model = CovModel::proportional(
            vec![vec![1.0, 0.4], vec![0.4, 1.0]],
            CorrelationFunction::exponential(1.0),
        )
        .unwrap();
        let sites = SiteSet::new(vec![vec![0.0]]).unwrap();
        let sol = cokrige_means(&model, &sites).unwrap();
        let lam = sol.lambda_matrix();
        for k in 0..2 {
            for l in 0..2 {
                let expect = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(lam[(k, l)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cokrige_proportional_two_sites() {
        let model = CovModel::proportional(
            vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            CorrelationFunction::exponential(1.0),
        )
        .unwrap();
        let sites = SiteSet::line(&[0.0, 1.0]).unwrap();
        let sol = cokrige_means(&model, &sites).unwrap();
        let (equal, dev) = weights_equal_across_variables(&sol, 1e-9);
        assert!(equal, "deviation {dev}");
        let w = sol.own_weights(0);
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-10);
        assert!(sol.unbiasedness_residual() <= 1e-9);
    }

    fn lmc_witness() -> (CovModel, SiteSet) {
        crate::fixtures::lmc_weight_divergence_witness()
    }

    #[test]
    fn cokrige_lmc_witness_weights_differ() {
        let (model, sites) = lmc_witness();
        let sol = cokrige_means(&model, &sites).unwrap();
        let (equal, dev) = weights_equal_across_variables(&sol, 1e-3);
        assert!(!equal);
        assert!(dev > 1e-3, "deviation {dev}");
        // independent dense solve of the full bordered system
        let block = build_block_matrix(&model, &sites).unwrap();
        let (n, p) = (block.n(), block.p());
        let j = j_matrix(n, p);
        let dim = n * p + p;
        let mut bordered = DMatrix::zeros(dim, dim);
        for a in 0..n * p {
            for b in 0..n * p {
                bordered[(a, b)] = block.matrix()[(a, b)];
            }
            for b in 0..p {
                bordered[(a, n * p + b)] = j[(a, b)];
                bordered[(n * p + b, a)] = j[(a, b)];
            }
        }
        let mut rhs = DMatrix::zeros(dim, p);
        for k in 0..p {
            rhs[(n * p + k, k)] = 1.0;
        }
        let dense = bordered.lu().solve(&rhs).unwrap();
        let lam = sol.lambda_matrix();
        for a in 0..n * p {
            for k in 0..p {
                assert_abs_diff_eq!(lam[(a, k)], dense[(a, k)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn cokrige_appendix_identities() {
        let (model, sites) = lmc_witness();
        let block = build_block_matrix(&model, &sites).unwrap();
        let sol = cokrige_from_block(&block).unwrap();
        let lam = sol.lambda_matrix();
        let j = j_matrix(sol.n, sol.p);
        let resid = (block.matrix() * &lam - &j * &sol.mu).abs().max();
        let scale = block.matrix().abs().max();
        assert!(resid <= 1e-8 * scale);
        assert!(sol.unbiasedness_residual() <= 1e-9);
        let jtcij = j.transpose() * cholesky_solve(block.matrix(), &j).unwrap();
        let mu_oracle = jtcij.lu().solve(&DMatrix::identity(sol.p, sol.p)).unwrap();
        let mu_dev = (&sol.mu - &mu_oracle).abs().max();
        assert!(mu_dev <= 1e-8 * sol.mu.abs().max());
        // mu symmetric positive definite
        assert!((&sol.mu - sol.mu.transpose()).abs().max() <= 1e-10);
        assert!(sol.mu.clone().cholesky().is_some());
    }

    #[test]
    fn nonneg_identity_covariance() {
        let c = DMatrix::<f64>::identity(4, 4);
        let sol = nonneg_krige_mean(&c).unwrap();
        let lam = sol.own_weights(0);
        for i in 0..4 {
            assert_abs_diff_eq!(lam[i], 0.25, epsilon = 1e-12);
        }
        assert!(sol.active_set.as_ref().unwrap().is_empty());
        assert!(kkt_residuals(&c, &sol).max() <= 1e-10);
    }

    #[test]
    fn nonneg_matches_unconstrained_when_feasible() {
        let sites = SiteSet::line(&[0.0, 1.0, 2.0]).unwrap();
        let r = correlation_matrix(&CorrelationFunction::exponential(1.0), &sites).unwrap();
        let (unc, _, _) = krige_mean_single(&r).unwrap();
        assert!((0..3).all(|i| unc[i] >= 0.0));
        let sol = nonneg_krige_mean(&r).unwrap();
        let lam = sol.own_weights(0);
        for i in 0..3 {
            assert_eq!(lam[i], unc[i]);
        }
    }

    #[test]
    fn nonneg_clips_negative_weight_and_matches_enumeration() {
        let (sites, rho) = crate::fixtures::negative_weight_triple();
        let r = correlation_matrix(&rho, &sites).unwrap();
        let (unc, _, _) = krige_mean_single(&r).unwrap();
        assert!((0..3).any(|i| unc[i] < -1e-3), "fixture lost its negative weight");
        let sol = nonneg_krige_mean(&r).unwrap();
        let lam = sol.own_weights(0);
        let (oracle, oracle_obj) = brute_force_nonneg(&r);
        for i in 0..3 {
            assert_abs_diff_eq!(lam[i], oracle[i], epsilon = 1e-10);
        }
        let obj = (lam.transpose() * &r * &lam)[(0, 0)];
        assert_abs_diff_eq!(obj, oracle_obj, epsilon = 1e-12);
        assert!(kkt_residuals(&r, &sol).max() <= 1e-8);
        // the zeroed weights solve the reduced system on the inactive set
        let active = sol.active_set.as_ref().unwrap();
        assert!(!active.is_empty());
        let inactive: Vec<usize> = (0..3).filter(|i| !active.contains(i)).collect();
        let (red, _) = reduced_solution(&r, &inactive).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(lam[i], red[i], epsilon = 1e-12);
        }
        // constrained objective exceeds the unconstrained one
        let unc_obj = (unc.transpose() * &r * &unc)[(0, 0)];
        assert!(obj >= unc_obj - 1e-12);
    }

    #[test]
    fn nonneg_random_instances_match_enumeration() {
        for seed in 0..40 {
            let n = 2 + (seed as usize % 7);
            let c = spd(n, seed);
            let sol = nonneg_krige_mean(&c).unwrap();
            let lam = sol.own_weights(0);
            let (_, oracle_obj) = brute_force_nonneg(&c);
            let obj = (lam.transpose() * &c * &lam)[(0, 0)];
            assert_abs_diff_eq!(obj, oracle_obj, epsilon = 1e-10);
            assert!(kkt_residuals(&c, &sol).max() <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn nonneg_scale_invariant_argmin() {
        let c = spd(5, 11);
        let base = nonneg_krige_mean(&c).unwrap().own_weights(0);
        for scale in [0.1, 10.0] {
            let lam = nonneg_krige_mean(&(&c * scale)).unwrap().own_weights(0);
            for i in 0..5 {
                assert_abs_diff_eq!(lam[i], base[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn nonneg_cokrige_proportional_equals_single() {
        let model = CovModel::proportional(
            vec![vec![1.0, 0.3], vec![0.3, 0.8]],
            CorrelationFunction::gaussian(1.0),
        )
        .unwrap();
        let sites = SiteSet::line(&[0.0, 0.1, 1.5]).unwrap();
        let sol = nonneg_cokrige_means(&model, &sites).unwrap();
        let r = correlation_matrix(&CorrelationFunction::gaussian(1.0), &sites).unwrap();
        let single = nonneg_krige_mean(&r).unwrap();
        let (a, b) = (sol.own_weights(0), single.own_weights(0));
        for i in 0..3 {
            assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn nonneg_cokrige_two_exchangeable_sites() {
        let model = CovModel::lmc(vec![
            LmcTerm {
                sigma: vec![vec![1.0, 0.0], vec![0.0, 0.1]],
                rho: CorrelationFunction::exponential(1.0),
            },
            LmcTerm {
                sigma: vec![vec![0.1, 0.0], vec![0.0, 1.0]],
                rho: CorrelationFunction::exponential(5.0),
            },
        ])
        .unwrap();
        let sites = SiteSet::line(&[0.0, 1.0]).unwrap();
        let sol = nonneg_cokrige_means(&model, &sites).unwrap();
        let lam = sol.own_weights(0);
        assert_abs_diff_eq!(lam[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(lam[1], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn walvoort_proportional_feasible_data_reduces_to_shared_weights() {
        let rho = CorrelationFunction::exponential(1.0);
        let model =
            CovModel::proportional(vec![vec![1.0, 0.4], vec![0.4, 1.0]], rho.clone()).unwrap();
        let sites = SiteSet::line(&[0.0, 1.0, 2.5]).unwrap();
        let rows = vec![
            Composition::new(vec![0.3, 0.7]).unwrap(),
            Composition::new(vec![0.5, 0.5]).unwrap(),
            Composition::new(vec![0.4, 0.6]).unwrap(),
        ];
        let ds = CompositionalDataset::new(sites.clone(), rows).unwrap();
        let ck = walvoort_compositional_krige(&model, &sites, &ds).unwrap();
        let r = correlation_matrix(&rho, &sites).unwrap();
        let (shared, _, _) = krige_mean_single(&r).unwrap();
        for k in 0..2 {
            for i in 0..3 {
                assert_abs_diff_eq!(ck.weights[k][i], shared[i], epsilon = 1e-8);
            }
        }
        assert_abs_diff_eq!(ck.estimates.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn walvoort_single_site() {
        let model = CovModel::proportional(
            vec![vec![1.0, 0.2], vec![0.2, 1.0]],
            CorrelationFunction::exponential(1.0),
        )
        .unwrap();
        let sites = SiteSet::new(vec![vec![0.0]]).unwrap();
        let rows = vec![Composition::new(vec![0.3, 0.7]).unwrap()];
        let ds = CompositionalDataset::new(sites.clone(), rows).unwrap();
        let ck = walvoort_compositional_krige(&model, &sites, &ds).unwrap();
        for k in 0..2 {
            assert_abs_diff_eq!(ck.weights[k][0], 1.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(ck.estimates[0], 0.3, epsilon = 1e-10);
        assert_abs_diff_eq!(ck.estimates[1], 0.7, epsilon = 1e-10);
    }

    #[test]
    fn walvoort_weights_depend_on_data() {
        let (model, sites) = lmc_witness();
        let rows_a = vec![
            Composition::new(vec![0.3, 0.7]).unwrap(),
            Composition::new(vec![0.5, 0.5]).unwrap(),
            Composition::new(vec![0.4, 0.6]).unwrap(),
        ];
        let mut rows_b = rows_a.clone();
        rows_b[1] = Composition::new(vec![0.7, 0.3]).unwrap();
        let ds_a = CompositionalDataset::new(sites.clone(), rows_a).unwrap();
        let ds_b = CompositionalDataset::new(sites.clone(), rows_b).unwrap();
        let ck_a = walvoort_compositional_krige(&model, &sites, &ds_a).unwrap();
        let ck_b = walvoort_compositional_krige(&model, &sites, &ds_b).unwrap();
        let dev = (0..3)
            .map(|i| (ck_a.weights[0][i] - ck_b.weights[0][i]).abs())
            .fold(0.0_f64, f64::max);
        assert!(dev > 1e-6, "part-1 weights did not move: {dev}");
        // while the shared cokriging weights ignore the data entirely
        let sol = cokrige_means(&model, &sites).unwrap();
        assert_eq!(sol.lambda_matrix(), cokrige_means(&model, &sites).unwrap().lambda_matrix());
    }
}
