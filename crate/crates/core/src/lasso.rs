//! ℓ₁-penalized least squares for one target column:
//!
//! ```text
//! θ̂ = argmin_{θ : θ_a = 0, θ_k = 0 ∀ k ∉ A}  n⁻¹‖X_a − Xθ‖² + λ‖θ‖₁
//! ```
//!
//! Solved by cyclic coordinate descent in covariance form (the Gram matrix
//! `n⁻¹XᵀX` is shared by all targets). A returned fit always carries its
//! optimality certificate: with `G_b = −2n⁻¹⟨X_a − Xθ̂, X_b⟩`, a solution
//! satisfies `G_b = −sign(θ̂_b)λ` on the active set and `|G_b| ≤ λ` elsewhere.
//! [`kkt_residual`] recomputes that from the raw data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot, DataMatrix, SymMatrix};

/// Maximum KKT residual accepted for a returned fit.
pub const KKT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop sweeping once no coefficient moves by more than this.
    pub coefficient_tolerance: f64,
    pub kkt_tolerance: f64,
    pub max_sweeps: usize,
    /// Record the penalized objective after every sweep.
    pub record_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            coefficient_tolerance: 1e-10,
            kkt_tolerance: KKT_TOLERANCE,
            max_sweeps: 100_000,
            record_objective: false,
        }
    }
}

/// A data matrix together with its scaled Gram matrix `n⁻¹XᵀX` (dense, row-major).
#[derive(Debug, Clone)]
pub struct Design {
    data: DataMatrix,
    gram: Vec<f64>,
}

impl Design {
    /// Requires standardized data.
    pub fn new(data: DataMatrix) -> Result<Self> {
        if !data.is_standardized() {
            return Err(Error::Domain("lasso design requires standardized data".into()));
        }
        Ok(Self::from_any(data))
    }

    /// Standardizes `data` and builds the design.
    pub fn standardized(data: &DataMatrix) -> Result<Self> {
        Ok(Self::from_any(data.standardize()?))
    }

    /// No standardization requirement; used for cross-validation training folds.
    pub(crate) fn from_any(data: DataMatrix) -> Self {
        let p = data.p();
        let n = data.n() as f64;
        let mut gram = vec![0.0; p * p];
        for i in 0..p {
            let ci = data.column(i);
            for j in 0..=i {
                let v = dot(ci, data.column(j)) / n;
                gram[i * p + j] = v;
                gram[j * p + i] = v;
            }
        }
        Self { data, gram }
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    /// `n⁻¹⟨X_i, X_j⟩`.
    #[inline]
    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.p() + j]
    }

    fn gram_row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.gram[i * p..(i + 1) * p]
    }
}

/// One node's regression problem.
#[derive(Debug, Clone)]
pub struct LassoProblem<'a> {
    design: &'a Design,
    target: usize,
    allowed: Vec<usize>,
    lambda: f64,
}

impl<'a> LassoProblem<'a> {
    /// `allowed` is sorted and deduplicated; it must not contain `target`.
    pub fn new(design: &'a Design, target: usize, allowed: Vec<usize>, lambda: f64) -> Result<Self> {
        let problem = Self::unchecked(design, target, allowed, lambda)?;
        if !design.data().is_standardized() {
            return Err(Error::Domain("lasso problem requires standardized data".into()));
        }
        Ok(problem)
    }

    /// Regression of `target` on every other variable.
    pub fn full(design: &'a Design, target: usize, lambda: f64) -> Result<Self> {
        let allowed = (0..design.p()).filter(|&b| b != target).collect();
        Self::new(design, target, allowed, lambda)
    }

    pub(crate) fn unchecked(design: &'a Design, target: usize, mut allowed: Vec<usize>, lambda: f64) -> Result<Self> {
        let p = design.p();
        if target >= p {
            return Err(Error::Domain(format!("target {target} out of range for p = {p}")));
        }
        allowed.sort_unstable();
        allowed.dedup();
        if allowed.binary_search(&target).is_ok() {
            return Err(Error::Domain(format!("target {target} is among its own predictors")));
        }
        if allowed.last().is_some_and(|&b| b >= p) {
            return Err(Error::Domain(format!("predictor index out of range for p = {p}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("penalty must be finite and non-negative, got {lambda}")));
        }
        Ok(Self {
            design,
            target,
            allowed,
            lambda,
        })
    }

    pub fn design(&self) -> &'a Design {
        self.design
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn allowed(&self) -> &[usize] {
        &self.allowed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::unchecked(self.design, self.target, self.allowed.clone(), lambda)
    }
}

/// Solution of one [`LassoProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub target: usize,
    pub allowed: Vec<usize>,
    pub lambda: f64,
    /// Length `p`; zero at the target and outside `allowed`.
    pub coefficients: Vec<f64>,
    /// `G_b = −2n⁻¹⟨X_a − Xθ̂, X_b⟩` for every `b`.
    pub gradient: Vec<f64>,
    /// Indices with nonzero coefficient, ascending.
    pub active: Vec<usize>,
    pub kkt_violation: f64,
    pub objective: f64,
    pub sweeps: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective_trace: Option<Vec<f64>>,
}

impl LassoFit {
    pub fn signs(&self) -> Vec<i8> {
        self.active
            .iter()
            .map(|&b| if self.coefficients[b] > 0.0 { 1 } else { -1 })
            .collect()
    }
}

/// Smallest penalty at which the zero vector solves the problem: `max_{b∈A} |2n⁻¹⟨X_a, X_b⟩|`.
///
/// Returns 0 for an empty predictor set.
pub fn lambda_max(design: &Design, target: usize, allowed: &[usize]) -> f64 {
    allowed
        .iter()
        .map(|&b| (2.0 * design.gram(target, b)).abs())
        .fold(0.0, f64::max)
}

pub fn lasso_fit(problem: &LassoProblem) -> Result<LassoFit> {
    lasso_fit_with(problem, None, &SolverOptions::default())
}

/// Fits `problem`, optionally starting from `warm` (length `p`).
pub fn lasso_fit_with(problem: &LassoProblem, warm: Option<&[f64]>, opts: &SolverOptions) -> Result<LassoFit> {
    let design = problem.design;
    if problem.lambda == 0.0 && problem.allowed.len() >= design.n() {
        return Err(Error::NotUnique {
            allowed: problem.allowed.len(),
            n: design.n(),
        });
    }
    let continued;
    let warm = match warm {
        Some(w) => Some(w),
        None => {
            continued = continuation_start(problem, opts)?;
            continued.as_deref()
        }
    };
    let solved = coordinate_descent(design, problem.target, &problem.allowed, problem.lambda, warm, opts)?;
    Ok(certify(design.data(), problem, solved))
}

/// Cold starts below this fraction of `λ_max` are reached through a descending sequence.
const CONTINUATION_START: f64 = 0.1;
const CONTINUATION_FACTOR: f64 = 0.5;
const CONTINUATION_FLOOR: f64 = 1e-6;

/// Warm start for a small penalty, obtained by solving at halving penalties from `λ_max`.
///
/// Starting from zero at a small penalty makes the first sweep switch on nearly every
/// predictor, after which coordinate descent can take tens of thousands of sweeps.
fn continuation_start(problem: &LassoProblem, opts: &SolverOptions) -> Result<Option<Vec<f64>>> {
    let top = lambda_max(problem.design, problem.target, &problem.allowed);
    if !(problem.lambda < CONTINUATION_START * top) {
        return Ok(None);
    }
    let floor = problem.lambda.max(CONTINUATION_FLOOR * top);
    let quiet = SolverOptions {
        record_objective: false,
        ..*opts
    };
    let mut theta: Option<Vec<f64>> = None;
    let mut lambda = CONTINUATION_FACTOR * top;
    while lambda > floor {
        let solved = coordinate_descent(problem.design, problem.target, &problem.allowed, lambda, theta.as_deref(), &quiet)?;
        theta = Some(solved.theta);
        lambda *= CONTINUATION_FACTOR;
    }
    Ok(theta)
}

/// Fits a strictly descending grid of penalties, warm-starting each fit from the previous one.
pub fn lasso_path(design: &Design, target: usize, allowed: &[usize], grid: &[f64]) -> Result<Vec<LassoFit>> {
    validate_grid(grid)?;
    let base = LassoProblem::new(design, target, allowed.to_vec(), grid.first().copied().unwrap_or(0.0))?;
    path_from(&base, grid, &SolverOptions::default())
}

pub(crate) fn path_from(base: &LassoProblem, grid: &[f64], opts: &SolverOptions) -> Result<Vec<LassoFit>> {
    let mut fits = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in grid {
        let problem = base.with_lambda(lambda)?;
        let fit = lasso_fit_with(&problem, warm.as_deref(), opts)?;
        warm = Some(fit.coefficients.clone());
        fits.push(fit);
    }
    Ok(fits)
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if let Some(bad) = grid.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Grid(format!("penalty {bad} is not a finite non-negative number")));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Grid("penalties must be strictly descending".into()));
    }
    Ok(())
}

/// `n`-point logarithmic grid from `max` down to `max / ratio`, inclusive.
pub fn log_grid(max: f64, ratio: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![max];
    }
    let step = ratio.ln() / (points - 1) as f64;
    (0..points).map(|i| max * (-(i as f64) * step).exp()).collect()
}

/// Largest KKT residual of `fit` over its allowed set, with the gradient recomputed from `data`.
pub fn kkt_residual(data: &DataMatrix, fit: &LassoFit) -> f64 {
    let gradient = data_gradient(data, fit.target, &fit.coefficients);
    kkt_from_gradient(&fit.allowed, &fit.coefficients, &gradient, fit.lambda)
}

fn kkt_from_gradient(allowed: &[usize], theta: &[f64], gradient: &[f64], lambda: f64) -> f64 {
    allowed
        .iter()
        .map(|&b| {
            let g = gradient[b];
            if theta[b] > 0.0 {
                (g + lambda).abs()
            } else if theta[b] < 0.0 {
                (g - lambda).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn residual(data: &DataMatrix, target: usize, theta: &[f64]) -> Vec<f64> {
    let mut r = data.column(target).to_vec();
    for (k, &t) in theta.iter().enumerate() {
        if t != 0.0 {
            for (ri, x) in r.iter_mut().zip(data.column(k)) {
                *ri -= t * x;
            }
        }
    }
    r
}

fn data_gradient(data: &DataMatrix, target: usize, theta: &[f64]) -> Vec<f64> {
    let r = residual(data, target, theta);
    let n = data.n() as f64;
    (0..data.p()).map(|b| -2.0 * dot(&r, data.column(b)) / n).collect()
}

/// `n⁻¹‖X_a − Xθ‖² + λ‖θ‖₁` evaluated on the raw data.
pub fn objective(data: &DataMatrix, target: usize, theta: &[f64], lambda: f64) -> f64 {
    let r = residual(data, target, theta);
    dot(&r, &r) / data.n() as f64 + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
}

struct Solved {
    theta: Vec<f64>,
    sweeps: usize,
    trace: Option<Vec<f64>>,
}

fn certify(data: &DataMatrix, problem: &LassoProblem, solved: Solved) -> LassoFit {
    let Solved { theta, sweeps, trace } = solved;
    let gradient = data_gradient(data, problem.target, &theta);
    let kkt_violation = kkt_from_gradient(&problem.allowed, &theta, &gradient, problem.lambda);
    let active = problem.allowed.iter().copied().filter(|&b| theta[b] != 0.0).collect();
    let objective = objective(data, problem.target, &theta, problem.lambda);
    LassoFit {
        target: problem.target,
        allowed: problem.allowed.clone(),
        lambda: problem.lambda,
        coefficients: theta,
        gradient,
        active,
        kkt_violation,
        objective,
        sweeps,
        objective_trace: trace,
    }
}

#[inline]
fn soft_threshold(x: f64, level: f64) -> f64 {
    if x > level {
        x - level
    } else if x < -level {
        x + level
    } else {
        0.0
    }
}

struct CdState<'a> {
    design: &'a Design,
    target: usize,
    lambda: f64,
    theta: Vec<f64>,
    /// `q_b = Σ_k C_bk θ_k`, maintained for allowed `b`.
    fitted: Vec<f64>,
    allowed: &'a [usize],
}

impl CdState<'_> {
    /// One cyclic pass over `coords`; returns the largest coefficient change.
    fn sweep(&mut self, coords: &[usize]) -> f64 {
        let mut max_change: f64 = 0.0;
        for &b in coords {
            let cbb = self.design.gram(b, b);
            if cbb <= 0.0 {
                continue;
            }
            let old = self.theta[b];
            let partial = self.design.gram(self.target, b) - (self.fitted[b] - cbb * old);
            let new = soft_threshold(partial, 0.5 * self.lambda) / cbb;
            let delta = new - old;
            if delta != 0.0 {
                self.theta[b] = new;
                let row = self.design.gram_row(b);
                for &k in self.allowed {
                    self.fitted[k] += row[k] * delta;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }

    fn gram_kkt(&self) -> f64 {
        let gradient: Vec<f64> = (0..self.theta.len())
            .map(|b| -2.0 * (self.design.gram(self.target, b) - self.fitted[b]))
            .collect();
        kkt_from_gradient(self.allowed, &self.theta, &gradient, self.lambda)
    }

    fn objective(&self) -> f64 {
        let a = self.target;
        let mut value = self.design.gram(a, a);
        for &b in self.allowed {
            let t = self.theta[b];
            if t != 0.0 {
                value += -2.0 * t * self.design.gram(a, b) + t * self.fitted[b] + self.lambda * t.abs();
            }
        }
        value
    }

    fn active(&self) -> Vec<usize> {
        self.allowed.iter().copied().filter(|&b| self.theta[b] != 0.0).collect()
    }

    /// Moves toward the exact minimizer over the current active set with the current
    /// signs, stopping where the first coefficient reaches zero.
    ///
    /// On that segment the objective is the restricted quadratic, so it cannot rise;
    /// coordinate descent alone crawls when the active predictors are nearly collinear.
    fn polish(&mut self) {
        while self.polish_step() {}
    }

    /// One blocked step; true if a coefficient was dropped and another step may help.
    fn polish_step(&mut self) -> bool {
        let active = self.active();
        if active.is_empty() {
            return false;
        }
        let gram = SymMatrix::from_fn(active.len(), |i, j| self.design.gram(active[i], active[j]));
        let rhs: Vec<f64> = active
            .iter()
            .map(|&b| self.design.gram(self.target, b) - 0.5 * self.lambda * self.theta[b].signum())
            .collect();
        let Ok(solution) = gram.solve_spd(&rhs) else { return false };
        let mut step: f64 = 1.0;
        for (&b, &x) in active.iter().zip(&solution) {
            let t = self.theta[b];
            if x * t <= 0.0 {
                step = step.min(t / (t - x));
            }
        }
        let before = self.objective();
        let mut theta = self.theta.clone();
        for (&b, &x) in active.iter().zip(&solution) {
            let t = theta[b];
            let moved = t + step * (x - t);
            theta[b] = if moved * t <= 0.0 || (step < 1.0 && x * t <= 0.0 && t / (t - x) <= step) { 0.0 } else { moved };
        }
        let old_theta = self.theta.clone();
        let old_fitted = self.refit(theta);
        if self.objective() > before {
            self.fitted = old_fitted;
            self.theta = old_theta;
            return false;
        }
        step < 1.0
    }

    /// Installs `theta` with freshly computed fitted values; returns the previous ones.
    fn refit(&mut self, theta: Vec<f64>) -> Vec<f64> {
        let mut fitted = vec![0.0; theta.len()];
        for &k in self.allowed {
            let row = self.design.gram_row(k);
            fitted[k] = self.allowed.iter().map(|&j| row[j] * theta[j]).sum();
        }
        self.theta = theta;
        std::mem::replace(&mut self.fitted, fitted)
    }
}

/// Sweeps on an unchanged active set between attempts at an exact solve.
const POLISH_INTERVAL: usize = 10;

fn coordinate_descent(
    design: &Design,
    target: usize,
    allowed: &[usize],
    lambda: f64,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<Solved> {
    let p = design.p();
    let mut theta = vec![0.0; p];
    if let Some(w) = warm {
        for &b in allowed {
            theta[b] = w[b];
        }
    }
    let mut state = CdState {
        design,
        target,
        lambda,
        theta: Vec::new(),
        fitted: vec![0.0; p],
        allowed,
    };
    state.refit(theta);
    let mut trace = opts.record_objective.then(|| vec![state.objective()]);
    let mut sweeps = 0usize;
    let mut record = |state: &CdState, sweeps: &mut usize| -> Result<()> {
        *sweeps += 1;
        if let Some(t) = trace.as_mut() {
            t.push(state.objective());
        }
        if *sweeps >= opts.max_sweeps {
            return Err(Error::MaxIterations(*sweeps));
        }
        Ok(())
    };

    loop {
        let full_change = state.sweep(allowed);
        record(&state, &mut sweeps)?;
        if full_change > opts.coefficient_tolerance {
            // Iterate on the active set until it settles, then re-check everything.
            let active = state.active();
            for round in 1.. {
                let change = state.sweep(&active);
                if round % POLISH_INTERVAL == 0 {
                    state.polish();
                }
                record(&state, &mut sweeps)?;
                if change <= opts.coefficient_tolerance {
                    break;
                }
            }
            continue;
        }
        if state.gram_kkt() <= opts.kkt_tolerance {
            break;
        }
    }
    Ok(Solved {
        theta: state.theta,
        sweeps,
        trace,
    })
}

/// Coefficients of `target` regressed on `allowed` at penalty `lambda` using only Gram entries.
///
/// Zero-variance predictors are left at zero. Used where the data are not standardized
/// (cross-validation training folds).
pub(crate) fn fit_coefficients(design: &Design, target: usize, allowed: &[usize], lambda: f64, warm: Option<&[f64]>) -> Result<Vec<f64>> {
    Ok(coordinate_descent(design, target, allowed, lambda, warm, &SolverOptions::default())?.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Four observations whose two columns are orthonormal in sample, plus a target.
    fn orthonormal_design(c: f64) -> Design {
        // columns: target, x1, x2 with n⁻¹⟨x_i,x_j⟩ = δ_ij and n⁻¹⟨target, x1⟩ = c.
        let x1 = [1.0, -1.0, 1.0, -1.0];
        let x2 = [1.0, 1.0, -1.0, -1.0];
        let x3 = [1.0, -1.0, -1.0, 1.0];
        let s = (1.0 - c * c).sqrt();
        let target: Vec<f64> = (0..4).map(|i| c * x1[i] + s * x3[i]).collect();
        let mut values = target;
        values.extend_from_slice(&x1);
        values.extend_from_slice(&x2);
        let data = DataMatrix::from_columns(4, 3, values).unwrap();
        Design::new(data.standardize().unwrap()).unwrap()
    }

    #[test]
    fn soft_threshold_orthonormal() {
        let d = orthonormal_design(1.0);
        assert_abs_diff_eq!(d.gram(0, 1), 1.0, epsilon = 1e-15);
        let fit = lasso_fit(&LassoProblem::full(&d, 0, 0.4).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.coefficients[1], 0.8, epsilon = 1e-12);
        assert_eq!(fit.coefficients[2], 0.0);
        assert_eq!(fit.active, vec![1]);
        assert!(kkt_residual(d.data(), &fit) <= 1e-12);
    }

    #[test]
    fn lambda_max_examples() {
        let d = orthonormal_design(0.7);
        assert_abs_diff_eq!(lambda_max(&d, 0, &[1]), 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda_max(&d, 0, &[2]), 0.0, epsilon = 1e-15);
        assert_eq!(lambda_max(&d, 0, &[]), 0.0);
        let lm = lambda_max(&d, 0, &[1, 2]);
        let fit = lasso_fit(&LassoProblem::full(&d, 0, lm).unwrap()).unwrap();
        assert!(fit.active.is_empty());
        assert!(kkt_residual(d.data(), &fit) <= 1e-12);
    }

    #[test]
    fn problem_validation() {
        let d = orthonormal_design(0.5);
        assert!(LassoProblem::new(&d, 0, vec![0, 1], 0.1).is_err());
        assert!(LassoProblem::new(&d, 0, vec![3], 0.1).is_err());
        assert!(LassoProblem::new(&d, 0, vec![1], -1.0).is_err());
        let raw = DataMatrix::from_columns(3, 2, vec![1.0, 2.0, 4.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(Design::new(raw).is_err());
    }

    #[test]
    fn zero_penalty_needs_fewer_predictors_than_rows() {
        let cols: Vec<f64> = (0..3 * 4).map(|i| ((i * 7 + 3) % 11) as f64).collect();
        let d = Design::standardized(&DataMatrix::from_columns(3, 4, cols).unwrap()).unwrap();
        let err = lasso_fit(&LassoProblem::full(&d, 0, 0.0).unwrap()).unwrap_err();
        assert_eq!(err, Error::NotUnique { allowed: 3, n: 3 });
    }

    #[test]
    fn grid_validation() {
        let d = orthonormal_design(0.5);
        assert!(matches!(lasso_path(&d, 0, &[1, 2], &[0.3, 0.3]), Err(Error::Grid(_))));
        assert!(matches!(lasso_path(&d, 0, &[1, 2], &[0.3, -0.1]), Err(Error::Grid(_))));
        let lm = lambda_max(&d, 0, &[1, 2]);
        let path = lasso_path(&d, 0, &[1, 2], &[lm]).unwrap();
        assert_eq!(path.len(), 1);
        assert!(path[0].active.is_empty());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(2.0, 1000.0, 50);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 2.0);
        assert_abs_diff_eq!(g[49], 0.002, epsilon = 1e-15);
        assert!(validate_grid(&g).is_ok());
        assert_eq!(log_grid(3.0, 10.0, 1), vec![3.0]);
    }
}
