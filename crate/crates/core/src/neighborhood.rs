//! Per-node neighborhood estimation and penalty selection.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{self, Design, LassoProblem, SolverOptions};
use crate::numeric::{gaussian_tail_quantile, SeedStream};
use crate::parallel;

/// How the penalty for each node is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PenaltyRule {
    Fixed { lambda: f64 },
    /// `λ(α) = 2σ̂_a/√n · Φ̃⁻¹(α/(2p²))`, recomputed for every node.
    Alpha { alpha: f64 },
    Cv(CvConfig),
}

/// Cross-validation protocol: seeded shuffle, contiguous folds, logarithmic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub grid_points: usize,
    /// Grid runs from `lambda_max` down to `lambda_max / grid_ratio`.
    pub grid_ratio: f64,
    pub seed: u64,
}

impl CvConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            folds: 10,
            grid_points: 50,
            grid_ratio: 1000.0,
            seed,
        }
    }
}

/// Provenance of a penalty value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PenaltySource {
    Fixed,
    Alpha { alpha: f64 },
    Cv { folds: usize, grid: Vec<f64>, cv_error: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyValue {
    pub lambda: f64,
    /// `σ̂_a` used by the level rule (1 for standardized data).
    pub sigma_hat: f64,
    /// `Φ̃⁻¹(α/(2p²))` for the level rule.
    pub tail_quantile: Option<f64>,
    pub source: PenaltySource,
}

impl PenaltyValue {
    pub fn fixed(lambda: f64) -> Self {
        Self {
            lambda,
            sigma_hat: 1.0,
            tail_quantile: None,
            source: PenaltySource::Fixed,
        }
    }
}

/// Estimated neighborhood of one node: the active set of its Lasso fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSet {
    pub node: usize,
    /// Ascending.
    pub members: Vec<usize>,
    /// `±1` per member.
    pub signs: Vec<i8>,
    pub penalty: PenaltyValue,
    pub kkt_violation: f64,
}

impl NeighborhoodSet {
    pub fn contains(&self, b: usize) -> bool {
        self.members.binary_search(&b).is_ok()
    }

    pub fn empty(node: usize, penalty: PenaltyValue) -> Self {
        Self {
            node,
            members: Vec::new(),
            signs: Vec::new(),
            penalty,
            kkt_violation: 0.0,
        }
    }
}

/// The level-based penalty `λ(α) = (2σ̂/√n) Φ̃⁻¹(α / (2p²))`.
pub fn lambda_alpha(n: usize, p: usize, sigma_hat: f64, alpha: f64) -> Result<PenaltyValue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n < 2 || p < 1 {
        return Err(Error::Domain(format!("need n >= 2 and p >= 1, got n = {n}, p = {p}")));
    }
    if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
        return Err(Error::Domain(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    let pf = p as f64;
    let z = gaussian_tail_quantile(alpha / (2.0 * pf * pf))?;
    Ok(PenaltyValue {
        lambda: 2.0 * sigma_hat / (n as f64).sqrt() * z,
        sigma_hat,
        tail_quantile: Some(z),
        source: PenaltySource::Alpha { alpha },
    })
}

fn others(p: usize, a: usize) -> Vec<usize> {
    (0..p).filter(|&b| b != a).collect()
}

pub fn estimate_neighborhood(design: &Design, a: usize, penalty: &PenaltyValue) -> Result<NeighborhoodSet> {
    let problem = LassoProblem::full(design, a, penalty.lambda)?;
    let fit = lasso::lasso_fit(&problem)?;
    Ok(NeighborhoodSet {
        node: a,
        signs: fit.signs(),
        members: fit.active,
        penalty: penalty.clone(),
        kkt_violation: fit.kkt_violation,
    })
}

/// Resolves `rule` into a concrete penalty for node `a`.
pub fn penalty_for_node(design: &Design, a: usize, rule: &PenaltyRule) -> Result<PenaltyValue> {
    match rule {
        PenaltyRule::Fixed { lambda } => Ok(PenaltyValue::fixed(*lambda)),
        PenaltyRule::Alpha { alpha } => {
            lambda_alpha(design.n(), design.p(), design.data().root_mean_square(a), *alpha)
        }
        PenaltyRule::Cv(cfg) => {
            let lmax = lasso::lambda_max(design, a, &others(design.p(), a));
            if lmax <= 0.0 {
                return Ok(PenaltyValue::fixed(0.0));
            }
            let grid = lasso::log_grid(lmax, cfg.grid_ratio, cfg.grid_points);
            let seed = SeedStream::new(cfg.seed).derive("cv", a as u64);
            cv_lambda(design, a, cfg.folds, &grid, seed)
        }
    }
}

/// One neighborhood per node, in node order; identical for any worker count.
pub fn estimate_all_neighborhoods(design: &Design, rule: &PenaltyRule, workers: usize) -> Result<Vec<NeighborhoodSet>> {
    let results = parallel::map_indexed(design.p(), workers, |a| {
        let penalty = penalty_for_node(design, a, rule)?;
        estimate_neighborhood(design, a, &penalty)
    })?;
    parallel::collect_indexed(results)
}

/// Neighborhoods of every node along a shared descending penalty grid.
///
/// Entry `[i][a]` is node `a`'s neighborhood at `grid[i]`.
pub fn neighborhood_paths(design: &Design, grid: &[f64], workers: usize) -> Result<Vec<Vec<NeighborhoodSet>>> {
    lasso::validate_grid(grid)?;
    let p = design.p();
    let per_node = parallel::map_indexed(p, workers, |a| -> Result<Vec<NeighborhoodSet>> {
        let base = LassoProblem::full(design, a, grid.first().copied().unwrap_or(0.0))?;
        let fits = lasso::path_from(&base, grid, &SolverOptions::default())?;
        Ok(fits
            .into_iter()
            .map(|fit| NeighborhoodSet {
                node: a,
                signs: fit.signs(),
                penalty: PenaltyValue::fixed(fit.lambda),
                kkt_violation: fit.kkt_violation,
                members: fit.active,
            })
            .collect())
    })?;
    let per_node = parallel::collect_indexed(per_node)?;
    Ok((0..grid.len())
        .map(|i| per_node.iter().map(|path| path[i].clone()).collect())
        .collect())
}

/// Cross-validated penalty for node `a`: the grid value with the smallest mean
/// held-out squared prediction error (mean over folds of per-fold means).
/// Ties go to the larger penalty.
pub fn cv_lambda(design: &Design, a: usize, folds: usize, grid: &[f64], seed: SeedStream) -> Result<PenaltyValue> {
    if folds < 2 {
        return Err(Error::Domain(format!("need at least 2 folds, got {folds}")));
    }
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Grid("cross-validation grid must be non-empty and positive".into()));
    }
    lasso::validate_grid(grid)?;
    let n = design.n();
    if n / folds < 2 {
        return Err(Error::FoldTooSmall { n, folds });
    }
    let p = design.p();
    let data = design.data();
    let allowed = others(p, a);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.rng());

    let mut cv_error = vec![0.0; grid.len()];
    for fold in 0..folds {
        let lo = fold * n / folds;
        let hi = (fold + 1) * n / folds;
        let test = &order[lo..hi];
        let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let train_design = Design::from_any(data.select_rows(&train)?);
        let mut warm: Option<Vec<f64>> = None;
        for (g, &lambda) in grid.iter().enumerate() {
            let theta = lasso::fit_coefficients(&train_design, a, &allowed, lambda, warm.as_deref())?;
            let sse: f64 = test
                .iter()
                .map(|&i| {
                    let pred: f64 = allowed.iter().map(|&b| theta[b] * data.get(i, b)).sum();
                    let r = data.get(i, a) - pred;
                    r * r
                })
                .sum();
            cv_error[g] += sse / test.len() as f64 / folds as f64;
            warm = Some(theta);
        }
    }

    let mut best = 0;
    for g in 1..grid.len() {
        if cv_error[g] < cv_error[best] {
            best = g;
        }
    }
    Ok(PenaltyValue {
        lambda: grid[best],
        sigma_hat: data.root_mean_square(a),
        tail_quantile: None,
        source: PenaltySource::Cv {
            folds,
            grid: grid.to_vec(),
            cv_error,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lambda_alpha_figure_scale() {
        let v = lambda_alpha(600, 1000, 1.0, 0.05).unwrap();
        // q = 2.5e-8; quantile frozen from a 50-digit bisection on erfc.
        assert_abs_diff_eq!(v.tail_quantile.unwrap(), 5.451_310_437_845_478_5, epsilon = 1e-9);
        assert_abs_diff_eq!(v.lambda, 0.445_097_633_407_646, epsilon = 1e-9);
        assert_abs_diff_eq!(v.lambda, 0.44513, epsilon = 1e-4);
        assert_eq!(v.lambda, 2.0 * v.sigma_hat / 600f64.sqrt() * v.tail_quantile.unwrap());
    }

    #[test]
    fn lambda_alpha_adjusted_level() {
        let v = lambda_alpha(600, 1000, 1.0, 0.064).unwrap();
        assert_abs_diff_eq!(v.lambda, 0.441_500_064_074_528, epsilon = 1e-9);
    }

    #[test]
    fn lambda_alpha_scaling() {
        let base = lambda_alpha(100, 50, 1.0, 0.05).unwrap().lambda;
        assert_abs_diff_eq!(lambda_alpha(100, 50, 2.0, 0.05).unwrap().lambda, 2.0 * base, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_alpha(400, 50, 1.0, 0.05).unwrap().lambda, 0.5 * base, epsilon = 1e-15);
    }

    #[test]
    fn lambda_alpha_domain() {
        assert!(lambda_alpha(100, 10, 1.0, 0.0).is_err());
        assert!(lambda_alpha(100, 10, 1.0, 1.0).is_err());
        assert!(lambda_alpha(1, 10, 1.0, 0.05).is_err());
        assert!(lambda_alpha(100, 0, 1.0, 0.05).is_err());
        assert!(lambda_alpha(100, 10, 0.0, 0.05).is_err());
    }

    #[test]
    fn lambda_alpha_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let l = lambda_alpha(100, 20, 1.0, i as f64 / 100.0).unwrap().lambda;
            assert!(l < prev);
            prev = l;
        }
        let l = |n, p| lambda_alpha(n, p, 1.0, 0.05).unwrap().lambda;
        assert!(l(100, 20) > l(101, 20));
        assert!(l(100, 21) > l(100, 20));
    }
}
