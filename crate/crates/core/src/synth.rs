//! Synthetic Gaussian graphical models on random geometric graphs, sampling,
//! heavy-tailed contamination, and population-level diagnostics.
//!
//! Nodes sit uniformly in the unit square. Each pair at distance `d` is joined
//! with probability `φ(d/√p)` ([`Kernel::Text`]) or `φ(d·√p/s)`
//! ([`Kernel::Local`]), then edges are pruned until every degree is at most 4.
//! The precision matrix has unit diagonal and a constant off-diagonal entry on
//! edges; the covariance is its inverse rescaled to unit diagonal.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRule, EdgeSet};
use crate::numeric::{normal_pdf, DataMatrix, SeedStream, SymMatrix};

pub const MAX_DEGREE: usize = 4;
pub const DEFAULT_OFFDIAG: f64 = 0.245;

/// Edge inclusion probability as a function of distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum Kernel {
    /// `φ(d/√p)`.
    Text,
    /// `φ(d·√p/scale)`.
    Local { scale: f64 },
}

impl Kernel {
    pub fn local() -> Self {
        Kernel::Local { scale: 1.0 }
    }

    pub fn probability(&self, distance: f64, p: usize) -> f64 {
        let root = (p as f64).sqrt();
        match *self {
            Kernel::Text => normal_pdf(distance / root),
            Kernel::Local { scale } => normal_pdf(distance * root / scale),
        }
    }
}

/// How edges are removed while some node exceeds the degree cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pruning {
    /// Uniformly among edges incident to a node above the cap.
    Uniform,
    /// An edge of a highest-degree node, to one of its highest-degree neighbors (ties uniform).
    MaxDegree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueGraph {
    pub positions: Vec<[f64; 2]>,
    pub edges: EdgeSet,
    pub max_degree: usize,
    /// Edge count before degree pruning.
    pub raw_edge_count: usize,
}

impl TrueGraph {
    pub fn p(&self) -> usize {
        self.positions.len()
    }
}

/// Draws positions and edges; deterministic in `(p, seed, kernel, pruning)`.
pub fn generate_geometric_graph(p: usize, seed: SeedStream, kernel: Kernel, pruning: Pruning) -> Result<TrueGraph> {
    if p < 1 {
        return Err(Error::Domain("graph needs at least one node".into()));
    }
    if let Kernel::Local { scale } = kernel {
        if !(scale > 0.0) {
            return Err(Error::Domain(format!("kernel scale must be positive, got {scale}")));
        }
    }
    let mut rng = seed.derive("positions", 0).rng();
    let positions: Vec<[f64; 2]> = (0..p).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();

    let mut rng = seed.derive("edges", 0).rng();
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let d = (positions[i][0] - positions[j][0]).hypot(positions[i][1] - positions[j][1]);
            if rng.random::<f64>() < kernel.probability(d, p) {
                edges.push((i, j));
            }
        }
    }
    let raw_edge_count = edges.len();
    let mut rng = seed.derive("prune", 0).rng();
    let kept = match pruning {
        Pruning::Uniform => prune_uniform(p, edges, &mut rng),
        Pruning::MaxDegree => prune_max_degree(p, &edges, &mut rng),
    };
    Ok(TrueGraph {
        positions,
        edges: EdgeSet::new(p, kept, EdgeRule::Truth)?,
        max_degree: MAX_DEGREE,
        raw_edge_count,
    })
}

fn degrees(p: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut deg = vec![0; p];
    for &(a, b) in edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    deg
}

/// Removes a uniformly chosen edge incident to an over-cap node until none remain.
///
/// Degrees only decrease, so an edge found with two endpoints within the cap can
/// never become removable again; dropping it from the candidate pool keeps each
/// draw uniform over the currently removable edges.
fn prune_uniform(p: usize, edges: Vec<(usize, usize)>, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut deg = degrees(p, &edges);
    let mut alive = vec![true; edges.len()];
    let mut pool: Vec<usize> = (0..edges.len()).collect();
    while !pool.is_empty() {
        let slot = rng.random_range(0..pool.len());
        let e = pool.swap_remove(slot);
        let (a, b) = edges[e];
        if deg[a] > MAX_DEGREE || deg[b] > MAX_DEGREE {
            alive[e] = false;
            deg[a] -= 1;
            deg[b] -= 1;
        }
    }
    edges.into_iter().zip(alive).filter_map(|(e, keep)| keep.then_some(e)).collect()
}

fn prune_max_degree(p: usize, edges: &[(usize, usize)], rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); p];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj.iter_mut().for_each(|v| v.sort_unstable());
    loop {
        let top = adj.iter().map(Vec::len).max().unwrap_or(0);
        if top <= MAX_DEGREE {
            break;
        }
        let hubs: Vec<usize> = (0..p).filter(|&i| adj[i].len() == top).collect();
        let a = hubs[rng.random_range(0..hubs.len())];
        let best = adj[a].iter().map(|&b| adj[b].len()).max().unwrap_or(0);
        let partners: Vec<usize> = adj[a].iter().copied().filter(|&b| adj[b].len() == best).collect();
        let b = partners[rng.random_range(0..partners.len())];
        adj[a].retain(|&x| x != b);
        adj[b].retain(|&x| x != a);
    }
    let mut kept = Vec::new();
    for (a, nbrs) in adj.iter().enumerate() {
        kept.extend(nbrs.iter().filter(|&&b| a < b).map(|&b| (a, b)));
    }
    kept
}

/// Unit-diagonal precision with `offdiag` on every edge.
pub fn build_precision(graph: &EdgeSet, offdiag: f64) -> Result<SymMatrix> {
    let mut k = SymMatrix::identity(graph.p());
    for &(a, b) in graph.edges() {
        k.set(a, b, offdiag);
    }
    let max_degree = graph.degrees().into_iter().max().unwrap_or(0);
    if offdiag.abs() * max_degree as f64 >= 1.0 {
        // Not diagonally dominant; accept only if the factorization succeeds.
        k.cholesky()?;
    }
    Ok(k)
}

/// `Σ = D^{-1/2} K⁻¹ D^{-1/2}` with `D = diag(K⁻¹)`.
pub fn covariance_from_precision(k: &SymMatrix) -> Result<SymMatrix> {
    let inv = k.invert_spd()?;
    let scale: Vec<f64> = inv.diagonal().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut sigma = inv.scaled(&scale);
    for i in 0..sigma.dim() {
        sigma.set(i, i, 1.0);
    }
    Ok(sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GgmModel {
    pub graph: TrueGraph,
    /// Unit-diagonal precision before rescaling.
    pub precision: SymMatrix,
    /// Unit-diagonal covariance.
    pub covariance: SymMatrix,
}

impl GgmModel {
    pub fn from_graph(graph: TrueGraph, offdiag: f64) -> Result<Self> {
        let precision = build_precision(&graph.edges, offdiag)?;
        let covariance = covariance_from_precision(&precision)?;
        Ok(Self {
            graph,
            precision,
            covariance,
        })
    }

    pub fn generate(p: usize, seed: SeedStream, kernel: Kernel, pruning: Pruning) -> Result<Self> {
        Self::from_graph(generate_geometric_graph(p, seed, kernel, pruning)?, DEFAULT_OFFDIAG)
    }

    pub fn p(&self) -> usize {
        self.covariance.dim()
    }

    pub fn truth(&self) -> &EdgeSet {
        &self.graph.edges
    }

    /// `Σ⁻¹` of the rescaled covariance, `D^{1/2} K D^{1/2}`.
    pub fn covariance_precision(&self) -> Result<SymMatrix> {
        let d = self.precision.invert_spd()?.diagonal();
        let scale: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
        Ok(self.precision.scaled(&scale))
    }
}

/// Rows drawn i.i.d. from `N(0, Σ)` as `L z` with `Σ = L Lᵀ`.
pub fn sample_gaussian(sigma: &SymMatrix, n: usize, seed: SeedStream) -> Result<DataMatrix> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
    }
    let l = sigma.cholesky()?;
    let p = sigma.dim();
    let mut rng = seed.derive("gaussian", 0).rng();
    let mut values = vec![0.0; n * p];
    let mut z = vec![0.0; p];
    for i in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for (j, x) in l.mul_vec(&z).into_iter().enumerate() {
            values[j * n + i] = x;
        }
    }
    DataMatrix::from_columns(n, p, values)
}

/// Student-t draw with 2 degrees of freedom: `N / √(χ²₂/2)`, where `χ²₂/2 ~ Exp(1)`.
pub fn student_t2(rng: &mut impl Rng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let e: f64 = rng.sample(Exp1);
    z / e.sqrt()
}

/// Adds `scale · Z` entrywise with `Z` i.i.d. t₂. `scale == 0` returns the data unchanged.
pub fn contaminate_t2(data: &DataMatrix, scale: f64, seed: SeedStream) -> DataMatrix {
    if scale == 0.0 {
        return data.clone();
    }
    let mut rng = seed.derive("t2", 0).rng();
    let noise: Vec<f64> = (0..data.values().len()).map(|_| scale * student_t2(&mut rng)).collect();
    data.perturbed(&noise)
}

/// Population regression coefficients `θ^{a,A}` solving `Σ_AA θ = Σ_Aa`, zero outside `A`.
pub fn population_coefficients(sigma: &SymMatrix, a: usize, allowed: &[usize]) -> Result<Vec<f64>> {
    let p = sigma.dim();
    if a >= p || allowed.iter().any(|&b| b >= p || b == a) {
        return Err(Error::Domain("predictor set must exclude the target and lie within 0..p".into()));
    }
    let mut theta = vec![0.0; p];
    if allowed.is_empty() {
        return Ok(theta);
    }
    let rhs: Vec<f64> = allowed.iter().map(|&b| sigma.get(b, a)).collect();
    let solution = sigma.submatrix(allowed).solve_spd(&rhs)?;
    for (&b, v) in allowed.iter().zip(solution) {
        theta[b] = v;
    }
    Ok(theta)
}

/// `π_ab = −K_ab / √(K_aa K_bb)`.
pub fn partial_correlation(k: &SymMatrix, a: usize, b: usize) -> f64 {
    -k.get(a, b) / (k.get(a, a) * k.get(b, b)).sqrt()
}

/// Nonzero off-diagonal pattern of row `a` of a precision matrix.
pub fn true_neighbors(k: &SymMatrix, a: usize) -> Vec<usize> {
    (0..k.dim()).filter(|&b| b != a && k.get(a, b) != 0.0).collect()
}

/// `S_a(b) = Σ_{k ∈ ne_a} sign(θ_k^{a,ne_a}) θ_k^{b,ne_a}` with `ne_a` read off `k`.
pub fn neighborhood_stability(sigma: &SymMatrix, k: &SymMatrix, a: usize, b: usize) -> Result<f64> {
    if a == b {
        return Err(Error::Domain("stability needs two distinct nodes".into()));
    }
    let ne = true_neighbors(k, a);
    if ne.is_empty() {
        return Ok(0.0);
    }
    let theta_a = population_coefficients(sigma, a, &ne)?;
    let theta_b = if ne.contains(&b) {
        let mut e = vec![0.0; sigma.dim()];
        e[b] = 1.0;
        e
    } else {
        population_coefficients(sigma, b, &ne)?
    };
    Ok(ne
        .iter()
        .map(|&j| {
            let s = if theta_a[j] > 0.0 {
                1.0
            } else if theta_a[j] < 0.0 {
                -1.0
            } else {
                0.0
            };
            s * theta_b[j]
        })
        .sum())
}

/// Population quantities for one node pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDiagnostics {
    pub a: usize,
    pub b: usize,
    /// `θ^{a, ne_a}`.
    pub theta: Vec<f64>,
    pub partial_corr: f64,
    pub stability: f64,
}

pub fn diagnostics(model: &GgmModel, a: usize, b: usize) -> Result<PopulationDiagnostics> {
    let ne = true_neighbors(&model.precision, a);
    Ok(PopulationDiagnostics {
        a,
        b,
        theta: population_coefficients(&model.covariance, a, &ne)?,
        partial_corr: partial_correlation(&model.precision, a, b),
        stability: neighborhood_stability(&model.covariance, &model.precision, a, b)?,
    })
}
