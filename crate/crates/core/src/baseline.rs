//! Baselines: greedy forward selection of Gaussian graphical models fitted by
//! iterative proportional fitting (IPF), and random edge ordering.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRule, EdgeSet};
use crate::numeric::{SeedStream, SymMatrix};

/// Largest graph accepted by [`forward_select`].
pub const MAX_FS_NODES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpfOptions {
    /// Stop once every clique marginal of the fit is within this of the sample covariance.
    pub tolerance: f64,
    pub max_cycles: usize,
}

impl Default for IpfOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_cycles: 10_000,
        }
    }
}

/// Gaussian maximum-likelihood fit constrained to a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub graph: EdgeSet,
    pub fitted_cov: SymMatrix,
    pub fitted_precision: SymMatrix,
    /// Per-observation log-likelihood `½(log det K − tr(SK) − p log 2π)`.
    pub loglik: f64,
    pub ipf_iterations: usize,
    /// Log-likelihood after each IPF cycle (starting value first).
    pub loglik_trace: Vec<f64>,
}

/// Per-observation Gaussian log-likelihood of precision `k` for sample covariance `s`.
pub fn gaussian_loglik(s: &SymMatrix, k: &SymMatrix) -> Result<f64> {
    let p = s.dim();
    let mut trace = 0.0;
    for i in 0..p {
        for j in 0..p {
            trace += s.get(i, j) * k.get(j, i);
        }
    }
    Ok(0.5 * (k.log_det()? - trace - p as f64 * (2.0 * std::f64::consts::PI).ln()))
}

/// Maximal cliques (Bron–Kerbosch with pivoting), each sorted, isolated nodes included.
pub fn maximal_cliques(graph: &EdgeSet) -> Vec<Vec<usize>> {
    let adj = graph.adjacency();
    let mut out = Vec::new();
    let all: Vec<usize> = (0..graph.p()).collect();
    bron_kerbosch(&adj, &mut Vec::new(), all, Vec::new(), &mut out);
    out.iter_mut().for_each(|c| c.sort_unstable());
    out.sort();
    out
}

fn bron_kerbosch(adj: &[Vec<usize>], r: &mut Vec<usize>, p: Vec<usize>, mut x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if p.is_empty() && x.is_empty() {
        out.push(r.clone());
        return;
    }
    let pivot = p
        .iter()
        .chain(&x)
        .copied()
        .max_by_key(|&u| p.iter().filter(|v| adj[u].binary_search(v).is_ok()).count())
        .expect("p or x is non-empty");
    let candidates: Vec<usize> = p.iter().copied().filter(|v| adj[pivot].binary_search(v).is_err()).collect();
    let mut p = p;
    for v in candidates {
        let nv = &adj[v];
        let p_next = p.iter().copied().filter(|u| nv.binary_search(u).is_ok()).collect();
        let x_next = x.iter().copied().filter(|u| nv.binary_search(u).is_ok()).collect();
        r.push(v);
        bron_kerbosch(adj, r, p_next, x_next, out);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}

fn small_inverse(m: &SymMatrix, what: &str) -> Result<SymMatrix> {
    m.invert_spd()
        .map_err(|_| Error::MleDoesNotExist(format!("singular {what} on clique")))
}

/// IPF fit of `sample_cov` to `graph`, starting from the diagonal model.
pub fn ipf_fit(sample_cov: &SymMatrix, graph: &EdgeSet, opts: &IpfOptions) -> Result<MleFit> {
    let diag = sample_cov.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::MleDoesNotExist(format!("variable {i} has zero sample variance")));
    }
    let k0 = SymMatrix::from_diagonal(&diag.iter().map(|d| 1.0 / d).collect::<Vec<_>>());
    let w0 = SymMatrix::from_diagonal(&diag);
    ipf_from(sample_cov, graph, k0, w0, opts)
}

/// IPF from a warm start `(k, w = k⁻¹)` whose zero pattern lies inside `graph`.
fn ipf_from(s: &SymMatrix, graph: &EdgeSet, mut k: SymMatrix, mut w: SymMatrix, opts: &IpfOptions) -> Result<MleFit> {
    if s.dim() != graph.p() {
        return Err(Error::InconsistentP {
            expected: s.dim(),
            got: graph.p(),
        });
    }
    let p = s.dim();
    let cliques = maximal_cliques(graph);
    let clique_inverses = cliques
        .iter()
        .map(|c| small_inverse(&s.submatrix(c), "sample covariance"))
        .collect::<Result<Vec<_>>>()?;

    let mut trace = vec![gaussian_loglik(s, &k)?];
    let mut cycles = 0;
    loop {
        let mut worst: f64 = 0.0;
        for (c, s_inv) in cliques.iter().zip(&clique_inverses) {
            let m = c.len();
            let w_cc = w.submatrix(c);
            let gap = (0..m)
                .flat_map(|i| (0..=i).map(move |j| (i, j)))
                .map(|(i, j)| (s.get(c[i], c[j]) - w_cc.get(i, j)).abs())
                .fold(0.0, f64::max);
            worst = worst.max(gap);
            if gap == 0.0 {
                continue;
            }
            let w_inv = small_inverse(&w_cc, "fitted covariance")?;
            // K_CC += S_CC⁻¹ − W_CC⁻¹
            for i in 0..m {
                for j in 0..=i {
                    let v = k.get(c[i], c[j]) + s_inv.get(i, j) - w_inv.get(i, j);
                    k.set(c[i], c[j], v);
                }
            }
            // W += W_{·C} W_CC⁻¹ (S_CC − W_CC) W_CC⁻¹ W_{C·}
            let delta = SymMatrix::from_fn(m, |i, j| s.get(c[i], c[j]) - w_cc.get(i, j));
            let core = sandwich(&w_inv, &delta);
            let cols: Vec<Vec<f64>> = c.iter().map(|&ci| (0..p).map(|r| w.get(r, ci)).collect()).collect();
            // u_r = core · (W_{r,C})ᵀ
            let mut proj = vec![vec![0.0; m]; p];
            for (r, pr) in proj.iter_mut().enumerate() {
                for i in 0..m {
                    pr[i] = (0..m).map(|j| core.get(i, j) * cols[j][r]).sum();
                }
            }
            for r in 0..p {
                for t in 0..=r {
                    let add: f64 = (0..m).map(|i| cols[i][r] * proj[t][i]).sum();
                    if add != 0.0 {
                        w.set(r, t, w.get(r, t) + add);
                    }
                }
            }
        }
        cycles += 1;
        trace.push(gaussian_loglik(s, &k)?);
        if worst <= opts.tolerance {
            break;
        }
        if cycles >= opts.max_cycles {
            return Err(Error::MaxIterations(cycles));
        }
    }
    let fitted_cov = k.invert_spd().map_err(|_| Error::MleDoesNotExist("fitted precision lost definiteness".into()))?;
    Ok(MleFit {
        graph: graph.clone(),
        loglik: *trace.last().expect("trace starts non-empty"),
        fitted_cov,
        fitted_precision: k,
        ipf_iterations: cycles,
        loglik_trace: trace,
    })
}

/// `A D A` for symmetric `A`, `D`.
fn sandwich(a: &SymMatrix, d: &SymMatrix) -> SymMatrix {
    let m = a.dim();
    SymMatrix::from_fn(m, |i, j| {
        let mut v = 0.0;
        for k in 0..m {
            for l in 0..m {
                v += a.get(i, k) * d.get(k, l) * a.get(l, j);
            }
        }
        v
    })
}

/// One forward-selection step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsStep {
    pub added: (usize, usize),
    /// Log-likelihood gain `n · Δℓ` of the accepted edge.
    pub gain: f64,
    pub fit: MleFit,
    /// Candidate edges whose MLE did not exist at this step.
    pub skipped: Vec<(usize, usize)>,
}

impl FsStep {
    pub fn edges(&self) -> &EdgeSet {
        &self.fit.graph
    }
}

/// Greedy forward selection: each step adds the edge with the largest log-likelihood
/// gain (exact IPF refit per candidate; ties to the lexicographically first edge).
///
/// Runs `max_steps` steps or until the graph is complete.
pub fn forward_select(sample_cov: &SymMatrix, n: usize, max_steps: usize) -> Result<Vec<FsStep>> {
    forward_select_until(sample_cov, n, max_steps, |_| false)
}

/// As [`forward_select`], but stops right after a step for which `stop` returns true.
pub fn forward_select_until(
    sample_cov: &SymMatrix,
    n: usize,
    max_steps: usize,
    mut stop: impl FnMut(&FsStep) -> bool,
) -> Result<Vec<FsStep>> {
    let p = sample_cov.dim();
    if p > MAX_FS_NODES {
        return Err(Error::Domain(format!("forward selection is limited to {MAX_FS_NODES} nodes, got {p}")));
    }
    let opts = IpfOptions::default();
    let mut current = ipf_fit(sample_cov, &EdgeSet::empty(p, EdgeRule::Other), &opts)?;
    let mut steps = Vec::new();
    let total_pairs = p * p.saturating_sub(1) / 2;
    for _ in 0..max_steps.min(total_pairs) {
        let mut best: Option<((usize, usize), MleFit)> = None;
        let mut skipped = Vec::new();
        for a in 0..p {
            for b in a + 1..p {
                if current.graph.contains(a, b) {
                    continue;
                }
                let graph = EdgeSet::new(p, current.graph.edges().iter().copied().chain([(a, b)]), EdgeRule::Other)?;
                match ipf_from(
                    sample_cov,
                    &graph,
                    current.fitted_precision.clone(),
                    current.fitted_cov.clone(),
                    &opts,
                ) {
                    Ok(fit) => {
                        if best.as_ref().is_none_or(|(_, f)| fit.loglik > f.loglik) {
                            best = Some(((a, b), fit));
                        }
                    }
                    Err(Error::MleDoesNotExist(_)) => skipped.push((a, b)),
                    Err(e) => return Err(e),
                }
            }
        }
        let Some((added, fit)) = best else { break };
        steps.push(FsStep {
            added,
            gain: n as f64 * (fit.loglik - current.loglik),
            fit: fit.clone(),
            skipped,
        });
        current = fit;
        if stop(steps.last().expect("just pushed")) {
            break;
        }
    }
    Ok(steps)
}

/// All `p(p−1)/2` pairs in a uniformly shuffled order.
pub fn random_guess_baseline(p: usize, seed: SeedStream) -> Result<Vec<(usize, usize)>> {
    if p < 2 {
        return Err(Error::Domain(format!("random baseline needs p >= 2, got {p}")));
    }
    let mut pairs: Vec<(usize, usize)> = (0..p).flat_map(|a| (a + 1..p).map(move |b| (a, b))).collect();
    pairs.shuffle(&mut seed.derive("random-guess", 0).rng());
    Ok(pairs)
}

/// Sample covariance with denominator `n` (data assumed centered).
pub fn sample_covariance(data: &crate::numeric::DataMatrix) -> SymMatrix {
    SymMatrix::from_fn(data.p(), |i, j| data.scaled_inner(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cov3() -> SymMatrix {
        SymMatrix::from_full(&[
            vec![1.0, 0.4, 0.3],
            vec![0.4, 1.0, 0.5],
            vec![0.3, 0.5, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn cliques_of_small_graphs() {
        let tri = EdgeSet::new(4, [(0, 1), (1, 2), (0, 2), (2, 3)], EdgeRule::Other).unwrap();
        assert_eq!(maximal_cliques(&tri), vec![vec![0, 1, 2], vec![2, 3]]);
        let empty = EdgeSet::empty(3, EdgeRule::Other);
        assert_eq!(maximal_cliques(&empty), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn saturated_and_empty_models() {
        let s = cov3();
        let full = EdgeSet::new(3, [(0, 1), (0, 2), (1, 2)], EdgeRule::Other).unwrap();
        let fit = ipf_fit(&s, &full, &IpfOptions::default()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(fit.fitted_cov.get(i, j), s.get(i, j), epsilon = 1e-12);
            }
        }
        let fit = ipf_fit(&s, &EdgeSet::empty(3, EdgeRule::Other), &IpfOptions::default()).unwrap();
        assert_eq!(fit.fitted_cov, SymMatrix::identity(3));
        assert_eq!(fit.fitted_precision, SymMatrix::identity(3));
    }

    #[test]
    fn singular_clique_has_no_mle() {
        let s = SymMatrix::from_full(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let g = EdgeSet::new(3, [(0, 1)], EdgeRule::Other).unwrap();
        assert!(matches!(ipf_fit(&s, &g, &IpfOptions::default()), Err(Error::MleDoesNotExist(_))));
    }

    #[test]
    fn random_baseline_small() {
        assert_eq!(random_guess_baseline(2, SeedStream::new(1)).unwrap(), vec![(0, 1)]);
        assert!(random_guess_baseline(1, SeedStream::new(1)).is_err());
        let mut all = random_guess_baseline(6, SeedStream::new(9)).unwrap();
        assert_eq!(all.len(), 15);
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 15);
    }

    #[test]
    fn forward_select_bound() {
        assert!(forward_select(&SymMatrix::identity(51), 100, 1).is_err());
    }
}
