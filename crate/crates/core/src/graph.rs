//! Edge sets built from neighborhoods, connectivity components, and evaluation metrics.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// Both endpoints select each other.
    And,
    /// At least one endpoint selects the other.
    Or,
    Truth,
    /// Produced by some other procedure (baselines, files).
    Other,
}

/// Undirected simple graph on nodes `0..p`; edges stored as `(a, b)` with `a < b`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeSet {
    p: usize,
    edges: Vec<(usize, usize)>,
    rule: EdgeRule,
}

impl EdgeSet {
    pub fn empty(p: usize, rule: EdgeRule) -> Self {
        Self {
            p,
            edges: Vec::new(),
            rule,
        }
    }

    /// Normalizes orientation, sorts and deduplicates. Self-loops and out-of-range nodes are rejected.
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>, rule: EdgeRule) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Domain(format!("self-loop at node {a}")));
            }
            if a >= p || b >= p {
                return Err(Error::InconsistentP {
                    expected: p,
                    got: a.max(b) + 1,
                });
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            p,
            edges: set.into_iter().collect(),
            rule,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn rule(&self) -> EdgeRule {
        self.rule
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.p];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Sorted adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.p];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj.iter_mut().for_each(|v| v.sort_unstable());
        adj
    }

    pub fn is_subset_of(&self, other: &EdgeSet) -> bool {
        self.edges.iter().all(|&(a, b)| other.contains(a, b))
    }

    pub fn intersection_len(&self, other: &EdgeSet) -> usize {
        self.edges.iter().filter(|&&(a, b)| other.contains(a, b)).count()
    }

    pub fn with_rule(mut self, rule: EdgeRule) -> Self {
        self.rule = rule;
        self
    }
}

fn check_cover(neighborhoods: &[NeighborhoodSet]) -> Result<usize> {
    let p = neighborhoods.len();
    let mut seen = vec![false; p];
    for nb in neighborhoods {
        if nb.node >= p || seen[nb.node] {
            return Err(Error::InconsistentP {
                expected: p,
                got: nb.node + 1,
            });
        }
        seen[nb.node] = true;
        if let Some(&m) = nb.members.iter().find(|&&m| m >= p) {
            return Err(Error::InconsistentP {
                expected: p,
                got: m + 1,
            });
        }
    }
    Ok(p)
}

fn aggregate(neighborhoods: &[NeighborhoodSet], rule: EdgeRule) -> Result<EdgeSet> {
    let p = check_cover(neighborhoods)?;
    let mut by_node: Vec<&NeighborhoodSet> = neighborhoods.iter().collect();
    by_node.sort_by_key(|nb| nb.node);
    let mut edges = Vec::new();
    for nb in &by_node {
        let a = nb.node;
        for &b in &nb.members {
            let reciprocal = by_node[b].contains(a);
            match rule {
                EdgeRule::And if reciprocal && a < b => edges.push((a, b)),
                EdgeRule::Or if !reciprocal || a < b => edges.push((a, b)),
                _ => {}
            }
        }
    }
    EdgeSet::new(p, edges, rule)
}

/// Edge `(a, b)` when `b ∈ nê_a` and `a ∈ nê_b`.
pub fn aggregate_and(neighborhoods: &[NeighborhoodSet]) -> Result<EdgeSet> {
    aggregate(neighborhoods, EdgeRule::And)
}

/// Edge `(a, b)` when `b ∈ nê_a` or `a ∈ nê_b`.
pub fn aggregate_or(neighborhoods: &[NeighborhoodSet]) -> Result<EdgeSet> {
    aggregate(neighborhoods, EdgeRule::Or)
}

/// Node → component id, ids numbered by smallest member node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentPartition {
    ids: Vec<usize>,
}

impl ComponentPartition {
    pub fn p(&self) -> usize {
        self.ids.len()
    }

    pub fn id(&self, node: usize) -> usize {
        self.ids[node]
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn count(&self) -> usize {
        self.ids.iter().enumerate().filter(|&(i, &c)| i == c).count()
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        self.ids[a] == self.ids[b]
    }

    /// Members of each component, in order of component id.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.ids.len()];
        for (node, &c) in self.ids.iter().enumerate() {
            groups[c].push(node);
        }
        groups.retain(|g| !g.is_empty());
        groups
    }

    fn canonical(raw: &[usize]) -> Self {
        // Relabel each class by its smallest node.
        let mut label = vec![usize::MAX; raw.len()];
        let ids = raw
            .iter()
            .enumerate()
            .map(|(node, &r)| {
                if label[r] == usize::MAX {
                    label[r] = node;
                }
                label[r]
            })
            .collect();
        Self { ids }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Connectivity components via union-find.
pub fn connected_components(edges: &EdgeSet) -> ComponentPartition {
    let mut uf = UnionFind::new(edges.p());
    for &(a, b) in edges.edges() {
        uf.union(a, b);
    }
    let raw: Vec<usize> = (0..edges.p()).map(|i| uf.find(i)).collect();
    ComponentPartition::canonical(&raw)
}

/// Connectivity components via breadth-first search.
pub fn connected_components_bfs(edges: &EdgeSet) -> ComponentPartition {
    let adj = edges.adjacency();
    let mut ids = vec![usize::MAX; edges.p()];
    for start in 0..edges.p() {
        if ids[start] != usize::MAX {
            continue;
        }
        ids[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if ids[v] == usize::MAX {
                    ids[v] = start;
                    queue.push_back(v);
                }
            }
        }
    }
    ComponentPartition { ids }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// `false_positives / max(1, selected)`.
    pub fdp: f64,
    /// Some estimated edge joins two distinct components of the truth.
    pub component_violation: bool,
}

impl Metrics {
    pub fn selected(&self) -> usize {
        self.true_positives + self.false_positives
    }
}

pub fn compare_edge_sets(estimate: &EdgeSet, truth: &EdgeSet) -> Result<Metrics> {
    if estimate.p() != truth.p() {
        return Err(Error::InconsistentP {
            expected: truth.p(),
            got: estimate.p(),
        });
    }
    let components = connected_components(truth);
    let tp = estimate.intersection_len(truth);
    let fp = estimate.len() - tp;
    let component_violation = estimate.edges().iter().any(|&(a, b)| !components.same(a, b));
    Ok(Metrics {
        true_positives: tp,
        false_positives: fp,
        false_negatives: truth.len() - tp,
        fdp: fp as f64 / estimate.len().max(1) as f64,
        component_violation,
    })
}

/// How [`roc_at_false_counts`] reads a path.
pub const ROC_PROTOCOL: &str = "for each k: true positives at the last path position before the \
false-positive count first exceeds k; the final position if it never does";

/// Correct-edge counts at `k` falsely included edges along a path ordered by descending penalty.
///
/// Paths need not be nested. For each `k` the count is read at the position just
/// before the false-positive count first exceeds `k` (zero if the very first
/// position already exceeds it), or at the final position if it never does.
pub fn roc_at_false_counts(path: &[EdgeSet], truth: &EdgeSet, ks: &[usize]) -> Result<Vec<usize>> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let metrics = path
        .iter()
        .map(|e| compare_edge_sets(e, truth))
        .collect::<Result<Vec<_>>>()?;
    Ok(ks
        .iter()
        .map(|&k| match metrics.iter().position(|m| m.false_positives > k) {
            Some(0) => 0,
            Some(j) => metrics[j - 1].true_positives,
            None => metrics.last().map_or(0, |m| m.true_positives),
        })
        .collect())
}

/// Edge sets formed by the first `t` entries of an ordered edge list, `t = 0..=len`.
pub fn prefix_path(p: usize, ordered: &[(usize, usize)], max_len: usize) -> Result<Vec<EdgeSet>> {
    let upto = ordered.len().min(max_len);
    let mut path = Vec::with_capacity(upto + 1);
    path.push(EdgeSet::empty(p, EdgeRule::Other));
    for t in 1..=upto {
        path.push(EdgeSet::new(p, ordered[..t].iter().copied(), EdgeRule::Other)?);
    }
    Ok(path)
}

/// Correct-edge counts at `k` false inclusions for an ordered edge list, without materializing prefixes.
pub fn ordered_list_counts(ordered: &[(usize, usize)], truth: &EdgeSet, ks: &[usize]) -> Vec<usize> {
    ks.iter()
        .map(|&k| {
            let (mut tp, mut fp) = (0usize, 0usize);
            for &(a, b) in ordered {
                if truth.contains(a, b) {
                    tp += 1;
                } else {
                    fp += 1;
                    if fp > k {
                        break;
                    }
                }
            }
            tp
        })
        .collect()
}
