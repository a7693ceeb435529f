//! Large-graph run: AND at the configured level, OR at the level giving the same edge count.

use std::time::Instant;

use serde_json::json;

use super::{flag, row, ExperimentConfig, ExperimentReport, ReplicateRow, VIOLATION_METRIC};
use crate::error::Result;
use crate::graph::{aggregate_and, aggregate_or, compare_edge_sets, EdgeSet, Metrics};
use crate::lasso::Design;
use crate::neighborhood::{estimate_all_neighborhoods, PenaltyRule};
use crate::numeric::SeedStream;
use crate::parallel::{collect_indexed, map_indexed};
use crate::synth::{sample_gaussian, GgmModel};

/// Report plus the artifacts of the first replicate.
#[derive(Debug, Clone)]
pub struct Figure1Output {
    pub report: ExperimentReport,
    pub model: GgmModel,
    pub and: EdgeSet,
    pub or: EdgeSet,
    pub or_alpha: f64,
}

struct Replicate {
    rows: Vec<ReplicateRow>,
    model: GgmModel,
    and: EdgeSet,
    or: EdgeSet,
    or_alpha: f64,
}

const SEARCH_FLOOR: f64 = 1e-200;
const SEARCH_STEPS: usize = 60;

pub fn run_figure1(config: &ExperimentConfig) -> Result<Figure1Output> {
    config.validate()?;
    let start = Instant::now();
    let root = SeedStream::new(config.seed);
    let (outer, inner) = if config.replicates == 1 { (1, config.workers) } else { (config.workers, 1) };
    let results = map_indexed(config.replicates, outer, |r| {
        replicate(config, r, root.derive("fig1", r as u64), inner)
    })?;
    let mut reps = collect_indexed(results)?;
    let seeds = (0..config.replicates).map(|r| root.derive("fig1", r as u64).key()).collect();
    let details = json!({
        "or_alpha": reps.iter().map(|r| r.or_alpha).collect::<Vec<_>>(),
        "published": {"true_edges": 1747, "correct": 1109, "false": 2, "common_correct": 907, "correct_in_one": 202},
    });
    let rows = reps.iter_mut().flat_map(|r| std::mem::take(&mut r.rows)).collect();
    let notes = vec![
        "the OR level is found by bisection on log(alpha) so that the OR estimate has as many edges as the AND estimate".into(),
    ];
    let report = ExperimentReport::assemble(config, seeds, rows, notes, details, start.elapsed());
    let first = reps.swap_remove(0);
    Ok(Figure1Output {
        report,
        model: first.model,
        and: first.and,
        or: first.or,
        or_alpha: first.or_alpha,
    })
}

fn metric_values(m: &Metrics) -> Vec<(&'static str, f64)> {
    vec![
        ("true_positives", m.true_positives as f64),
        ("false_positives", m.false_positives as f64),
        ("false_negatives", m.false_negatives as f64),
        ("selected", m.selected() as f64),
        ("fdp", m.fdp),
        (VIOLATION_METRIC, flag(m.component_violation)),
    ]
}

fn replicate(config: &ExperimentConfig, r: usize, seed: SeedStream, workers: usize) -> Result<Replicate> {
    let p = config.primary_p();
    let model = GgmModel::generate(p, seed.derive("model", 0), config.kernel, config.pruning)?;
    let truth = model.truth();
    let data = sample_gaussian(&model.covariance, config.n, seed.derive("data", 0))?.standardize()?;
    let design = Design::new(data)?;
    let at = |alpha: f64| estimate_all_neighborhoods(&design, &PenaltyRule::Alpha { alpha }, workers);

    let and = aggregate_and(&at(config.alpha)?)?;
    let target = and.len();
    let (or, or_alpha) = match_or_level(target, config.alpha, |alpha| aggregate_or(&at(alpha)?))?;

    let and_m = compare_edge_sets(&and, truth)?;
    let or_m = compare_edge_sets(&or, truth)?;
    let common = and.intersection_len(&or);
    let common_correct = and.edges().iter().filter(|&&(a, b)| or.contains(a, b) && truth.contains(a, b)).count();
    let correct_in_one = and_m.true_positives + or_m.true_positives - 2 * common_correct;

    let mut and_values = metric_values(&and_m);
    and_values.push(("alpha", config.alpha));
    let mut or_values = metric_values(&or_m);
    or_values.push(("alpha", or_alpha));
    let rows = vec![
        row(
            "truth",
            r,
            seed.key(),
            &[
                ("edges", truth.len() as f64),
                ("raw_edges", model.graph.raw_edge_count as f64),
            ],
        ),
        row("AND", r, seed.key(), &and_values),
        row("OR", r, seed.key(), &or_values),
        row(
            "overlap",
            r,
            seed.key(),
            &[
                ("common", common as f64),
                ("in_one_only", (and.len() + or.len() - 2 * common) as f64),
                ("common_correct", common_correct as f64),
                ("correct_in_one_only", correct_in_one as f64),
            ],
        ),
    ];
    Ok(Replicate {
        rows,
        model,
        and,
        or,
        or_alpha,
    })
}

/// Finds the level in `(0, ceiling]` whose OR estimate has exactly `target` edges,
/// or the closest count found, preferring the larger level on ties.
fn match_or_level(target: usize, ceiling: f64, mut estimate: impl FnMut(f64) -> Result<EdgeSet>) -> Result<(EdgeSet, f64)> {
    let top = estimate(ceiling)?;
    if top.len() <= target {
        return Ok((top, ceiling));
    }
    let (mut lo, mut hi) = (SEARCH_FLOOR.ln(), ceiling.ln());
    let mut best = (top, ceiling);
    for _ in 0..SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        let alpha = mid.exp();
        let edges = estimate(alpha)?;
        let len = edges.len();
        let gap = len.abs_diff(target);
        let best_gap = best.0.len().abs_diff(target);
        if gap < best_gap || (gap == best_gap && alpha > best.1) {
            best = (edges, alpha);
        }
        if len == target {
            break;
        }
        if len > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(best)
}
