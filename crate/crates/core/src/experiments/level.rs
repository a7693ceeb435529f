//! Level control under independence: any estimated edge joins two components.

use std::time::Instant;

use super::{flag, row, ExperimentConfig, ExperimentReport, ReplicateRow, VIOLATION_METRIC};
use crate::error::Result;
use crate::graph::{aggregate_and, aggregate_or, compare_edge_sets, EdgeRule, EdgeSet};
use crate::lasso::Design;
use crate::neighborhood::{estimate_all_neighborhoods, PenaltyRule};
use crate::numeric::{SeedStream, SymMatrix};
use crate::parallel::{collect_indexed, map_indexed};
use crate::synth::sample_gaussian;

pub fn run_level_control(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let p = config.primary_p();
    let sigma = SymMatrix::identity(p);
    let truth = EdgeSet::empty(p, EdgeRule::Truth);
    let root = SeedStream::new(config.seed);
    let results = map_indexed(config.replicates, config.workers, |r| {
        replicate(config, &sigma, &truth, r, root.derive("level", r as u64))
    })?;
    let rows: Vec<ReplicateRow> = collect_indexed(results)?.into_iter().flatten().collect();
    let seeds = (0..config.replicates).map(|r| root.derive("level", r as u64).key()).collect();
    let notes = vec!["independent variables: every true component is a single node".into()];
    Ok(ExperimentReport::assemble(config, seeds, rows, notes, serde_json::Value::Null, start.elapsed()))
}

fn replicate(
    config: &ExperimentConfig,
    sigma: &SymMatrix,
    truth: &EdgeSet,
    r: usize,
    seed: SeedStream,
) -> Result<Vec<ReplicateRow>> {
    let data = sample_gaussian(sigma, config.n, seed.derive("data", 0))?.standardize()?;
    let design = Design::new(data)?;
    let hoods = estimate_all_neighborhoods(&design, &PenaltyRule::Alpha { alpha: config.alpha }, 1)?;
    let mut rows = Vec::new();
    if config.rule.includes_and() {
        let m = compare_edge_sets(&aggregate_and(&hoods)?, truth)?;
        rows.push(row("AND", r, seed.key(), &[(VIOLATION_METRIC, flag(m.component_violation)), ("selected", m.selected() as f64)]));
    }
    if config.rule.includes_or() {
        let m = compare_edge_sets(&aggregate_or(&hoods)?, truth)?;
        rows.push(row("OR", r, seed.key(), &[(VIOLATION_METRIC, flag(m.component_violation)), ("selected", m.selected() as f64)]));
    }
    Ok(rows)
}
