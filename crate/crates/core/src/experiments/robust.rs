//! Paired clean and t₂-contaminated runs on the same model and sample.

use std::time::Instant;

use super::{flag, row, ExperimentConfig, ExperimentReport, ReplicateRow, VIOLATION_METRIC};
use crate::error::Result;
use crate::graph::{aggregate_and, aggregate_or, compare_edge_sets};
use crate::lasso::Design;
use crate::neighborhood::{estimate_all_neighborhoods, PenaltyRule};
use crate::numeric::SeedStream;
use crate::parallel::{collect_indexed, map_indexed};
use crate::synth::{contaminate_t2, sample_gaussian, GgmModel};

pub fn run_robustness(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let root = SeedStream::new(config.seed);
    let results = map_indexed(config.replicates, config.workers, |r| {
        replicate(config, r, root.derive("robust", r as u64))
    })?;
    let rows: Vec<ReplicateRow> = collect_indexed(results)?.into_iter().flatten().collect();
    let seeds = (0..config.replicates).map(|r| root.derive("robust", r as u64).key()).collect();
    let notes = vec!["contaminated data are re-standardized before estimation".into()];
    Ok(ExperimentReport::assemble(config, seeds, rows, notes, serde_json::Value::Null, start.elapsed()))
}

fn replicate(config: &ExperimentConfig, r: usize, seed: SeedStream) -> Result<Vec<ReplicateRow>> {
    let model = GgmModel::generate(config.primary_p(), seed.derive("model", 0), config.kernel, config.pruning)?;
    let raw = sample_gaussian(&model.covariance, config.n, seed.derive("data", 0))?;
    let noisy = contaminate_t2(&raw, config.noise_scale, seed.derive("noise", 0));
    let rule = PenaltyRule::Alpha { alpha: config.alpha };
    let mut rows = Vec::new();
    for (condition, data) in [("clean", &raw), ("t2", &noisy)] {
        let design = Design::new(data.standardize()?)?;
        let hoods = estimate_all_neighborhoods(&design, &rule, 1)?;
        let mut estimates = Vec::new();
        if config.rule.includes_and() {
            estimates.push(("AND", aggregate_and(&hoods)?));
        }
        if config.rule.includes_or() {
            estimates.push(("OR", aggregate_or(&hoods)?));
        }
        for (name, edges) in estimates {
            let m = compare_edge_sets(&edges, model.truth())?;
            rows.push(row(
                format!("{condition}/{name}"),
                r,
                seed.key(),
                &[
                    ("fdp", m.fdp),
                    ("true_positives", m.true_positives as f64),
                    ("false_positives", m.false_positives as f64),
                    ("selected", m.selected() as f64),
                    (VIOLATION_METRIC, flag(m.component_violation)),
                ],
            ));
        }
    }
    Ok(rows)
}
