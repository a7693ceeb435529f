//! Cross-validated versus level-based penalties on a single strong pair.

use std::time::Instant;

use serde_json::json;

use super::{flag, row, ExperimentConfig, ExperimentReport, ReplicateRow};
use crate::error::{Error, Result};
use crate::lasso::Design;
use crate::neighborhood::{estimate_neighborhood, penalty_for_node, CvConfig, PenaltyRule};
use crate::numeric::{SeedStream, SymMatrix};
use crate::parallel::{collect_indexed, map_indexed};
use crate::synth::sample_gaussian;

/// Node whose neighborhood is estimated; its only true neighbor is node 1.
const TARGET: usize = 0;
const PARTNER: usize = 1;

pub fn run_prop1_demo(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let p = config.primary_p();
    if p < 2 {
        return Err(Error::Config("the demonstration needs p >= 2".into()));
    }
    let start = Instant::now();
    let mut sigma = SymMatrix::identity(p);
    sigma.set(TARGET, PARTNER, config.signal);
    let root = SeedStream::new(config.seed);
    let results = map_indexed(config.replicates, config.workers, |r| {
        replicate(config, &sigma, r, root.derive("prop1", r as u64))
    })?;
    let rows: Vec<ReplicateRow> = collect_indexed(results)?.into_iter().flatten().collect();
    let seeds = (0..config.replicates).map(|r| root.derive("prop1", r as u64).key()).collect();
    let truth: &[usize] = if config.signal == 0.0 { &[] } else { &[PARTNER] };
    let details = json!({"target": TARGET + 1, "true_neighborhood": truth.iter().map(|b| b + 1).collect::<Vec<_>>()});
    Ok(ExperimentReport::assemble(config, seeds, rows, Vec::new(), details, start.elapsed()))
}

fn replicate(config: &ExperimentConfig, sigma: &SymMatrix, r: usize, seed: SeedStream) -> Result<Vec<ReplicateRow>> {
    let data = sample_gaussian(sigma, config.n, seed.derive("data", 0))?.standardize()?;
    let design = Design::new(data)?;
    let cv = PenaltyRule::Cv(CvConfig {
        folds: config.folds,
        ..CvConfig::with_seed(seed.derive("cv", 0).key())
    });
    let level = PenaltyRule::Alpha { alpha: config.alpha };
    let truth: Vec<usize> = if config.signal == 0.0 { vec![] } else { vec![PARTNER] };
    let mut rows = Vec::new();
    for (name, rule) in [("cv", &cv), ("alpha", &level)] {
        let penalty = penalty_for_node(&design, TARGET, rule)?;
        let ne = estimate_neighborhood(&design, TARGET, &penalty)?;
        let false_inclusions = ne.members.iter().filter(|b| !truth.contains(b)).count();
        let missed = truth.iter().filter(|b| !ne.members.contains(b)).count();
        rows.push(row(
            name,
            r,
            seed.key(),
            &[
                ("wrong_neighborhood", flag(ne.members != truth)),
                ("false_inclusions", false_inclusions as f64),
                ("missed", missed as f64),
                ("lambda", penalty.lambda),
            ],
        ));
    }
    Ok(rows)
}
