//! Seeded experiment drivers and their JSON reports.
//!
//! Every replicate draws from its own child of the root seed, replicates run on
//! a worker pool, and rows are merged in replicate order, so a report depends
//! only on its configuration.

mod figure1;
mod level;
mod prop1;
mod robust;
mod table1;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::FORMAT_VERSION;
use crate::synth::{Kernel, Pruning};

pub use figure1::{run_figure1, Figure1Output};
pub use level::run_level_control;
pub use prop1::run_prop1_demo;
pub use robust::run_robustness;
pub use table1::{run_table1, TABLE1_REFERENCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Table1,
    Fig1,
    Prop1,
    Level,
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleChoice {
    And,
    Or,
    Both,
}

impl RuleChoice {
    pub fn includes_and(self) -> bool {
        matches!(self, RuleChoice::And | RuleChoice::Both)
    }

    pub fn includes_or(self) -> bool {
        matches!(self, RuleChoice::Or | RuleChoice::Both)
    }
}

/// Logarithmic penalty grid from `lambda_max` down to `lambda_max / ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Node counts; most experiments use only the first.
    pub p: Vec<usize>,
    pub n: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub kernel: Kernel,
    pub pruning: Pruning,
    pub rule: RuleChoice,
    pub grid: GridSpec,
    /// False-positive counts at which the ROC table reads correct edges.
    pub ks: Vec<usize>,
    /// Off-diagonal covariance of the two-variable signal (`prop1` experiment).
    pub signal: f64,
    /// Scale of the t₂ contamination (robustness run).
    pub noise_scale: f64,
    /// Cross-validation folds.
    pub folds: usize,
    /// Include forward selection in the ROC table.
    pub forward_selection: bool,
    /// Worker threads; 0 = one per core. Never part of the report.
    #[serde(skip)]
    pub workers: usize,
}

impl ExperimentConfig {
    /// Defaults for each experiment at the published scale.
    pub fn defaults(experiment: ExperimentKind, seed: u64) -> Self {
        let base = Self {
            experiment,
            p: vec![10, 20, 30],
            n: 40,
            replicates: 50,
            alpha: 0.05,
            seed,
            kernel: Kernel::Text,
            pruning: Pruning::Uniform,
            rule: RuleChoice::Both,
            grid: GridSpec {
                points: 100,
                ratio: 500.0,
            },
            ks: vec![0, 5, 10],
            signal: 0.5,
            noise_scale: 0.1,
            folds: 10,
            forward_selection: true,
            workers: 0,
        };
        let local = Kernel::Local { scale: 1.5 };
        match experiment {
            ExperimentKind::Table1 => base,
            ExperimentKind::Fig1 => Self {
                p: vec![1000],
                n: 600,
                replicates: 1,
                kernel: local,
                pruning: Pruning::MaxDegree,
                ..base
            },
            ExperimentKind::Prop1 => Self {
                p: vec![10],
                n: 200,
                replicates: 100,
                ..base
            },
            ExperimentKind::Level => Self {
                p: vec![50],
                n: 40,
                replicates: 1000,
                ..base
            },
            ExperimentKind::Robust => Self {
                p: vec![100],
                n: 500,
                replicates: 10,
                kernel: local,
                pruning: Pruning::MaxDegree,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.replicates < 1 {
            return fail("replicates must be at least 1".into());
        }
        if self.p.is_empty() || self.p.contains(&0) {
            return fail("p must list positive node counts".into());
        }
        if self.n < 2 {
            return fail(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.grid.points < 1 || !(self.grid.ratio >= 1.0) {
            return fail("grid needs at least one point and ratio >= 1".into());
        }
        if !(self.signal.abs() < 1.0) {
            return fail(format!("signal must lie in (-1, 1), got {}", self.signal));
        }
        if !(self.noise_scale >= 0.0) {
            return fail("noise scale must be non-negative".into());
        }
        if self.ks.windows(2).any(|w| w[1] <= w[0]) {
            return fail("ks must be strictly ascending".into());
        }
        if let Kernel::Local { scale } = self.kernel {
            if !(scale > 0.0) {
                return fail("kernel scale must be positive".into());
            }
        }
        Ok(())
    }

    pub fn primary_p(&self) -> usize {
        self.p[0]
    }
}

/// One replicate's numbers for one group (method, node count, condition).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub group: String,
    pub replicate: usize,
    pub seed: u64,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub group: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    /// Root seed of each replicate, in replicate order.
    pub seeds: Vec<u64>,
    pub rows: Vec<ReplicateRow>,
    pub aggregates: Vec<Aggregate>,
    /// Fraction of replicates whose estimate joins two distinct true components, per group.
    pub violation_rate: BTreeMap<String, f64>,
    /// Free-form remarks on protocol choices and reference values.
    pub notes: Vec<String>,
    /// Experiment-specific extras (reference tables, edge counts).
    pub details: serde_json::Value,
    /// Excluded from serialization so reports stay byte-reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Name of the per-row value that flags a component violation.
pub const VIOLATION_METRIC: &str = "component_violation";

impl ExperimentReport {
    pub(crate) fn assemble(
        config: &ExperimentConfig,
        seeds: Vec<u64>,
        rows: Vec<ReplicateRow>,
        notes: Vec<String>,
        details: serde_json::Value,
        wall_time: Duration,
    ) -> Self {
        let aggregates = aggregate_rows(&rows);
        let violation_rate = violation_rates(&aggregates);
        Self {
            format_version: FORMAT_VERSION,
            config: config.clone(),
            seeds,
            rows,
            aggregates,
            violation_rate,
            notes,
            details,
            wall_time,
        }
    }

    pub fn aggregate(&self, group: &str, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.group == group && a.metric == metric)
    }

    pub fn mean(&self, group: &str, metric: &str) -> Option<f64> {
        self.aggregate(group, metric).map(|a| a.mean)
    }

    /// Checks that aggregates and violation rates match a recomputation from the rows.
    pub fn check_consistency(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported report format_version {}", self.format_version)));
        }
        let fresh = aggregate_rows(&self.rows);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 || (a.is_nan() && b.is_nan());
        let consistent = fresh.len() == self.aggregates.len()
            && fresh.iter().zip(&self.aggregates).all(|(f, s)| {
                f.group == s.group && f.metric == s.metric && f.count == s.count && close(f.mean, s.mean) && close(f.std_error, s.std_error)
            })
            && violation_rates(&fresh)
                .iter()
                .zip(&self.violation_rate)
                .all(|((g1, v1), (g2, v2))| g1 == g2 && close(*v1, *v2))
            && violation_rates(&fresh).len() == self.violation_rate.len();
        if consistent {
            Ok(())
        } else {
            Err(Error::Config("report aggregates disagree with its per-replicate rows".into()))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses a report and verifies its self-consistency.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        report.check_consistency()?;
        Ok(report)
    }
}

/// Mean and standard error (sample sd / √count) per (group, metric), in first-seen group order.
pub fn aggregate_rows(rows: &[ReplicateRow]) -> Vec<Aggregate> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_group: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for row in rows {
        if !by_group.contains_key(row.group.as_str()) {
            order.push(&row.group);
        }
        let metrics = by_group.entry(&row.group).or_default();
        for (k, v) in &row.values {
            metrics.entry(k).or_default().push(*v);
        }
    }
    let mut out = Vec::new();
    for group in order {
        for (metric, values) in &by_group[group] {
            let (mean, std_error) = mean_and_se(values);
            out.push(Aggregate {
                group: group.to_string(),
                metric: metric.to_string(),
                count: values.len(),
                mean,
                std_error,
            });
        }
    }
    out
}

fn violation_rates(aggregates: &[Aggregate]) -> BTreeMap<String, f64> {
    aggregates
        .iter()
        .filter(|a| a.metric == VIOLATION_METRIC)
        .map(|a| (a.group.clone(), a.mean))
        .collect()
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

pub(crate) fn row(group: impl Into<String>, replicate: usize, seed: u64, values: &[(&str, f64)]) -> ReplicateRow {
    ReplicateRow {
        group: group.into(),
        replicate,
        seed,
        values: values.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
    }
}

pub(crate) fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Dispatches on `config.experiment`. The `fig1` edge files are not written here.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Table1 => run_table1(config),
        ExperimentKind::Fig1 => run_figure1(config).map(|o| o.report),
        ExperimentKind::Prop1 => run_prop1_demo(config),
        ExperimentKind::Level => run_level_control(config),
        ExperimentKind::Robust => run_robustness(config),
    }
}
