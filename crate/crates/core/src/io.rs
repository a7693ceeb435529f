//! File formats: CSV data, TSV edge lists, JSON models and reports.
//!
//! All node indices in files are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRule, EdgeSet};
use crate::numeric::{DataMatrix, SymMatrix};
use crate::synth::{covariance_from_precision, GgmModel, Kernel, Pruning, TrueGraph, MAX_DEGREE};

pub const FORMAT_VERSION: u32 = 1;

/// Parses CSV text: header `x1,…,xp`, then one decimal row per observation.
pub fn parse_csv(text: &str) -> Result<DataMatrix> {
    let mut lines = text.split('\n').enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    let p = header.split(',').count();
    for (j, name) in header.split(',').enumerate() {
        if name.trim() != format!("x{}", j + 1) {
            return Err(Error::Parse {
                line: 1,
                column: j + 1,
                message: format!("expected header field x{}, found {name:?}", j + 1),
            });
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != p {
            return Err(Error::RaggedRow(line_no));
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line: line_no,
                    column: j + 1,
                    message: format!("not a finite decimal number: {f:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DataMatrix::from_rows(&rows)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn format_csv(data: &DataMatrix) -> String {
    let mut out = (1..=data.p()).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..data.n() {
        for j in 0..data.p() {
            if j > 0 {
                out.push(',');
            }
            // Shortest representation that parses back to the same f64.
            write!(out, "{:?}", data.get(i, j)).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(data: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, format_csv(data))?)
}

/// `a<TAB>b` per line, `a < b`, 1-based, sorted.
pub fn format_edges(edges: &EdgeSet) -> String {
    let mut out = String::new();
    for &(a, b) in edges.edges() {
        writeln!(out, "{}\t{}", a + 1, b + 1).expect("writing to a String cannot fail");
    }
    out
}

pub fn write_edges(edges: &EdgeSet, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, format_edges(edges))?)
}

pub fn parse_edges(text: &str, p: usize, rule: EdgeRule) -> Result<EdgeSet> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::RaggedRow(idx + 1));
        }
        let mut ends = [0usize; 2];
        for (j, f) in fields.iter().enumerate() {
            ends[j] = f.trim().parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(|| Error::Parse {
                line: idx + 1,
                column: j + 1,
                message: format!("not a 1-based node index: {f:?}"),
            })? - 1;
        }
        pairs.push((ends[0], ends[1]));
    }
    EdgeSet::new(p, pairs, rule)
}

pub fn read_edges(path: impl AsRef<Path>, p: usize, rule: EdgeRule) -> Result<EdgeSet> {
    parse_edges(&fs::read_to_string(path)?, p, rule)
}

/// JSON model file. The covariance is not stored; it is recomputed from the precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub p: usize,
    pub seed: Option<u64>,
    pub kernel: Option<Kernel>,
    pub pruning: Option<Pruning>,
    pub raw_edge_count: usize,
    pub positions: Vec<[f64; 2]>,
    /// 1-based `[a, b]` with `a < b`.
    pub edges: Vec<[usize; 2]>,
    /// 1-based lower-triangle nonzeros `[i, j, value]`, `i ≥ j`.
    pub precision: Vec<(usize, usize, f64)>,
}

impl ModelFile {
    pub fn from_model(model: &GgmModel, seed: Option<u64>, kernel: Option<Kernel>, pruning: Option<Pruning>) -> Self {
        let k = &model.precision;
        let mut precision = Vec::new();
        for i in 0..k.dim() {
            for j in 0..=i {
                let v = k.get(i, j);
                if v != 0.0 {
                    precision.push((i + 1, j + 1, v));
                }
            }
        }
        Self {
            format_version: FORMAT_VERSION,
            p: model.p(),
            seed,
            kernel,
            pruning,
            raw_edge_count: model.graph.raw_edge_count,
            positions: model.graph.positions.clone(),
            edges: model.truth().edges().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
            precision,
        }
    }

    pub fn into_model(self) -> Result<GgmModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported model format_version {}", self.format_version)));
        }
        let bad = |what: &str| Error::Parse {
            line: 0,
            column: 0,
            message: format!("model file: {what}"),
        };
        if self.positions.len() != self.p {
            return Err(bad("positions do not match p"));
        }
        let mut k = SymMatrix::zeros(self.p);
        for &(i, j, v) in &self.precision {
            if i == 0 || j == 0 || i > self.p || j > self.p {
                return Err(bad("precision index out of range"));
            }
            k.set(i - 1, j - 1, v);
        }
        let edges = EdgeSet::new(
            self.p,
            self.edges.iter().map(|&[a, b]| (a.wrapping_sub(1), b.wrapping_sub(1))),
            EdgeRule::Truth,
        )?;
        let covariance = covariance_from_precision(&k)?;
        Ok(GgmModel {
            graph: TrueGraph {
                positions: self.positions,
                edges,
                max_degree: MAX_DEGREE,
                raw_edge_count: self.raw_edge_count,
            },
            precision: k,
            covariance,
        })
    }
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(fs::write(path, text)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_errors() {
        assert_eq!(parse_csv("x1,x2\n1,2\n3\n"), Err(Error::RaggedRow(3)));
        assert!(matches!(
            parse_csv("x1,x2\n1,2\n3,abc\n"),
            Err(Error::Parse { line: 3, column: 2, .. })
        ));
        assert!(matches!(parse_csv("a,b\n1,2\n"), Err(Error::Parse { line: 1, column: 1, .. })));
    }

    #[test]
    fn zeros_parse_but_fail_standardization() {
        let x = parse_csv("x1,x2\n0,0\n0,0\n").unwrap();
        assert!(!x.is_standardized());
        assert_eq!(x.standardize(), Err(Error::ConstantColumn(0)));
    }

    #[test]
    fn edges_format() {
        assert_eq!(format_edges(&EdgeSet::empty(3, EdgeRule::And)), "");
        let e = EdgeSet::new(3, [(1, 0)], EdgeRule::And).unwrap();
        assert_eq!(format_edges(&e), "1\t2\n");
        assert_eq!(parse_edges("2\t1\n", 3, EdgeRule::And).unwrap(), e);
        assert!(parse_edges("0\t1\n", 3, EdgeRule::And).is_err());
    }
}
