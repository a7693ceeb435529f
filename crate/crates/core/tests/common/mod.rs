#![allow(dead_code)]

use neighsel::{DataMatrix, SeedStream};
use rand::Rng;
use rand_distr::StandardNormal;

/// Standardized `n × p` data with a shared factor, so predictors are correlated.
pub fn random_data(n: usize, p: usize, seed: u64) -> DataMatrix {
    let mut rng = SeedStream::new(seed).rng();
    let load: Vec<f64> = (0..p).map(|_| rng.random_range(-0.8..0.8)).collect();
    let mut values = vec![0.0; n * p];
    for i in 0..n {
        let f: f64 = rng.sample(StandardNormal);
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            values[j * n + i] = load[j] * f + z;
        }
    }
    DataMatrix::from_columns(n, p, values).unwrap().standardize().unwrap()
}

fn inner(data: &DataMatrix, i: usize, j: usize) -> f64 {
    let n = data.n() as f64;
    data.column(i).iter().zip(data.column(j)).map(|(a, b)| a * b).sum::<f64>() / n
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for c in col..m {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact Lasso solution by enumerating all `3^|A|` sign patterns.
///
/// Each pattern fixes the active set and signs; stationarity then gives a linear
/// system. Feasible candidates are checked against the full optimality conditions
/// and the one with the smallest objective is returned.
pub fn enumeration_oracle(data: &DataMatrix, target: usize, allowed: &[usize], lambda: f64) -> Vec<f64> {
    let m = allowed.len();
    let c: Vec<f64> = allowed.iter().map(|&b| inner(data, b, target)).collect();
    let g: Vec<Vec<f64>> = allowed.iter().map(|&i| allowed.iter().map(|&j| inner(data, i, j)).collect()).collect();
    let objective = |theta: &[f64]| {
        let mut r = data.column(target).to_vec();
        for (k, &b) in allowed.iter().enumerate() {
            for (ri, x) in r.iter_mut().zip(data.column(b)) {
                *ri -= theta[k] * x;
            }
        }
        r.iter().map(|v| v * v).sum::<f64>() / data.n() as f64 + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(m as u32) {
        let signs: Vec<i32> = (0..m).map(|k| (code / 3usize.pow(k as u32) % 3) as i32 - 1).collect();
        let support: Vec<usize> = (0..m).filter(|&k| signs[k] != 0).collect();
        let a = support.iter().map(|&i| support.iter().map(|&j| g[i][j]).collect()).collect();
        let rhs = support.iter().map(|&i| c[i] - lambda / 2.0 * signs[i] as f64).collect();
        let Some(sol) = solve_dense(a, rhs) else { continue };
        let mut theta = vec![0.0; m];
        for (s, &k) in support.iter().enumerate() {
            theta[k] = sol[s];
        }
        if support.iter().any(|&k| (theta[k] > 0.0) != (signs[k] > 0)) {
            continue;
        }
        let feasible = (0..m).filter(|k| signs[*k] == 0).all(|k| {
            let grad: f64 = c[k] - (0..m).map(|j| g[k][j] * theta[j]).sum::<f64>();
            (2.0 * grad).abs() <= lambda * (1.0 + 1e-9) + 1e-12
        });
        if !feasible {
            continue;
        }
        let obj = objective(&theta);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, theta));
        }
    }
    let theta = best.expect("the Lasso always has a solution").1;
    let mut full = vec![0.0; data.p()];
    for (k, &b) in allowed.iter().enumerate() {
        full[b] = theta[k];
    }
    full
}
