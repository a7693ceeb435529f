use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_PIVOT: f64 = 1e-14;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// Dense symmetric matrix; only the lower triangle is stored (row-major packed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    lower: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            lower: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from a full row-major square matrix, reading only the lower triangle.
    pub fn from_full(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Domain("matrix is not square".into()));
            }
            for j in 0..=i {
                m.set(i, j, row[j]);
            }
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut lower = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                lower.push(f(i, j));
            }
        }
        Self { dim, lower }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.lower[packed(i, j)]
        } else {
            self.lower[packed(j, i)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = if j <= i { packed(i, j) } else { packed(j, i) };
        self.lower[k] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_full(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `D M D` for the diagonal `D = diag(scale)`.
    pub fn scaled(&self, scale: &[f64]) -> Self {
        Self::from_fn(self.dim, |i, j| scale[i] * self.get(i, j) * scale[j])
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut l = vec![0.0; self.lower.len()];
        for i in 0..n {
            let row_i = packed(i, 0);
            for j in 0..=i {
                let row_j = packed(j, 0);
                let s: f64 = (0..j).map(|k| l[row_i + k] * l[row_j + k]).sum();
                let v = self.lower[row_i + j] - s;
                if i == j {
                    if !(v > MIN_PIVOT) {
                        return Err(Error::NotPositiveDefinite(i));
                    }
                    l[row_i + i] = v.sqrt();
                } else {
                    l[row_i + j] = v / l[row_j + j];
                }
            }
        }
        Ok(Cholesky { dim: n, lower: l })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    pub fn invert_spd(&self) -> Result<Self> {
        Ok(self.cholesky()?.inverse())
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.cholesky()?.log_det())
    }

    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.cholesky()?.solve(b))
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M`, row-major packed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `L_ij`; zero above the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.lower[packed(i, j)]
        } else {
            0.0
        }
    }

    /// Builds a factor from a full lower-triangular matrix (upper part ignored).
    pub fn from_lower(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut lower = Vec::with_capacity(dim * (dim + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            lower.extend_from_slice(&row[..=i]);
        }
        Self { dim, lower }
    }

    /// `L x` for a dense vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let row = &self.lower[packed(i, 0)..=packed(i, i)];
                row.iter().zip(x).map(|(l, v)| l * v).sum()
            })
            .collect()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_fn(self.dim, |i, j| {
            let ri = &self.lower[packed(i, 0)..packed(i, 0) + j + 1];
            let rj = &self.lower[packed(j, 0)..packed(j, 0) + j + 1];
            ri.iter().zip(rj).map(|(a, b)| a * b).sum()
        })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.lower[packed(i, i)].ln()).sum::<f64>()
    }

    fn forward_in_place(&self, y: &mut [f64], start: usize) {
        for i in start..self.dim {
            let row = packed(i, 0);
            let s: f64 = (start..i).map(|k| self.lower[row + k] * y[k]).sum();
            y[i] = (y[i] - s) / self.lower[row + i];
        }
    }

    fn backward_in_place(&self, y: &mut [f64]) {
        for k in (0..self.dim).rev() {
            let row = packed(k, 0);
            y[k] /= self.lower[row + k];
            let xk = y[k];
            for i in 0..k {
                y[i] -= self.lower[row + i] * xk;
            }
        }
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        self.forward_in_place(&mut y, 0);
        self.backward_in_place(&mut y);
        y
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        let mut inv = SymMatrix::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.forward_in_place(&mut col, j);
            self.backward_in_place(&mut col);
            for (i, &v) in col.iter().enumerate().skip(j) {
                inv.set(i, j, v);
            }
        }
        inv
    }
}
