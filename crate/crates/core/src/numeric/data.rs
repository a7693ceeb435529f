use crate::error::{Error, Result};

const MIN_VARIANCE: f64 = 1e-14;

/// An `n × p` observation matrix (row = observation), stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    standardized: bool,
}

impl DataMatrix {
    /// Builds a matrix from column-major values.
    pub fn from_columns(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 observations, got {n}")));
        }
        if p < 1 {
            return Err(Error::Domain("need at least 1 variable".into()));
        }
        if values.len() != n * p {
            return Err(Error::Domain(format!(
                "expected {} entries for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at row {}, column {}",
                idx % n,
                idx / n
            )));
        }
        Ok(Self {
            n,
            p,
            values,
            standardized: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut values = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::RaggedRow(i + 1));
            }
            for (j, &v) in row.iter().enumerate() {
                values[j * n + i] = v;
            }
        }
        Self::from_columns(n, p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|j| self.get(i, j)).collect()
    }

    /// Column-major backing storage.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Keeps only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let m = rows.len();
        let mut values = Vec::with_capacity(m * self.p);
        for j in 0..self.p {
            let col = self.column(j);
            values.extend(rows.iter().map(|&i| col[i]));
        }
        Self::from_columns(m, self.p, values)
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(self.n * cols.len());
        for &j in cols {
            values.extend_from_slice(self.column(j));
        }
        let mut out = Self::from_columns(self.n, cols.len(), values)?;
        out.standardized = self.standardized;
        Ok(out)
    }

    /// Adds `delta` entrywise. The result is no longer considered standardized.
    pub(crate) fn perturbed(&self, delta: &[f64]) -> Self {
        debug_assert_eq!(delta.len(), self.values.len());
        Self {
            n: self.n,
            p: self.p,
            values: self.values.iter().zip(delta).map(|(v, d)| v + d).collect(),
            standardized: false,
        }
    }

    /// Empirical mean and second central moment (denominator `n`) of column `j`.
    pub fn column_moments(&self, j: usize) -> (f64, f64) {
        let col = self.column(j);
        let n = self.n as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var)
    }

    /// `σ̂_a = sqrt(n⁻¹⟨X_a, X_a⟩)`, the uncentered root mean square of column `a`.
    pub fn root_mean_square(&self, a: usize) -> f64 {
        let col = self.column(a);
        (col.iter().map(|x| x * x).sum::<f64>() / self.n as f64).sqrt()
    }

    /// `n⁻¹⟨X_i, X_j⟩`.
    pub fn scaled_inner(&self, i: usize, j: usize) -> f64 {
        dot(self.column(i), self.column(j)) / self.n as f64
    }

    /// Centers every column and scales it to unit empirical variance (denominator `n`).
    pub fn standardize(&self) -> Result<Self> {
        let n = self.n;
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.p {
            let (mean, var) = self.column_moments(j);
            if var < MIN_VARIANCE {
                return Err(Error::ConstantColumn(j));
            }
            let sd = var.sqrt();
            values.extend(self.column(j).iter().map(|x| (x - mean) / sd));
        }
        debug_assert_eq!(values.len(), n * self.p);
        Ok(Self {
            n,
            p: self.p,
            values,
            standardized: true,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_is_rejected() {
        let x = DataMatrix::from_rows(&[vec![2.0, 1.0], vec![5.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(x.standardize(), Err(Error::ConstantColumn(1)));
        let y = DataMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(y.standardize(), Err(Error::ConstantColumn(0)));
    }

    #[test]
    fn two_point_columns() {
        let x = DataMatrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let s = x.standardize().unwrap();
        assert_eq!(s.column(0), &[-1.0, 1.0]);
        assert_eq!(s.column(1), &[-1.0, 1.0]);
        assert!(s.is_standardized());
        assert!(!x.is_standardized());
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(DataMatrix::from_rows(&[vec![1.0]]).is_err());
        assert!(DataMatrix::from_columns(3, 1, vec![1.0, f64::NAN, 0.0]).is_err());
        assert_eq!(
            DataMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]),
            Err(Error::RaggedRow(2))
        );
    }

    #[test]
    fn row_and_column_selection() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]])
            .unwrap();
        let r = x.select_rows(&[2, 0]).unwrap();
        assert_eq!(r.row(0), vec![7.0, 8.0, 9.0]);
        let c = x.select_columns(&[2, 0]).unwrap();
        assert_eq!(c.column(0), &[3.0, 6.0, 9.0]);
    }
}
