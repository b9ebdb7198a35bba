//! Row-compressed sparse matrix.
//!
//! The HetNet instances have thousands of links but each constraint row only
//! touches a handful of them, so rows are stored as `(column, value)` lists.
//! On the wire the matrix is always a dense nested array.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_err, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    /// Appends a row; zero coefficients are dropped and duplicate columns summed.
    pub fn push_row(&mut self, mut entries: Vec<(usize, f64)>) -> Result<()> {
        if let Some(&(c, _)) = entries.iter().find(|(c, _)| *c >= self.cols) {
            return dim_err(format!("column {c} out of range for {} columns", self.cols));
        }
        entries.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match merged.last_mut() {
                Some((lc, lv)) if *lc == c => *lv += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(merged);
        Ok(())
    }

    pub fn from_dense(dense: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut m = Self::new(cols);
        for (i, row) in dense.iter().enumerate() {
            if row.len() != cols {
                return dim_err(format!("row {i} has {} entries, expected {cols}", row.len()));
            }
            m.push_row(row.iter().copied().enumerate().collect())?;
        }
        Ok(m)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; self.cols];
                for &(c, v) in row {
                    dense[c] = v;
                }
                dense
            })
            .collect()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(c, a)| a * v[c]).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows.len()).map(|i| self.row_dot(i, v)).collect()
    }

    /// `Aᵀ y`
    pub fn mul_transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows.len());
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for &(c, a) in row {
                out[c] += a * yi;
            }
        }
        out
    }

    /// Re-declares the column count of a matrix with no rows. An empty dense
    /// array carries no width, so deserialized empty blocks need this.
    pub(crate) fn with_cols_if_empty(mut self, cols: usize) -> Self {
        if self.rows.is_empty() {
            self.cols = cols;
        }
        self
    }
}

impl Serialize for SparseMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_dense().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dense = Vec::<Vec<f64>>::deserialize(d)?;
        let cols = dense.first().map_or(0, Vec::len);
        SparseMatrix::from_dense(&dense, cols).map_err(serde::de::Error::custom)
    }
}
