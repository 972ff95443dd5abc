//! Minimal dense row-major matrix used for count tables and edge potentials.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Adds `value` to every entry.
    pub fn offset(&self, value: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x + value).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Each row divided by its sum. Rows summing to zero are left as zeros.
    pub fn row_normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            let row = out.row_mut(i);
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|x| *x /= s);
            }
        }
        out
    }

    /// Text block: `<name> <rows> <cols>` followed by one line per row.
    pub fn write_text(&self, name: &str, out: &mut String) {
        let _ = writeln!(out, "{name} {} {}", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }

    /// Parses a block written by [`Matrix::write_text`]. Returns the matrix
    /// and the number of lines consumed.
    pub fn read_text(name: &str, lines: &[&str]) -> std::result::Result<(Self, usize), String> {
        let header = lines.first().ok_or_else(|| format!("missing `{name}` header"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(name) {
            return Err(format!("expected `{name}` header, found `{header}`"));
        }
        let dims: Vec<usize> = parts
            .map(|p| p.parse::<usize>().map_err(|e| e.to_string()))
            .collect::<std::result::Result<_, _>>()?;
        let [rows, cols] = dims[..] else {
            return Err(format!("`{name}` header needs rows and cols"));
        };
        if lines.len() < rows + 1 {
            return Err(format!("`{name}` block truncated"));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for line in &lines[1..=rows] {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|p| p.parse::<f64>().map_err(|e| e.to_string()))
                .collect::<std::result::Result<_, _>>()?;
            if row.len() != cols {
                return Err(format!("`{name}` row has {} entries, expected {cols}", row.len()));
            }
            data.extend(row);
        }
        Ok((Self { rows, cols, data }, rows + 1))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl std::ops::AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data.iter_mut().zip(&rhs.data).for_each(|(a, b)| *a += b);
    }
}
