//! Small dense matrices: exact rational ones for structure computations and
//! `f64` ones for the spectral end of the pipeline.

use std::fmt;
use std::ops::{Index, IndexMut};

use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};

use super::rational::{format_rational, to_f64, Rational};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_columns(cols: &[Vec<Rational>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        m
    }

    pub fn diagonal(d: &[Rational]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(Rational::zero(), |acc, (a, b)| acc + a * b)).collect()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    /// Copy of the `h × w` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Self {
        let mut out = Self::zeros(h, w);
        for i in 0..h {
            for j in 0..w {
                out[(i, j)] = self[(r0 + i, c0 + j)].clone();
            }
        }
        out
    }

    pub fn block_diagonal(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            assert!(b.is_square(), "diagonal blocks must be square");
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(off + i, off + j)] = b[(i, j)].clone();
                }
            }
            off += b.rows;
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_float(&self) -> FloatMatrix {
        FloatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(to_f64).collect() }
    }

    /// Rows scaled to primitive integer vectors. Row scaling never changes the rank.
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let l = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
                row.iter().map(|q| q.numer() * (&l / q.denom())).collect()
            })
            .collect()
    }

    /// Rank by fraction-free (Bareiss) elimination over the integers.
    pub fn rank(&self) -> usize {
        let mut a = self.integer_rows();
        let (m, n) = (self.rows, self.cols);
        let mut rank = 0;
        let mut prev = BigInt::one();
        for col in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| !a[r][col].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for r in rank + 1..m {
                for c in col + 1..n {
                    let v = (&a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c]) / &prev;
                    a[r][c] = v;
                }
                a[r][col] = BigInt::zero();
            }
            prev = a[rank][col].clone();
            rank += 1;
        }
        rank
    }

    /// Exact determinant via Bareiss elimination.
    pub fn det(&self) -> Result<Rational> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("determinant of a {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Rational::one());
        }
        let mut a = self.integer_rows();
        // det(self) = det(a) / prod(row scales)
        let mut scale = Rational::one();
        for i in 0..n {
            let l = self.row(i).iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            scale *= Rational::from_integer(l);
        }
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
                return Ok(Rational::zero());
            };
            if p != k {
                a.swap(p, k);
                sign = -sign;
            }
            for r in k + 1..n {
                for c in k + 1..n {
                    let v = (&a[k][k] * &a[r][c] - &a[r][k] * &a[k][c]) / &prev;
                    a[r][c] = v;
                }
                a[r][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }
        Ok(Rational::from_integer(sign * &a[n - 1][n - 1]) / scale)
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("inverse of a {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let Some(p) = (k..n).find(|&r| !a[(r, k)].is_zero()) else {
                return Err(Error::Singular(format!("{n}x{n} exact matrix has no pivot in column {k}")));
            };
            if p != k {
                a.swap_rows(p, k);
                inv.swap_rows(p, k);
            }
            let piv = a[(k, k)].clone();
            for j in 0..n {
                a[(k, j)] = &a[(k, j)] / &piv;
                inv[(k, j)] = &inv[(k, j)] / &piv;
            }
            for r in 0..n {
                if r == k || a[(r, k)].is_zero() {
                    continue;
                }
                let f = a[(r, k)].clone();
                for j in 0..n {
                    let av = &a[(k, j)] * &f;
                    a[(r, j)] -= av;
                    let iv = &inv[(k, j)] * &f;
                    inv[(r, j)] -= iv;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Leading principal minors, all computed exactly.
    pub fn leading_minors(&self) -> Vec<Rational> {
        (1..=self.rows.min(self.cols)).map(|k| self.block(0, 0, k, k).det().expect("square block")).collect()
    }

    /// Sylvester's criterion: symmetric with all leading principal minors positive.
    pub fn is_positive_definite(&self) -> bool {
        self.is_symmetric() && self.leading_minors().iter().all(|m| m.is_positive())
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| self.row(i).iter().map(format_rational).collect()).collect()
    }
}

impl Index<(usize, usize)> for ExactMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ExactMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_strings()).finish()
    }
}

/// Rank of an exact matrix; no tolerance is involved.
pub fn mat_rank_exact(m: &ExactMatrix) -> usize {
    m.rank()
}

#[derive(Clone, PartialEq)]
pub struct FloatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FloatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
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

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Self {
        let mut out = Self::zeros(h, w);
        for i in 0..h {
            for j in 0..w {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    pub fn block_diagonal(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.rows;
        }
        out
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= rel_tol * scale))
    }

    /// LU factorisation with partial pivoting: returns (packed LU, permutation, sign).
    fn lu(&self) -> Option<(Self, Vec<usize>, f64)> {
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[(x, k)].abs().total_cmp(&a[(y, k)].abs()))?;
            if a[(p, k)].abs() <= f64::EPSILON * scale * n as f64 || a[(p, k)] == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                }
                perm.swap(p, k);
                sign = -sign;
            }
            for r in k + 1..n {
                let f = a[(r, k)] / a[(k, k)];
                a[(r, k)] = f;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(r, j)] -= f * v;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("determinant of a {}x{} matrix", self.rows, self.cols)));
        }
        match self.lu() {
            Some((lu, _, sign)) => Ok((0..self.rows).fold(sign, |acc, i| acc * lu[(i, i)])),
            None => Ok(0.0),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("inverse of a {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let (lu, perm, _) = self.lu().ok_or_else(|| Error::Singular(format!("{n}x{n} float matrix")))?;
        let mut inv = Self::zeros(n, n);
        for col in 0..n {
            // Solve L U x = P e_col.
            let mut x: Vec<f64> = perm.iter().map(|&p| if p == col { 1.0 } else { 0.0 }).collect();
            for i in 0..n {
                for j in 0..i {
                    x[i] -= lu[(i, j)] * x[j];
                }
            }
            for i in (0..n).rev() {
                for j in i + 1..n {
                    x[i] -= lu[(i, j)] * x[j];
                }
                x[i] /= lu[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }

    /// Lower Cholesky factor `L` with `self = L Lᵀ`.
    pub fn cholesky(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("cholesky of a {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotSpd(format!("cholesky pivot {j} is {d:e}")));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(l)
    }

    /// Inverse of a lower triangular matrix by forward substitution.
    pub fn lower_triangular_inverse(&self) -> Result<Self> {
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for col in 0..n {
            for i in col..n {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for k in col..i {
                    s -= self[(i, k)] * inv[(k, col)];
                }
                if self[(i, i)] == 0.0 {
                    return Err(Error::Singular("triangular matrix with zero diagonal".into()));
                }
                inv[(i, col)] = s / self[(i, i)];
            }
        }
        Ok(inv)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }
}

impl Index<(usize, usize)> for FloatMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for FloatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for FloatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}
