use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Rational;
use crate::error::{Error, Result};

pub type RationalVector = Vec<Rational>;

/// Dense row-major matrix over exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
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
        RationalMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[Rational]) -> RationalVector {
        assert_eq!(x.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .fold(Rational::zero(), |acc, v| acc + v)
            })
            .collect()
    }

    pub fn mul(&self, other: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = RationalMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: &Rational) -> RationalMatrix {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> Rational {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(Rational::zero(), |acc, a| acc + a.abs()))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|a| !a.is_negative())
    }

    /// Exact inverse via one linear solve per column.
    pub fn inverse(&self) -> Result<RationalMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut out = RationalMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[j] = Rational::one();
            let col = solve_linear_exact(self, &e)?;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(ToString::to_string).collect())
            .collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Solves `A x = b` exactly.
///
/// Each row of `[A | b]` is scaled to integers, then Bareiss fraction-free
/// elimination brings the system to upper-triangular form (pivot: the
/// nonzero candidate of smallest bit length in the column), and the
/// triangular system is back-substituted over the rationals.
pub fn solve_linear_exact(a: &RationalMatrix, b: &[Rational]) -> Result<RationalVector> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Malformed(format!(
            "solve_linear_exact: {}x{} matrix with right-hand side of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let m: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let l = a
                .row(i)
                .iter()
                .chain(std::iter::once(&b[i]))
                .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            a.row(i)
                .iter()
                .chain(std::iter::once(&b[i]))
                .map(|v| v.numer() * (&l / v.denom()))
                .collect()
        })
        .collect();

    let (y, d) = solve_integer_system(m)?;
    Ok(y.into_iter().map(|v| Rational::new(v, d.clone())).collect())
}

/// Solves an integer system given as augmented rows `[A | b]` by
/// fraction-free elimination. Returns `(y, d)` with `A (y / d) = b`; every
/// `y_i` is an integer because `d` is the determinant up to sign.
pub fn solve_integer_system(mut m: Vec<Vec<BigInt>>) -> Result<(Vec<BigInt>, BigInt)> {
    let n = m.len();
    if n == 0 {
        return Ok((Vec::new(), BigInt::one()));
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n)
            .filter(|&r| !m[r][k].is_zero())
            .min_by_key(|&r| m[r][k].bits())
            .ok_or(Error::SingularMatrix)?;
        m.swap(k, pivot);
        let (top, bottom) = m.split_at_mut(k + 1);
        let pk = &top[k];
        for row in bottom.iter_mut() {
            let f = row[k].clone();
            for j in (k + 1)..=n {
                let v = &pk[k] * &row[j] - &f * &pk[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }

    let d = prev;
    let mut y = vec![BigInt::zero(); n];
    for i in (0..n).rev() {
        let mut acc = &d * &m[i][n];
        for j in (i + 1)..n {
            if !m[i][j].is_zero() {
                acc -= &m[i][j] * &y[j];
            }
        }
        y[i] = acc / &m[i][i];
    }
    Ok((y, d))
}
