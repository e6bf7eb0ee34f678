//! Dense matrices over any [`Ring`], with Gaussian elimination.
//!
//! The same routine solves numeric systems (f64, rationals) and systems over
//! truncated series rings; pivots are chosen by `pivot_mag`, which for series
//! is the magnitude of the constant term.

use crate::error::{Error, Result};
use crate::scalar::Ring;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Ring> Matrix<R> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn zeros_like(rows: usize, cols: usize, tmpl: &R) -> Self {
        Matrix::from_fn(rows, cols, |_, _| tmpl.zero_like())
    }

    pub fn identity_like(n: usize, tmpl: &R) -> Self {
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                tmpl.one_like()
            } else {
                tmpl.zero_like()
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &R {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut R {
        &mut self.data[i * self.cols + j]
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix shape mismatch");
        Matrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).add(rhs.at(i, j)))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix shape mismatch");
        Matrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).sub(rhs.at(i, j)))
    }

    pub fn neg(&self) -> Self {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).neg())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix shape mismatch");
        let z = self.data[0].zero_like();
        Matrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = z.clone();
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(rhs.at(k, j)));
            }
            acc
        })
    }

    /// Multiply by a column-vector given as a slice; returns a Vec.
    pub fn matvec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(self.cols, v.len(), "matrix shape mismatch");
        let z = self.data[0].zero_like();
        (0..self.rows)
            .map(|i| {
                let mut acc = z.clone();
                for k in 0..self.cols {
                    let a = self.at(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn scale(&self, s: &R) -> Self {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).mul(s))
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    /// Solve `A X = B` with partial pivoting, multiple right-hand sides.
    ///
    /// Over exact scalars this is exact; over a truncated series ring the
    /// pivot inverses exist whenever a pivot has an invertible constant term.
    pub fn solve(a: &Self, b: &Self) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Shape(format!("solve needs square A, got {}x{}", a.rows, a.cols)));
        }
        if a.rows != b.rows {
            return Err(Error::Shape(format!(
                "A is {}x{} but B has {} rows",
                a.rows, a.cols, b.rows
            )));
        }
        let n = a.rows;
        let m = b.cols;
        let mut aw = a.clone();
        let mut bw = b.clone();
        let mut pivot_inv: Vec<Option<R>> = vec![None; n];
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| {
                    aw.at(i, k)
                        .pivot_mag()
                        .partial_cmp(&aw.at(j, k).pivot_mag())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if piv != k {
                for c in 0..n {
                    aw.data.swap(k * n + c, piv * n + c);
                }
                for c in 0..m {
                    bw.data.swap(k * m + c, piv * m + c);
                }
            }
            let inv = aw.at(k, k).try_inv().map_err(|_| Error::SingularSystem)?;
            for r in k + 1..n {
                if aw.at(r, k).is_zero() {
                    continue;
                }
                let f = aw.at(r, k).mul(&inv);
                for c in k..n {
                    let v = aw.at(r, c).sub(&f.mul(aw.at(k, c)));
                    aw.set(r, c, v);
                }
                for c in 0..m {
                    let v = bw.at(r, c).sub(&f.mul(bw.at(k, c)));
                    bw.set(r, c, v);
                }
            }
            pivot_inv[k] = Some(inv);
        }
        let z = a.data[0].zero_like();
        let mut x = Matrix::zeros_like(n, m, &z);
        for k in (0..n).rev() {
            let inv = pivot_inv[k].take().unwrap();
            for c in 0..m {
                let mut acc = bw.at(k, c).clone();
                for j in k + 1..n {
                    if aw.at(k, j).is_zero() {
                        continue;
                    }
                    acc = acc.sub(&aw.at(k, j).mul(x.at(j, c)));
                }
                x.set(k, c, acc.mul(&inv));
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        let id = Matrix::identity_like(self.rows, &self.data[0]);
        Matrix::solve(self, &id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Rat, Scalar};

    #[test]
    fn solve_exact_rational() {
        // [[2,1],[1,3]] x = [[5],[10]] -> x = [1, 3]
        let a = Matrix::from_fn(2, 2, |i, j| {
            Rat::from_int([[2, 1], [1, 3]][i][j])
        });
        let b = Matrix::from_fn(2, 1, |i, _| Rat::from_int([5, 10][i]));
        let x = Matrix::solve(&a, &b).unwrap();
        assert_eq!(*x.at(0, 0), Rat::from_int(1));
        assert_eq!(*x.at(1, 0), Rat::from_int(3));
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_fn(2, 2, |_, j| Rat::from_int([1, 2][j]));
        let b = Matrix::identity_like(2, &Rat::one());
        assert!(matches!(Matrix::solve(&a, &b), Err(Error::SingularSystem)));
    }

    #[test]
    fn inverse_roundtrip_f64() {
        let a = Matrix::from_fn(3, 3, |i, j| {
            [[4.0, 1.0, 0.3], [0.2, 5.0, 1.1], [0.0, 2.0, 3.0]][i][j]
        });
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.at(i, j) - want).abs() < 1e-12);
            }
        }
    }
}
