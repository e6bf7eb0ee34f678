//! Truncated formal power series in one and two variables.
//!
//! `Series1` is truncated at a fixed order N (N+1 coefficients). `Series2`
//! is truncated by total degree: it stores every coefficient of x^a y^b with
//! a + b <= N. All arithmetic is closed over the truncation, so exact scalar
//! coefficients stay exact through add/mul/invert/solve.
//!
//! Operations on two series require equal orders; mixing orders is a
//! programming error and panics.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Ring, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Series1<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Series1<S> {
    pub fn from_coeffs(coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        Series1 { coeffs }
    }

    pub fn zeros(order: usize) -> Self {
        Series1 { coeffs: vec![S::zero(); order + 1] }
    }

    pub fn constant(c: S, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(S::one(), order)
    }

    /// The variable itself, truncated at `order` (needs order >= 1).
    pub fn var(order: usize) -> Self {
        assert!(order >= 1, "order 0 cannot represent the variable");
        let mut s = Self::zeros(order);
        s.coeffs[1] = S::one();
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &S {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, k: usize, v: S) {
        self.coeffs[k] = v;
    }

    fn check_order(&self, rhs: &Self) {
        assert_eq!(self.order(), rhs.order(), "series order mismatch");
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.check_order(rhs);
        Series1 {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.check_order(rhs);
        Series1 {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Series1 { coeffs: self.coeffs.iter().map(|a| a.neg()).collect() }
    }

    pub fn scale(&self, s: &S) -> Self {
        Series1 { coeffs: self.coeffs.iter().map(|a| a.mul(s)).collect() }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, rhs: &Self) -> Self {
        self.check_order(rhs);
        let n = self.order();
        let mut out = vec![S::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().take(n + 1 - i).enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Series1 { coeffs: out }
    }

    /// Multiplicative inverse; requires an invertible constant term.
    /// For the float backend a constant term at or below 1e-14 is rejected.
    pub fn invert(&self) -> Result<Self> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() || (!S::EXACT && c0.pivot_mag() <= 1e-14) {
            return Err(Error::NotAUnit);
        }
        let inv0 = c0.try_inv()?;
        let n = self.order();
        let mut out = vec![S::zero(); n + 1];
        out[0] = inv0.clone();
        for k in 1..=n {
            // c_k = -inv0 * sum_{j=1..k} s_j c_{k-j}
            let mut acc = S::zero();
            for j in 1..=k {
                if self.coeffs[j].is_zero() {
                    continue;
                }
                acc = acc.add(&self.coeffs[j].mul(&out[k - j]));
            }
            out[k] = acc.mul(&inv0).neg();
        }
        Ok(Series1 { coeffs: out })
    }

    /// Conditioning flag for float division: a tiny but nonzero constant term
    /// is allowed; callers surface this in validation output.
    pub fn poorly_conditioned(&self) -> bool {
        !S::EXACT && self.coeffs[0].pivot_mag() < 1e-6
    }

    /// Square root with constant term 1:
    /// c_0 = 1, c_k = (s_k - sum_{j=1..k-1} c_j c_{k-j}) / 2.
    pub fn sqrt(&self) -> Result<Self> {
        if self.coeffs[0] != S::one() {
            return Err(Error::SqrtConstantTerm(format!("{:?}", self.coeffs[0])));
        }
        let n = self.order();
        let half = S::from_ratio(1, 2);
        let mut out = vec![S::zero(); n + 1];
        out[0] = S::one();
        for k in 1..=n {
            let mut acc = self.coeffs[k].clone();
            for j in 1..k {
                acc = acc.sub(&out[j].mul(&out[k - j]));
            }
            out[k] = acc.mul(&half);
        }
        Ok(Series1 { coeffs: out })
    }

    /// Divide by the variable. The constant term must be zero; the result
    /// is returned at order N-1.
    pub fn shift_down(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::ShiftDivide);
        }
        assert!(self.order() >= 1, "cannot shift an order-0 series down");
        Ok(Series1 { coeffs: self.coeffs[1..].to_vec() })
    }

    /// Multiply by the variable, truncating at the same order.
    pub fn shift_up(&self) -> Self {
        let n = self.order();
        let mut out = vec![S::zero(); n + 1];
        for k in 1..=n {
            out[k] = self.coeffs[k - 1].clone();
        }
        Series1 { coeffs: out }
    }

    pub fn truncated(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a series by truncation");
        Series1 { coeffs: self.coeffs[..=order].to_vec() }
    }

    /// Horner evaluation at a scalar point.
    pub fn eval(&self, x: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }
}

impl<S: Scalar> Ring for Series1<S> {
    fn zero_like(&self) -> Self {
        Series1::zeros(self.order())
    }
    fn one_like(&self) -> Self {
        Series1::one(self.order())
    }
    fn add(&self, rhs: &Self) -> Self {
        Series1::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Series1::sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Series1::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        Series1::neg(self)
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
    fn try_inv(&self) -> Result<Self> {
        self.invert()
    }
    fn pivot_mag(&self) -> f64 {
        self.coeffs[0].pivot_mag()
    }
}

/// Matrices over the univariate series ring.
pub type SeriesMatrix<S> = Matrix<Series1<S>>;

/// Bivariate series truncated by total degree: coefficients of x^a y^b with
/// a + b <= order, stored row-major by a.
#[derive(Clone, Debug, PartialEq)]
pub struct Series2<S> {
    order: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> Series2<S> {
    fn tri_len(order: usize) -> usize {
        (order + 1) * (order + 2) / 2
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        debug_assert!(a + b <= self.order);
        // offset of row a, then b within the row
        a * (self.order + 1) - a * (a.saturating_sub(1)) / 2 + b
    }

    pub fn zeros(order: usize) -> Self {
        Series2 { order, coeffs: vec![S::zero(); Self::tri_len(order)] }
    }

    pub fn constant(c: S, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(S::one(), order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, a: usize, b: usize) -> &S {
        &self.coeffs[self.idx(a, b)]
    }

    pub fn set_coeff(&mut self, a: usize, b: usize, v: S) {
        let i = self.idx(a, b);
        self.coeffs[i] = v;
    }

    /// Embed a univariate series as a function of the first variable.
    pub fn from_x(s: &Series1<S>, order: usize) -> Self {
        let mut out = Self::zeros(order);
        for a in 0..=order.min(s.order()) {
            out.set_coeff(a, 0, s.coeff(a).clone());
        }
        out
    }

    /// Embed a univariate series as a function of the second variable.
    pub fn from_y(s: &Series1<S>, order: usize) -> Self {
        let mut out = Self::zeros(order);
        for b in 0..=order.min(s.order()) {
            out.set_coeff(0, b, s.coeff(b).clone());
        }
        out
    }

    /// Coefficients of total degree n as a vector indexed by the x-power:
    /// entry m is the coefficient of x^m y^(n-m).
    pub fn slice_n(&self, n: usize) -> Vec<S> {
        assert!(n <= self.order, "slice beyond truncation order");
        (0..=n).map(|m| self.coeff(m, n - m).clone()).collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.order, rhs.order, "series order mismatch");
        Series2 {
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.order, rhs.order, "series order mismatch");
        Series2 {
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Series2 { order: self.order, coeffs: self.coeffs.iter().map(|a| a.neg()).collect() }
    }

    pub fn scale(&self, s: &S) -> Self {
        Series2 { order: self.order, coeffs: self.coeffs.iter().map(|a| a.mul(s)).collect() }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.order, rhs.order, "series order mismatch");
        let n = self.order;
        let mut out = Self::zeros(n);
        for a1 in 0..=n {
            for b1 in 0..=n - a1 {
                let f = self.coeff(a1, b1);
                if f.is_zero() {
                    continue;
                }
                for a2 in 0..=n - a1 - b1 {
                    for b2 in 0..=n - a1 - b1 - a2 {
                        let g = rhs.coeff(a2, b2);
                        if g.is_zero() {
                            continue;
                        }
                        let i = out.idx(a1 + a2, b1 + b2);
                        out.coeffs[i] = out.coeffs[i].add(&f.mul(g));
                    }
                }
            }
        }
        out
    }

    /// Multiply by the first variable, truncating at the same total order.
    pub fn mul_x(&self) -> Self {
        let n = self.order;
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in 0..=n - a - 1 {
                out.set_coeff(a + 1, b, self.coeff(a, b).clone());
            }
        }
        out
    }

    /// Multiply by the second variable, truncating at the same total order.
    pub fn mul_y(&self) -> Self {
        let n = self.order;
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in 0..=n - a - 1 {
                out.set_coeff(a, b + 1, self.coeff(a, b).clone());
            }
        }
        out
    }

    /// Inverse by total-degree recursion; requires an invertible constant.
    pub fn invert(&self) -> Result<Self> {
        let c0 = self.coeff(0, 0);
        if c0.is_zero() || (!S::EXACT && c0.pivot_mag() <= 1e-14) {
            return Err(Error::NotAUnit);
        }
        let inv0 = c0.try_inv()?;
        let n = self.order;
        let mut out = Self::zeros(n);
        out.set_coeff(0, 0, inv0.clone());
        for d in 1..=n {
            for a in 0..=d {
                let b = d - a;
                // sum over (c,e) strictly below (a,b) componentwise-or-equal,
                // excluding (a,b) itself
                let mut acc = S::zero();
                for c in 0..=a {
                    for e in 0..=b {
                        if c == a && e == b {
                            continue;
                        }
                        let f = self.coeff(a - c, b - e);
                        if f.is_zero() {
                            continue;
                        }
                        let g = out.coeff(c, e);
                        if g.is_zero() {
                            continue;
                        }
                        acc = acc.add(&f.mul(g));
                    }
                }
                let v = acc.mul(&inv0).neg();
                out.set_coeff(a, b, v);
            }
        }
        Ok(out)
    }

    /// Evaluate at a scalar point (x, y).
    pub fn eval(&self, x: &S, y: &S) -> S {
        let mut acc = S::zero();
        let mut xp = S::one();
        for a in 0..=self.order {
            let mut term = S::zero();
            let mut yp = S::one();
            for b in 0..=self.order - a {
                term = term.add(&self.coeff(a, b).mul(&yp));
                yp = yp.mul(y);
            }
            acc = acc.add(&term.mul(&xp));
            xp = xp.mul(x);
        }
        acc
    }

    pub fn truncated(&self, order: usize) -> Self {
        assert!(order <= self.order, "cannot extend a series by truncation");
        let mut out = Self::zeros(order);
        for a in 0..=order {
            for b in 0..=(order - a) {
                out.set_coeff(a, b, self.coeff(a, b).clone());
            }
        }
        out
    }

    /// Substitute y := x, collapsing to a univariate series of the same order.
    pub fn subst_diag(&self) -> Series1<S> {
        let mut out = Series1::zeros(self.order);
        for n in 0..=self.order {
            let mut acc = S::zero();
            for m in 0..=n {
                acc = acc.add(self.coeff(m, n - m));
            }
            out.set_coeff(n, acc);
        }
        out
    }
}

impl<S: Scalar> Ring for Series2<S> {
    fn zero_like(&self) -> Self {
        Series2::zeros(self.order)
    }
    fn one_like(&self) -> Self {
        Series2::one(self.order)
    }
    fn add(&self, rhs: &Self) -> Self {
        Series2::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Series2::sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Series2::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        Series2::neg(self)
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
    fn try_inv(&self) -> Result<Self> {
        self.invert()
    }
    fn pivot_mag(&self) -> f64 {
        self.coeff(0, 0).pivot_mag()
    }
}

/// Solve a linear system over the series ring (alias for the generic solver,
/// kept as the module-level entry point).
pub fn solve_linear<S: Scalar>(a: &SeriesMatrix<S>, b: &SeriesMatrix<S>) -> Result<SeriesMatrix<S>> {
    Matrix::solve(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn geom(order: usize) -> Series1<Rat> {
        // 1/(1-x) = 1 + x + x^2 + ...
        let mut s = Series1::zeros(order);
        for k in 0..=order {
            s.set_coeff(k, Rat::one());
        }
        s
    }

    #[test]
    fn invert_one_minus_x() {
        let one = Series1::<Rat>::one(8);
        let x = Series1::<Rat>::var(8);
        let inv = one.sub(&x).invert().unwrap();
        assert_eq!(inv, geom(8));
        // roundtrip
        assert_eq!(inv.invert().unwrap(), one.sub(&x));
    }

    #[test]
    fn invert_requires_unit() {
        let x = Series1::<Rat>::var(4);
        assert!(matches!(x.invert(), Err(Error::NotAUnit)));
    }

    #[test]
    fn sqrt_squares_back() {
        // s = 1 - x^2 (the Bernoulli discriminant shape)
        let mut s = Series1::<Rat>::one(10);
        s.set_coeff(2, Rat::from_int(-1));
        let r = s.sqrt().unwrap();
        assert_eq!(r.mul(&r), s);
        assert_eq!(*r.coeff(2), Rat::from_ratio(-1, 2));
        let bad = Series1::<Rat>::constant(Rat::from_int(2), 4);
        assert!(bad.sqrt().is_err());
    }

    #[test]
    fn shift_down_requires_zero_constant() {
        let x = Series1::<Rat>::var(5);
        let s = x.shift_down().unwrap();
        assert_eq!(s, Series1::one(4));
        assert!(Series1::<Rat>::one(5).shift_down().is_err());
    }

    #[test]
    #[should_panic(expected = "series order mismatch")]
    fn order_mismatch_panics() {
        let a = Series1::<Rat>::one(3);
        let b = Series1::<Rat>::one(4);
        let _ = a.add(&b);
    }

    #[test]
    fn series2_product_and_slice() {
        // (1/(1-x)) * (1/(1-y)) has all-ones coefficients
        let n = 6;
        let gx = Series2::from_x(&geom(n), n);
        let gy = Series2::from_y(&geom(n), n);
        let p = gx.mul(&gy);
        for k in 0..=n {
            assert_eq!(p.slice_n(k), vec![Rat::one(); k + 1]);
        }
    }

    #[test]
    fn series2_invert_roundtrip() {
        let n = 6;
        let mut f = Series2::<Rat>::one(n);
        f.set_coeff(1, 0, Rat::from_ratio(-1, 2));
        f.set_coeff(0, 1, Rat::from_ratio(1, 3));
        f.set_coeff(1, 1, Rat::from_ratio(1, 5));
        let g = f.invert().unwrap();
        assert_eq!(f.mul(&g), Series2::one(n));
    }

    #[test]
    fn series2_diag_substitution() {
        let n = 5;
        let gx = Series2::from_x(&geom(n), n);
        let gy = Series2::from_y(&geom(n), n);
        let p = gx.mul(&gy);
        let d = p.subst_diag();
        // 1/(1-x)^2 has coefficients n+1
        for k in 0..=n {
            assert_eq!(*d.coeff(k), Rat::from_int(k as i64 + 1));
        }
    }

    #[test]
    fn solve_linear_over_series() {
        // A = [[1, x],[0, 1-x]], B = I; check A * X = I
        let n = 8;
        let one = Series1::<Rat>::one(n);
        let x = Series1::<Rat>::var(n);
        let a = Matrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => one.clone(),
            (0, 1) => x.clone(),
            (1, 0) => Series1::zeros(n),
            _ => one.sub(&x),
        });
        let b = Matrix::identity_like(2, &one);
        let sol = solve_linear(&a, &b).unwrap();
        let prod = a.matmul(&sol);
        assert_eq!(prod, b);
    }
}
