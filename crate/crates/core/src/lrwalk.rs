//! Bounded-jump integer walks.
//!
//! A walk with jumps in {-L..R} has a canonical three-band split of the
//! integers around the band {0..M-1}, M = max(L, R). Landing laws across the
//! band edges are shift-invariant, so the kernel systems collapse to M
//! unknowns with coefficients built from the free walk's Green kernel
//! Gamma_d(x) = sum_n P{S_n = d} x^n. Gamma comes from two independent
//! routes: exact jump convolution (series mode) and a residue formula over
//! the roots of the characteristic polynomial (numeric mode).

use num::complex::Complex64;

use crate::chain::{JumpDistribution, TargetSet};
use crate::error::{Error, Result};
use crate::genfun::{geometric_gf, BivRing, GfRing};
use crate::linalg::Matrix;
use crate::scalar::{Ring, Scalar};
use crate::series::{Series1, Series2};

/// Characteristic polynomial z^L - x * sum_k pi_{k-L} z^k at a fixed x.
pub struct CharPoly {
    coeffs: Vec<f64>,
}

impl CharPoly {
    pub fn new(jump: &JumpDistribution<f64>, x: f64) -> Self {
        let l = jump.l();
        let deg = jump.l() + jump.r();
        let coeffs = (0..=deg)
            .map(|k| {
                let mut c = -x * jump.pi(k as i64 - l as i64);
                if k == l {
                    c += 1.0;
                }
                c
            })
            .collect();
        CharPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * z + c * k as f64;
        }
        acc
    }
}

/// Roots of the characteristic polynomial split by modulus.
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

const UNIT_CIRCLE_GUARD: f64 = 1e-9;
const DK_TOL: f64 = 1e-13;
const DK_MAX_ITERS: usize = 200;

/// Find and classify all roots by Durand-Kerner iteration.
///
/// A vanishing top coefficient (pi_R = 0) reduces the degree; vanishing low
/// coefficients (pi_{-L} = 0) contribute exact zero roots, classified inside.
pub fn solve_roots(jump: &JumpDistribution<f64>, x: f64) -> Result<RootSet> {
    let poly = CharPoly::new(jump, x);
    let mut coeffs = poly.coeffs().to_vec();
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
        coeffs.pop();
    }
    if coeffs.len() == 1 {
        return Err(Error::Invalid("characteristic polynomial is constant".into()));
    }
    let mut zero_roots = 0usize;
    while zero_roots + 1 < coeffs.len() && coeffs[zero_roots] == 0.0 {
        zero_roots += 1;
    }
    let lead = *coeffs.last().unwrap();
    let monic: Vec<f64> = coeffs[zero_roots..].iter().map(|c| c / lead).collect();
    let d = monic.len() - 1;

    let eval_monic = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };

    let seed = Complex64::new(0.4, 0.9);
    let mut zs: Vec<Complex64> = (0..d).map(|k| seed.powu(k as u32 + 1)).collect();
    let mut iters = 0usize;
    while iters < DK_MAX_ITERS {
        iters += 1;
        let mut worst = 0.0f64;
        for i in 0..d {
            let zi = zs[i];
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, &zj) in zs.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            let step = eval_monic(zi) / denom;
            zs[i] = zi - step;
            worst = worst.max(step.norm());
        }
        if worst <= DK_TOL {
            break;
        }
    }

    let mut roots = vec![Complex64::new(0.0, 0.0); zero_roots];
    roots.extend(zs);
    let residuals: Vec<f64> = roots
        .iter()
        .map(|&z| (z.powu(zero_roots as u32) * eval_monic(z)).norm())
        .collect();
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    if max_residual > 1e-10 {
        return Err(Error::RootNonConvergence { residual: max_residual, iters });
    }
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (idx, z) in roots.iter().enumerate() {
        let band = (z.norm() - 1.0).abs();
        if band <= UNIT_CIRCLE_GUARD {
            return Err(Error::IllSeparatedRoots { band });
        }
        if z.norm() < 1.0 {
            inside.push(idx);
        } else {
            outside.push(idx);
        }
    }
    Ok(RootSet { roots, inside, outside, residuals, max_residual })
}

/// Green values Gamma_d over a displacement band d in [jmin, jmax].
#[derive(Clone)]
pub struct GammaKernel<R> {
    jmin: i64,
    vals: Vec<R>,
}

impl<R> GammaKernel<R> {
    pub fn new(jmin: i64, vals: Vec<R>) -> Self {
        GammaKernel { jmin, vals }
    }

    pub fn get(&self, d: i64) -> &R {
        let idx = d - self.jmin;
        assert!(
            idx >= 0 && (idx as usize) < self.vals.len(),
            "displacement {d} outside the computed band"
        );
        &self.vals[idx as usize]
    }
}

fn gamma_from_residues(
    jump: &JumpDistribution<f64>,
    x: f64,
    dmax: i64,
    symmetric_shortcut: bool,
) -> Result<GammaKernel<f64>> {
    if x == 0.0 {
        let vals = (-dmax..=dmax).map(|d| if d == 0 { 1.0 } else { 0.0 }).collect();
        return Ok(GammaKernel::new(-dmax, vals));
    }
    let poly = CharPoly::new(jump, x);
    let rs = solve_roots(jump, x)?;
    let inv_deriv = |idx: usize| -> Result<Complex64> {
        let z = rs.roots[idx];
        let pd = poly.deriv(z);
        if pd.norm() < 1e-12 {
            return Err(Error::NearMultipleRoot { deriv: pd.norm(), z: format!("{z}") });
        }
        Ok(1.0 / pd)
    };
    let l = jump.l() as i64;
    let m = jump.m() as i64;
    let mut vals = Vec::with_capacity((2 * dmax + 1) as usize);
    if symmetric_shortcut {
        // roots pair into inverses, so the inside set alone carries the law
        let weights: Vec<(Complex64, Complex64)> = rs
            .inside
            .iter()
            .map(|&idx| Ok((rs.roots[idx], rs.roots[idx].powi((m - 1) as i32) * inv_deriv(idx)?)))
            .collect::<Result<_>>()?;
        for d in -dmax..=dmax {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(z, w) in &weights {
                acc += w * z.powi(d.unsigned_abs() as i32);
            }
            vals.push(acc.re);
        }
    } else {
        let inv_in: Vec<(Complex64, Complex64)> = rs
            .inside
            .iter()
            .map(|&idx| Ok((rs.roots[idx], inv_deriv(idx)?)))
            .collect::<Result<_>>()?;
        let inv_out: Vec<(Complex64, Complex64)> = rs
            .outside
            .iter()
            .map(|&idx| Ok((rs.roots[idx], inv_deriv(idx)?)))
            .collect::<Result<_>>()?;
        for d in -dmax..=dmax {
            let e = (-d + l - 1) as i32;
            let mut acc = Complex64::new(0.0, 0.0);
            if d < 0 {
                for &(z, w) in &inv_in {
                    acc += z.powi(e) * w;
                }
            } else {
                for &(z, w) in &inv_out {
                    acc -= z.powi(e) * w;
                }
            }
            vals.push(acc.re);
        }
    }
    Ok(GammaKernel::new(-dmax, vals))
}

/// Gamma by residues over the inside/outside root split.
pub fn gamma_numeric(jump: &JumpDistribution<f64>, x: f64, dmax: i64) -> Result<GammaKernel<f64>> {
    gamma_from_residues(jump, x, dmax, false)
}

/// Gamma for symmetric walks using only the inside roots.
pub fn gamma_numeric_symmetric(
    jump: &JumpDistribution<f64>,
    x: f64,
    dmax: i64,
) -> Result<GammaKernel<f64>> {
    if !jump.is_symmetric() {
        return Err(Error::Invalid("inside-root shortcut needs a symmetric jump law".into()));
    }
    gamma_from_residues(jump, x, dmax, true)
}

/// Gamma as exact series: coefficient m of Gamma_d is P{S_m = d}, by m-fold
/// jump convolution. Never touches roots.
pub fn gamma_series<S: Scalar>(
    jump: &JumpDistribution<S>,
    order: usize,
    dmax: i64,
) -> GammaKernel<Series1<S>> {
    let l = jump.l();
    let r = jump.r();
    let zero = S::zero();
    let loff = order * l;
    let width = order * (l + r) + 1;
    let mut dist = vec![zero.clone(); width];
    dist[loff] = S::one();
    let mut out: Vec<Series1<S>> = vec![Series1::zeros(order); (2 * dmax + 1) as usize];
    for n in 0..=order {
        for d in -dmax..=dmax {
            let idx = loff as i64 + d;
            if idx >= 0 && (idx as usize) < width {
                let v = dist[idx as usize].clone();
                out[(d + dmax) as usize].set_coeff(n, v);
            }
        }
        if n == order {
            break;
        }
        let mut next = vec![zero.clone(); width];
        for (pos, mass) in dist.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for d in -(l as i64)..=(r as i64) {
                let p = jump.pi(d);
                if p.is_zero() {
                    continue;
                }
                let to = pos as i64 + d;
                if to >= 0 && (to as usize) < width {
                    let bump = next[to as usize].add(&mass.mul(&p));
                    next[to as usize] = bump;
                }
            }
        }
        dist = next;
    }
    GammaKernel::new(-dmax, out)
}

/// The displacement-indexed blocks of the band system, all in one variable.
///
/// Matrices are M x M over mid-band row/column indices a, b in 0..M-1 except
/// `p_dag` (M x 2M). Offsets: `p` and `gram` use b - a, the minus variants
/// b - a - M, the plus variants b - a + M, `gram_eq` b - a - 2M and
/// `gram_ddag` b - a + 2M. G vectors hold target column sums for the states
/// of the named band.
pub struct LrMatrixSet<U> {
    pub m: usize,
    pub p: Matrix<U>,
    pub p_minus: Matrix<U>,
    pub p_plus: Matrix<U>,
    pub p_dag: Matrix<U>,
    pub gram: Matrix<U>,
    pub gram_minus: Matrix<U>,
    pub gram_plus: Matrix<U>,
    pub gram_eq: Matrix<U>,
    pub gram_ddag: Matrix<U>,
    pub g_mid: Vec<U>,
    pub g_minus: Vec<U>,
    pub g_plus: Vec<U>,
    pub g_dag: Vec<U>,
    pub one_f: Vec<U>,
    pub one_f_pm: Vec<U>,
}

/// One-step mass out of the mid band from mid state i.
pub fn varpi_lr<S: Scalar>(jump: &JumpDistribution<S>, i: usize) -> S {
    let m = jump.m() as i64;
    let mut acc = S::zero();
    for d in -(jump.l() as i64)..=(jump.r() as i64) {
        let to = i as i64 + d;
        if to < 0 || to >= m {
            acc = acc.add(&jump.pi(d));
        }
    }
    acc
}

pub fn build_matrices<S: Scalar, U: GfRing<S>>(
    jump: &JumpDistribution<S>,
    target: &TargetSet,
    gamma: &GammaKernel<U>,
    var: &U,
) -> Result<LrMatrixSet<U>> {
    let m = jump.m();
    let lift = |s: &S| U::lift(s, var);
    let pi_mat = |offset: i64, cols: usize| {
        Matrix::from_fn(m, cols, |a, b| lift(&jump.pi(b as i64 - a as i64 + offset)))
    };
    let gam_mat =
        |offset: i64| Matrix::from_fn(m, m, |a, b| gamma.get(b as i64 - a as i64 + offset).clone());
    let g_state = |state: i64| -> Result<U> {
        match target {
            TargetSet::All => geometric_gf(var),
            TargetSet::Finite(set) => {
                let mut acc = var.zero_like();
                for &f in set {
                    acc = acc.add(gamma.get(f - state));
                }
                Ok(acc)
            }
        }
    };
    let g_band = |first: i64, len: usize| -> Result<Vec<U>> {
        (0..len as i64).map(|b| g_state(first + b)).collect()
    };
    let mi = m as i64;
    let one_f: Vec<U> = (0..m)
        .map(|i| if target.contains(i as i64) { lift(&S::one()) } else { var.zero_like() })
        .collect();
    let one_f_pm: Vec<U> = (0..m)
        .map(|i| {
            if target.contains(i as i64) {
                lift(&varpi_lr(jump, i))
            } else {
                var.zero_like()
            }
        })
        .collect();
    Ok(LrMatrixSet {
        m,
        p: pi_mat(0, m),
        p_minus: pi_mat(-mi, m),
        p_plus: pi_mat(mi, m),
        p_dag: pi_mat(0, 2 * m),
        gram: gam_mat(0),
        gram_minus: gam_mat(-mi),
        gram_plus: gam_mat(mi),
        gram_eq: gam_mat(-2 * mi),
        gram_ddag: gam_mat(2 * mi),
        g_mid: g_band(0, m)?,
        g_minus: g_band(-mi, m)?,
        g_plus: g_band(mi, m)?,
        g_dag: g_band(0, 2 * m)?,
        one_f,
        one_f_pm,
    })
}

fn vec_sub<R: Ring>(a: &[R], b: &[R]) -> Vec<R> {
    a.iter().zip(b).map(|(u, v)| u.sub(v)).collect()
}

fn embed_mat_x<S: Scalar, B: BivRing<S>>(m: &Matrix<B::Uni>, tmpl: &B) -> Matrix<B> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| B::embed_x(m.at(i, j), tmpl))
}

fn embed_mat_y<S: Scalar, B: BivRing<S>>(m: &Matrix<B::Uni>, tmpl: &B) -> Matrix<B> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| B::embed_y(m.at(i, j), tmpl))
}

fn solve_column<B: Ring>(a: &Matrix<B>, rhs: &[B]) -> Result<Vec<B>> {
    let col = Matrix::from_fn(rhs.len(), 1, |i, _| rhs[i].clone());
    let sol = Matrix::solve(a, &col)?;
    Ok((0..rhs.len()).map(|i| sol.at(i, 0).clone()).collect())
}

/// Landing-count kernel for mid-band starts from prebuilt blocks.
///
/// System matrix I - x(P + P_+ Gm_- Gm^-1 |_x + P_- Gm_+ Gm^-1 |_y); the rhs
/// couples the x-side matrix to the never-below boundary column and adds the
/// never-above boundary column.
pub fn k_lr_with<S: Scalar, B: BivRing<S>>(
    bx: &LrMatrixSet<B::Uni>,
    by: &LrMatrixSet<B::Uni>,
    x: &B::Uni,
    y: &B::Uni,
    tmpl: &B,
) -> Result<Vec<B>> {
    let m = bx.m;
    let hplus = bx.gram_minus.matmul(&bx.gram.inverse()?);
    let dplus = bx.p_plus.matmul(&hplus);
    let hminus = by.gram_plus.matmul(&by.gram.inverse()?);
    let dminus = by.p_minus.matmul(&hminus);

    let ax = Matrix::identity_like(m, &x.one_like()).sub(&bx.p.add(&dplus).scale(x));
    let kx0 = vec_sub(&bx.g_mid, &hplus.matvec(&bx.g_minus));
    let k0y = {
        let direct = by.p_dag.matvec(&by.g_dag);
        let through = dminus.matvec(&by.g_mid);
        (0..m)
            .map(|i| by.g_mid[i].sub(&y.mul(&direct[i])).sub(&y.mul(&through[i])))
            .collect::<Vec<_>>()
    };

    let xb = B::embed_x(x, tmpl);
    let system = embed_mat_x(&ax, tmpl).sub(&embed_mat_y(&dminus, tmpl).scale(&xb));
    let ax_kx0 = ax.matvec(&kx0);
    let rhs: Vec<B> = (0..m)
        .map(|i| {
            B::embed_x(&ax_kx0[i], tmpl)
                .add(&B::embed_y(&k0y[i], tmpl))
                .sub(&B::embed_x(&bx.one_f[i], tmpl))
        })
        .collect();
    solve_column(&system, &rhs)
}

/// Modified-count kernel (first step leaves the mid band) from prebuilt
/// blocks.
///
/// The re-entry blocks compose with the plain mid resolvent (I - xP)^-1; the
/// leaving step's probability is carried by the next conditioned kernel, so
/// no exit-mass factor appears in the composition.
pub fn ktilde_lr_with<S: Scalar, B: BivRing<S>>(
    bx: &LrMatrixSet<B::Uni>,
    by: &LrMatrixSet<B::Uni>,
    x: &B::Uni,
    y: &B::Uni,
    tmpl: &B,
) -> Result<Vec<B>> {
    let m = bx.m;
    let gram_inv_x = bx.gram.inverse()?;
    let gram_inv_y = by.gram.inverse()?;
    let dplus = bx.p_plus.matmul(&bx.gram_minus.matmul(&gram_inv_x));
    let dminus = by.p_minus.matmul(&by.gram_plus.matmul(&gram_inv_y));
    let resx = Matrix::identity_like(m, &x.one_like()).sub(&bx.p.scale(x)).inverse()?;
    let resy = Matrix::identity_like(m, &y.one_like()).sub(&by.p.scale(y)).inverse()?;
    let bxm = Matrix::identity_like(m, &x.one_like()).sub(&dplus.matmul(&resx).scale(x));
    let bym = Matrix::identity_like(m, &y.one_like()).sub(&dminus.matmul(&resy).scale(y));

    let ktx0 = {
        let reach = vec_sub(&bx.g_plus, &bx.gram_eq.matmul(&gram_inv_x).matvec(&bx.g_minus));
        let up = bx.p_plus.matvec(&reach);
        (0..m).map(|i| bx.one_f_pm[i].add(&x.mul(&up[i]))).collect::<Vec<_>>()
    };
    let kt0y = {
        let reach = vec_sub(&by.g_minus, &by.gram_ddag.matmul(&gram_inv_y).matvec(&by.g_plus));
        let down = by.p_minus.matvec(&reach);
        (0..m).map(|i| by.one_f_pm[i].add(&y.mul(&down[i]))).collect::<Vec<_>>()
    };

    let system = {
        let ex = embed_mat_x(&bxm, tmpl);
        let ey = embed_mat_y(&bym, tmpl);
        ex.add(&ey).sub(&Matrix::identity_like(m, &tmpl.one_like()))
    };
    let bx_ktx0 = bxm.matvec(&ktx0);
    let by_kt0y = bym.matvec(&kt0y);
    let rhs: Vec<B> = (0..m)
        .map(|i| {
            B::embed_x(&bx_ktx0[i], tmpl)
                .add(&B::embed_y(&by_kt0y[i], tmpl))
                .sub(&B::embed_x(&bx.one_f_pm[i], tmpl))
        })
        .collect();
    solve_column(&system, &rhs)
}

fn band_width(jump_m: i64, target: &TargetSet) -> i64 {
    let span = match target {
        TargetSet::All => 0,
        TargetSet::Finite(set) => set.iter().map(|f| f.unsigned_abs()).max().unwrap_or(0) as i64,
    };
    3 * jump_m + span
}

pub fn k_lr_series<S: Scalar>(
    jump: &JumpDistribution<S>,
    target: &TargetSet,
    order: usize,
) -> Result<Vec<Series2<S>>> {
    // a bare variable needs order >= 1; compute there and truncate back
    let ord = order.max(1);
    let gamma = gamma_series(jump, ord, band_width(jump.m() as i64, target));
    let var = Series1::<S>::var(ord);
    let blocks = build_matrices(jump, target, &gamma, &var)?;
    let tmpl = Series2::<S>::zeros(ord);
    let ks = k_lr_with::<S, Series2<S>>(&blocks, &blocks, &var, &var, &tmpl)?;
    Ok(ks.into_iter().map(|k| if ord > order { k.truncated(order) } else { k }).collect())
}

pub fn ktilde_lr_series<S: Scalar>(
    jump: &JumpDistribution<S>,
    target: &TargetSet,
    order: usize,
) -> Result<Vec<Series2<S>>> {
    let ord = order.max(1);
    let gamma = gamma_series(jump, ord, band_width(jump.m() as i64, target));
    let var = Series1::<S>::var(ord);
    let blocks = build_matrices(jump, target, &gamma, &var)?;
    let tmpl = Series2::<S>::zeros(ord);
    let ks = ktilde_lr_with::<S, Series2<S>>(&blocks, &blocks, &var, &var, &tmpl)?;
    Ok(ks.into_iter().map(|k| if ord > order { k.truncated(order) } else { k }).collect())
}

pub fn k_lr_numeric(
    jump: &JumpDistribution<f64>,
    target: &TargetSet,
    x: f64,
    y: f64,
) -> Result<Vec<f64>> {
    let w = band_width(jump.m() as i64, target);
    let gx = gamma_numeric(jump, x, w)?;
    let gy = gamma_numeric(jump, y, w)?;
    let bx = build_matrices(jump, target, &gx, &x)?;
    let by = build_matrices(jump, target, &gy, &y)?;
    k_lr_with::<f64, f64>(&bx, &by, &x, &y, &0.0)
}

pub fn ktilde_lr_numeric(
    jump: &JumpDistribution<f64>,
    target: &TargetSet,
    x: f64,
    y: f64,
) -> Result<Vec<f64>> {
    let w = band_width(jump.m() as i64, target);
    let gx = gamma_numeric(jump, x, w)?;
    let gy = gamma_numeric(jump, y, w)?;
    let bx = build_matrices(jump, target, &gx, &x)?;
    let by = build_matrices(jump, target, &gy, &y)?;
    ktilde_lr_with::<f64, f64>(&bx, &by, &x, &y, &0.0)
}

fn sym22_probs(jump: &JumpDistribution<f64>) -> Result<(f64, f64, f64)> {
    if jump.l() != 2 || jump.r() != 2 || !jump.is_symmetric() {
        return Err(Error::Invalid("explicit path needs a symmetric walk with L = R = 2".into()));
    }
    let pi2 = jump.pi(2);
    if pi2 <= 0.0 {
        return Err(Error::Invalid("explicit path divides by the edge mass pi_2".into()));
    }
    Ok((jump.pi(0), jump.pi(1), pi2))
}

/// Closed-form root pair of the symmetric two-bounded walk, as printed.
///
/// The second value, taken with the plus branch, evaluates to the partner of
/// modulus above one; its reciprocal is the inside root of the same
/// palindromic quadratic factor.
pub fn explicit_roots22(jump: &JumpDistribution<f64>, x: f64) -> Result<(f64, f64)> {
    let (_, pi1, pi2) = sym22_probs(jump)?;
    let delta = (pi1 + 4.0 * pi2).powi(2) + 4.0 * pi2 * (1.0 / x - 1.0);
    let sd = delta.sqrt();
    let base = pi1 * pi1 + 4.0 * pi1 * pi2 - 2.0 * pi2 + 2.0 * pi2 / x;
    let z1 = -(pi1 - sd + f64::sqrt(2.0) * (base - pi1 * sd).max(0.0).sqrt()) / (4.0 * pi2);
    let z2 = -(pi1 + sd + f64::sqrt(2.0) * (base + pi1 * sd).max(0.0).sqrt()) / (4.0 * pi2);
    Ok((z1, z2))
}

/// Gamma_0..Gamma_jmax for the symmetric two-bounded walk from the closed
/// root pair.
fn gamma22(jump: &JumpDistribution<f64>, x: f64, jmax: usize) -> Result<Vec<f64>> {
    let (_, pi1, pi2) = sym22_probs(jump)?;
    let (z1, mut z2) = explicit_roots22(jump, x)?;
    if z2.abs() > 1.0 {
        z2 = 1.0 / z2;
    }
    let sd = ((pi1 + 4.0 * pi2).powi(2) + 4.0 * pi2 * (1.0 / x - 1.0)).sqrt();
    let w1 = 1.0 / (1.0 - z1 * z1);
    let w2 = 1.0 / (1.0 - z2 * z2);
    Ok((0..=jmax)
        .map(|j| (z1.powi(j as i32 + 1) * w1 - z2.powi(j as i32 + 1) * w2) / (x * sd))
        .collect())
}

/// Both kernels for the symmetric two-bounded walk on the full line.
pub struct Sym22Kernels {
    pub k: Vec<f64>,
    pub ktilde: Vec<f64>,
}

/// Explicit 2 x 2 path: every block entry is a hand-expanded polynomial in
/// Gamma_0..Gamma_5 rather than a matrix product. Full-line target only.
///
/// One printed entry of the upper tilde block carries a pi_2 x where
/// expanding the defining product gives pi_1 x; the expansion below keeps the
/// product's value, and a unit test pins the difference.
pub fn symmetric22(
    jump: &JumpDistribution<f64>,
    target: &TargetSet,
    x: f64,
    y: f64,
) -> Result<Sym22Kernels> {
    if !matches!(target, TargetSet::All) {
        return Err(Error::Invalid("explicit path covers the full-line target only".into()));
    }
    let (pi0, pi1, pi2) = sym22_probs(jump)?;
    let gx = gamma22(jump, x, 5)?;
    let gy = gamma22(jump, y, 5)?;
    let det = |g: &[f64]| g[0] * g[0] - g[1] * g[1];
    let dx = det(&gx);
    let dy = det(&gy);

    let dplus_entries = |g: &[f64]| {
        [
            [pi2 * (g[0] * g[2] - g[1] * g[1]), pi2 * (g[0] * g[1] - g[1] * g[2])],
            [
                pi1 * (g[0] * g[2] - g[1] * g[1]) + pi2 * (g[0] * g[3] - g[1] * g[2]),
                pi1 * (g[0] * g[1] - g[1] * g[2]) + pi2 * (g[0] * g[2] - g[1] * g[3]),
            ],
        ]
    };
    let dminus_entries = |g: &[f64]| {
        [
            [
                pi1 * (g[0] * g[1] - g[1] * g[2]) + pi2 * (g[0] * g[2] - g[1] * g[3]),
                pi1 * (g[0] * g[2] - g[1] * g[1]) + pi2 * (g[0] * g[3] - g[1] * g[2]),
            ],
            [pi2 * (g[0] * g[1] - g[1] * g[2]), pi2 * (g[0] * g[2] - g[1] * g[1])],
        ]
    };
    let dp = dplus_entries(&gx);
    let dm = dminus_entries(&gy);
    let p = Matrix::from_fn(2, 2, |a, b| if a == b { pi0 } else { pi1 });
    let dp_mat = Matrix::from_fn(2, 2, |a, b| dp[a][b] / dx);
    let dm_mat = Matrix::from_fn(2, 2, |a, b| dm[a][b] / dy);
    let system_k = Matrix::identity_like(2, &1.0).sub(&p.add(&dp_mat).add(&dm_mat).scale(&x));

    let n_minus = [dx - (gx[0] - gx[1]) * (gx[1] + gx[2]), dx - (gx[0] - gx[1]) * (gx[2] + gx[3])];
    let n_dag = [
        (1.0 - (1.0 - pi1 - pi2) * y) * dy
            - y * (gy[0] - gy[1]) * (pi1 * gy[1] + (pi1 + pi2) * gy[2] + pi2 * gy[3]),
        (1.0 - (1.0 - pi2) * y) * dy - pi2 * y * (gy[0] - gy[1]) * (gy[1] + gy[2]),
    ];
    let ax = Matrix::identity_like(2, &1.0).sub(&p.add(&dp_mat).scale(&x));
    let ax_nm = ax.matvec(&[n_minus[0] / dx, n_minus[1] / dx]);
    let rhs_k: Vec<f64> = (0..2)
        .map(|i| ax_nm[i] / (1.0 - x) + n_dag[i] / (dy * (1.0 - y)) - 1.0)
        .collect();
    let k = solve_column(&system_k, &rhs_k)?;

    let delta_mid = |u: f64| (pi0 * pi0 - pi1 * pi1) * u * u - 2.0 * pi0 * u + 1.0;
    let dmx = delta_mid(x);
    let dmy = delta_mid(y);
    let tdp = {
        let g = &gx;
        let a = 1.0 - pi0 * x;
        [
            [
                pi2 * (pi1 * x * g[0] * g[1] + a * g[0] * g[2] - a * g[1] * g[1]
                    - pi1 * x * g[1] * g[2]),
                pi2 * (a * g[0] * g[1] + pi1 * x * g[0] * g[2]
                    - pi1 * x * g[1] * g[1]
                    - a * g[1] * g[2]),
            ],
            [
                pi1 * pi1 * x * g[0] * g[1]
                    + pi1 * (1.0 + (pi2 - pi0) * x) * g[0] * g[2]
                    + pi2 * a * g[0] * g[3]
                    - pi1 * a * g[1] * g[1]
                    - (pi2 + (pi1 * pi1 - pi0 * pi2) * x) * g[1] * g[2]
                    - pi1 * pi2 * x * g[1] * g[3],
                pi1 * a * g[0] * g[1]
                    + (pi2 + (pi1 * pi1 - pi0 * pi2) * x) * g[0] * g[2]
                    + pi1 * pi2 * x * g[0] * g[3]
                    - pi1 * pi1 * x * g[1] * g[1]
                    - pi1 * (1.0 + (pi2 - pi0) * x) * g[1] * g[2]
                    - pi2 * a * g[1] * g[3],
            ],
        ]
    };
    let tdm = {
        let g = &gy;
        let a = 1.0 - pi0 * y;
        [
            [
                pi1 * a * g[0] * g[1]
                    + (pi2 + (pi1 * pi1 - pi0 * pi2) * y) * g[0] * g[2]
                    + pi1 * pi2 * y * g[0] * g[3]
                    - pi1 * pi1 * y * g[1] * g[1]
                    - pi1 * (1.0 + (pi2 - pi0) * y) * g[1] * g[2]
                    - pi2 * a * g[1] * g[3],
                pi1 * pi1 * y * g[0] * g[1]
                    + pi1 * (1.0 + (pi2 - pi0) * y) * g[0] * g[2]
                    + pi2 * a * g[0] * g[3]
                    - pi1 * a * g[1] * g[1]
                    - (pi2 + (pi1 * pi1 - pi0 * pi2) * y) * g[1] * g[2]
                    - pi1 * pi2 * y * g[1] * g[3],
            ],
            [
                pi2 * (a * g[0] * g[1] + pi1 * y * g[0] * g[2]
                    - pi1 * y * g[1] * g[1]
                    - a * g[1] * g[2]),
                pi2 * (pi1 * y * g[0] * g[1] + a * g[0] * g[2]
                    - a * g[1] * g[1]
                    - pi1 * y * g[1] * g[2]),
            ],
        ]
    };
    let tdp_mat = Matrix::from_fn(2, 2, |a, b| tdp[a][b] / (dmx * dx));
    let tdm_mat = Matrix::from_fn(2, 2, |a, b| tdm[a][b] / (dmy * dy));
    let varpi = pi1 + 2.0 * pi2;
    let bx = Matrix::identity_like(2, &1.0).sub(&tdp_mat.scale(&x));
    let by = Matrix::identity_like(2, &1.0).sub(&tdm_mat.scale(&y));
    let nt_plus = [
        pi2 * dx - pi2 * (gx[0] - gx[1]) * (gx[3] + gx[4]),
        (pi1 + pi2) * dx
            - (gx[0] - gx[1]) * (pi1 * gx[3] + (pi1 + pi2) * gx[4] + pi2 * gx[5]),
    ];
    let nt_minus = [
        (pi1 + pi2) * dy
            - (gy[0] - gy[1]) * (pi1 * gy[3] + (pi1 + pi2) * gy[4] + pi2 * gy[5]),
        pi2 * dy - pi2 * (gy[0] - gy[1]) * (gy[3] + gy[4]),
    ];
    let ktx0 = [
        varpi + x * nt_plus[0] / ((1.0 - x) * dx),
        varpi + x * nt_plus[1] / ((1.0 - x) * dx),
    ];
    let kt0y = [
        varpi + y * nt_minus[0] / ((1.0 - y) * dy),
        varpi + y * nt_minus[1] / ((1.0 - y) * dy),
    ];
    let system_kt = bx.add(&by).sub(&Matrix::identity_like(2, &1.0));
    let bx_ktx0 = bx.matvec(&ktx0);
    let by_kt0y = by.matvec(&kt0y);
    let rhs_kt: Vec<f64> = (0..2).map(|i| bx_ktx0[i] + by_kt0y[i] - varpi).collect();
    let ktilde = solve_column(&system_kt, &rhs_kt)?;
    Ok(Sym22Kernels { k, ktilde })
}

fn choose(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Symmetric family with binomial off-center masses.
pub fn binomial_family(m: usize, c: f64) -> Result<JumpDistribution<f64>> {
    let probs = (-(m as i64)..=m as i64)
        .map(|i| {
            if i == 0 {
                1.0 - c * (4f64.powi(m as i32) - choose(2 * m, m))
            } else {
                c * choose(2 * m, (i + m as i64) as usize)
            }
        })
        .collect();
    JumpDistribution::new(m, m, probs)
}

/// Symmetric family with geometrically damped binomial masses.
pub fn rho_binomial_family(m: usize, rho: f64, c: f64) -> Result<JumpDistribution<f64>> {
    let probs = (-(m as i64)..=m as i64)
        .map(|i| {
            if i == 0 {
                1.0 - 2.0 * c * ((rho + 1.0).powi(m as i32) - 1.0)
            } else {
                c * rho.powi(i.unsigned_abs() as i32) * choose(m, i.unsigned_abs() as usize)
            }
        })
        .collect();
    JumpDistribution::new(m, m, probs)
}

/// Symmetric family with equal masses on all nonzero jumps.
pub fn uniform_family(m: usize, c: f64) -> Result<JumpDistribution<f64>> {
    let probs = (-(m as i64)..=m as i64)
        .map(|i| if i == 0 { 1.0 - 2.0 * m as f64 * c } else { c })
        .collect();
    JumpDistribution::new(m, m, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{parse_inline_lr, window_for};
    use crate::genfun::{entrance_gf, k_solve_series, GfRing};
    use crate::oracle::{sojourn_dp, FirstStep, SojournKind};
    use crate::scalar::{Rat, Ring, Scalar};

    #[test]
    fn m1_roots_match_quadratic() {
        let jump = parse_inline_lr::<f64>("L=1,R=1,pi=1/2,0,1/2").unwrap();
        let rs = solve_roots(&jump, 0.5).unwrap();
        assert!(rs.max_residual <= 1e-12);
        assert_eq!(rs.inside.len(), 1);
        assert_eq!(rs.outside.len(), 1);
        let zin = rs.roots[rs.inside[0]];
        let zout = rs.roots[rs.outside[0]];
        assert!((zin.re - (2.0 - 3f64.sqrt())).abs() < 1e-12 && zin.im.abs() < 1e-12);
        assert!((zout.re - (2.0 + 3f64.sqrt())).abs() < 1e-12 && zout.im.abs() < 1e-12);
    }

    #[test]
    fn zero_low_mass_gives_zero_root() {
        let jump = JumpDistribution::<f64>::new(1, 1, vec![0.0, 0.5, 0.5]).unwrap();
        let rs = solve_roots(&jump, 0.5).unwrap();
        assert_eq!(rs.inside.len(), 1);
        assert_eq!(rs.outside.len(), 1);
        assert_eq!(rs.roots[rs.inside[0]].norm(), 0.0);
        assert!((rs.roots[rs.outside[0]].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_22_roots_match_solver_as_a_set() {
        for (jump, x) in [
            (uniform_family(2, 0.2).unwrap(), 0.3),
            (uniform_family(2, 0.2).unwrap(), 0.5),
            (binomial_family(2, 1.0 / 16.0).unwrap(), 0.5),
            (binomial_family(2, 1.0 / 16.0).unwrap(), 0.7),
        ] {
            let (z1, z2) = explicit_roots22(&jump, x).unwrap();
            let closed = [z1, z2, 1.0 / z1, 1.0 / z2];
            let rs = solve_roots(&jump, x).unwrap();
            for zc in closed {
                let nearest = rs
                    .roots
                    .iter()
                    .map(|z| (z - Complex64::new(zc, 0.0)).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-9, "closed root {zc} missing at x={x}");
            }
            // inverse pairing of the solved set
            for &i in &rs.inside {
                let inv = 1.0 / rs.roots[i];
                let nearest = rs
                    .outside
                    .iter()
                    .map(|&o| (rs.roots[o] - inv).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-9);
            }
        }
    }

    #[test]
    fn gamma_series_bernoulli_central_coeffs() {
        let jump = parse_inline_lr::<Rat>("L=1,R=1,pi=1/2,0,1/2").unwrap();
        let g = gamma_series(&jump, 4, 4);
        let expect = [(0, 1, 1), (1, 0, 1), (2, 1, 2), (3, 0, 1), (4, 3, 8)];
        for (n, num, den) in expect {
            assert_eq!(*g.get(0).coeff(n), Rat::from_ratio(num, den));
        }
        // conservation across the reachable band
        for n in 0..=4usize {
            let mut acc = <Rat as Scalar>::zero();
            for d in -4..=4 {
                acc = acc.add(g.get(d).coeff(n));
            }
            assert_eq!(acc, <Rat as Scalar>::one());
        }
    }

    #[test]
    fn gamma_numeric_matches_series_evaluation() {
        let jump = parse_inline_lr::<f64>("L=1,R=2,pi=3/10,1/5,0,1/2").unwrap();
        let order = 40;
        let x: f64 = 0.4;
        let bound = 2.0 * x.powi(order as i32 + 1) / (1.0 - x) + 1e-12;
        let gs = gamma_series(&jump, order, 6);
        let gn = gamma_numeric(&jump, x, 6).unwrap();
        for d in -6..=6 {
            let series_val = gs.get(d).eval(&x);
            assert!(
                (series_val - gn.get(d)).abs() <= bound,
                "d={d}: {series_val} vs {}",
                gn.get(d)
            );
        }
    }

    #[test]
    fn symmetric_shortcut_matches_general_residues() {
        let jump = uniform_family(2, 0.2).unwrap();
        let full = gamma_numeric(&jump, 0.5, 5).unwrap();
        let fast = gamma_numeric_symmetric(&jump, 0.5, 5).unwrap();
        for d in -5..=5 {
            assert!((full.get(d) - fast.get(d)).abs() < 1e-12);
        }
    }

    fn oracle_slices(
        jump: &JumpDistribution<Rat>,
        start: i64,
        target: &TargetSet,
        kind: SojournKind,
        first: FirstStep,
        n_max: usize,
    ) -> crate::oracle::SojournTable<Rat> {
        let w = window_for(jump, start, n_max).unwrap();
        let cube = sojourn_dp(
            &w.chain,
            &w.partition,
            w.index_of(start).unwrap(),
            n_max,
            kind,
            first,
        )
        .unwrap();
        cube.marginal(&w.target_mask(target))
    }

    #[test]
    fn k_lr_series_matches_windowed_oracle() {
        let jump = parse_inline_lr::<Rat>("L=1,R=2,pi=1/3,1/3,0,1/3").unwrap();
        for target in [TargetSet::All, TargetSet::singleton(0)] {
            let ks = k_lr_series(&jump, &target, 10).unwrap();
            for start in 0..jump.m() as i64 {
                let table = oracle_slices(
                    &jump,
                    start,
                    &target,
                    SojournKind::Plain,
                    FirstStep::Any,
                    10,
                );
                for n in 0..=10usize {
                    for m in 0..=n {
                        assert_eq!(
                            ks[start as usize].coeff(m, n - m),
                            table.prob(n, m),
                            "start={start} n={n} m={m}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ktilde_lr_series_matches_restricted_oracle() {
        let jump = parse_inline_lr::<Rat>("L=2,R=2,pi=1/5,1/5,1/5,1/5,1/5").unwrap();
        for target in [TargetSet::All, TargetSet::singleton(0)] {
            let ks = ktilde_lr_series(&jump, &target, 8).unwrap();
            for start in 0..jump.m() as i64 {
                let table = oracle_slices(
                    &jump,
                    start,
                    &target,
                    SojournKind::Modified,
                    FirstStep::OutOfMid,
                    8,
                );
                for n in 0..=8usize {
                    for m in 0..=n {
                        assert_eq!(
                            ks[start as usize].coeff(m, n - m),
                            table.prob(n, m),
                            "start={start} n={n} m={m}"
                        );
                    }
                }
            }
        }
        // restricted mass: slice n sums to varpi for n >= 1 on the full line
        let ks = ktilde_lr_series(&jump, &TargetSet::All, 8).unwrap();
        let varpi = varpi_lr(&jump, 0);
        for n in 1..=8usize {
            let mut acc = <Rat as Scalar>::zero();
            for m in 0..=n {
                acc = acc.add(ks[0].coeff(m, n - m));
            }
            assert_eq!(acc, varpi);
        }
    }

    #[test]
    fn k_lr_matches_window_system_route() {
        let jump = parse_inline_lr::<Rat>("L=2,R=2,pi=1/4,1/4,0,1/4,1/4").unwrap();
        let order = 8;
        let ks = k_lr_series(&jump, &TargetSet::All, order).unwrap();
        let w = window_for(&jump, 0, order).unwrap();
        let mask = w.target_mask(&TargetSet::All);
        let sol = k_solve_series(&w.chain, &w.partition, &mask, true, order).unwrap();
        for start in 0..jump.m() {
            let wi = w.index_of(start as i64).unwrap();
            let kw = sol.k[wi].as_ref().unwrap();
            for a in 0..=order {
                for b in 0..=(order - a) {
                    assert_eq!(ks[start].coeff(a, b), kw.coeff(a, b), "start={start} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn gram_ratio_blocks_are_shifted_entrance_laws() {
        // entries of Gm_- Gm^-1 and Gm_+ Gm^-1 equal windowed first-entrance
        // laws into the mid band from one band above and below
        let jump = parse_inline_lr::<Rat>("L=2,R=2,pi=1/4,1/4,0,1/4,1/4").unwrap();
        let order = 10;
        let gamma = gamma_series(&jump, order, band_width(2, &TargetSet::All));
        let var = Series1::<Rat>::var(order);
        let blocks = build_matrices(&jump, &TargetSet::All, &gamma, &var).unwrap();
        let hplus = blocks.gram_minus.matmul(&blocks.gram.inverse().unwrap());
        let hminus = blocks.gram_plus.matmul(&blocks.gram.inverse().unwrap());

        let w = window_for(&jump, 0, order).unwrap();
        let g = Series1::<Rat>::green(&w.chain, &var).unwrap();
        let mid_mask: Vec<bool> = (0..w.chain.size())
            .map(|i| w.partition.class(i) == crate::chain::StateClass::Mid)
            .collect();
        let h = entrance_gf(&g, &mid_mask).unwrap();
        let m = jump.m() as i64;
        for a in 0..m {
            for b in 0..m {
                let iu = w.index_of(m + a).unwrap();
                let id = w.index_of(-m + a).unwrap();
                let jb = w.index_of(b).unwrap();
                for c in 0..=order {
                    assert_eq!(
                        hplus.at(a as usize, b as usize).coeff(c),
                        h.at(iu, jb).coeff(c),
                        "above a={a} b={b} c={c}"
                    );
                    assert_eq!(
                        hminus.at(a as usize, b as usize).coeff(c),
                        h.at(id, jb).coeff(c),
                        "below a={a} b={b} c={c}"
                    );
                }
            }
        }
    }

    #[test]
    fn full_line_values_at_a_point() {
        let jump = parse_inline_lr::<f64>("L=1,R=1,pi=1/2,0,1/2").unwrap();
        let k = k_lr_numeric(&jump, &TargetSet::All, 0.5, 0.5).unwrap();
        assert!((k[0] - 2.0).abs() < 1e-12);
        let kt = ktilde_lr_numeric(&jump, &TargetSet::All, 0.5, 0.5).unwrap();
        assert!((kt[0] - 2.0).abs() < 1e-12);

        // diagonal of the modified kernel carries the restricted event mass
        let uni = uniform_family(2, 0.2).unwrap();
        let kt = ktilde_lr_numeric(&uni, &TargetSet::All, 0.4, 0.4).unwrap();
        for v in kt {
            assert!((v - 1.0).abs() < 1e-10, "0.6/(1-0.4) = 1, got {v}");
        }
    }

    #[test]
    fn chung_feller_slices_via_lr_route() {
        let jump = parse_inline_lr::<Rat>("L=1,R=1,pi=1/2,0,1/2").unwrap();
        let ks = ktilde_lr_series(&jump, &TargetSet::All, 10).unwrap();
        for n in (0..=10usize).step_by(2) {
            for m in (0..=n).step_by(2) {
                let num = choose(m, m / 2) * choose(n - m, (n - m) / 2);
                let expect = Rat::from_ratio(num as i64, 1)
                    .mul(&Rat::from_ratio(1, 2i64.pow(n as u32)));
                assert_eq!(*ks[0].coeff(m, n - m), expect, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn explicit_22_path_agrees_with_generic() {
        for (jump, x, y) in [
            (uniform_family(2, 0.2).unwrap(), 0.3, 0.5),
            (binomial_family(2, 1.0 / 16.0).unwrap(), 0.5, 0.6),
        ] {
            let fast = symmetric22(&jump, &TargetSet::All, x, y).unwrap();
            let k = k_lr_numeric(&jump, &TargetSet::All, x, y).unwrap();
            let kt = ktilde_lr_numeric(&jump, &TargetSet::All, x, y).unwrap();
            for i in 0..2 {
                assert!(
                    (fast.k[i] - k[i]).abs() <= 1e-9 * k[i].abs(),
                    "k[{i}]: {} vs {}",
                    fast.k[i],
                    k[i]
                );
                assert!(
                    (fast.ktilde[i] - kt[i]).abs() <= 1e-9 * kt[i].abs(),
                    "ktilde[{i}]: {} vs {}",
                    fast.ktilde[i],
                    kt[i]
                );
            }
        }
    }

    #[test]
    fn tilde_entry_expansion_matches_defining_product() {
        // hand-expanded upper tilde entries against D_+ (I - xP)^-1, and the
        // printed variant of the (0,1) entry against the same product; needs
        // pi_1 != pi_2 to separate the two variants
        let jump = binomial_family(2, 1.0 / 16.0).unwrap();
        let (pi0, pi1, pi2) = (jump.pi(0), jump.pi(1), jump.pi(2));
        let x = 0.45;
        let g = gamma22(&jump, x, 3).unwrap();
        let dx = g[0] * g[0] - g[1] * g[1];
        let dmx = (pi0 * pi0 - pi1 * pi1) * x * x - 2.0 * pi0 * x + 1.0;
        let dp = Matrix::from_fn(2, 2, |a, b| {
            [
                [pi2 * (g[0] * g[2] - g[1] * g[1]), pi2 * (g[0] * g[1] - g[1] * g[2])],
                [
                    pi1 * (g[0] * g[2] - g[1] * g[1]) + pi2 * (g[0] * g[3] - g[1] * g[2]),
                    pi1 * (g[0] * g[1] - g[1] * g[2]) + pi2 * (g[0] * g[2] - g[1] * g[3]),
                ],
            ][a][b]
                / dx
        });
        let res = Matrix::from_fn(2, 2, |a, b| {
            if a == b {
                (1.0 - pi0 * x) / dmx
            } else {
                pi1 * x / dmx
            }
        });
        let product = dp.matmul(&res);
        let a = 1.0 - pi0 * x;
        let expanded01 =
            pi2 * (a * g[0] * g[1] + pi1 * x * g[0] * g[2] - pi1 * x * g[1] * g[1] - a * g[1] * g[2])
                / (dmx * dx);
        let printed01 =
            pi2 * (a * g[0] * g[1] + pi2 * x * g[0] * g[2] - pi1 * x * g[1] * g[1] - a * g[1] * g[2])
                / (dmx * dx);
        assert!((expanded01 - product.at(0, 1)).abs() < 1e-13);
        assert!((printed01 - product.at(0, 1)).abs() > 1e-6);
    }

    #[test]
    fn order_zero_expansion_is_a_prefix_of_deeper_ones() {
        let jump = parse_inline_lr::<Rat>("L=1,R=2,pi=1/3,1/3,0,1/3").unwrap();
        for target in [TargetSet::All, TargetSet::singleton(0)] {
            let shallow = k_lr_series(&jump, &target, 0).unwrap();
            let deep = k_lr_series(&jump, &target, 4).unwrap();
            let shallow_t = ktilde_lr_series(&jump, &target, 0).unwrap();
            let deep_t = ktilde_lr_series(&jump, &target, 4).unwrap();
            for i in 0..jump.m() as usize {
                assert_eq!(shallow[i].order(), 0);
                assert_eq!(shallow[i].coeff(0, 0), deep[i].coeff(0, 0));
                assert_eq!(shallow_t[i].order(), 0);
                assert_eq!(shallow_t[i].coeff(0, 0), deep_t[i].coeff(0, 0));
            }
        }
    }
}
