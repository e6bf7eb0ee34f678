//! Generating-function kernels for joint sojourn laws on finite chains.
//!
//! The bivariate kernel of a state i is
//!     K_i = sum over n, m of P_i{count after n steps = m, position in F}
//!           x^m y^(n-m),
//! so x marks counting steps and y the rest. Every kernel here is assembled
//! from first-passage ladders and solved as a linear system over a ring that
//! is either a truncated bivariate series (exact coefficients) or a plain
//! scalar (point evaluation). One implementation serves both through the
//! `GfRing`/`BivRing` abstractions.
//!
//! Decomposition sketch: a path from the mid class returns to the mid class
//! either through the upper closure, every step landing in the upper closure
//! and so marked x, or through the lower class, marked y except the re-entry
//! step which lands in mid and is marked x (the x/y correction). Iterating
//! this first-return structure gives a linear system for the mid-class
//! kernels; one-sided boundary kernels close the right-hand side, and
//! one-step splices extend the solution to the outer classes.

use crate::chain::{varpi, FiniteChain, Partition, StateClass};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Ring, Scalar};
use crate::series::{Series1, Series2};

/// Univariate coefficient ring: truncated series or numeric point values.
pub trait GfRing<S: Scalar>: Ring {
    /// Embed a scalar; `tmpl` carries the truncation order where relevant.
    fn lift(s: &S, tmpl: &Self) -> Self;

    /// Green kernel sum over powers of the transition matrix, in this ring.
    /// `var` is the ring element playing the variable: the formal variable
    /// for series (which fixes the truncation), an evaluation point x with
    /// spectral radius of xP below one for numerics.
    fn green(chain: &FiniteChain<S>, var: &Self) -> Result<Matrix<Self>>
    where
        Self: Sized;
}

impl<S: Scalar> GfRing<S> for S {
    fn lift(s: &S, _tmpl: &Self) -> Self {
        s.clone()
    }

    fn green(chain: &FiniteChain<S>, var: &S) -> Result<Matrix<S>> {
        let n = chain.size();
        let one = S::one();
        let a = Matrix::from_fn(n, n, |i, j| {
            let scaled = var.mul(chain.p(i, j));
            if i == j {
                one.sub(&scaled)
            } else {
                scaled.neg()
            }
        });
        let id = Matrix::identity_like(n, &one);
        Matrix::solve(&a, &id)
    }
}

impl<S: Scalar> GfRing<S> for Series1<S> {
    fn lift(s: &S, tmpl: &Self) -> Self {
        Series1::constant(s.clone(), tmpl.order())
    }

    /// Coefficient of x^m is the m-step transition matrix, accumulated by
    /// sparse left-multiplication.
    fn green(chain: &FiniteChain<S>, var: &Self) -> Result<Matrix<Self>> {
        let n = chain.size();
        let order = var.order();
        let mut out = Matrix::from_fn(n, n, |_, _| Series1::<S>::zeros(order));
        let mut power = Matrix::identity_like(n, &S::one());
        for m in 0..=order {
            if m > 0 {
                power = chain.matrix().matmul(&power);
            }
            for i in 0..n {
                for j in 0..n {
                    let v = power.at(i, j);
                    if !v.is_zero() {
                        out.at_mut(i, j).set_coeff(m, v.clone());
                    }
                }
            }
        }
        Ok(out)
    }
}

/// 1/(1 - var): the target sum of the Green kernel when every state is kept.
pub fn geometric_gf<R: Ring>(var: &R) -> Result<R> {
    var.one_like().sub(var).try_inv()
}

/// Row sums of the Green kernel over the masked target states; with a full
/// mask this equals 1/(1 - var) by stochasticity, computed that way to stay
/// exact when sentinel states absorb window overflow.
pub fn g_target<S: Scalar, R: GfRing<S>>(
    g: &Matrix<R>,
    mask: &[bool],
    full: bool,
    var: &R,
) -> Result<Vec<R>> {
    let n = g.rows();
    if full {
        let geo = geometric_gf(var)?;
        return Ok(vec![geo; n]);
    }
    Ok((0..n)
        .map(|i| {
            let mut acc = var.zero_like();
            for j in 0..n {
                if mask[j] {
                    acc = acc.add(g.at(i, j));
                }
            }
            acc
        })
        .collect())
}

/// First-entrance blocks into the masked target set, from the Green kernel:
/// H_ij solves sum over target k of H_ik G_kj = G_ij - delta_ij for target j.
/// Full square output, zero columns outside the target.
pub fn entrance_gf<S: Scalar, R: GfRing<S>>(g: &Matrix<R>, target: &[bool]) -> Result<Matrix<R>> {
    let n = g.rows();
    let tmpl = g.at(0, 0).zero_like();
    let cols: Vec<usize> = (0..n).filter(|&j| target[j]).collect();
    let mut out = Matrix::from_fn(n, n, |_, _| tmpl.clone());
    if cols.is_empty() {
        return Ok(out);
    }
    let c = cols.len();
    // transpose the row systems into one multi-right-hand-side solve
    let gram_t = Matrix::from_fn(c, c, |a, b| g.at(cols[b], cols[a]).clone());
    let one = tmpl.one_like();
    let rhs = Matrix::from_fn(c, n, |a, i| {
        let v = g.at(i, cols[a]).clone();
        if i == cols[a] {
            v.sub(&one)
        } else {
            v
        }
    });
    let x = Matrix::solve(&gram_t, &rhs)?;
    for (a, &k) in cols.iter().enumerate() {
        for i in 0..n {
            let v = x.at(a, i);
            if !v.is_zero() {
                out.set(i, k, v.clone());
            }
        }
    }
    Ok(out)
}

/// Entrance into the upper closure spliced from the mid-entrance block.
/// From the lower class the first upper-closure state reached is always in
/// mid, so the row is copied; from the upper class the very next step lands
/// in the upper closure; from mid, either one direct step or a detour through
/// the lower class.
pub fn h_dag_from_h_circ<S: Scalar, R: GfRing<S>>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    h_circ: &Matrix<R>,
    var: &R,
) -> Matrix<R> {
    let n = chain.size();
    let tmpl = var.zero_like();
    let mut out = Matrix::from_fn(n, n, |_, _| tmpl.clone());
    for i in 0..n {
        match partition.class(i) {
            StateClass::Minus => {
                for j in 0..n {
                    let v = h_circ.at(i, j);
                    if !v.is_zero() {
                        out.set(i, j, v.clone());
                    }
                }
            }
            StateClass::Plus => {
                for j in 0..n {
                    if partition.in_dag(j) && !chain.p(i, j).is_zero() {
                        out.set(i, j, var.mul(&R::lift(chain.p(i, j), var)));
                    }
                }
            }
            StateClass::Mid => {
                for j in 0..n {
                    if !partition.in_dag(j) {
                        continue;
                    }
                    let mut acc = if chain.p(i, j).is_zero() {
                        tmpl.clone()
                    } else {
                        R::lift(chain.p(i, j), var)
                    };
                    for k in 0..n {
                        if partition.class(k) != StateClass::Minus {
                            continue;
                        }
                        let p = chain.p(i, k);
                        if p.is_zero() || h_circ.at(k, j).is_zero() {
                            continue;
                        }
                        acc = acc.add(&R::lift(p, var).mul(h_circ.at(k, j)));
                    }
                    if !acc.is_zero() {
                        out.set(i, j, var.mul(&acc));
                    }
                }
            }
        }
    }
    out
}

/// Mid-to-mid first-return blocks split by the class of the first step,
/// in mid-local indexing.
pub struct MidBlocks<R> {
    /// mid state ids, the local-to-global index map
    pub mid: Vec<usize>,
    /// first step stays in the upper closure: direct return plus the
    /// excursion through the upper class
    pub h_upper: Matrix<R>,
    /// the excursion-through-upper part alone
    pub h_via_plus: Matrix<R>,
    /// first step drops to the lower class
    pub h_via_minus: Matrix<R>,
}

/// Split the mid-entrance block by the first step out of a mid state.
pub fn h_circ_split<S: Scalar, R: GfRing<S>>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    h_circ: &Matrix<R>,
    var: &R,
) -> MidBlocks<R> {
    let mid = partition.mid_states();
    let tmpl = var.zero_like();
    let m = mid.len();
    let mut direct = Matrix::from_fn(m, m, |_, _| tmpl.clone());
    let mut via_plus = Matrix::from_fn(m, m, |_, _| tmpl.clone());
    let mut via_minus = Matrix::from_fn(m, m, |_, _| tmpl.clone());
    for (a, &i) in mid.iter().enumerate() {
        for (b, &k) in mid.iter().enumerate() {
            if !chain.p(i, k).is_zero() {
                direct.set(a, b, var.mul(&R::lift(chain.p(i, k), var)));
            }
            let mut plus_acc = tmpl.clone();
            let mut minus_acc = tmpl.clone();
            for kp in 0..chain.size() {
                let p = chain.p(i, kp);
                if p.is_zero() || h_circ.at(kp, k).is_zero() {
                    continue;
                }
                match partition.class(kp) {
                    StateClass::Plus => {
                        plus_acc = plus_acc.add(&R::lift(p, var).mul(h_circ.at(kp, k)));
                    }
                    StateClass::Minus => {
                        minus_acc = minus_acc.add(&R::lift(p, var).mul(h_circ.at(kp, k)));
                    }
                    StateClass::Mid => {}
                }
            }
            if !plus_acc.is_zero() {
                via_plus.set(a, b, var.mul(&plus_acc));
            }
            if !minus_acc.is_zero() {
                via_minus.set(a, b, var.mul(&minus_acc));
            }
        }
    }
    let h_upper = direct.add(&via_plus);
    MidBlocks { mid, h_upper, h_via_plus: via_plus, h_via_minus: via_minus }
}

/// Springboard block on the mid class: entry (a, b) collects paths staying in
/// mid from mid[a] to mid[b], weighted by the probability that the next step
/// leaves mid, with the variable counting the steps taken so far. Solves
/// (I - var P_mid) H = diag(exit mass).
pub fn exit_ladder<S: Scalar, R: GfRing<S>>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    var: &R,
) -> Result<Matrix<R>> {
    let mid = partition.mid_states();
    let m = mid.len();
    let one = var.one_like();
    let a = Matrix::from_fn(m, m, |x, y| {
        let scaled = var.mul(&R::lift(chain.p(mid[x], mid[y]), var));
        if x == y {
            one.sub(&scaled)
        } else {
            scaled.neg()
        }
    });
    let b = Matrix::from_fn(m, m, |x, y| {
        if x == y {
            R::lift(&varpi(chain, partition, mid[x]), var)
        } else {
            var.zero_like()
        }
    });
    Matrix::solve(&a, &b)
}

/// Resolvent restricted to the mid class: (I - var P_mid)^{-1} in mid-local
/// indexing.
pub fn mid_resolvent<S: Scalar, R: GfRing<S>>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    var: &R,
) -> Result<Matrix<R>> {
    let mid = partition.mid_states();
    let m = mid.len();
    let one = var.one_like();
    let a = Matrix::from_fn(m, m, |x, y| {
        let scaled = var.mul(&R::lift(chain.p(mid[x], mid[y]), var));
        if x == y {
            one.sub(&scaled)
        } else {
            scaled.neg()
        }
    });
    let id = Matrix::identity_like(m, &one);
    Matrix::solve(&a, &id)
}

// ---------------------------------------------------------------------------
// bivariate assembly

/// Bivariate coefficient ring over a univariate one: truncated bivariate
/// series, or plain scalars for point evaluation.
pub trait BivRing<S: Scalar>: Ring {
    type Uni: GfRing<S>;

    /// Embed a function of the counting variable x.
    fn embed_x(u: &Self::Uni, tmpl: &Self) -> Self;

    /// Embed a function of the idle variable y.
    fn embed_y(u: &Self::Uni, tmpl: &Self) -> Self;

    /// Embed u(y) * x / y for a u vanishing at y = 0: the re-entry step of a
    /// lower excursion lands in mid and counts, so one y mark becomes an x.
    fn xy_ratio(u: &Self::Uni, x: &Self::Uni, y: &Self::Uni, tmpl: &Self) -> Result<Self>;

    fn lift_scalar(s: &S, tmpl: &Self) -> Self;
}

impl<S: Scalar> BivRing<S> for S {
    type Uni = S;

    fn embed_x(u: &S, _tmpl: &S) -> S {
        u.clone()
    }

    fn embed_y(u: &S, _tmpl: &S) -> S {
        u.clone()
    }

    fn xy_ratio(u: &S, x: &S, y: &S, _tmpl: &S) -> Result<S> {
        if y.is_zero() {
            return Err(Error::Invalid(
                "numeric kernel systems need y nonzero; the y = 0 boundary has its own formula"
                    .into(),
            ));
        }
        Ok(u.mul(x).mul(&y.try_inv()?))
    }

    fn lift_scalar(s: &S, _tmpl: &S) -> S {
        s.clone()
    }
}

impl<S: Scalar> BivRing<S> for Series2<S> {
    type Uni = Series1<S>;

    fn embed_x(u: &Series1<S>, tmpl: &Self) -> Self {
        Series2::from_x(u, tmpl.order())
    }

    fn embed_y(u: &Series1<S>, tmpl: &Self) -> Self {
        Series2::from_y(u, tmpl.order())
    }

    fn xy_ratio(u: &Series1<S>, _x: &Series1<S>, _y: &Series1<S>, tmpl: &Self) -> Result<Self> {
        let shifted = u.shift_down()?;
        Ok(Series2::from_y(&shifted, tmpl.order()).mul_x())
    }

    fn lift_scalar(s: &S, tmpl: &Self) -> Self {
        Series2::constant(s.clone(), tmpl.order())
    }
}

/// Solved kernels: per-state bivariate kernel plus the two boundary slices.
/// Entries are None where the variant does not define the state.
#[derive(Clone, Debug)]
pub struct KernelSolution<B, U> {
    pub k: Vec<Option<B>>,
    pub k_x0: Vec<Option<U>>,
    pub k_0y: Vec<Option<U>>,
}

fn boundary_minus<S: Scalar, U: GfRing<S>>(
    partition: &Partition,
    h_minus: &Matrix<U>,
    gf: &[U],
    i: usize,
) -> U {
    // paths never landing in the lower class: G_F minus the first-landing splice
    let mut acc = gf[i].clone();
    for j in 0..partition.size() {
        if partition.class(j) == StateClass::Minus && !h_minus.at(i, j).is_zero() {
            acc = acc.sub(&h_minus.at(i, j).mul(&gf[j]));
        }
    }
    acc
}

fn boundary_dag<S: Scalar, U: GfRing<S>>(
    partition: &Partition,
    h_dag: &Matrix<U>,
    gf: &[U],
    i: usize,
) -> U {
    // paths never landing in the upper closure
    let mut acc = gf[i].clone();
    for j in 0..partition.size() {
        if partition.in_dag(j) && !h_dag.at(i, j).is_zero() {
            acc = acc.sub(&h_dag.at(i, j).mul(&gf[j]));
        }
    }
    acc
}

/// Solve the plain-count kernel system for every state.
///
/// `target` masks the states whose occupancy is collected (the F in the
/// kernel); `target_full` says the mask covers everything, which keeps the
/// target sums exact on windows with sentinels.
pub fn k_solve<S: Scalar, B: BivRing<S>>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    x: &B::Uni,
    y: &B::Uni,
    tmpl: &B,
) -> Result<KernelSolution<B, B::Uni>> {
    let report = crate::chain::check_assumptions(chain, partition);
    if !report.ok() {
        return Err(Error::AssumptionViolated(report.summary()));
    }
    let n = chain.size();

    let g_x = <B::Uni as GfRing<S>>::green(chain, x)?;
    let g_y = <B::Uni as GfRing<S>>::green(chain, y)?;
    let gf_x = g_target(&g_x, target, target_full, x)?;
    let gf_y = g_target(&g_y, target, target_full, y)?;

    let mid_mask: Vec<bool> = (0..n).map(|i| partition.class(i) == StateClass::Mid).collect();
    let minus_mask: Vec<bool> =
        (0..n).map(|i| partition.class(i) == StateClass::Minus).collect();

    let h_circ_x = entrance_gf(&g_x, &mid_mask)?;
    let h_circ_y = entrance_gf(&g_y, &mid_mask)?;
    let h_minus_x = entrance_gf(&g_x, &minus_mask)?;
    let h_dag_y = h_dag_from_h_circ(chain, partition, &h_circ_y, y);

    let k_x0: Vec<B::Uni> =
        (0..n).map(|i| boundary_minus(partition, &h_minus_x, &gf_x, i)).collect();
    let k_0y: Vec<B::Uni> = (0..n).map(|i| boundary_dag(partition, &h_dag_y, &gf_y, i)).collect();

    let split_x = h_circ_split(chain, partition, &h_circ_x, x);
    let split_y = h_circ_split(chain, partition, &h_circ_y, y);
    let mid = split_x.mid.clone();
    let mc = mid.len();

    let one_b = tmpl.one_like();
    let mut k_all: Vec<Option<B>> = vec![None; n];

    if mc > 0 {
        let a = Matrix::from_fn(mc, mc, |i, kk| {
            let mut v = B::embed_x(split_x.h_upper.at(i, kk), tmpl).neg();
            let lower = split_y.h_via_minus.at(i, kk);
            if !lower.is_zero() {
                // unwrap-free: xy_ratio only fails for numeric y = 0
                match B::xy_ratio(lower, x, y, tmpl) {
                    Ok(t) => v = v.sub(&t),
                    Err(_) => {}
                }
            }
            if i == kk {
                v = v.add(&one_b);
            }
            v
        });
        // surface the y = 0 failure the silent branch above skipped
        for i in 0..mc {
            for kk in 0..mc {
                let lower = split_y.h_via_minus.at(i, kk);
                if !lower.is_zero() {
                    B::xy_ratio(lower, x, y, tmpl)?;
                }
            }
        }
        let rhs = Matrix::from_fn(mc, 1, |i, _| {
            let gi = mid[i];
            let mut v = B::embed_x(&k_x0[gi], tmpl).add(&B::embed_y(&k_0y[gi], tmpl));
            for kk in 0..mc {
                let h = split_x.h_upper.at(i, kk);
                if !h.is_zero() {
                    v = v.sub(&B::embed_x(&h.mul(&k_x0[mid[kk]]), tmpl));
                }
            }
            if target[gi] {
                v = v.sub(&one_b);
            }
            v
        });
        let sol = Matrix::solve(&a, &rhs)?;
        for i in 0..mc {
            k_all[mid[i]] = Some(sol.at(i, 0).clone());
        }
    }

    // upper class: splice one mid entrance ahead; all steps before it count
    for i in 0..n {
        if partition.class(i) != StateClass::Plus {
            continue;
        }
        let mut head = gf_x[i].clone();
        for (b, &j) in mid.iter().enumerate() {
            let _ = b;
            let h = h_circ_x.at(i, j);
            if !h.is_zero() {
                head = head.sub(&h.mul(&gf_x[j]));
            }
        }
        let mut v = B::embed_x(&head, tmpl);
        for &j in &mid {
            let h = h_circ_x.at(i, j);
            if !h.is_zero() {
                let kj = k_all[j].clone().expect("mid kernel solved");
                v = v.add(&B::embed_x(h, tmpl).mul(&kj));
            }
        }
        k_all[i] = Some(v);
    }

    // lower class: mirror splice, idle until the re-entry step which counts
    for i in 0..n {
        if partition.class(i) != StateClass::Minus {
            continue;
        }
        let mut head = gf_y[i].clone();
        for &j in &mid {
            let h = h_circ_y.at(i, j);
            if !h.is_zero() {
                head = head.sub(&h.mul(&gf_y[j]));
            }
        }
        let mut v = B::embed_y(&head, tmpl);
        for &j in &mid {
            let h = h_circ_y.at(i, j);
            if !h.is_zero() {
                let kj = k_all[j].clone().expect("mid kernel solved");
                v = v.add(&B::xy_ratio(h, x, y, tmpl)?.mul(&kj));
            }
        }
        k_all[i] = Some(v);
    }

    Ok(KernelSolution {
        k: k_all,
        k_x0: k_x0.into_iter().map(Some).collect(),
        k_0y: k_0y.into_iter().map(Some).collect(),
    })
}

/// Solve the modified-count kernel system, conditioned on the first step
/// leaving the mid class. Defined on mid states only.
pub fn ktilde_solve<S: Scalar, B: BivRing<S>>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    x: &B::Uni,
    y: &B::Uni,
    tmpl: &B,
) -> Result<KernelSolution<B, B::Uni>> {
    let report = crate::chain::check_assumptions(chain, partition);
    if !report.ok() {
        return Err(Error::AssumptionViolated(report.summary()));
    }
    let n = chain.size();

    let g_x = <B::Uni as GfRing<S>>::green(chain, x)?;
    let g_y = <B::Uni as GfRing<S>>::green(chain, y)?;
    let gf_x = g_target(&g_x, target, target_full, x)?;
    let gf_y = g_target(&g_y, target, target_full, y)?;

    let mid_mask: Vec<bool> = (0..n).map(|i| partition.class(i) == StateClass::Mid).collect();
    let minus_mask: Vec<bool> =
        (0..n).map(|i| partition.class(i) == StateClass::Minus).collect();
    let plus_mask: Vec<bool> = (0..n).map(|i| partition.class(i) == StateClass::Plus).collect();

    let h_circ_x = entrance_gf(&g_x, &mid_mask)?;
    let h_circ_y = entrance_gf(&g_y, &mid_mask)?;
    let h_minus_x = entrance_gf(&g_x, &minus_mask)?;
    let h_plus_y = entrance_gf(&g_y, &plus_mask)?;

    let split_x = h_circ_split(chain, partition, &h_circ_x, x);
    let split_y = h_circ_split(chain, partition, &h_circ_y, y);
    let mid = split_x.mid.clone();
    let mc = mid.len();

    // Compose the re-entry blocks with the plain mid resolvent. The
    // exit-mass-weighted ladder would double count the leaving step, whose
    // probability the next conditioned kernel already carries.
    let res_x = mid_resolvent::<S, B::Uni>(chain, partition, x)?;
    let res_y = mid_resolvent::<S, B::Uni>(chain, partition, y)?;
    let h_tilde_plus = split_x.h_via_plus.matmul(&res_x);
    let h_tilde_minus = split_y.h_via_minus.matmul(&res_y);

    // one-sided boundary kernels on mid states
    let mut kt_x0: Vec<Option<B::Uni>> = vec![None; n];
    let mut kt_0y: Vec<Option<B::Uni>> = vec![None; n];
    for &i in &mid {
        // all steps count: first step up, then never land below
        let mut gp = x.zero_like();
        for j in 0..n {
            if partition.class(j) == StateClass::Plus && !chain.p(i, j).is_zero() {
                gp = gp.add(&<B::Uni as GfRing<S>>::lift(chain.p(i, j), x).mul(&gf_x[j]));
            }
        }
        gp = x.mul(&gp);
        if target[i] {
            let mass_up = chain.mass_into(i, |j| partition.class(j) == StateClass::Plus);
            gp = gp.add(&<B::Uni as GfRing<S>>::lift(&mass_up, x));
        }
        let mut acc = gp;
        for jm in 0..n {
            if partition.class(jm) != StateClass::Minus {
                continue;
            }
            // first landing below after the initial climb
            let mut splice = x.zero_like();
            for k in 0..n {
                if partition.class(k) == StateClass::Plus
                    && !chain.p(i, k).is_zero()
                    && !h_minus_x.at(k, jm).is_zero()
                {
                    splice = splice
                        .add(&<B::Uni as GfRing<S>>::lift(chain.p(i, k), x).mul(h_minus_x.at(k, jm)));
                }
            }
            if !splice.is_zero() {
                acc = acc.sub(&x.mul(&splice).mul(&gf_x[jm]));
            }
        }
        if target[i] {
            let mass_down = chain.mass_into(i, |j| partition.class(j) == StateClass::Minus);
            acc = acc.add(&<B::Uni as GfRing<S>>::lift(&mass_down, x));
        }
        kt_x0[i] = Some(acc);

        // no step counts: first step down, then never land above
        let mut gm = y.zero_like();
        for j in 0..n {
            if partition.class(j) == StateClass::Minus && !chain.p(i, j).is_zero() {
                gm = gm.add(&<B::Uni as GfRing<S>>::lift(chain.p(i, j), y).mul(&gf_y[j]));
            }
        }
        gm = y.mul(&gm);
        if target[i] {
            let mass_down = chain.mass_into(i, |j| partition.class(j) == StateClass::Minus);
            gm = gm.add(&<B::Uni as GfRing<S>>::lift(&mass_down, y));
        }
        let mut acc = gm;
        for jp in 0..n {
            if partition.class(jp) != StateClass::Plus {
                continue;
            }
            let mut splice = y.zero_like();
            for k in 0..n {
                if partition.class(k) == StateClass::Minus
                    && !chain.p(i, k).is_zero()
                    && !h_plus_y.at(k, jp).is_zero()
                {
                    splice = splice
                        .add(&<B::Uni as GfRing<S>>::lift(chain.p(i, k), y).mul(h_plus_y.at(k, jp)));
                }
            }
            if !splice.is_zero() {
                acc = acc.sub(&y.mul(&splice).mul(&gf_y[jp]));
            }
        }
        if target[i] {
            let mass_up = chain.mass_into(i, |j| partition.class(j) == StateClass::Plus);
            acc = acc.add(&<B::Uni as GfRing<S>>::lift(&mass_up, y));
        }
        kt_0y[i] = Some(acc);
    }

    let one_b = tmpl.one_like();
    let mut k_all: Vec<Option<B>> = vec![None; n];
    if mc > 0 {
        let a = Matrix::from_fn(mc, mc, |i, kk| {
            let mut v = B::embed_x(h_tilde_plus.at(i, kk), tmpl).neg();
            v = v.sub(&B::embed_y(h_tilde_minus.at(i, kk), tmpl));
            if i == kk {
                v = v.add(&one_b);
            }
            v
        });
        let rhs = Matrix::from_fn(mc, 1, |i, _| {
            let gi = mid[i];
            let bx = kt_x0[gi].clone().expect("mid boundary");
            let by = kt_0y[gi].clone().expect("mid boundary");
            let mut v = B::embed_x(&bx, tmpl).add(&B::embed_y(&by, tmpl));
            for kk in 0..mc {
                let hp = h_tilde_plus.at(i, kk);
                if !hp.is_zero() {
                    let bk = kt_x0[mid[kk]].clone().expect("mid boundary");
                    v = v.sub(&B::embed_x(&hp.mul(&bk), tmpl));
                }
                let hm = h_tilde_minus.at(i, kk);
                if !hm.is_zero() {
                    let bk = kt_0y[mid[kk]].clone().expect("mid boundary");
                    v = v.sub(&B::embed_y(&hm.mul(&bk), tmpl));
                }
            }
            if target[gi] {
                v = v.sub(&B::lift_scalar(&varpi(chain, partition, gi), tmpl));
            }
            v
        });
        let sol = Matrix::solve(&a, &rhs)?;
        for i in 0..mc {
            k_all[mid[i]] = Some(sol.at(i, 0).clone());
        }
    }

    Ok(KernelSolution { k: k_all, k_x0: kt_x0, k_0y: kt_0y })
}

/// Unconditioned modified-count kernel on a mid state: idle prefix inside the
/// mid class composed with the conditioned kernel at the exit point.
pub fn ktilde_unconditioned<S: Scalar, B: BivRing<S>>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    x: &B::Uni,
    y: &B::Uni,
    tmpl: &B,
) -> Result<KernelSolution<B, B::Uni>> {
    let conditioned = ktilde_solve(chain, partition, target, target_full, x, y, tmpl)?;
    let n = chain.size();
    let mid = partition.mid_states();
    let resolvent_y = mid_resolvent::<S, B::Uni>(chain, partition, y)?;
    let mut k_all: Vec<Option<B>> = vec![None; n];
    for (a, &i) in mid.iter().enumerate() {
        // paths that stay in mid for the whole horizon, all idle
        let mut stay = y.zero_like();
        for (b, &j) in mid.iter().enumerate() {
            if target[j] && !resolvent_y.at(a, b).is_zero() {
                stay = stay.add(resolvent_y.at(a, b));
            }
        }
        let mut v = B::embed_y(&stay, tmpl);
        for (b, &j) in mid.iter().enumerate() {
            let r = resolvent_y.at(a, b);
            if r.is_zero() {
                continue;
            }
            let kj = conditioned.k[j].clone().expect("mid kernel solved");
            // strip the horizon-zero convention mass before composing
            let mut tail = kj;
            if target[j] {
                tail = tail.sub(&B::lift_scalar(&varpi(chain, partition, j), tmpl));
            }
            v = v.add(&B::embed_y(r, tmpl).mul(&tail));
        }
        k_all[i] = Some(v);
    }
    Ok(KernelSolution { k: k_all, k_x0: conditioned.k_x0, k_0y: conditioned.k_0y })
}

// ---------------------------------------------------------------------------
// convenience wrappers

/// Plain kernels as exact bivariate series to total order `order`.
pub fn k_solve_series<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    order: usize,
) -> Result<KernelSolution<Series2<S>, Series1<S>>> {
    // a bare variable needs order >= 1; compute there and truncate back
    let ord = order.max(1);
    let x = Series1::<S>::var(ord);
    let tmpl = Series2::<S>::zeros(ord);
    let sol = k_solve(chain, partition, target, target_full, &x, &x.clone(), &tmpl)?;
    Ok(truncate_solution(sol, ord, order))
}

fn truncate_solution<S: Scalar>(
    sol: KernelSolution<Series2<S>, Series1<S>>,
    ord: usize,
    order: usize,
) -> KernelSolution<Series2<S>, Series1<S>> {
    if ord == order {
        return sol;
    }
    KernelSolution {
        k: sol.k.into_iter().map(|e| e.map(|s| s.truncated(order))).collect(),
        k_x0: sol.k_x0.into_iter().map(|e| e.map(|s| s.truncated(order))).collect(),
        k_0y: sol.k_0y.into_iter().map(|e| e.map(|s| s.truncated(order))).collect(),
    }
}

/// Plain kernels evaluated at a numeric point (x, y), y nonzero.
pub fn k_solve_numeric<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    x: &S,
    y: &S,
) -> Result<KernelSolution<S, S>> {
    k_solve(chain, partition, target, target_full, x, y, &S::zero())
}

/// Modified-count kernels (conditioned on leaving mid first) as series.
pub fn ktilde_solve_series<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    order: usize,
) -> Result<KernelSolution<Series2<S>, Series1<S>>> {
    let ord = order.max(1);
    let x = Series1::<S>::var(ord);
    let tmpl = Series2::<S>::zeros(ord);
    let sol = ktilde_solve(chain, partition, target, target_full, &x, &x.clone(), &tmpl)?;
    Ok(truncate_solution(sol, ord, order))
}

/// Modified-count kernels at a numeric point.
pub fn ktilde_solve_numeric<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    x: &S,
    y: &S,
) -> Result<KernelSolution<S, S>> {
    ktilde_solve(chain, partition, target, target_full, x, y, &S::zero())
}

/// Unconditioned modified-count kernels as series.
pub fn ktilde_unconditioned_series<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    target: &[bool],
    target_full: bool,
    order: usize,
) -> Result<KernelSolution<Series2<S>, Series1<S>>> {
    let x = Series1::<S>::var(order.max(1));
    let tmpl = Series2::<S>::zeros(order);
    ktilde_unconditioned(chain, partition, target, target_full, &x, &x.clone(), &tmpl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{parse_inline_lr, window_for, TargetSet};
    use crate::oracle::{entrance_dp, sojourn_dp, EntranceKind, FirstStep, SojournKind};
    use crate::scalar::Rat;

    fn bernoulli_window(n: usize) -> (crate::chain::WindowChain<Rat>, usize) {
        let jump = parse_inline_lr::<Rat>("L=1,R=1,pi=1/2,0,1/2").unwrap();
        let w = window_for(&jump, 0, n).unwrap();
        let start = w.index_of(0).unwrap();
        (w, start)
    }

    fn lazy_window(n: usize) -> (crate::chain::WindowChain<Rat>, usize) {
        let jump = parse_inline_lr::<Rat>("L=1,R=2,pi=3/10,1/5,0,1/2").unwrap();
        let w = window_for(&jump, 0, n).unwrap();
        let start = w.index_of(0).unwrap();
        (w, start)
    }

    #[test]
    fn entrance_gf_matches_entrance_dp() {
        let order = 8;
        let (w, start) = lazy_window(order);
        let x = Series1::<Rat>::var(order);
        let g = <Series1<Rat> as GfRing<Rat>>::green(&w.chain, &x).unwrap();
        for (kind, mask_fn) in [
            (EntranceKind::Mid, StateClass::Mid),
            (EntranceKind::Plus, StateClass::Plus),
            (EntranceKind::Minus, StateClass::Minus),
        ] {
            let mask: Vec<bool> =
                (0..w.chain.size()).map(|i| w.partition.class(i) == mask_fn).collect();
            let h = entrance_gf(&g, &mask).unwrap();
            let dp = entrance_dp(&w.chain, &w.partition, start, kind, order).unwrap();
            for j in 0..w.chain.size() {
                for m in 0..=order {
                    assert_eq!(h.at(start, j).coeff(m), dp[j].coeff(m), "{kind:?} j={j} m={m}");
                }
            }
        }
    }

    #[test]
    fn h_dag_matches_entrance_dp() {
        let order = 8;
        let (w, start) = lazy_window(order);
        let x = Series1::<Rat>::var(order);
        let g = <Series1<Rat> as GfRing<Rat>>::green(&w.chain, &x).unwrap();
        let mid_mask: Vec<bool> =
            (0..w.chain.size()).map(|i| w.partition.class(i) == StateClass::Mid).collect();
        let h_circ = entrance_gf(&g, &mid_mask).unwrap();
        let h_dag = h_dag_from_h_circ(&w.chain, &w.partition, &h_circ, &x);
        let dp = entrance_dp(&w.chain, &w.partition, start, EntranceKind::UpperClosure, order)
            .unwrap();
        for j in 0..w.chain.size() {
            for m in 0..=order {
                assert_eq!(h_dag.at(start, j).coeff(m), dp[j].coeff(m), "j={j} m={m}");
            }
        }
        // from a lower state the splice degenerates to the mid entrance
        let below = w.index_of(-1).unwrap();
        let dp2 =
            entrance_dp(&w.chain, &w.partition, below, EntranceKind::UpperClosure, order).unwrap();
        for j in 0..w.chain.size() {
            for m in 0..=order {
                assert_eq!(h_dag.at(below, j).coeff(m), dp2[j].coeff(m), "below j={j} m={m}");
            }
        }
    }

    #[test]
    fn exit_ladder_matches_springboard_dp() {
        let order = 8;
        let jump = parse_inline_lr::<Rat>("L=2,R=2,pi=1/4,1/4,0,1/4,1/4").unwrap();
        let w = window_for(&jump, 0, order).unwrap();
        let x = Series1::<Rat>::var(order);
        let ladder = exit_ladder::<Rat, Series1<Rat>>(&w.chain, &w.partition, &x).unwrap();
        let mid = w.partition.mid_states();
        for (a, &i) in mid.iter().enumerate() {
            let dp =
                entrance_dp(&w.chain, &w.partition, i, EntranceKind::ExitSpringboard, order)
                    .unwrap();
            for (b, &j) in mid.iter().enumerate() {
                for m in 0..=order {
                    assert_eq!(ladder.at(a, b).coeff(m), dp[j].coeff(m), "i={i} j={j} m={m}");
                }
            }
        }
    }

    #[test]
    fn tilde_blocks_match_two_phase_dp() {
        let order = 8;
        let jump = parse_inline_lr::<Rat>("L=2,R=2,pi=1/4,1/4,0,1/4,1/4").unwrap();
        let w = window_for(&jump, 0, order).unwrap();
        let x = Series1::<Rat>::var(order);
        let g = <Series1<Rat> as GfRing<Rat>>::green(&w.chain, &x).unwrap();
        let mid_mask: Vec<bool> =
            (0..w.chain.size()).map(|i| w.partition.class(i) == StateClass::Mid).collect();
        let h_circ = entrance_gf(&g, &mid_mask).unwrap();
        let split = h_circ_split(&w.chain, &w.partition, &h_circ, &x);
        let exit = exit_ladder::<Rat, Series1<Rat>>(&w.chain, &w.partition, &x).unwrap();
        let up = split.h_via_plus.matmul(&exit);
        let down = split.h_via_minus.matmul(&exit);
        let mid = split.mid;
        for (a, &i) in mid.iter().enumerate() {
            let dp_up = entrance_dp(
                &w.chain,
                &w.partition,
                i,
                EntranceKind::TildeSpringboardPlus,
                order,
            )
            .unwrap();
            let dp_down = entrance_dp(
                &w.chain,
                &w.partition,
                i,
                EntranceKind::TildeSpringboardMinus,
                order,
            )
            .unwrap();
            for (b, &j) in mid.iter().enumerate() {
                for m in 0..=order {
                    assert_eq!(up.at(a, b).coeff(m), dp_up[j].coeff(m), "up i={i} j={j} m={m}");
                    assert_eq!(
                        down.at(a, b).coeff(m),
                        dp_down[j].coeff(m),
                        "down i={i} j={j} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn plain_kernel_matches_oracle_everywhere() {
        let order = 7;
        let (w, start) = lazy_window(order);
        let all = vec![true; w.chain.size()];
        let sol = k_solve_series(&w.chain, &w.partition, &all, true, order).unwrap();
        for i in [start, w.index_of(-1).unwrap(), w.index_of(2).unwrap()] {
            let joint =
                sojourn_dp(&w.chain, &w.partition, i, order, SojournKind::Plain, FirstStep::Any)
                    .unwrap();
            let table = joint.marginal(&all);
            let k = sol.k[i].as_ref().unwrap();
            for n in 0..=order {
                for m in 0..=n {
                    assert_eq!(*k.coeff(m, n - m), *table.prob(n, m), "i={i} n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn plain_kernel_finite_target_matches_oracle() {
        let order = 6;
        let (w, start) = bernoulli_window(order);
        let target = TargetSet::singleton(0);
        let mask = w.target_mask(&target);
        let sol = k_solve_series(&w.chain, &w.partition, &mask, false, order).unwrap();
        let joint =
            sojourn_dp(&w.chain, &w.partition, start, order, SojournKind::Plain, FirstStep::Any)
                .unwrap();
        let table = joint.marginal(&mask);
        let k = sol.k[start].as_ref().unwrap();
        for n in 0..=order {
            for m in 0..=n {
                assert_eq!(*k.coeff(m, n - m), *table.prob(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn boundary_slice_is_stay_up_law() {
        // balanced walk: the all-counting boundary collects paths that never
        // go below the origin
        let order = 4;
        let (w, start) = bernoulli_window(order);
        let all = vec![true; w.chain.size()];
        let sol = k_solve_series(&w.chain, &w.partition, &all, true, order).unwrap();
        let kx0 = sol.k_x0[start].as_ref().unwrap();
        let expect = [
            Rat::from_ratio(1, 1),
            Rat::from_ratio(1, 2),
            Rat::from_ratio(1, 2),
            Rat::from_ratio(3, 8),
        ];
        for (m, e) in expect.iter().enumerate() {
            assert_eq!(*kx0.coeff(m), *e, "m={m}");
        }
    }

    #[test]
    fn tilde_kernel_matches_restricted_oracle() {
        let order = 7;
        let jump = parse_inline_lr::<Rat>("L=2,R=2,pi=1/4,1/4,0,1/4,1/4").unwrap();
        let w = window_for(&jump, 1, order).unwrap();
        let all = vec![true; w.chain.size()];
        let sol = ktilde_solve_series(&w.chain, &w.partition, &all, true, order).unwrap();
        for &pos in &[0i64, 1] {
            let i = w.index_of(pos).unwrap();
            let joint = sojourn_dp(
                &w.chain,
                &w.partition,
                i,
                order,
                SojournKind::Modified,
                FirstStep::OutOfMid,
            )
            .unwrap();
            let table = joint.marginal(&all);
            let k = sol.k[i].as_ref().unwrap();
            for n in 0..=order {
                for m in 0..=n {
                    assert_eq!(*k.coeff(m, n - m), *table.prob(n, m), "pos={pos} n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn tilde_unconditioned_matches_oracle() {
        let order = 7;
        let jump = parse_inline_lr::<Rat>("L=2,R=2,pi=1/4,1/4,0,1/4,1/4").unwrap();
        let w = window_for(&jump, 1, order).unwrap();
        let all = vec![true; w.chain.size()];
        let sol =
            ktilde_unconditioned_series(&w.chain, &w.partition, &all, true, order).unwrap();
        let i = w.index_of(1).unwrap();
        let joint =
            sojourn_dp(&w.chain, &w.partition, i, order, SojournKind::Modified, FirstStep::Any)
                .unwrap();
        let table = joint.marginal(&all);
        let k = sol.k[i].as_ref().unwrap();
        for n in 0..=order {
            for m in 0..=n {
                assert_eq!(*k.coeff(m, n - m), *table.prob(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn numeric_matches_series_at_point() {
        let order = 12;
        let (w, _start) = lazy_window(order);
        let all = vec![true; w.chain.size()];
        let series = k_solve_series::<Rat>(&w.chain, &w.partition, &all, true, order).unwrap();
        let wf = {
            let jump = parse_inline_lr::<f64>("L=1,R=2,pi=3/10,1/5,0,1/2").unwrap();
            window_for(&jump, 0, order).unwrap()
        };
        let allf = vec![true; wf.chain.size()];
        let numeric =
            k_solve_numeric::<f64>(&wf.chain, &wf.partition, &allf, true, &0.3, &0.2).unwrap();
        for i in 0..w.chain.size() {
            let s = series.k[i].as_ref().unwrap().eval(&Rat::from_ratio(3, 10), &Rat::from_ratio(1, 5));
            let v = numeric.k[i].unwrap();
            let truncation = 0.5f64.powi(order as i32 - 2);
            assert!(
                (s.to_f64() - v).abs() < truncation.max(1e-9),
                "i={i} series={} numeric={v}",
                s.to_f64()
            );
        }
    }

    #[test]
    fn balanced_walk_closed_point() {
        // K(x,x) sums the full law, 1/(1-x); at x = y = 1/2 that is 2
        let wf = {
            let jump = parse_inline_lr::<f64>("L=1,R=1,pi=1/2,0,1/2").unwrap();
            window_for(&jump, 0, 24).unwrap()
        };
        let allf = vec![true; wf.chain.size()];
        let sol = k_solve_numeric::<f64>(&wf.chain, &wf.partition, &allf, true, &0.5, &0.5).unwrap();
        let sf = wf.index_of(0).unwrap();
        assert!((sol.k[sf].unwrap() - 2.0).abs() < 1e-12);
        assert!((sol.k_x0[sf].unwrap() - 1.4641016151377544).abs() < 1e-7);
        assert!((sol.k_0y[sf].unwrap() - 1.3660254037844386).abs() < 1e-7);
    }

    #[test]
    fn assumption_violation_refused() {
        let text = r#"{"type":"finite",
            "P":[["0","1/2","1/2"],["1/2","0","1/2"],["1/2","1/2","0"]],
            "E_circ":[0],"E_plus":[1],"E_minus":[2]}"#;
        let spec: crate::chain::ChainSpec<Rat> = crate::chain::ChainSpec::from_json(text).unwrap();
        let (chain, partition) = match spec {
            crate::chain::ChainSpec::Finite { chain, partition } => (chain, partition),
            _ => unreachable!(),
        };
        let all = vec![true; 3];
        let err = k_solve_series(&chain, &partition, &all, true, 4).unwrap_err();
        assert!(matches!(err, Error::AssumptionViolated(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn order_zero_solution_is_a_prefix_of_deeper_ones() {
        let (w, start) = lazy_window(3);
        let all = vec![true; w.chain.size()];
        let shallow = k_solve_series(&w.chain, &w.partition, &all, true, 0).unwrap();
        let deep = k_solve_series(&w.chain, &w.partition, &all, true, 4).unwrap();
        let shallow_t = ktilde_solve_series(&w.chain, &w.partition, &all, true, 0).unwrap();
        let deep_t = ktilde_solve_series(&w.chain, &w.partition, &all, true, 4).unwrap();
        let (s, d) = (shallow.k[start].as_ref().unwrap(), deep.k[start].as_ref().unwrap());
        assert_eq!(s.order(), 0);
        assert_eq!(s.coeff(0, 0), d.coeff(0, 0));
        let (st, dt) = (shallow_t.k[start].as_ref().unwrap(), deep_t.k[start].as_ref().unwrap());
        assert_eq!(st.order(), 0);
        assert_eq!(st.coeff(0, 0), dt.coeff(0, 0));
        let (b, bd) = (shallow.k_x0[start].as_ref().unwrap(), deep.k_x0[start].as_ref().unwrap());
        assert_eq!(b.order(), 0);
        assert_eq!(b.coeff(0), bd.coeff(0));
    }
}
