//! End-to-end verification suite.
//!
//! Ten numbered criteria cover every externally checkable claim the crate
//! makes: exact identities on the rational backend, oracle equivalence of
//! all structural routes, closed-form and two-path agreements, root quality,
//! and simulation sanity. Each criterion reports pass/fail with a detail
//! string; the suite aggregates them plus any generated erratum reports.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{
    parse_inline_lr, window_for, FiniteChain, JumpDistribution, Partition, StateClass, TargetSet,
};
use crate::closedform::{
    k0_closed_series, k0_factorization_check, ktilde0_crosscheck, ErratumReport, OrdinaryWalk,
};
use crate::error::{Error, Result};
use crate::genfun::{entrance_gf, k_solve_series, ktilde_solve_series, GfRing};
use crate::linalg::Matrix;
use crate::lrwalk::{
    binomial_family, build_matrices, explicit_roots22, gamma_series, k_lr_numeric, k_lr_series,
    ktilde_lr_numeric, ktilde_lr_series, rho_binomial_family, solve_roots, symmetric22,
    uniform_family,
};
use crate::oracle::{monte_carlo, sojourn_dp, FirstStep, SojournKind};
use crate::parallel::par_map;
use crate::scalar::{Rat, Ring, Scalar};
use crate::series::Series1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Suite {
    /// Reduced workloads, same checks; for interactive runs.
    Quick,
    /// The full stated workloads; the acceptance gate.
    Full,
}

/// Deliberate corruption hooks for harness sanity tests.
#[derive(Clone, Copy, Debug, Default)]
pub struct FaultInjection {
    /// Offset one oracle table value before comparing, so criterion 1 must
    /// fail if the comparison logic is alive.
    pub tamper_oracle: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub details: String,
    pub duration_ms: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub all_passed: bool,
    pub criteria: Vec<CriterionResult>,
    pub erratum_reports: Vec<ErratumReport>,
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(Error::Invalid(format!($($arg)+)));
        }
    };
}

pub const CRITERION_COUNT: usize = 10;

const CRITERION_NAMES: [&str; CRITERION_COUNT] = [
    "balanced-walk modified counts match the binomial product formula on three routes",
    "modified count is uniform over even values on the return-to-origin slice",
    "kernel systems equal the oracle exactly on randomized finite chains",
    "bounded-jump kernels equal the oracle in series and under tail bounds numerically",
    "one-step closed forms equal the oracle; boundary factorization identity",
    "no-stay modified displays match the structural path; erratum report generated",
    "root finding: residuals, quadratic case, explicit two-bounded display, inverse pairs",
    "explicit symmetric two-bounded path agrees with the generic path",
    "displacement-block entrance laws equal windowed entrance kernels",
    "simulation within three-sigma bands of exact tables, deterministic under seed",
];

/// Run one criterion (1-based index).
pub fn run_criterion(index: usize, suite: Suite, fault: &FaultInjection) -> CriterionResult {
    let started = Instant::now();
    let outcome = match index {
        1 => c01_binomial_product(suite, fault),
        2 => c02_conditional_uniformity(suite),
        3 => c03_random_chains(suite),
        4 => c04_bounded_jump(suite),
        5 => c05_closed_forms(suite),
        6 => c06_erratum(suite).map(|(d, _)| d),
        7 => c07_roots(suite),
        8 => c08_two_path(suite),
        9 => c09_translation(suite),
        10 => c10_simulation(suite),
        _ => Err(Error::Invalid(format!("no criterion {index}"))),
    };
    let (passed, details) = match outcome {
        Ok(d) => (true, d),
        Err(e) => (false, e.to_string()),
    };
    CriterionResult {
        id: format!("C{index:02}"),
        name: CRITERION_NAMES[index - 1].to_string(),
        passed,
        details,
        duration_ms: started.elapsed().as_millis(),
    }
}

/// Run the whole suite in order.
pub fn run_suite(suite: Suite, fault: &FaultInjection) -> SuiteReport {
    let mut criteria = Vec::with_capacity(CRITERION_COUNT);
    let mut erratum_reports = Vec::new();
    for index in 1..=CRITERION_COUNT {
        if index == 6 {
            let started = Instant::now();
            let outcome = c06_erratum(suite);
            let (passed, details) = match outcome {
                Ok((d, reports)) => {
                    erratum_reports = reports;
                    (true, d)
                }
                Err(e) => (false, e.to_string()),
            };
            criteria.push(CriterionResult {
                id: "C06".into(),
                name: CRITERION_NAMES[5].to_string(),
                passed,
                details,
                duration_ms: started.elapsed().as_millis(),
            });
        } else {
            criteria.push(run_criterion(index, suite, fault));
        }
    }
    SuiteReport {
        suite,
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
        erratum_reports,
    }
}

fn binom_rat(n: usize, k: usize) -> Rat {
    let mut acc = Rat::one();
    for i in 0..k {
        acc = acc.mul(&Rat::from_ratio((n - i) as i64, (i + 1) as i64));
    }
    acc
}

fn balanced_product(n: usize, m: usize) -> Rat {
    binom_rat(m, m / 2)
        .mul(&binom_rat(n - m, (n - m) / 2))
        .mul(&Rat::from_ratio(1, 1i64 << n))
}

fn c01_binomial_product(suite: Suite, fault: &FaultInjection) -> Result<String> {
    let order = match suite {
        Suite::Quick => 12,
        Suite::Full => 16,
    };
    let jump = parse_inline_lr::<Rat>("L=1,R=1,pi=1/2,0,1/2")?;
    let w = window_for(&jump, 0, order)?;
    let start = w.index_of(0).expect("origin inside window");
    let mask = w.target_mask(&TargetSet::All);
    let cube = sojourn_dp(&w.chain, &w.partition, start, order, SojournKind::Modified, FirstStep::Any)?;
    let oracle = cube.marginal(&mask);
    let gf = ktilde_solve_series(&w.chain, &w.partition, &mask, true, order)?;
    let gf_k = gf.k[start].as_ref().ok_or_else(|| Error::Invalid("no kernel at origin".into()))?;
    let lr = &ktilde_lr_series(&jump, &TargetSet::All, order)?[0];
    let mut cells = 0usize;
    for n in (0..=order).step_by(2) {
        for m in (0..=n).step_by(2) {
            let expect = balanced_product(n, m);
            let mut from_oracle = oracle.prob(n, m).clone();
            if fault.tamper_oracle && n == 4 && m == 2 {
                from_oracle = from_oracle.add(&Rat::from_ratio(1, 64));
            }
            ensure!(from_oracle == expect, "oracle deviates at n={n} m={m}");
            ensure!(*gf_k.coeff(m, n - m) == expect, "kernel system deviates at n={n} m={m}");
            ensure!(*lr.coeff(m, n - m) == expect, "bounded-jump route deviates at n={n} m={m}");
            cells += 3;
        }
        for m in (1..=n).step_by(2) {
            ensure!(oracle.prob(n, m).is_zero(), "odd count carries mass at n={n} m={m}");
            ensure!(gf_k.coeff(m, n - m).is_zero(), "odd count in kernel at n={n} m={m}");
            cells += 2;
        }
    }
    Ok(format!("three routes agree with the product formula, {cells} exact cells, n <= {order}"))
}

fn c02_conditional_uniformity(suite: Suite) -> Result<String> {
    let order = match suite {
        Suite::Quick => 12,
        Suite::Full => 16,
    };
    let jump = parse_inline_lr::<Rat>("L=1,R=1,pi=1/2,0,1/2")?;
    let w = window_for(&jump, 0, order)?;
    let start = w.index_of(0).expect("origin inside window");
    let cube = sojourn_dp(&w.chain, &w.partition, start, order, SojournKind::Modified, FirstStep::Any)?;
    let table = cube.marginal(&w.target_mask(&TargetSet::singleton(0)));
    let mut cells = 0usize;
    for n in (2..=order).step_by(2) {
        let level = table.prob(n, 0).clone();
        ensure!(!level.is_zero(), "return slice vanished at n={n}");
        for m in (0..=n).step_by(2) {
            ensure!(*table.prob(n, m) == level, "slice not flat at n={n} m={m}");
            cells += 1;
        }
        for m in (1..=n).step_by(2) {
            ensure!(table.prob(n, m).is_zero(), "odd count on return slice at n={n} m={m}");
        }
    }
    for n in (1..=order).step_by(2) {
        for m in 0..=n {
            ensure!(table.prob(n, m).is_zero(), "odd-time return carries mass at n={n} m={m}");
        }
    }
    ensure!(*table.prob(4, 0) == Rat::from_ratio(1, 8), "n=4 level is not 1/8");
    Ok(format!("flat slices with level checks, {cells} cells, n <= {order}"))
}

/// Random chain with 5 to 8 states, every class nonempty, and the two
/// structural assumptions enforced by zeroing forbidden columns before row
/// normalization. Weights are small integers so probabilities stay exact.
pub fn random_partitioned_chain(seed: u64) -> (FiniteChain<Rat>, Partition) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=8usize);
    let mut classes = vec![StateClass::Mid, StateClass::Plus, StateClass::Minus];
    for _ in 3..n {
        classes.push(match rng.gen_range(0..3u8) {
            0 => StateClass::Mid,
            1 => StateClass::Plus,
            _ => StateClass::Minus,
        });
    }
    classes.shuffle(&mut rng);
    let forbidden = |a: StateClass, b: StateClass| {
        (a == StateClass::Minus && b == StateClass::Plus)
            || (a == StateClass::Plus && b == StateClass::Minus)
    };
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<i64> = (0..n)
            .map(|j| if forbidden(classes[i], classes[j]) { 0 } else { rng.gen_range(0..=4i64) })
            .collect();
        if row.iter().sum::<i64>() == 0 {
            row[i] = 1;
        }
        rows.push(row);
    }
    let p = Matrix::from_fn(n, n, |i, j| {
        let total: i64 = rows[i].iter().sum();
        Rat::from_ratio(rows[i][j], total)
    });
    let chain = FiniteChain::new(p).expect("rows normalized by construction");
    (chain, Partition::new(classes))
}

fn chain_vs_oracle(seed: u64, order: usize) -> Result<usize> {
    let (chain, partition) = random_partitioned_chain(seed);
    let n = chain.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let singleton = rng.gen_range(0..n);
    let mut cells = 0usize;
    for (mask, full) in [
        (vec![true; n], true),
        ((0..n).map(|j| j == singleton).collect::<Vec<_>>(), false),
    ] {
        let plain = k_solve_series(&chain, &partition, &mask, full, order)?;
        let tilde = ktilde_solve_series(&chain, &partition, &mask, full, order)?;
        for start in 0..n {
            let cube =
                sojourn_dp(&chain, &partition, start, order, SojournKind::Plain, FirstStep::Any)?;
            let table = cube.marginal(&mask);
            let k = plain.k[start]
                .as_ref()
                .ok_or_else(|| Error::Invalid(format!("missing kernel for start {start}")))?;
            for nn in 0..=order {
                for m in 0..=nn {
                    ensure!(
                        k.coeff(m, nn - m) == table.prob(nn, m),
                        "seed {seed}: plain deviates at start={start} n={nn} m={m}"
                    );
                    cells += 1;
                }
            }
            if let Some(kt) = tilde.k[start].as_ref() {
                let cube = sojourn_dp(
                    &chain,
                    &partition,
                    start,
                    order,
                    SojournKind::Modified,
                    FirstStep::OutOfMid,
                )?;
                let table = cube.marginal(&mask);
                for nn in 0..=order {
                    for m in 0..=nn {
                        ensure!(
                            kt.coeff(m, nn - m) == table.prob(nn, m),
                            "seed {seed}: modified deviates at start={start} n={nn} m={m}"
                        );
                        cells += 1;
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn c03_random_chains(suite: Suite) -> Result<String> {
    let (chains, order) = match suite {
        Suite::Quick => (10u64, 10usize),
        Suite::Full => (50, 12),
    };
    let results = par_map(chains as usize, |i| chain_vs_oracle(i as u64, order));
    let mut cells = 0usize;
    for r in results {
        cells += r?;
    }
    Ok(format!("{chains} randomized chains, {cells} exact cells, n <= {order}"))
}

fn lr_walk_set(suite: Suite) -> Vec<JumpDistribution<Rat>> {
    let full = [
        "L=1,R=1,pi=1/2,0,1/2",
        "L=1,R=1,pi=3/10,2/5,3/10",
        "L=1,R=2,pi=1/3,1/3,0,1/3",
        "L=1,R=2,pi=1/4,1/4,1/4,1/4",
        "L=2,R=1,pi=1/3,0,1/3,1/3",
        "L=2,R=1,pi=1/4,1/4,1/4,1/4",
        "L=2,R=2,pi=1/5,1/5,1/5,1/5,1/5",
        "L=2,R=2,pi=1/16,4/16,6/16,4/16,1/16",
    ];
    let quick = [full[0], full[2], full[6]];
    let specs: &[&str] = match suite {
        Suite::Quick => &quick,
        Suite::Full => &full,
    };
    specs.iter().map(|s| parse_inline_lr::<Rat>(s).expect("static walk specs")).collect()
}

fn lr_series_vs_oracle(jump: &JumpDistribution<Rat>, target: &TargetSet, order: usize) -> Result<usize> {
    let ks = k_lr_series(jump, target, order)?;
    let kts = ktilde_lr_series(jump, target, order)?;
    let mut cells = 0usize;
    for start in 0..jump.m() as i64 {
        let w = window_for(jump, start, order)?;
        let si = w.index_of(start).expect("start inside window");
        let mask = w.target_mask(target);
        let plain = sojourn_dp(&w.chain, &w.partition, si, order, SojournKind::Plain, FirstStep::Any)?
            .marginal(&mask);
        let tilde = sojourn_dp(
            &w.chain,
            &w.partition,
            si,
            order,
            SojournKind::Modified,
            FirstStep::OutOfMid,
        )?
        .marginal(&mask);
        for n in 0..=order {
            for m in 0..=n {
                ensure!(
                    ks[start as usize].coeff(m, n - m) == plain.prob(n, m),
                    "plain series deviates: start={start} n={n} m={m}"
                );
                ensure!(
                    kts[start as usize].coeff(m, n - m) == tilde.prob(n, m),
                    "modified series deviates: start={start} n={n} m={m}"
                );
                cells += 2;
            }
        }
    }
    Ok(cells)
}

fn lr_numeric_vs_partial(jump: &JumpDistribution<Rat>, n_max: usize) -> Result<f64> {
    let jf = jump.to_f64();
    let w = window_for(jump, 0, n_max)?;
    let si = w.index_of(0).expect("origin inside window");
    let mask = w.target_mask(&TargetSet::All);
    let points: [(f64, f64); 4] = [(0.2, 0.3), (0.2, 0.6), (0.5, 0.3), (0.5, 0.6)];
    let mut worst_margin = f64::INFINITY;
    for (kind, first) in
        [(SojournKind::Plain, FirstStep::Any), (SojournKind::Modified, FirstStep::OutOfMid)]
    {
        let table = sojourn_dp(&w.chain, &w.partition, si, n_max, kind, first)?.marginal(&mask);
        for (x, y) in points {
            let mut partial = 0.0f64;
            for n in 0..=n_max {
                for m in 0..=n {
                    let p = table.prob(n, m);
                    if !p.is_zero() {
                        partial += p.to_f64() * x.powi(m as i32) * y.powi((n - m) as i32);
                    }
                }
            }
            let value = match kind {
                SojournKind::Plain => k_lr_numeric(&jf, &TargetSet::All, x, y)?[0],
                SojournKind::Modified => ktilde_lr_numeric(&jf, &TargetSet::All, x, y)?[0],
            };
            let hi: f64 = x.max(y);
            // the stated geometric tail bound, plus an explicit evaluation
            // epsilon for the float route
            let bound = hi.powi(n_max as i32 + 1) / (1.0 - hi) + 1e-12;
            let diff = (value - partial).abs();
            ensure!(
                diff <= bound,
                "partial-sum gap {diff:.3e} exceeds bound {bound:.3e} at ({x},{y})"
            );
            worst_margin = worst_margin.min(bound - diff);
        }
    }
    Ok(worst_margin)
}

fn c04_bounded_jump(suite: Suite) -> Result<String> {
    let walks = lr_walk_set(suite);
    let (order, n_partial) = match suite {
        Suite::Quick => (8usize, 30usize),
        Suite::Full => (10, 60),
    };
    let mut cells = 0usize;
    for (i, jump) in walks.iter().enumerate() {
        cells += lr_series_vs_oracle(jump, &TargetSet::All, order)?;
        if jump.l() == 1 && jump.r() == 2 {
            cells += lr_series_vs_oracle(jump, &TargetSet::singleton(0), order)?;
        }
        let margin = lr_numeric_vs_partial(jump, n_partial)?;
        ensure!(margin >= 0.0, "walk {i}: negative margin");
    }
    Ok(format!(
        "{} walks: {cells} exact series cells (n <= {order}), numeric within tail bound at 4 points each (N={n_partial})",
        walks.len()
    ))
}

fn c05_closed_forms(suite: Suite) -> Result<String> {
    let order = match suite {
        Suite::Quick => 12,
        Suite::Full => 24,
    };
    let triples = [(1i64, 2i64, 1, 2, 0, 1), (1, 2, 3, 10, 1, 5), (1, 5, 3, 5, 1, 5)];
    let mut cells = 0usize;
    for (pn, pd, qn, qd, rn, rd) in triples {
        let walk = OrdinaryWalk::new(
            Rat::from_ratio(pn, pd),
            Rat::from_ratio(qn, qd),
            Rat::from_ratio(rn, rd),
        )?;
        let jump = walk.jump();
        let w = window_for(&jump, 0, order)?;
        let si = w.index_of(0).expect("origin inside window");
        for target in [TargetSet::All, TargetSet::singleton(0)] {
            let series = k0_closed_series(&walk, &target, order)?;
            let table =
                sojourn_dp(&w.chain, &w.partition, si, order, SojournKind::Plain, FirstStep::Any)?
                    .marginal(&w.target_mask(&target));
            for n in 0..=order {
                for m in 0..=n {
                    ensure!(
                        series.coeff(m, n - m) == table.prob(n, m),
                        "closed series deviates: p={pn}/{pd} q={qn}/{qd} r={rn}/{rd} n={n} m={m}"
                    );
                    cells += 1;
                }
            }
        }
    }
    let axis: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mut worst = 0.0f64;
    for (p, q, r) in [(0.5, 0.5, 0.0), (0.5, 0.3, 0.2), (0.2, 0.6, 0.2)] {
        let report = k0_factorization_check(&OrdinaryWalk::new(p, q, r)?, &axis)?;
        worst = worst.max(report.max_rel_dev);
        ensure!(
            report.max_rel_dev <= 1e-10,
            "factorization deviates {:.3e} at {:?} for ({p},{q},{r})",
            report.max_rel_dev,
            report.worst_point
        );
    }
    Ok(format!(
        "3 walks x 2 targets, {cells} exact series cells (n <= {order}); factorization max dev {worst:.2e} over 3 grids"
    ))
}

fn c06_erratum(suite: Suite) -> Result<(String, Vec<ErratumReport>)> {
    let (axis, order): (Vec<f64>, usize) = match suite {
        Suite::Quick => ((1..=5).map(|k| k as f64 / 5.0 - 0.1).collect(), 8),
        Suite::Full => ((1..=9).map(|k| k as f64 / 10.0).collect(), 12),
    };
    let mut reports = Vec::new();
    let mut mismatches = 0usize;
    for (p, q, r) in [(0.5, 0.5, 0.0), (0.7, 0.3, 0.0), (0.25, 0.25, 0.5), (0.5, 0.3, 0.2)] {
        let walk = OrdinaryWalk::new(p, q, r)?;
        let report = ktilde0_crosscheck(&walk, &axis, order)?;
        let replay = ktilde0_crosscheck(&walk, &axis, order)?;
        ensure!(
            serde_json::to_string(&report).expect("serializable")
                == serde_json::to_string(&replay).expect("serializable"),
            "crosscheck not reproducible for ({p},{q},{r})"
        );
        for f in &report.formulas {
            ensure!(
                f.oracle_anchor.abs_diff <= f.oracle_anchor.bound,
                "{}: structural path drifted from oracle partial sums ({:.3e} > {:.3e})",
                f.formula_id,
                f.oracle_anchor.abs_diff,
                f.oracle_anchor.bound
            );
            if f.formula_id == "tilde-full-line-nostay" {
                ensure!(
                    f.grid_stats.max_rel_err <= 1e-10,
                    "no-stay full-line display deviates {:.3e}",
                    f.grid_stats.max_rel_err
                );
            }
            if f.verdict == "MISMATCH" {
                mismatches += 1;
                ensure!(
                    f.structural_value.is_finite() && f.printed_value.is_finite(),
                    "{}: mismatch entry lacks values",
                    f.formula_id
                );
            }
        }
        reports.push(report);
    }
    Ok((
        format!(
            "4 walks checked; no-stay full-line display within 1e-10; {mismatches} documented mismatching transcriptions; structural path oracle-anchored"
        ),
        reports,
    ))
}

fn c07_roots(_suite: Suite) -> Result<String> {
    let mut root_count = 0usize;
    for jump in lr_walk_set(Suite::Full) {
        let jf = jump.to_f64();
        for x in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let rs = solve_roots(&jf, x)?;
            ensure!(
                rs.max_residual <= 1e-10,
                "residual {:.3e} at x={x} for L={} R={}",
                rs.max_residual,
                jump.l(),
                jump.r()
            );
            root_count += rs.roots.len();
        }
    }
    for (p, q, r) in [(0.5, 0.5, 0.0), (0.7, 0.3, 0.0), (0.25, 0.25, 0.5)] {
        let walk = OrdinaryWalk::new(p, q, r)?;
        let jump = walk.jump();
        for x in [0.2, 0.5, 0.8] {
            let rs = solve_roots(&jump, x)?;
            for want in [walk.z_root(x)?, walk.zeta_root(x)?] {
                let nearest = rs
                    .roots
                    .iter()
                    .map(|z| (z - num::complex::Complex64::new(want, 0.0)).norm())
                    .fold(f64::INFINITY, f64::min);
                ensure!(nearest <= 1e-12, "quadratic root {want} missed by {nearest:.3e} at x={x}");
            }
        }
    }
    let symmetric = [
        uniform_family(2, 0.2)?,
        binomial_family(2, 1.0 / 16.0)?,
        rho_binomial_family(2, 0.5, 0.2)?,
    ];
    for jump in &symmetric {
        for x in [0.3, 0.5, 0.7] {
            let rs = solve_roots(jump, x)?;
            for &i in &rs.inside {
                let inv = 1.0 / rs.roots[i];
                let nearest = rs
                    .outside
                    .iter()
                    .map(|&o| (rs.roots[o] - inv).norm())
                    .fold(f64::INFINITY, f64::min);
                ensure!(nearest <= 1e-9, "inverse pair broken by {nearest:.3e} at x={x}");
            }
            let (z1, z2) = explicit_roots22(jump, x)?;
            for zc in [z1, z2, 1.0 / z1, 1.0 / z2] {
                let nearest = rs
                    .roots
                    .iter()
                    .map(|z| (z - num::complex::Complex64::new(zc, 0.0)).norm())
                    .fold(f64::INFINITY, f64::min);
                ensure!(nearest <= 1e-9, "explicit display root {zc} missed by {nearest:.3e}");
            }
        }
    }
    Ok(format!(
        "{root_count} roots under 1e-10 residuals; quadratic case to 1e-12; explicit display and inverse pairs to 1e-9"
    ))
}

fn c08_two_path(_suite: Suite) -> Result<String> {
    let walks = [uniform_family(2, 0.2)?, binomial_family(2, 1.0 / 16.0)?];
    let points =
        [(0.25, 0.35), (0.25, 0.55), (0.45, 0.35), (0.45, 0.55), (0.65, 0.35), (0.65, 0.55), (0.85, 0.35), (0.85, 0.55)];
    let mut worst = 0.0f64;
    for jump in &walks {
        for (x, y) in points {
            let fast = symmetric22(jump, &TargetSet::All, x, y)?;
            let k = k_lr_numeric(jump, &TargetSet::All, x, y)?;
            let kt = ktilde_lr_numeric(jump, &TargetSet::All, x, y)?;
            for i in 0..2 {
                let rel_k = (fast.k[i] - k[i]).abs() / k[i].abs();
                let rel_t = (fast.ktilde[i] - kt[i]).abs() / kt[i].abs();
                worst = worst.max(rel_k).max(rel_t);
                ensure!(rel_k <= 1e-9, "plain paths split {rel_k:.3e} at ({x},{y}) row {i}");
                ensure!(rel_t <= 1e-9, "modified paths split {rel_t:.3e} at ({x},{y}) row {i}");
            }
        }
    }
    Ok(format!("2 walks x 8 points, worst relative split {worst:.2e}"))
}

fn c09_translation(_suite: Suite) -> Result<String> {
    let order = 10usize;
    let mut cells = 0usize;
    for spec in ["L=2,R=2,pi=1/5,1/5,1/5,1/5,1/5", "L=1,R=2,pi=1/3,1/3,0,1/3"] {
        let jump = parse_inline_lr::<Rat>(spec)?;
        let m = jump.m() as i64;
        let gamma = gamma_series(&jump, order, 3 * m);
        let var = Series1::<Rat>::var(order);
        let blocks = build_matrices(&jump, &TargetSet::All, &gamma, &var)?;
        let gram_inv = blocks.gram.inverse()?;
        let hplus = blocks.gram_minus.matmul(&gram_inv);
        let hminus = blocks.gram_plus.matmul(&gram_inv);
        let w = window_for(&jump, 0, order)?;
        let green = Series1::<Rat>::green(&w.chain, &var)?;
        let mid_mask: Vec<bool> =
            (0..w.chain.size()).map(|i| w.partition.class(i) == StateClass::Mid).collect();
        let entr = entrance_gf(&green, &mid_mask)?;
        for a in 0..m {
            for b in 0..m {
                let above = w.index_of(m + a).expect("upper band inside window");
                let below = w.index_of(-m + a).expect("lower band inside window");
                let mid = w.index_of(b).expect("mid state inside window");
                for c in 0..=order {
                    ensure!(
                        hplus.at(a as usize, b as usize).coeff(c) == entr.at(above, mid).coeff(c),
                        "upper entrance law deviates at {spec} a={a} b={b} order {c}"
                    );
                    ensure!(
                        hminus.at(a as usize, b as usize).coeff(c) == entr.at(below, mid).coeff(c),
                        "lower entrance law deviates at {spec} a={a} b={b} order {c}"
                    );
                    cells += 2;
                }
            }
        }
    }
    Ok(format!("{cells} entrance-law coefficients coefficient-exact, m <= {order}"))
}

fn c10_simulation(suite: Suite) -> Result<String> {
    let paths: u64 = match suite {
        Suite::Quick => 20_000,
        Suite::Full => 100_000,
    };
    let n = 10usize;
    let seed = 20240915u64;
    let mut cells = 0usize;
    for (spec, kind) in [
        ("L=1,R=1,pi=1/2,0,1/2", SojournKind::Modified),
        ("L=2,R=2,pi=1/5,1/5,1/5,1/5,1/5", SojournKind::Plain),
    ] {
        let jump = parse_inline_lr::<Rat>(spec)?;
        let w = window_for(&jump, 0, n)?;
        let si = w.index_of(0).expect("origin inside window");
        let first = FirstStep::Any;
        let cube = sojourn_dp(&w.chain, &w.partition, si, n, kind, first)?;
        let jf = jump.to_f64();
        let wf = window_for(&jf, 0, n)?;
        let sf = wf.index_of(0).expect("origin inside window");
        let run = monte_carlo(&wf.chain, &wf.partition, sf, n, kind, paths, seed);
        let replay = monte_carlo(&wf.chain, &wf.partition, sf, n, kind, paths, seed);
        ensure!(run.counts == replay.counts, "simulation not deterministic under seed for {spec}");
        // compare the count-marginal table, where every populated entry has
        // enough mass for the normal band to be meaningful
        for m in 0..=n {
            let mut exact = 0.0f64;
            let mut hits = 0u64;
            for j in 0..w.chain.size() {
                exact += cube.prob(n, m, j).to_f64();
                hits += run.counts[m][j];
            }
            let emp = hits as f64 / paths as f64;
            if exact == 0.0 {
                ensure!(hits == 0, "impossible count hit: {spec} m={m}");
                continue;
            }
            let sigma = (exact * (1.0 - exact) / paths as f64).sqrt();
            ensure!(
                (emp - exact).abs() <= 3.0 * sigma,
                "count {m} out of band for {spec}: exact={exact:.5} emp={emp:.5}"
            );
            cells += 1;
        }
    }
    Ok(format!("2 walks, {paths} paths each, {cells} populated cells inside 3-sigma, seed-stable"))
}
