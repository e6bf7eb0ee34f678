//! Step-by-step dynamic-programming oracle for joint sojourn laws.
//!
//! Everything here walks the chain one transition at a time, so the results
//! depend only on the transition matrix and the partition. The
//! generating-function solvers are cross-checked against these tables.
//!
//! Two counts are supported. The plain count adds one for every step that
//! lands in the upper closure (mid or upper). The modified count adds one
//! when the step lands in the upper class, keeps accruing while the walk sits
//! in the mid class after arriving from above, and freezes after a visit to
//! the lower class; the bookkeeping is a single counting/frozen flag whose
//! update depends only on the class just entered.

use crate::chain::{varpi, FiniteChain, Partition, StateClass};
use crate::error::{Error, Result};
use crate::parallel::par_map;
use crate::scalar::Scalar;
use crate::series::Series1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SojournKind {
    /// Count every step landing in the upper closure.
    Plain,
    /// Count runs that entered the mid class from above.
    Modified,
}

/// Restriction on the class of the first step, used by the conditioned
/// kernels. `Any` leaves the law unrestricted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FirstStep {
    Any,
    InPlus,
    InMinus,
    /// First step leaves the mid class (upper or lower).
    OutOfMid,
}

fn first_step_allows(partition: &Partition, fs: FirstStep, j: usize) -> bool {
    match fs {
        FirstStep::Any => true,
        FirstStep::InPlus => partition.class(j) == StateClass::Plus,
        FirstStep::InMinus => partition.class(j) == StateClass::Minus,
        FirstStep::OutOfMid => partition.class(j) != StateClass::Mid,
    }
}

/// Flag update on landing in `next`: returns (new counting flag, step counts).
/// Landing in the upper class switches counting on; the lower class switches
/// it off; the mid class preserves it.
pub fn step_mode(counting: bool, next: StateClass) -> (bool, bool) {
    match next {
        StateClass::Plus => (true, true),
        StateClass::Mid => (counting, counting),
        StateClass::Minus => (false, false),
    }
}

/// Initial flag: counting iff the start state is in the upper class.
pub fn initial_mode(partition: &Partition, start: usize) -> bool {
    partition.class(start) == StateClass::Plus
}

/// Joint law P{count after n steps = m, position = j} for n = 0..=n_max.
///
/// Under a first-step restriction the entries carry the restriction event,
/// so row n sums to the restricted mass rather than one; the n = 0 row holds
/// that mass at (0, start).
#[derive(Clone, Debug)]
pub struct JointSojourn<S> {
    n_max: usize,
    states: usize,
    /// cube[n][m][j], m <= n
    cube: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> JointSojourn<S> {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn prob(&self, n: usize, m: usize, j: usize) -> &S {
        &self.cube[n][m][j]
    }

    /// Sum over positions selected by `mask`: rows[n][m].
    pub fn marginal(&self, mask: &[bool]) -> SojournTable<S> {
        let rows = (0..=self.n_max)
            .map(|n| {
                (0..=n)
                    .map(|m| {
                        let mut acc = S::zero();
                        for j in 0..self.states {
                            if mask[j] {
                                acc = acc.add(&self.cube[n][m][j]);
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        SojournTable { rows }
    }

    /// Total mass of row n (one for the unrestricted law).
    pub fn row_mass(&self, n: usize) -> S {
        let mut acc = S::zero();
        for m in 0..=n {
            for j in 0..self.states {
                acc = acc.add(&self.cube[n][m][j]);
            }
        }
        acc
    }
}

/// Count-marginal table rows[n][m] = P{count after n steps = m, position in
/// the chosen target}.
#[derive(Clone, Debug, PartialEq)]
pub struct SojournTable<S> {
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> SojournTable<S> {
    pub fn prob(&self, n: usize, m: usize) -> &S {
        &self.rows[n][m]
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }
}

/// Exact joint law by stepping the chain, tracking (flag, count, position).
pub fn sojourn_dp<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    start: usize,
    n_max: usize,
    kind: SojournKind,
    first_step: FirstStep,
) -> Result<JointSojourn<S>> {
    let s = chain.size();
    if start >= s {
        return Err(Error::Shape(format!("start {start} out of range (size {s})")));
    }
    if partition.size() != s {
        return Err(Error::Shape("partition size differs from chain size".into()));
    }
    let zero = S::zero();

    // dist[flag][m][j]; flag 1 = counting
    let mut dist = vec![vec![vec![zero.clone(); s]; 1]; 2];
    let flag0 = match kind {
        SojournKind::Modified if initial_mode(partition, start) => 1,
        _ => 0,
    };
    dist[flag0][0][start] = S::one();

    let mut cube: Vec<Vec<Vec<S>>> = Vec::with_capacity(n_max + 1);
    let mass0 = match first_step {
        FirstStep::Any => S::one(),
        _ => chain.mass_into(start, |j| first_step_allows(partition, first_step, j)),
    };
    let mut row0 = vec![vec![zero.clone(); s]; 1];
    row0[0][start] = mass0;
    cube.push(row0);

    for n in 1..=n_max {
        let mut next = vec![vec![vec![zero.clone(); s]; n + 1]; 2];
        for flag in 0..2 {
            for m in 0..dist[flag].len() {
                for i in 0..s {
                    let mass = dist[flag][m][i].clone();
                    if mass.is_zero() {
                        continue;
                    }
                    for j in 0..s {
                        let p = chain.p(i, j);
                        if p.is_zero() {
                            continue;
                        }
                        if n == 1 && !first_step_allows(partition, first_step, j) {
                            continue;
                        }
                        let (new_flag, counts) = match kind {
                            SojournKind::Plain => (flag == 1, partition.in_dag(j)),
                            SojournKind::Modified => step_mode(flag == 1, partition.class(j)),
                        };
                        let nm = m + counts as usize;
                        let cell = next[new_flag as usize][nm][j].add(&mass.mul(p));
                        next[new_flag as usize][nm][j] = cell;
                    }
                }
            }
        }
        dist = next;
        let mut row = vec![vec![zero.clone(); s]; n + 1];
        for layer in &dist {
            for (m, per_state) in layer.iter().enumerate() {
                for (j, v) in per_state.iter().enumerate() {
                    if !v.is_zero() {
                        row[m][j] = row[m][j].add(v);
                    }
                }
            }
        }
        cube.push(row);
    }

    Ok(JointSojourn { n_max, states: s, cube })
}

// ---------------------------------------------------------------------------
// entrance-time oracles

/// Which first-passage object to tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntranceKind {
    /// First entrance into the mid class.
    Mid,
    /// First entrance into the upper closure (mid or upper).
    UpperClosure,
    /// First entrance into the upper class.
    Plus,
    /// First entrance into the lower class.
    Minus,
    /// Last mid position before leaving the mid class, weighted by the time
    /// of that position (one less than the exit time). Start must sit in mid
    /// or the table is zero.
    ExitSpringboard,
    /// Same springboard, but for the excursion that first steps into the
    /// upper class, wanders outside mid, re-enters mid, and then exits.
    TildeSpringboardPlus,
    /// Mirror of the above through the lower class.
    TildeSpringboardMinus,
}

/// Tabulate the chosen first-passage law as one series per destination state:
/// result[j].coeff(m) = P{the recorded position is j at recorded time m}.
pub fn entrance_dp<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    start: usize,
    kind: EntranceKind,
    order: usize,
) -> Result<Vec<Series1<S>>> {
    let s = chain.size();
    if start >= s {
        return Err(Error::Shape(format!("start {start} out of range (size {s})")));
    }
    let zero = S::zero();
    let mut out: Vec<Series1<S>> = vec![Series1::zeros(order); s];

    match kind {
        EntranceKind::Mid | EntranceKind::UpperClosure | EntranceKind::Plus | EntranceKind::Minus => {
            let in_target = |j: usize| match kind {
                EntranceKind::Mid => partition.class(j) == StateClass::Mid,
                EntranceKind::UpperClosure => partition.in_dag(j),
                EntranceKind::Plus => partition.class(j) == StateClass::Plus,
                EntranceKind::Minus => partition.class(j) == StateClass::Minus,
                _ => unreachable!(),
            };
            // mass not yet absorbed by the target
            let mut dist = vec![zero.clone(); s];
            dist[start] = S::one();
            for m in 1..=order {
                let mut next = vec![zero.clone(); s];
                for i in 0..s {
                    if dist[i].is_zero() {
                        continue;
                    }
                    for j in 0..s {
                        let p = chain.p(i, j);
                        if p.is_zero() {
                            continue;
                        }
                        next[j] = next[j].add(&dist[i].mul(p));
                    }
                }
                for j in 0..s {
                    if in_target(j) {
                        if !next[j].is_zero() {
                            let bump = out[j].coeff(m).add(&next[j]);
                        out[j].set_coeff(m, bump);
                        }
                        next[j] = zero.clone();
                    }
                }
                dist = next;
            }
        }
        EntranceKind::ExitSpringboard => {
            if partition.class(start) != StateClass::Mid {
                return Ok(out);
            }
            // paths that have stayed in mid since time zero
            let mut dist = vec![zero.clone(); s];
            dist[start] = S::one();
            for m in 0..=order {
                if m > 0 {
                    let mut next = vec![zero.clone(); s];
                    for i in 0..s {
                        if dist[i].is_zero() || partition.class(i) != StateClass::Mid {
                            continue;
                        }
                        for j in 0..s {
                            if partition.class(j) != StateClass::Mid {
                                continue;
                            }
                            let p = chain.p(i, j);
                            if p.is_zero() {
                                continue;
                            }
                            next[j] = next[j].add(&dist[i].mul(p));
                        }
                    }
                    dist = next;
                }
                for j in 0..s {
                    if dist[j].is_zero() {
                        continue;
                    }
                    let exit = varpi(chain, partition, j);
                    if !exit.is_zero() {
                        let bump = out[j].coeff(m).add(&dist[j].mul(&exit));
                        out[j].set_coeff(m, bump);
                    }
                }
            }
        }
        EntranceKind::TildeSpringboardPlus | EntranceKind::TildeSpringboardMinus => {
            let through = if kind == EntranceKind::TildeSpringboardPlus {
                StateClass::Plus
            } else {
                StateClass::Minus
            };
            // outside: left mid on step one through `through`, not yet back in mid
            // inside: re-entered mid and stayed there since
            let mut outside = vec![zero.clone(); s];
            let mut inside = vec![zero.clone(); s];
            for k in 0..s {
                if partition.class(k) == through {
                    outside[k] = chain.p(start, k).clone();
                }
            }
            for m in 1..=order {
                if m > 1 {
                    let mut new_outside = vec![zero.clone(); s];
                    let mut new_inside = vec![zero.clone(); s];
                    for i in 0..s {
                        if !outside[i].is_zero() {
                            for j in 0..s {
                                let p = chain.p(i, j);
                                if p.is_zero() {
                                    continue;
                                }
                                let w = outside[i].mul(p);
                                if partition.class(j) == StateClass::Mid {
                                    new_inside[j] = new_inside[j].add(&w);
                                } else {
                                    new_outside[j] = new_outside[j].add(&w);
                                }
                            }
                        }
                        if !inside[i].is_zero() {
                            for j in 0..s {
                                if partition.class(j) != StateClass::Mid {
                                    continue;
                                }
                                let p = chain.p(i, j);
                                if p.is_zero() {
                                    continue;
                                }
                                new_inside[j] = new_inside[j].add(&inside[i].mul(p));
                            }
                        }
                    }
                    outside = new_outside;
                    inside = new_inside;
                }
                for j in 0..s {
                    if inside[j].is_zero() {
                        continue;
                    }
                    let exit = varpi(chain, partition, j);
                    if !exit.is_zero() {
                        let bump = out[j].coeff(m).add(&inside[j].mul(&exit));
                        out[j].set_coeff(m, bump);
                    }
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// path enumeration reference (testing sizes only)

/// Joint law by enumerating every n-step path and reading the modified count
/// straight off its definition: a step counts when it lands in the upper
/// class, or lands in mid and the nearest earlier non-mid position (the start
/// included) is in the upper class.
///
/// Exponential in n; this is the semantic reference the flag update is
/// validated against.
pub fn modified_count_brute<S: Scalar>(
    chain: &FiniteChain<S>,
    partition: &Partition,
    start: usize,
    n: usize,
) -> Result<JointSojourn<S>> {
    let s = chain.size();
    if start >= s {
        return Err(Error::Shape(format!("start {start} out of range (size {s})")));
    }
    let zero = S::zero();
    let mut cube: Vec<Vec<Vec<S>>> = (0..=n)
        .map(|k| vec![vec![zero.clone(); s]; k + 1])
        .collect();
    cube[0][0][start] = S::one();

    // iterative path enumeration: path[k] = state at time k
    let mut path = vec![start; n + 1];
    let mut weight = vec![S::one(); n + 1];
    let mut depth = 1usize;
    let mut cursor = vec![0usize; n + 1];
    if n == 0 {
        return Ok(JointSojourn { n_max: 0, states: s, cube });
    }
    loop {
        if cursor[depth] == s {
            cursor[depth] = 0;
            if depth == 1 {
                break;
            }
            depth -= 1;
            cursor[depth] += 1;
            continue;
        }
        let j = cursor[depth];
        let p = chain.p(path[depth - 1], j);
        if p.is_zero() {
            cursor[depth] += 1;
            continue;
        }
        path[depth] = j;
        weight[depth] = weight[depth - 1].mul(p);
        // score the prefix of length `depth` as a complete path of n=depth
        let mut count = 0usize;
        for m in 1..=depth {
            let counts = match partition.class(path[m]) {
                StateClass::Plus => true,
                StateClass::Minus => false,
                StateClass::Mid => {
                    // nearest earlier non-mid position decides; none means no
                    let mut up = false;
                    for k in (0..m).rev() {
                        match partition.class(path[k]) {
                            StateClass::Mid => continue,
                            c => {
                                up = c == StateClass::Plus;
                                break;
                            }
                        }
                    }
                    // complement reading: frozen iff nearest non-mid is lower
                    // or absent; the two scans must mirror exactly
                    debug_assert_eq!(up, {
                        let mut frozen = true;
                        for k in (0..m).rev() {
                            match partition.class(path[k]) {
                                StateClass::Mid => continue,
                                StateClass::Minus => break,
                                StateClass::Plus => {
                                    frozen = false;
                                    break;
                                }
                            }
                        }
                        !frozen
                    });
                    up
                }
            };
            if counts {
                count += 1;
            }
        }
        let cell = cube[depth][count][path[depth]].add(&weight[depth]);
        cube[depth][count][path[depth]] = cell;
        if depth < n {
            depth += 1;
            cursor[depth] = 0;
        } else {
            cursor[depth] += 1;
        }
    }

    // each cube row currently holds every extension-weighted prefix exactly
    // once, which is the law at that horizon
    Ok(JointSojourn { n_max: n, states: s, cube })
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Empirical counts over sampled paths at a fixed horizon.
#[derive(Clone, Debug)]
pub struct McRun {
    pub paths: u64,
    /// counts[m][j]
    pub counts: Vec<Vec<u64>>,
}

impl McRun {
    /// Empirical probabilities as exact count ratios.
    pub fn probs<S: Scalar>(&self) -> Vec<Vec<S>> {
        self.counts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| S::from_ratio(c as i64, self.paths as i64))
                    .collect()
            })
            .collect()
    }
}

/// Sample `paths` trajectories of length n and tally (count, position).
///
/// Each path draws from its own counter-indexed stream of one seeded
/// generator, so the tally is identical however the work is sharded.
pub fn monte_carlo(
    chain: &FiniteChain<f64>,
    partition: &Partition,
    start: usize,
    n: usize,
    kind: SojournKind,
    paths: u64,
    seed: u64,
) -> McRun {
    let shards = if cfg!(feature = "parallel") { 16 } else { 1 };
    monte_carlo_with_shards(chain, partition, start, n, kind, paths, seed, shards)
}

/// Sharded variant exposed so tests can pin the shard count and check the
/// tally is shard-independent.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_with_shards(
    chain: &FiniteChain<f64>,
    partition: &Partition,
    start: usize,
    n: usize,
    kind: SojournKind,
    paths: u64,
    seed: u64,
    shards: usize,
) -> McRun {
    let s = chain.size();
    let shards = shards.max(1);
    let chunk = paths.div_ceil(shards as u64).max(1);
    let partials: Vec<Vec<Vec<u64>>> = par_map(shards, |shard| {
        let lo = shard as u64 * chunk;
        let hi = (lo + chunk).min(paths);
        let mut counts = vec![vec![0u64; s]; n + 1];
        for path_idx in lo..hi {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path_idx);
            let mut state = start;
            let mut flag = match kind {
                SojournKind::Modified => initial_mode(partition, start),
                SojournKind::Plain => false,
            };
            let mut m = 0usize;
            for _ in 0..n {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut next = s - 1;
                for j in 0..s {
                    acc += chain.p(state, j);
                    if u < acc {
                        next = j;
                        break;
                    }
                }
                let counts_step = match kind {
                    SojournKind::Plain => partition.in_dag(next),
                    SojournKind::Modified => {
                        let (nf, c) = step_mode(flag, partition.class(next));
                        flag = nf;
                        c
                    }
                };
                if counts_step {
                    m += 1;
                }
                state = next;
            }
            counts[m][state] += 1;
        }
        counts
    });
    let mut counts = vec![vec![0u64; s]; n + 1];
    for part in partials {
        for (m, row) in part.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                counts[m][j] += c;
            }
        }
    }
    McRun { paths, counts }
}
