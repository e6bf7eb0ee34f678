//! Chain models and state partitions.
//!
//! A state space splits into three classes: a mid class (the interface), an
//! upper class, and a lower class. Two structural rules are required by the
//! kernel solvers and checked in one-step form:
//!   - no direct lower -> upper transition,
//!   - no direct upper -> lower transition,
//! i.e. crossings must pass through the mid class.
//!
//! Bounded-jump walks on the integers carry a canonical partition
//! mid = {0..M-1}, upper = {M,...}, lower = {...,-1} with M = max(L,R).

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{parse_prob, Scalar};
use serde::Deserialize;
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateClass {
    /// The interface class (E_circ in the ingestion schema).
    Mid,
    /// The upper class (E_plus).
    Plus,
    /// The lower class (E_minus).
    Minus,
}

/// Partition of a finite state space into the three classes.
#[derive(Clone, Debug)]
pub struct Partition {
    classes: Vec<StateClass>,
}

impl Partition {
    pub fn new(classes: Vec<StateClass>) -> Self {
        Partition { classes }
    }

    pub fn from_sets(size: usize, mid: &[usize], plus: &[usize], minus: &[usize]) -> Result<Self> {
        let mut classes = vec![None; size];
        let mut put = |states: &[usize], c: StateClass| -> Result<()> {
            for &s in states {
                if s >= size {
                    return Err(Error::Invalid(format!("state {s} out of range (size {size})")));
                }
                if classes[s].is_some() {
                    return Err(Error::Invalid(format!("state {s} assigned to two classes")));
                }
                classes[s] = Some(c);
            }
            Ok(())
        };
        put(mid, StateClass::Mid)?;
        put(plus, StateClass::Plus)?;
        put(minus, StateClass::Minus)?;
        let classes = classes
            .into_iter()
            .enumerate()
            .map(|(s, c)| c.ok_or_else(|| Error::Invalid(format!("state {s} not assigned to any class"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition { classes })
    }

    pub fn size(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, i: usize) -> StateClass {
        self.classes[i]
    }

    pub fn states_in(&self, c: StateClass) -> Vec<usize> {
        (0..self.size()).filter(|&i| self.classes[i] == c).collect()
    }

    pub fn mid_states(&self) -> Vec<usize> {
        self.states_in(StateClass::Mid)
    }
    pub fn plus_states(&self) -> Vec<usize> {
        self.states_in(StateClass::Plus)
    }
    pub fn minus_states(&self) -> Vec<usize> {
        self.states_in(StateClass::Minus)
    }

    /// Membership in the upper closure (mid or upper), the class counted by
    /// the plain sojourn time.
    pub fn in_dag(&self, i: usize) -> bool {
        matches!(self.classes[i], StateClass::Mid | StateClass::Plus)
    }
}

/// Row-stochastic transition matrix over states 0..S-1.
#[derive(Clone, Debug)]
pub struct FiniteChain<S> {
    p: Matrix<S>,
}

impl<S: Scalar> FiniteChain<S> {
    /// Validates nonnegativity and unit row sums (exact for the rational
    /// backend, 1e-12 for floats).
    pub fn new(p: Matrix<S>) -> Result<Self> {
        if p.rows() != p.cols() || p.rows() == 0 {
            return Err(Error::Shape(format!("transition matrix must be square and nonempty, got {}x{}", p.rows(), p.cols())));
        }
        for i in 0..p.rows() {
            let mut sum = S::zero();
            for j in 0..p.cols() {
                let v = p.at(i, j);
                if v.to_f64() < 0.0 {
                    return Err(Error::NegativeEntry { i, j });
                }
                sum = sum.add(v);
            }
            let ok = if S::EXACT {
                sum == S::one()
            } else {
                (sum.to_f64() - 1.0).abs() <= 1e-12
            };
            if !ok {
                return Err(Error::RowSum { row: i, sum: sum.render() });
            }
        }
        Ok(FiniteChain { p })
    }

    pub fn size(&self) -> usize {
        self.p.rows()
    }

    pub fn p(&self, i: usize, j: usize) -> &S {
        self.p.at(i, j)
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.p
    }

    /// One-step mass from i into states satisfying `pred`.
    pub fn mass_into(&self, i: usize, pred: impl Fn(usize) -> bool) -> S {
        let mut acc = S::zero();
        for j in 0..self.size() {
            if pred(j) {
                acc = acc.add(self.p(i, j));
            }
        }
        acc
    }
}

/// Probability of leaving the mid class in one step,
/// varpi_i = P_i{X_1 in upper or lower}.
pub fn varpi<S: Scalar>(chain: &FiniteChain<S>, partition: &Partition, i: usize) -> S {
    chain.mass_into(i, |j| partition.class(j) != StateClass::Mid)
}

/// One violation of the one-step crossing rules.
#[derive(Clone, Debug)]
pub struct Violation {
    pub from: usize,
    pub to: usize,
    pub prob: String,
    /// "lower-to-upper" or "upper-to-lower"
    pub rule: &'static str,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("{} edge {}->{} with probability {}", v.rule, v.from, v.to, v.prob))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Check the one-step structural rules: no lower->upper and no upper->lower
/// edges with positive probability.
pub fn check_assumptions<S: Scalar>(chain: &FiniteChain<S>, partition: &Partition) -> ValidationReport {
    let mut report = ValidationReport::default();
    for i in 0..chain.size() {
        for j in 0..chain.size() {
            if chain.p(i, j).is_zero() {
                continue;
            }
            match (partition.class(i), partition.class(j)) {
                (StateClass::Minus, StateClass::Plus) => report.violations.push(Violation {
                    from: i,
                    to: j,
                    prob: chain.p(i, j).render(),
                    rule: "lower-to-upper",
                }),
                (StateClass::Plus, StateClass::Minus) => report.violations.push(Violation {
                    from: i,
                    to: j,
                    prob: chain.p(i, j).render(),
                    rule: "upper-to-lower",
                }),
                _ => {}
            }
        }
    }
    report
}

/// Jump law of a bounded-jump walk: steps in {-L..R} with probabilities
/// pi_{-L}..pi_R.
#[derive(Clone, Debug)]
pub struct JumpDistribution<S> {
    l: usize,
    r: usize,
    probs: Vec<S>,
}

impl<S: Scalar> JumpDistribution<S> {
    pub fn new(l: usize, r: usize, probs: Vec<S>) -> Result<Self> {
        if l == 0 && r == 0 {
            return Err(Error::Invalid("need at least one of L, R positive".into()));
        }
        if probs.len() != l + r + 1 {
            return Err(Error::Invalid(format!(
                "expected {} probabilities for L={l}, R={r}, got {}",
                l + r + 1,
                probs.len()
            )));
        }
        let mut sum = S::zero();
        for (k, v) in probs.iter().enumerate() {
            if v.to_f64() < 0.0 {
                return Err(Error::NegativeEntry { i: 0, j: k });
            }
            sum = sum.add(v);
        }
        let ok = if S::EXACT { sum == S::one() } else { (sum.to_f64() - 1.0).abs() <= 1e-12 };
        if !ok {
            return Err(Error::RowSum { row: 0, sum: sum.render() });
        }
        Ok(JumpDistribution { l, r, probs })
    }

    pub fn l(&self) -> usize {
        self.l
    }
    pub fn r(&self) -> usize {
        self.r
    }

    /// M = max(L, R), the width of the canonical mid class.
    pub fn m(&self) -> usize {
        self.l.max(self.r)
    }

    /// pi_k, zero outside {-L..R}.
    pub fn pi(&self, k: i64) -> S {
        if k < -(self.l as i64) || k > self.r as i64 {
            S::zero()
        } else {
            self.probs[(k + self.l as i64) as usize].clone()
        }
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    /// True when pi is symmetric (pi_k = pi_{-k}, requires L = R).
    pub fn is_symmetric(&self) -> bool {
        self.l == self.r && (1..=self.l as i64).all(|k| self.pi(k) == self.pi(-k))
    }

    pub fn to_f64(&self) -> JumpDistribution<f64> {
        JumpDistribution {
            l: self.l,
            r: self.r,
            probs: self.probs.iter().map(|p| p.to_f64()).collect(),
        }
    }
}

/// The canonical partition of the integers for a walk with mid width M.
#[derive(Clone, Copy, Debug)]
pub struct CanonicalPartition {
    m: usize,
}

impl CanonicalPartition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn class_of(&self, pos: i64) -> StateClass {
        if pos < 0 {
            StateClass::Minus
        } else if pos < self.m as i64 {
            StateClass::Mid
        } else {
            StateClass::Plus
        }
    }
}

pub fn lr_canonical_partition<S: Scalar>(jump: &JumpDistribution<S>) -> CanonicalPartition {
    CanonicalPartition { m: jump.m() }
}

/// Target of the location marginal: every state, or a finite set.
/// Members are integer positions for walks and state indices for finite
/// chains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSet {
    All,
    Finite(BTreeSet<i64>),
}

impl TargetSet {
    pub fn singleton(s: i64) -> Self {
        TargetSet::Finite([s].into_iter().collect())
    }

    pub fn contains(&self, s: i64) -> bool {
        match self {
            TargetSet::All => true,
            TargetSet::Finite(set) => set.contains(&s),
        }
    }

    /// Per-state membership mask for a finite chain of the given size.
    pub fn mask(&self, size: usize) -> Vec<bool> {
        (0..size).map(|i| self.contains(i as i64)).collect()
    }
}

/// A walk materialized on a finite window of the integers.
///
/// States 0..=hi-lo are the window positions lo..=hi in order; two absorbing
/// sentinel states follow (lower overflow, then upper overflow). The
/// sentinels are classed lower/upper so the canonical partition's one-step
/// rules keep holding on the window.
#[derive(Clone, Debug)]
pub struct WindowChain<S> {
    pub chain: FiniteChain<S>,
    pub partition: Partition,
    pub lo: i64,
    pub hi: i64,
    pub lower_sentinel: usize,
    pub upper_sentinel: usize,
}

impl<S: Scalar> WindowChain<S> {
    pub fn index_of(&self, pos: i64) -> Option<usize> {
        if pos < self.lo || pos > self.hi {
            None
        } else {
            Some((pos - self.lo) as usize)
        }
    }

    pub fn pos_of(&self, idx: usize) -> Option<i64> {
        if idx <= (self.hi - self.lo) as usize {
            Some(self.lo + idx as i64)
        } else {
            None
        }
    }

    /// Map an integer target set onto window state indices. Sentinels are
    /// excluded from finite targets; `All` stays `All` (the sentinels carry
    /// no mass within an exactness horizon).
    pub fn map_target(&self, target: &TargetSet) -> TargetSet {
        match target {
            TargetSet::All => TargetSet::All,
            TargetSet::Finite(set) => TargetSet::Finite(
                set.iter()
                    .filter_map(|&p| self.index_of(p).map(|i| i as i64))
                    .collect(),
            ),
        }
    }

    /// Per-state membership mask over window states including sentinels.
    pub fn target_mask(&self, target: &TargetSet) -> Vec<bool> {
        let mapped = self.map_target(target);
        let size = self.chain.size();
        let mut mask = mapped.mask(size);
        if matches!(target, TargetSet::Finite(_)) {
            mask[self.lower_sentinel] = false;
            mask[self.upper_sentinel] = false;
        }
        mask
    }

    /// Width that keeps an n-step computation from `start` exact: the
    /// sentinels stay unreachable.
    pub fn is_exact_for(&self, start: i64, steps: usize, jump_l: usize, jump_r: usize) -> bool {
        start - (steps * jump_l) as i64 >= self.lo && start + (steps * jump_r) as i64 <= self.hi
    }
}

/// Materialize a jump law on the window [lo, hi] with absorbing sentinels.
pub fn materialize_window<S: Scalar>(
    jump: &JumpDistribution<S>,
    lo: i64,
    hi: i64,
) -> Result<WindowChain<S>> {
    let need = jump.l() + jump.r() + 1;
    if hi < lo || ((hi - lo + 1) as usize) < need {
        return Err(Error::WindowTooSmall { need, got: (hi - lo + 1).max(0) as usize });
    }
    let w = (hi - lo + 1) as usize;
    let size = w + 2;
    let lower_sentinel = w;
    let upper_sentinel = w + 1;
    let mut p = Matrix::zeros_like(size, size, &S::zero());
    for idx in 0..w {
        let pos = lo + idx as i64;
        for k in -(jump.l() as i64)..=jump.r() as i64 {
            let prob = jump.pi(k);
            if prob.is_zero() {
                continue;
            }
            let dest = pos + k;
            let j = if dest < lo {
                lower_sentinel
            } else if dest > hi {
                upper_sentinel
            } else {
                (dest - lo) as usize
            };
            let cur = p.at(idx, j).add(&prob);
            p.set(idx, j, cur);
        }
    }
    p.set(lower_sentinel, lower_sentinel, S::one());
    p.set(upper_sentinel, upper_sentinel, S::one());

    let canon = CanonicalPartition { m: jump.m() };
    let mut classes: Vec<StateClass> = (0..w).map(|i| canon.class_of(lo + i as i64)).collect();
    classes.push(StateClass::Minus); // lower sentinel
    classes.push(StateClass::Plus); // upper sentinel

    Ok(WindowChain {
        chain: FiniteChain::new(p)?,
        partition: Partition::new(classes),
        lo,
        hi,
        lower_sentinel,
        upper_sentinel,
    })
}

/// Window wide enough for `steps` exact steps from `start`.
pub fn window_for<S: Scalar>(
    jump: &JumpDistribution<S>,
    start: i64,
    steps: usize,
) -> Result<WindowChain<S>> {
    let lo = start - (steps * jump.l()) as i64 - 1;
    let hi = start + (steps * jump.r()) as i64 + 1;
    // keep the full canonical mid class inside the window
    let lo = lo.min(-1);
    let hi = hi.max(jump.m() as i64);
    materialize_window(jump, lo, hi)
}

// ---------------------------------------------------------------------------
// ingestion

#[derive(Deserialize)]
#[serde(untagged)]
enum ProbJson {
    Num(f64),
    Str(String),
}

fn prob_from_json<S: Scalar>(p: &ProbJson) -> Result<S> {
    match p {
        ProbJson::Str(s) => parse_prob(s),
        ProbJson::Num(x) => {
            // exact dyadic conversion keeps rational backends honest
            if x.fract() == 0.0 && x.abs() < 9e15 {
                Ok(S::from_int(*x as i64))
            } else {
                let denom = (1u64 << 53) as i64;
                let scaled = (x * denom as f64).round();
                if (scaled / denom as f64 - x).abs() < f64::EPSILON {
                    Ok(S::from_ratio(scaled as i64, denom))
                } else {
                    Err(Error::Parse(format!("cannot represent {x} exactly; pass it as a string")))
                }
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "type")]
enum ChainJson {
    #[serde(rename = "finite")]
    Finite {
        #[serde(rename = "P")]
        p: Vec<Vec<ProbJson>>,
        #[serde(rename = "E_circ")]
        e_circ: Vec<usize>,
        #[serde(rename = "E_plus")]
        e_plus: Vec<usize>,
        #[serde(rename = "E_minus")]
        e_minus: Vec<usize>,
    },
    #[serde(rename = "lr")]
    Lr {
        #[serde(rename = "L")]
        l: usize,
        #[serde(rename = "R")]
        r: usize,
        pi: Vec<ProbJson>,
    },
}

/// A parsed model: either a finite chain with its partition, or a walk.
#[derive(Clone, Debug)]
pub enum ChainSpec<S> {
    Finite { chain: FiniteChain<S>, partition: Partition },
    Lr { jump: JumpDistribution<S> },
}

impl<S: Scalar> ChainSpec<S> {
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: ChainJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("chain JSON: {e}")))?;
        match parsed {
            ChainJson::Finite { p, e_circ, e_plus, e_minus } => {
                let n = p.len();
                if n == 0 || p.iter().any(|row| row.len() != n) {
                    return Err(Error::Parse("P must be square and nonempty".into()));
                }
                let mut m = Matrix::zeros_like(n, n, &S::zero());
                for (i, row) in p.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        m.set(i, j, prob_from_json(v)?);
                    }
                }
                let chain = FiniteChain::new(m)?;
                let partition = Partition::from_sets(n, &e_circ, &e_plus, &e_minus)?;
                Ok(ChainSpec::Finite { chain, partition })
            }
            ChainJson::Lr { l, r, pi } => {
                let probs = pi.iter().map(prob_from_json).collect::<Result<Vec<S>>>()?;
                Ok(ChainSpec::Lr { jump: JumpDistribution::new(l, r, probs)? })
            }
        }
    }
}

/// Parse the inline walk grammar `L=<int>,R=<int>,pi=<c_-L>,...,<c_R>`.
pub fn parse_inline_lr<S: Scalar>(text: &str) -> Result<JumpDistribution<S>> {
    let rest = text.trim();
    let (l_part, rest) = rest
        .split_once(',')
        .ok_or_else(|| Error::Parse("expected L=<int>,R=<int>,pi=...".into()))?;
    let (r_part, pi_part) = rest
        .split_once(',')
        .ok_or_else(|| Error::Parse("expected L=<int>,R=<int>,pi=...".into()))?;
    let l: usize = l_part
        .trim()
        .strip_prefix("L=")
        .ok_or_else(|| Error::Parse(format!("expected L=<int>, got {l_part:?}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad L in {l_part:?}")))?;
    let r: usize = r_part
        .trim()
        .strip_prefix("R=")
        .ok_or_else(|| Error::Parse(format!("expected R=<int>, got {r_part:?}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad R in {r_part:?}")))?;
    let pi_list = pi_part
        .trim()
        .strip_prefix("pi=")
        .ok_or_else(|| Error::Parse(format!("expected pi=<list>, got {pi_part:?}")))?;
    let probs = pi_list
        .split(',')
        .map(|t| parse_prob(t))
        .collect::<Result<Vec<S>>>()?;
    JumpDistribution::new(l, r, probs)
}

/// Convenience: the Bernoulli-like one-step walk with down/stay/up masses.
pub fn simple_walk<S: Scalar>(q: S, r: S, p: S) -> Result<JumpDistribution<S>> {
    JumpDistribution::new(1, 1, vec![q, r, p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn bernoulli() -> JumpDistribution<Rat> {
        simple_walk(Rat::from_ratio(1, 2), Rat::zero(), Rat::from_ratio(1, 2)).unwrap()
    }

    #[test]
    fn canonical_partition_classes() {
        let jump = bernoulli();
        let canon = lr_canonical_partition(&jump);
        assert_eq!(canon.class_of(-1), StateClass::Minus);
        assert_eq!(canon.class_of(0), StateClass::Mid);
        assert_eq!(canon.class_of(1), StateClass::Plus);
    }

    #[test]
    fn window_respects_structural_rules() {
        let jump = bernoulli();
        let w = materialize_window(&jump, -5, 5).unwrap();
        assert!(check_assumptions(&w.chain, &w.partition).ok());
        assert_eq!(w.index_of(0), Some(5));
        assert_eq!(w.pos_of(5), Some(0));
        // row sums hold including sentinel overflow
        assert_eq!(w.chain.size(), 13);
    }

    #[test]
    fn window_too_small_rejected() {
        let jump = bernoulli();
        assert!(matches!(
            materialize_window(&jump, 0, 1),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn violation_detected() {
        // 2 states: 0 in minus, 1 in plus, direct edge between them
        let p = Matrix::from_fn(2, 2, |_, j| {
            if j == 0 { Rat::from_ratio(1, 2) } else { Rat::from_ratio(1, 2) }
        });
        let chain = FiniteChain::new(p).unwrap();
        let partition = Partition::from_sets(2, &[], &[1], &[0]).unwrap();
        let report = check_assumptions(&chain, &partition);
        assert!(!report.ok());
        assert_eq!(report.violations.len(), 2);
        assert_eq!(report.violations[0].rule, "lower-to-upper");
    }

    #[test]
    fn ingest_finite_json() {
        let text = r#"{"type":"finite",
            "P":[["1/2","1/2"],["1/3","2/3"]],
            "E_circ":[0],"E_plus":[1],"E_minus":[]}"#;
        let spec: ChainSpec<Rat> = ChainSpec::from_json(text).unwrap();
        match spec {
            ChainSpec::Finite { chain, partition } => {
                assert_eq!(*chain.p(1, 0), Rat::from_ratio(1, 3));
                assert_eq!(partition.class(1), StateClass::Plus);
            }
            _ => panic!("expected finite"),
        }
    }

    #[test]
    fn ingest_rejects_bad_rows() {
        let text = r#"{"type":"finite","P":[["1/2","1/3"],["1/3","2/3"]],
            "E_circ":[0],"E_plus":[1],"E_minus":[]}"#;
        assert!(ChainSpec::<Rat>::from_json(text).is_err());
    }

    #[test]
    fn ingest_lr_json_and_inline() {
        let text = r#"{"type":"lr","L":1,"R":2,"pi":["1/10","1/5","3/10","2/5"]}"#;
        let spec: ChainSpec<Rat> = ChainSpec::from_json(text).unwrap();
        match spec {
            ChainSpec::Lr { jump } => {
                assert_eq!(jump.pi(2), Rat::from_ratio(2, 5));
                assert_eq!(jump.m(), 2);
            }
            _ => panic!("expected lr"),
        }
        let inline: JumpDistribution<Rat> = parse_inline_lr("L=1,R=1,pi=1/2,0,1/2").unwrap();
        assert_eq!(inline.pi(-1), Rat::from_ratio(1, 2));
        assert_eq!(inline.pi(0), Rat::zero());
        assert!(parse_inline_lr::<Rat>("L=1,pi=1").is_err());
    }

    #[test]
    fn varpi_on_window() {
        let jump = bernoulli();
        let w = window_for(&jump, 0, 4).unwrap();
        let i0 = w.index_of(0).unwrap();
        assert_eq!(varpi(&w.chain, &w.partition, i0), Rat::one());
    }
}
