//! Chain sources and shared flag plumbing for all commands.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use sojourn_core::chain::{
    check_assumptions, parse_inline_lr, ChainSpec, FiniteChain, JumpDistribution, Partition,
    TargetSet,
};
use sojourn_core::linalg::Matrix;
use sojourn_core::scalar::{Rat, Scalar};
use sojourn_core::{Error, Result};

#[derive(Args, Debug)]
pub struct SourceArgs {
    /// Inline walk spec: L=<int>,R=<int>,pi=<c_-L>,...,<c_R>
    #[arg(long, conflicts_with = "chain")]
    pub lr: Option<String>,

    /// Path to a chain JSON file ("finite" or "lr")
    #[arg(long)]
    pub chain: Option<PathBuf>,
}

pub enum Source {
    Lr(JumpDistribution<Rat>),
    Finite { chain: FiniteChain<Rat>, partition: Partition },
}

impl SourceArgs {
    /// Load and structurally validate the chain. Finite chains that violate
    /// the one-step class assumptions are rejected with the violation list.
    pub fn load(&self) -> Result<Source> {
        let source = match (&self.lr, &self.chain) {
            (Some(spec), None) => Source::Lr(parse_inline_lr(spec)?),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                match ChainSpec::<Rat>::from_json(&text)? {
                    ChainSpec::Finite { chain, partition } => Source::Finite { chain, partition },
                    ChainSpec::Lr { jump } => Source::Lr(jump),
                }
            }
            _ => {
                return Err(Error::Invalid(
                    "provide exactly one chain source: --lr or --chain".into(),
                ))
            }
        };
        if let Source::Finite { chain, partition } = &source {
            let report = check_assumptions(chain, partition);
            if !report.ok() {
                return Err(Error::AssumptionViolated(report.summary()));
            }
        }
        Ok(source)
    }
}

/// Parse --F: "all" or a comma-separated list of positions / state indices.
pub fn parse_target(f: &str) -> Result<TargetSet> {
    if f.eq_ignore_ascii_case("all") {
        return Ok(TargetSet::All);
    }
    let mut set = BTreeSet::new();
    for part in f.split(',') {
        let v: i64 = part
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad target entry {part:?} in --F")))?;
        set.insert(v);
    }
    if set.is_empty() {
        return Err(Error::Parse("--F must be \"all\" or a nonempty list".into()));
    }
    Ok(TargetSet::Finite(set))
}

pub fn chain_to_f64(chain: &FiniteChain<Rat>) -> FiniteChain<f64> {
    let n = chain.size();
    let m = Matrix::from_fn(n, n, |i, j| chain.p(i, j).to_f64());
    FiniteChain::new(m).expect("exact rows stay stochastic after rounding")
}

/// Check a probability-like flag value lies strictly inside (0, 1).
pub fn open_unit(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::Invalid(format!("--{name} must lie strictly between 0 and 1, got {v}")))
    }
}

/// Validate a finite-chain target set against the state count.
pub fn finite_mask(target: &TargetSet, size: usize) -> Result<Vec<bool>> {
    if let TargetSet::Finite(set) = target {
        for &s in set {
            if s < 0 || s as usize >= size {
                return Err(Error::Invalid(format!(
                    "target state {s} out of range for a chain with {size} states"
                )));
            }
        }
    }
    Ok(target.mask(size))
}
