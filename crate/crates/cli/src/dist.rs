//! dist: joint distribution tables (count, landing position) up to a horizon.

use std::path::PathBuf;

use clap::Args;
use sojourn_core::chain::{window_for, TargetSet};
use sojourn_core::genfun::{k_solve_series, ktilde_solve_series};
use sojourn_core::lrwalk::{k_lr_series, ktilde_lr_series};
use sojourn_core::oracle::{sojourn_dp, FirstStep};
use sojourn_core::scalar::{Rat, Scalar};
use sojourn_core::{Error, Result};

use crate::flags::{BackendArg, KindArg, MethodArg};
use crate::source::{finite_mask, parse_target, Source, SourceArgs};

#[derive(Args, Debug)]
pub struct DistArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Horizon: emit rows for every step count n up to this value
    #[arg(long)]
    pub n: usize,

    #[arg(long, value_enum, default_value_t = KindArg::T)]
    pub kind: KindArg,

    /// Start: walk position (mid class) or finite-chain state index
    #[arg(long, default_value_t = 0)]
    pub start: i64,

    /// Landing target: "all" or a comma-separated list
    #[arg(long = "F", default_value = "all")]
    pub f: String,

    #[arg(long, value_enum, default_value_t = MethodArg::Gf)]
    pub method: MethodArg,

    #[arg(long, value_enum, default_value_t = BackendArg::Rational)]
    pub backend: BackendArg,

    /// Write the table here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// One table per route: rows[n][m].
type Table<S> = Vec<Vec<S>>;

fn gf_table<S: Scalar>(source: &SourceView<S>, args: &DistArgs) -> Result<Table<S>> {
    let order = args.n;
    let kernel = match source {
        SourceView::Lr { jump, target } => {
            let m = jump.m() as i64;
            if args.start < 0 || args.start >= m {
                return Err(Error::StartNotMid(format!(
                    "{} (expected a mid position in 0..{m})",
                    args.start
                )));
            }
            let all = match args.kind {
                KindArg::T => k_lr_series(jump, target, order)?,
                KindArg::Ttilde => ktilde_lr_series(jump, target, order)?,
            };
            all.into_iter().nth(args.start as usize).expect("start checked above")
        }
        SourceView::Finite { chain, partition, mask, full } => {
            let start = resolve_state(args.start, chain.size())?;
            let solution = match args.kind {
                KindArg::T => k_solve_series(chain, partition, mask, *full, order)?,
                KindArg::Ttilde => ktilde_solve_series(chain, partition, mask, *full, order)?,
            };
            solution.k.into_iter().nth(start).expect("start checked above").ok_or_else(|| {
                Error::StartNotMid(format!("{start} (modified kernel needs a mid start)"))
            })?
        }
    };
    Ok((0..=order).map(|n| (0..=n).map(|m| kernel.coeff(m, n - m).clone()).collect()).collect())
}

fn oracle_table<S: Scalar>(source: &SourceView<S>, args: &DistArgs) -> Result<Table<S>> {
    let order = args.n;
    let first = match args.kind {
        KindArg::T => FirstStep::Any,
        KindArg::Ttilde => FirstStep::OutOfMid,
    };
    let sojourn = args.kind.sojourn();
    let table = match source {
        SourceView::Lr { jump, target } => {
            let w = window_for(jump, args.start, order)?;
            let si = w
                .index_of(args.start)
                .ok_or_else(|| Error::Invalid(format!("start {} outside window", args.start)))?;
            sojourn_dp(&w.chain, &w.partition, si, order, sojourn, first)?
                .marginal(&w.target_mask(target))
        }
        SourceView::Finite { chain, partition, mask, .. } => {
            let start = resolve_state(args.start, chain.size())?;
            sojourn_dp(chain, partition, start, order, sojourn, first)?.marginal(mask)
        }
    };
    Ok((0..=order).map(|n| (0..=n).map(|m| table.prob(n, m).clone()).collect()).collect())
}

fn resolve_state(start: i64, size: usize) -> Result<usize> {
    if start < 0 || start as usize >= size {
        return Err(Error::Invalid(format!("start {start} out of range for {size} states")));
    }
    Ok(start as usize)
}

enum SourceView<S: Scalar> {
    Lr { jump: sojourn_core::JumpDistribution<S>, target: TargetSet },
    Finite {
        chain: sojourn_core::FiniteChain<S>,
        partition: sojourn_core::Partition,
        mask: Vec<bool>,
        full: bool,
    },
}

fn view<S: Scalar>(source: &Source, target: &TargetSet, to: impl Fn(&Rat) -> S) -> Result<SourceView<S>> {
    Ok(match source {
        Source::Lr(jump) => SourceView::Lr {
            jump: sojourn_core::JumpDistribution::new(
                jump.l(),
                jump.r(),
                jump.probs().iter().map(&to).collect(),
            )?,
            target: target.clone(),
        },
        Source::Finite { chain, partition } => {
            let mask = finite_mask(target, chain.size())?;
            let full = matches!(target, TargetSet::All);
            let n = chain.size();
            let m = sojourn_core::Matrix::from_fn(n, n, |i, j| to(chain.p(i, j)));
            SourceView::Finite {
                chain: sojourn_core::FiniteChain::new(m)?,
                partition: partition.clone(),
                mask,
                full,
            }
        }
    })
}

fn emit<S: Scalar>(
    args: &DistArgs,
    gf: Option<Table<S>>,
    oracle: Option<Table<S>>,
    tolerance: Option<f64>,
) -> Result<i32> {
    let both = gf.is_some() && oracle.is_some();
    let mut out = String::new();
    out.push_str(if both { "n,m,prob,prob_oracle,abs_diff\n" } else { "n,m,prob\n" });
    let primary = gf.as_ref().or(oracle.as_ref()).expect("at least one route");
    let mut breached = false;
    for n in 0..=args.n {
        for m in 0..=n {
            let p = &primary[n][m];
            if both {
                let o = &oracle.as_ref().expect("both")[n][m];
                let diff = if p.to_f64() >= o.to_f64() { p.sub(o) } else { o.sub(p) };
                match tolerance {
                    None => {
                        if !diff.is_zero() {
                            breached = true;
                        }
                    }
                    Some(tol) => {
                        if diff.to_f64().abs() > tol {
                            breached = true;
                        }
                    }
                }
                out.push_str(&format!(
                    "{n},{m},{},{},{}\n",
                    p.render(),
                    o.render(),
                    diff.render()
                ));
            } else {
                out.push_str(&format!("{n},{m},{}\n", p.render()));
            }
        }
    }
    match &args.output {
        Some(path) => std::fs::write(path, out)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?,
        None => print!("{out}"),
    }
    Ok(if breached { 1 } else { 0 })
}

fn run_backend<S: Scalar>(
    source: &Source,
    args: &DistArgs,
    to: impl Fn(&Rat) -> S,
    tolerance: Option<f64>,
) -> Result<i32> {
    let target = parse_target(&args.f)?;
    let v = view(source, &target, to)?;
    let (gf, oracle) = match args.method {
        MethodArg::Gf => (Some(gf_table(&v, args)?), None),
        MethodArg::Oracle => (None, Some(oracle_table(&v, args)?)),
        MethodArg::Both => (Some(gf_table(&v, args)?), Some(oracle_table(&v, args)?)),
    };
    emit(args, gf, oracle, tolerance)
}

pub fn run(args: &DistArgs) -> Result<i32> {
    let source = args.source.load()?;
    match args.backend {
        BackendArg::Rational => run_backend::<Rat>(&source, args, Clone::clone, None),
        BackendArg::Float => run_backend::<f64>(&source, args, Rat::to_f64, Some(1e-11)),
    }
}
