//! simulate: seeded path sampling with an optional goodness-of-fit summary.

use clap::Args;
use sojourn_core::chain::window_for;
use sojourn_core::oracle::{monte_carlo, sojourn_dp, FirstStep};
use sojourn_core::scalar::Scalar;
use sojourn_core::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::flags::KindArg;
use crate::source::{chain_to_f64, finite_mask, parse_target, Source, SourceArgs};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Horizon: the empirical table is taken at this step count
    #[arg(long)]
    pub n: usize,

    #[arg(long, value_enum, default_value_t = KindArg::T)]
    pub kind: KindArg,

    /// Start: walk position or finite-chain state index
    #[arg(long, default_value_t = 0)]
    pub start: i64,

    /// Landing target: "all" or a comma-separated list
    #[arg(long = "F", default_value = "all")]
    pub f: String,

    #[arg(long)]
    pub paths: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Append a chi-square comparison against the exact table
    #[arg(long)]
    pub chi_square: bool,
}

pub fn run(args: &SimulateArgs) -> Result<i32> {
    if args.paths == 0 {
        return Err(Error::Invalid("--paths must be positive".into()));
    }
    let source = args.source.load()?;
    let target = parse_target(&args.f)?;
    let kind = args.kind.sojourn();

    // empirical and exact tables over the same states and mask
    let (emp, exact): (Vec<f64>, Vec<f64>) = match &source {
        Source::Lr(jump) => {
            let w = window_for(jump, args.start, args.n)?;
            let si = w
                .index_of(args.start)
                .ok_or_else(|| Error::Invalid(format!("start {} outside window", args.start)))?;
            let mask = w.target_mask(&target);
            let wf = window_for(&jump.to_f64(), args.start, args.n)?;
            let run = monte_carlo(&wf.chain, &wf.partition, si, args.n, kind, args.paths, args.seed);
            let cube = sojourn_dp(&w.chain, &w.partition, si, args.n, kind, FirstStep::Any)?;
            tabulate(&run.counts, args.paths, &mask, |m, j| cube.prob(args.n, m, j).to_f64())
        }
        Source::Finite { chain, partition } => {
            if args.start < 0 || args.start as usize >= chain.size() {
                return Err(Error::Invalid(format!(
                    "start {} out of range for {} states",
                    args.start,
                    chain.size()
                )));
            }
            let si = args.start as usize;
            let mask = finite_mask(&target, chain.size())?;
            let cf = chain_to_f64(chain);
            let run = monte_carlo(&cf, partition, si, args.n, kind, args.paths, args.seed);
            let cube = sojourn_dp(chain, partition, si, args.n, kind, FirstStep::Any)?;
            tabulate(&run.counts, args.paths, &mask, |m, j| cube.prob(args.n, m, j).to_f64())
        }
    };

    println!("n,m,prob");
    for (m, freq) in emp.iter().enumerate() {
        println!("{},{m},{}", args.n, freq.render());
    }
    if args.chi_square {
        let (stat, dof) = chi_square(&emp, &exact, args.paths);
        let p_value = if dof == 0 {
            1.0
        } else {
            1.0 - ChiSquared::new(dof as f64)
                .map_err(|e| Error::Invalid(format!("chi-square setup: {e}")))?
                .cdf(stat)
        };
        println!(
            "# chi_square stat={} dof={dof} p_value={}",
            stat.render(),
            p_value.render()
        );
    }
    Ok(0)
}

fn tabulate(
    counts: &[Vec<u64>],
    paths: u64,
    mask: &[bool],
    exact_at: impl Fn(usize, usize) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut emp = Vec::with_capacity(counts.len());
    let mut exact = Vec::with_capacity(counts.len());
    for (m, row) in counts.iter().enumerate() {
        let mut hits = 0u64;
        let mut p = 0.0f64;
        for (j, &keep) in mask.iter().enumerate() {
            if keep {
                hits += row[j];
                p += exact_at(m, j);
            }
        }
        emp.push(hits as f64 / paths as f64);
        exact.push(p);
    }
    (emp, exact)
}

/// Pearson statistic over the bins with enough expected mass; sparse bins
/// (expected count below 5) are pooled into one.
fn chi_square(emp: &[f64], exact: &[f64], paths: u64) -> (f64, usize) {
    let total = paths as f64;
    let mut stat = 0.0f64;
    let mut bins = 0usize;
    let mut pooled_obs = 0.0f64;
    let mut pooled_exp = 0.0f64;
    for (e, p) in emp.iter().zip(exact) {
        let expected = p * total;
        let observed = e * total;
        if expected >= 5.0 {
            stat += (observed - expected).powi(2) / expected;
            bins += 1;
        } else {
            pooled_obs += observed;
            pooled_exp += expected;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    (stat, bins.saturating_sub(1))
}
