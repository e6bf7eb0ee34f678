//! roots: characteristic-polynomial roots at a fixed count marker.

use clap::Args;
use sojourn_core::lrwalk::solve_roots;
use sojourn_core::scalar::Scalar;
use sojourn_core::{Error, Result};

use crate::source::{open_unit, Source, SourceArgs};

#[derive(Args, Debug)]
pub struct RootsArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Count marker, strictly between 0 and 1
    #[arg(long)]
    pub x: f64,
}

pub fn run(args: &RootsArgs) -> Result<i32> {
    let x = open_unit("x", args.x)?;
    let Source::Lr(jump) = args.source.load()? else {
        return Err(Error::Invalid("roots are defined for walks; pass --lr or an lr JSON".into()));
    };
    let set = solve_roots(&jump.to_f64(), x)?;
    let mut order: Vec<usize> = (0..set.roots.len()).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (set.roots[a], set.roots[b]);
        (za.norm(), za.re, za.im)
            .partial_cmp(&(zb.norm(), zb.re, zb.im))
            .expect("finite roots")
    });
    println!("re,im,modulus,class,residual");
    for idx in order {
        let z = set.roots[idx];
        let class = if set.inside.contains(&idx) { "inside" } else { "outside" };
        println!(
            "{},{},{},{},{}",
            z.re.render(),
            z.im.render(),
            z.norm().render(),
            class,
            set.residuals[idx].render()
        );
    }
    Ok(0)
}
