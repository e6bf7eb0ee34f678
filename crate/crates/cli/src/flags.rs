//! Small flag enums shared across commands.

use clap::ValueEnum;
use sojourn_core::oracle::SojournKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    /// Plain landing count.
    #[value(name = "T", alias = "t")]
    T,
    /// Modified landing count (restricted to leaving the mid class first).
    #[value(name = "Ttilde", alias = "ttilde")]
    Ttilde,
}

impl KindArg {
    pub fn sojourn(self) -> SojournKind {
        match self {
            KindArg::T => SojournKind::Plain,
            KindArg::Ttilde => SojournKind::Modified,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Generating-function linear systems.
    Gf,
    /// Step-by-step dynamic programming.
    Oracle,
    /// Both, with a difference column and a nonzero exit on disagreement.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    /// Exact arbitrary-precision rationals.
    Rational,
    /// Binary float64.
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormulaArg {
    /// Kernel linear systems (any chain).
    Structural,
    /// Closed displays: the one-step walk and the symmetric two-bounded walk.
    PaperClosed,
}
