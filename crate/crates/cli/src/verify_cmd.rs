//! verify: run the numbered verification suite and report.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use sojourn_core::verify::{run_suite, FaultInjection, Suite};
use sojourn_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Quick,
    Full,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::Full)]
    pub suite: SuiteArg,

    /// Write the full machine-readable report (including any erratum
    /// reports on transcribed closed forms) to this path
    #[arg(long)]
    pub json: Option<PathBuf>,

    /// Test fixture: corrupt one oracle value so the comparison harness must
    /// catch it
    #[arg(long, hide = true)]
    pub tamper_oracle: bool,
}

pub fn run(args: &VerifyArgs) -> Result<i32> {
    let suite = match args.suite {
        SuiteArg::Quick => Suite::Quick,
        SuiteArg::Full => Suite::Full,
    };
    let fault = FaultInjection { tamper_oracle: args.tamper_oracle };
    let report = run_suite(suite, &fault);
    for c in &report.criteria {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {} [{} ms] {} -- {}", c.id, c.duration_ms, c.name, c.details);
    }
    let mismatches: usize = report
        .erratum_reports
        .iter()
        .flat_map(|r| &r.formulas)
        .filter(|f| f.verdict == "MISMATCH")
        .count();
    println!(
        "{}: {}/{} criteria passed; {} documented transcription mismatches (expected, see report)",
        if report.all_passed { "OK" } else { "FAILED" },
        report.criteria.iter().filter(|c| c.passed).count(),
        report.criteria.len(),
        mismatches
    );
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Invalid(format!("serialize report: {e}")))?;
        std::fs::write(path, text)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    }
    Ok(if report.all_passed { 0 } else { 1 })
}
