//! Scenario-driven front end for `emergent-core`: reads a scenario file, runs
//! one of the verbs, writes tagged tables and a JSON run summary.
//!
//! Verbs:
//!
//! - `fields`: grid dump of the emergent density, current, velocity and
//!   acceleration next to the reference values, with the continuity check.
//! - `compare`: discrepancy maps for velocity and acceleration.
//! - `ensemble`: Born-sampled trajectories, axis crossings, screen histogram.
//! - `nparticle`: two-particle configuration trajectories and diagnostics.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod summary;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use error::CliError;
pub use output::Format;
pub use scenario::Scenario;
pub use summary::RunSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Verb {
    Fields,
    Compare,
    Ensemble,
    Nparticle,
}

/// Runs a verb and writes its tables and `summary.json` into `out_dir`.
/// The returned summary carries the wall time; the file does not.
pub fn run(verb: Verb, scenario: &Scenario, out_dir: &Path, format: Format) -> Result<(RunSummary, Vec<PathBuf>), CliError> {
    let start = Instant::now();
    let outcome = match verb {
        Verb::Fields => commands::fields(scenario)?,
        Verb::Compare => commands::compare(scenario)?,
        Verb::Ensemble => commands::ensemble(scenario)?,
        Verb::Nparticle => commands::nparticle(scenario)?,
    };
    let hash = scenario.hash();
    let mut written = Vec::new();
    for table in &outcome.tables {
        let name = format!("{}.{}", table.name, format.extension());
        written.push(output::write_atomic(out_dir, &name, &table.render(format, &hash))?);
    }
    written.push(output::write_atomic(out_dir, "summary.json", &outcome.summary.to_json())?);
    let mut summary = outcome.summary;
    summary.wall_time = Some(start.elapsed().as_secs_f64());
    Ok((summary, written))
}
