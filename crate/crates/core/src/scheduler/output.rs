use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ScheduleSolution;
use crate::error::Result;

pub const PLOT_HEADER: [&str; 12] = [
    "step",
    "p_g_nominal",
    "q05",
    "q95",
    "prob_up",
    "prob_down",
    "exp_up",
    "exp_down",
    "e_nominal",
    "e_min_env",
    "e_max_env",
    "e_expected",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// SHA-256 of the canonical scenario configuration.
    pub config_hash: String,
    pub seed: u64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub metadata: RunMetadata,
    pub solution: ScheduleSolution,
}

pub fn write_solution_json<W: Write>(doc: &SolutionDocument, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, doc)?;
    Ok(())
}

pub fn read_solution_json<R: Read>(reader: R) -> Result<SolutionDocument> {
    Ok(serde_json::from_reader(reader)?)
}

/// One row per step; energies are end-of-step values.
pub fn write_plot_csv<W: Write>(sol: &ScheduleSolution, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PLOT_HEADER)?;
    for s in &sol.steps {
        let row = [
            s.p_g,
            s.grid_q05,
            s.grid_q95,
            s.p2,
            s.p1,
            s.exp_grid_up,
            s.exp_grid_down,
            s.e_nominal,
            s.e_nominal + s.de_min,
            s.e_nominal + s.de_max,
            s.e_expected,
        ];
        let mut record = vec![s.step.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
