use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::error::{Error, Result};
use crate::forecast::{
    fit_forecast, write_fitted_json, FitOptions, FittedForecast, ProsumptionModel,
};
use crate::montecarlo::{
    compare, read_report_json, rollout_stats, write_report_json, ComparisonReport, TolerancePolicy,
};
use crate::scheduler::{
    build_problem, read_solution_json, solve, write_plot_csv, write_solution_json, RunMetadata,
    ScheduleSolution, SolutionDocument, CASE3_CRITICAL_STEPS,
};

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const FITTED_FILE: &str = "fitted.json";
pub const SOLUTION_FILE: &str = "solution.json";
pub const PLOT_FILE: &str = "plot.csv";
pub const MONTECARLO_FILE: &str = "montecarlo.json";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Smooths and fits the configured forecast.
pub fn fit_stage(cfg: &ScenarioConfig) -> Result<FittedForecast> {
    let raw = cfg.load_forecast()?;
    fit_forecast(&raw, &FitOptions::default())
}

pub fn solve_stage(cfg: &ScenarioConfig, model: &ProsumptionModel) -> Result<SolutionDocument> {
    let weights = cfg.weights.resolve(model.horizon())?;
    let problem =
        build_problem(model, &cfg.battery, &weights, &cfg.quadrature)?.with_pairing(cfg.pairing);
    let start = Instant::now();
    let solution = solve(&problem, &cfg.solver)?;
    Ok(SolutionDocument {
        metadata: RunMetadata {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            outer_iterations: solution.stats.outer_iterations,
            inner_iterations: solution.stats.inner_iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
        solution,
    })
}

pub fn validate_stage(
    cfg: &ScenarioConfig,
    model: &ProsumptionModel,
    sol: &ScheduleSolution,
) -> Result<ComparisonReport> {
    let stats = rollout_stats(model, sol, &cfg.battery, &cfg.mc)?;
    compare(sol, &stats, &TolerancePolicy::default())
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub model: ProsumptionModel,
    pub fit_degraded: bool,
    pub document: SolutionDocument,
    pub report: ComparisonReport,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.document.solution.converged
    }

    pub fn oracle_pass(&self) -> bool {
        self.report.summary.pass
    }

    pub fn ok(&self) -> bool {
        self.converged() && self.oracle_pass()
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Forecast, fit, solve and Monte-Carlo validation; all files are written
/// to `cfg.output_dir` even when the solver does not converge.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let fitted = fit_stage(cfg)?;
    let model = fitted.model();
    let document = solve_stage(cfg, &model)?;
    let report = validate_stage(cfg, &model, &document.solution)?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(SCENARIO_FILE), cfg.to_toml())?;
    write_fitted_json(&fitted.records(), create(&dir, FITTED_FILE)?)?;
    write_solution_json(&document, create(&dir, SOLUTION_FILE)?)?;
    write_plot_csv(&document.solution, create(&dir, PLOT_FILE)?)?;
    write_report_json(&report, create(&dir, MONTECARLO_FILE)?)?;
    let outcome = RunOutcome {
        dir,
        model,
        fit_degraded: fitted.any_degraded(),
        document,
        report,
    };
    std::fs::write(
        outcome.dir.join(SUMMARY_FILE),
        render_summary(cfg, &outcome),
    )?;
    Ok(outcome)
}

fn clock(model: &ProsumptionModel, k: usize) -> String {
    let minutes = ((model.start_hour + k as f64 * model.step_hours) * 60.0).round() as i64;
    format!(
        "{:02}:{:02}",
        minutes.div_euclid(60).rem_euclid(24),
        minutes.rem_euclid(60)
    )
}

fn render_summary(cfg: &ScenarioConfig, o: &RunOutcome) -> String {
    let sol = &o.document.solution;
    let meta = &o.document.metadata;
    let mut s = String::new();
    let _ = writeln!(s, "scenario     {}", cfg.name);
    let _ = writeln!(s, "config hash  {}", meta.config_hash);
    let _ = writeln!(s, "seed         {}", meta.seed);
    let _ = writeln!(s, "horizon      {} steps", sol.horizon());
    if o.fit_degraded {
        let _ = writeln!(s, "fit          degraded at one or more steps");
    }
    let _ = writeln!(s, "converged    {}", sol.converged);
    let _ = writeln!(s, "objective    {:.6}", sol.objective);
    let _ = writeln!(
        s,
        "iterations   {} outer, {} inner",
        meta.outer_iterations, meta.inner_iterations
    );
    let _ = writeln!(s, "violation    {:.3e}", sol.kkt.max_violation);
    let _ = writeln!(s, "stationarity {:.3e}", sol.kkt.stationarity);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>4} {:>5} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6} {:>6}",
        "step", "time", "p_hat", "p_b", "p_g", "x_lower", "x_upper", "p1", "p2", "atom"
    );
    for r in &sol.steps {
        let _ = writeln!(
            s,
            "{:>4} {:>5} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>6.3} {:>6.3} {:>6.3}",
            r.step,
            clock(&o.model, r.step),
            r.p_hat,
            r.p_b,
            r.p_g,
            r.x_lower,
            r.x_upper,
            r.p1,
            r.p2,
            r.atom_zero
        );
    }
    let m = &o.report.summary;
    let _ = writeln!(s);
    let _ = writeln!(s, "monte carlo  {} samples", m.samples);
    let _ = writeln!(s, "checks       {} ({} failed)", m.checks, m.failures);
    let _ = writeln!(s, "violations   {} rollouts", m.violating_rollouts);
    let _ = writeln!(s, "oracle       {}", if m.pass { "pass" } else { "FAIL" });
    for f in o.report.failures() {
        let step = f.step.map_or("-".to_string(), |k| k.to_string());
        let _ = writeln!(
            s,
            "  {:?} step {step}: analytic {:.6} empirical {:.6} tolerance {:.2e}",
            f.quantity, f.analytic, f.empirical, f.tolerance
        );
    }
    s
}

/// Files of a finished run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub document: SolutionDocument,
    pub report: Option<ComparisonReport>,
}

/// Reads a run directory; `path` may also name a solution JSON file.
pub fn load_run(path: impl AsRef<Path>) -> Result<RunArtifacts> {
    let path = path.as_ref();
    let (dir, file) = if path.is_dir() {
        (path.to_path_buf(), path.join(SOLUTION_FILE))
    } else {
        (
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
            path.to_path_buf(),
        )
    };
    let document = read_solution_json(BufReader::new(File::open(&file)?))?;
    let mc = dir.join(MONTECARLO_FILE);
    let report = if path.is_dir() && mc.exists() {
        Some(read_report_json(BufReader::new(File::open(mc)?))?)
    } else {
        None
    };
    Ok(RunArtifacts {
        dir,
        document,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseColumn {
    pub label: String,
    pub converged: bool,
    pub objective: f64,
    pub p_g: Vec<f64>,
    pub atom_zero: Vec<f64>,
    pub max_atom_zero: f64,
    pub max_atom_step: usize,
    /// Mean downward-deviation probability over the critical window.
    pub window_p1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDifference {
    pub a: String,
    pub b: String,
    pub max_abs_p_g_diff: f64,
    pub worst_step: usize,
    /// `window_p1(b) - window_p1(a)`.
    pub window_p1_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCaseReport {
    pub horizon: usize,
    pub window: Vec<usize>,
    pub cases: Vec<CaseColumn>,
    pub pairs: Vec<PairDifference>,
}

impl CrossCaseReport {
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairDifference> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:>4}", "step");
        for c in &self.cases {
            let _ = write!(s, " {:>12} {:>6}", format!("p_g[{}]", c.label), "atom");
        }
        let _ = writeln!(s);
        for k in 0..self.horizon {
            let _ = write!(s, "{k:>4}");
            for c in &self.cases {
                let _ = write!(s, " {:>12.4} {:>6.3}", c.p_g[k], c.atom_zero[k]);
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
        for c in &self.cases {
            let window = c.window_p1.map_or("n/a".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(
                s,
                "{}: objective {:.6}, converged {}, max atom {:.4} at step {}, window p1 {window}",
                c.label, c.objective, c.converged, c.max_atom_zero, c.max_atom_step
            );
        }
        for p in &self.pairs {
            let dw = p
                .window_p1_diff
                .map_or("n/a".to_string(), |d| format!("{d:+.4}"));
            let _ = writeln!(
                s,
                "{} vs {}: max |p_g diff| {:.3e} at step {}, window p1 diff {dw}",
                p.a, p.b, p.max_abs_p_g_diff, p.worst_step
            );
        }
        s
    }
}

fn column(label: &str, sol: &ScheduleSolution, window: &[usize]) -> CaseColumn {
    let atom_zero: Vec<f64> = sol.steps.iter().map(|r| r.atom_zero).collect();
    let (max_atom_step, max_atom_zero) =
        atom_zero
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, a)| {
                if a > best.1 {
                    (k, a)
                } else {
                    best
                }
            });
    let window_p1 = (!window.is_empty())
        .then(|| window.iter().map(|&k| sol.steps[k].p1).sum::<f64>() / window.len() as f64);
    CaseColumn {
        label: label.to_string(),
        converged: sol.converged,
        objective: sol.objective,
        p_g: sol.steps.iter().map(|r| r.p_g).collect(),
        atom_zero,
        max_atom_zero,
        max_atom_step,
        window_p1,
    }
}

/// Cross-case table over solutions that share one horizon.
pub fn compare_solutions(cases: &[(&str, &ScheduleSolution)]) -> Result<CrossCaseReport> {
    let Some((_, first)) = cases.first() else {
        return Err(Error::Validation("nothing to compare".into()));
    };
    let horizon = first.horizon();
    for (_, sol) in cases {
        if sol.horizon() != horizon {
            return Err(Error::HorizonMismatch {
                what: "compared run",
                got: sol.horizon(),
                expected: horizon,
            });
        }
    }
    let window: Vec<usize> = CASE3_CRITICAL_STEPS
        .iter()
        .copied()
        .filter(|&k| k < horizon)
        .collect();
    let cols: Vec<CaseColumn> = cases
        .iter()
        .map(|(label, sol)| column(label, sol, &window))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let (a, b) = (&cols[i], &cols[j]);
            let (worst_step, max_abs_p_g_diff) = a
                .p_g
                .iter()
                .zip(&b.p_g)
                .map(|(x, y)| (x - y).abs())
                .enumerate()
                .fold(
                    (0, 0.0),
                    |best, (k, d)| if d > best.1 { (k, d) } else { best },
                );
            pairs.push(PairDifference {
                a: a.label.clone(),
                b: b.label.clone(),
                max_abs_p_g_diff,
                worst_step,
                window_p1_diff: a.window_p1.zip(b.window_p1).map(|(x, y)| y - x),
            });
        }
    }
    Ok(CrossCaseReport {
        horizon,
        window,
        cases: cols,
        pairs,
    })
}

/// Loads each run directory (or solution file) and compares them. Labels
/// are the scenario names stored next to the solutions, falling back to
/// the directory names.
pub fn compare_cases<P: AsRef<Path>>(runs: &[P]) -> Result<CrossCaseReport> {
    let loaded = runs.iter().map(load_run).collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = loaded
        .iter()
        .zip(runs)
        .map(|(r, p)| {
            ScenarioConfig::load(r.dir.join(SCENARIO_FILE))
                .map(|c| c.name)
                .unwrap_or_else(|_| p.as_ref().display().to_string())
        })
        .collect();
    let mut unique = labels.clone();
    for (i, l) in unique.iter_mut().enumerate() {
        if labels.iter().filter(|x| *x == l).count() > 1 {
            *l = format!("{l}#{i}");
        }
    }
    let cases: Vec<(&str, &ScheduleSolution)> = unique
        .iter()
        .map(String::as_str)
        .zip(loaded.iter().map(|r| &r.document.solution))
        .collect();
    compare_solutions(&cases)
}

pub fn write_cross_case_json<W: Write>(report: &CrossCaseReport, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, report)?;
    Ok(())
}
