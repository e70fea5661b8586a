use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bess_sched::forecast::{load_fitted_model, write_fitted_json, ProsumptionModel};
use bess_sched::montecarlo::write_report_json;
use bess_sched::scenario::{
    compare_cases, fit_stage, run_scenario, solve_stage, validate_stage, write_cross_case_json,
    ScenarioConfig, ScenarioFile, FITTED_FILE, MONTECARLO_FILE, PLOT_FILE, SCENARIO_FILE,
    SOLUTION_FILE, SUMMARY_FILE,
};
use bess_sched::scheduler::{read_solution_json, write_plot_csv, write_solution_json};
use bess_sched::{Error, Result};

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_ORACLE: u8 = 4;

/// Probabilistic day-ahead battery scheduling.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Smooth and fit the forecast, write the fitted model.
    Fit(ScenarioArgs),
    /// Solve the scheduling problem, write the solution and plot data.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Fitted model JSON; fitted from the forecast when omitted.
        #[arg(long)]
        fitted: Option<PathBuf>,
    },
    /// Check a solution against Monte-Carlo rollouts.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        fitted: Option<PathBuf>,
        /// Solution JSON; defaults to the one in the output directory.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Fit, solve and validate, writing every artifact.
    Run(ScenarioArgs),
    /// Tabulate several runs side by side.
    Compare {
        /// Run directories or solution files.
        #[arg(required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Weight preset: case1, case2 or case3.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// default or literal_paper_pairing.
    #[arg(long)]
    pairing: Option<String>,
    /// Quantile forecast CSV.
    #[arg(long, conflicts_with = "profile")]
    forecast: Option<PathBuf>,
    /// Synthetic profile: pv_dominant, flat or asymmetric_morning.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    envelope: Option<String>,
    #[arg(long = "out-dir", visible_alias = "out")]
    out_dir: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let (mut file, base) = match &self.config {
            Some(path) => (
                ScenarioFile::parse(&std::fs::read_to_string(path)?)?,
                path.parent().map(Path::to_path_buf),
            ),
            None => (ScenarioFile::default(), None),
        };
        if let Some(case) = &self.case {
            file.case = Some(case.clone());
            (file.c1, file.c2, file.c3, file.c4) = (None, None, None, None);
        }
        if let Some(p) = &self.forecast {
            let cwd = std::env::current_dir()?;
            file.forecast_file = Some(cwd.join(p));
            file.synthetic_profile = None;
        }
        if let Some(p) = &self.profile {
            file.synthetic_profile = Some(p.clone());
            file.forecast_file = None;
        }
        file.seed = self.seed.or(file.seed);
        file.samples = self.samples.or(file.samples);
        file.pairing = self.pairing.clone().or(file.pairing);
        file.envelope = self.envelope.clone().or(file.envelope);
        file.output_dir = self.out_dir.clone().or(file.output_dir);
        file.resolve(base.as_deref())
    }
}

fn writer(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn model_for(cfg: &ScenarioConfig, fitted: Option<&Path>) -> Result<ProsumptionModel> {
    match fitted {
        Some(path) => load_fitted_model(path),
        None => Ok(fit_stage(cfg)?.model()),
    }
}

fn execute(verb: Verb) -> Result<u8> {
    match verb {
        Verb::Fit(args) => {
            let cfg = args.resolve()?;
            let fitted = fit_stage(&cfg)?;
            write_fitted_json(&fitted.records(), writer(&cfg.output_dir, FITTED_FILE)?)?;
            if fitted.any_degraded() {
                eprintln!("warning: some steps fitted with a degraded quantile curve");
            }
            println!(
                "fitted {} steps -> {}",
                fitted.fits.len(),
                cfg.output_dir.join(FITTED_FILE).display()
            );
            Ok(0)
        }
        Verb::Solve { scenario, fitted } => {
            let cfg = scenario.resolve()?;
            let model = model_for(&cfg, fitted.as_deref())?;
            let doc = solve_stage(&cfg, &model)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            std::fs::write(cfg.output_dir.join(SCENARIO_FILE), cfg.to_toml())?;
            write_solution_json(&doc, writer(&cfg.output_dir, SOLUTION_FILE)?)?;
            write_plot_csv(&doc.solution, writer(&cfg.output_dir, PLOT_FILE)?)?;
            let sol = &doc.solution;
            println!(
                "{}: objective {:.6}, converged {}, max violation {:.2e} -> {}",
                cfg.name,
                sol.objective,
                sol.converged,
                sol.kkt.max_violation,
                cfg.output_dir.display()
            );
            Ok(if sol.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Verb::Validate {
            scenario,
            fitted,
            solution,
        } => {
            let cfg = scenario.resolve()?;
            let model = model_for(&cfg, fitted.as_deref())?;
            let path = solution.unwrap_or_else(|| cfg.output_dir.join(SOLUTION_FILE));
            let doc = read_solution_json(BufReader::new(File::open(&path)?))?;
            let report = validate_stage(&cfg, &model, &doc.solution)?;
            write_report_json(&report, writer(&cfg.output_dir, MONTECARLO_FILE)?)?;
            let s = &report.summary;
            println!(
                "{} samples: {} checks, {} failed, {} violating rollouts",
                s.samples, s.checks, s.failures, s.violating_rollouts
            );
            for f in report.failures() {
                println!(
                    "  {:?} step {:?}: analytic {:.6} empirical {:.6} tolerance {:.2e}",
                    f.quantity, f.step, f.analytic, f.empirical, f.tolerance
                );
            }
            Ok(if s.pass { 0 } else { EXIT_ORACLE })
        }
        Verb::Run(args) => {
            let cfg = args.resolve()?;
            let outcome = run_scenario(&cfg)?;
            print!(
                "{}",
                std::fs::read_to_string(outcome.dir.join(SUMMARY_FILE))?
            );
            Ok(if !outcome.converged() {
                EXIT_NOT_CONVERGED
            } else if !outcome.oracle_pass() {
                EXIT_ORACLE
            } else {
                0
            })
        }
        Verb::Compare { runs, out } => {
            let report = compare_cases(&runs)?;
            print!("{}", report.render());
            if let Some(path) = out {
                write_cross_case_json(&report, BufWriter::new(File::create(path)?))?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.verb) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config { .. } | Error::UnknownProfile(_) => EXIT_USAGE,
                _ => EXIT_ERROR,
            };
            ExitCode::from(code)
        }
    }
}
