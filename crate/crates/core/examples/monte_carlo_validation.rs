//! Checks a Case-2 schedule against sampled rollouts.
//!
//! cargo run --release --example monte_carlo_validation -- [samples]

use bess_sched::montecarlo::{compare, rollout_stats, McConfig, TolerancePolicy};
use bess_sched::scenario::{fit_stage, solve_stage, ScenarioConfig};

fn main() -> bess_sched::Result<()> {
    let samples = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200_000);
    let cfg = ScenarioConfig::preset("case2")?;
    let model = fit_stage(&cfg)?.model();
    let sol = solve_stage(&cfg, &model)?.solution;

    let mc = McConfig {
        sample_count: samples,
        ..cfg.mc
    };
    let stats = rollout_stats(&model, &sol, &cfg.battery, &mc)?;
    let report = compare(&sol, &stats, &TolerancePolicy::default())?;

    println!("step  p1 model  p1 sampled  atom model  atom sampled");
    for (a, e) in sol.steps.iter().zip(&stats.steps) {
        println!(
            "{:>4} {:>9.4} {:>11.4} {:>11.4} {:>13.4}",
            a.step, a.p1, e.p1, a.atom_zero, e.atom_zero
        );
    }
    let s = &report.summary;
    println!(
        "{} samples: {} checks, {} failed, {} rollouts violating limits",
        s.samples, s.checks, s.failures, s.violating_rollouts
    );
    for f in report.failures() {
        println!(
            "  {:?} step {:?}: {:.5} vs {:.5}",
            f.quantity, f.step, f.analytic, f.empirical
        );
    }
    Ok(())
}
