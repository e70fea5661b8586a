//! Solves one weight preset on the synthetic PV day.
//!
//! cargo run --release --example solve_case -- case3

use bess_sched::scenario::{fit_stage, solve_stage, ScenarioConfig};

fn main() -> bess_sched::Result<()> {
    let case = std::env::args().nth(1).unwrap_or_else(|| "case2".into());
    let cfg = ScenarioConfig::preset(&case)?;
    let model = fit_stage(&cfg)?.model();
    let doc = solve_stage(&cfg, &model)?;
    let sol = &doc.solution;

    println!("step  p_hat    p_B    p_G  x_lower x_upper   atom  e_min_env e_max_env");
    for s in &sol.steps {
        println!(
            "{:>4} {:>6.2} {:>6.2} {:>6.2} {:>8.3} {:>7.3} {:>6.3} {:>10.3} {:>9.3}",
            s.step,
            s.p_hat,
            s.p_b,
            s.p_g,
            s.x_lower,
            s.x_upper,
            s.atom_zero,
            s.e_nominal + s.de_min,
            s.e_nominal + s.de_max
        );
    }
    println!(
        "objective {:.6}, converged {}, {} outer / {} inner iterations, {:.2} s",
        sol.objective,
        sol.converged,
        sol.stats.outer_iterations,
        sol.stats.inner_iterations,
        doc.metadata.wall_time_s
    );
    Ok(())
}
