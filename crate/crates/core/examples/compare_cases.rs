//! Solves all three presets and prints the cross-case table.

use bess_sched::scenario::{compare_solutions, fit_stage, solve_stage, ScenarioConfig};

fn main() -> bess_sched::Result<()> {
    let mut sols = Vec::new();
    for case in ["case1", "case2", "case3"] {
        let cfg = ScenarioConfig::preset(case)?;
        let model = fit_stage(&cfg)?.model();
        sols.push((case, solve_stage(&cfg, &model)?.solution));
    }
    let refs: Vec<_> = sols.iter().map(|(c, s)| (*c, s)).collect();
    print!("{}", compare_solutions(&refs)?.render());
    Ok(())
}
