//! Splits one deviation distribution between battery and grid for a few
//! allocation intervals.

use bess_sched::mixed::{
    atom_probs, build_grid_dev, expected_battery_dev, expected_grid_dev_neg, expected_grid_dev_pos,
    grid_dev_quantile, AllocationBounds, DoubleLogisticCdf, QuadratureConfig,
};

fn main() -> bess_sched::Result<()> {
    let f = DoubleLogisticCdf::new(0.5, 2.0, -1.0, 0.5, 2.0, 1.0)?;
    let qc = QuadratureConfig::default();

    println!("  x_lower x_upper     p1     p2   atom   E[B]   E[G-]   E[G+]    q05    q95");
    for (lo, hi) in [
        (0.0, 0.0),
        (-0.5, 0.5),
        (0.0, 1.0),
        (-1.5, 0.2),
        (-3.0, 3.0),
    ] {
        let b = AllocationBounds::new(lo, hi)?;
        let (p1, p2) = atom_probs(&f, b);
        let g = build_grid_dev(&f, b);
        println!(
            "{:>9.2} {:>7.2} {:>6.4} {:>6.4} {:>6.4} {:>6.3} {:>7.3} {:>7.3} {:>6.3} {:>6.3}",
            lo,
            hi,
            p1,
            p2,
            g.atom_zero,
            expected_battery_dev(&f, b, &qc),
            expected_grid_dev_neg(&f, b, &qc),
            expected_grid_dev_pos(&f, b, &qc),
            grid_dev_quantile(&g, 0.05),
            grid_dev_quantile(&g, 0.95),
        );
    }
    Ok(())
}
