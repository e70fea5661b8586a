//! Rolls a hand-written schedule through the battery model and reports
//! where the uncertainty envelopes leave the energy limits.

use bess_sched::battery::{check_feasible, simulate_trajectory, BatterySpec, LimitKind};
use bess_sched::mixed::AllocationBounds;

fn main() -> bess_sched::Result<()> {
    let spec = BatterySpec::default();
    // discharge in the morning, charge over midday, idle in the evening
    let power: Vec<f64> = (0..24)
        .map(|k| match k {
            0..=3 => 1.0,
            4..=10 => -1.4,
            _ => 0.3,
        })
        .collect();
    let bounds: Vec<AllocationBounds> = (0..24)
        .map(|k| AllocationBounds::new(if (4..=10).contains(&k) { -0.6 } else { -0.2 }, 0.3))
        .collect::<Result<_, _>>()?;
    let traj = simulate_trajectory(&spec, &power, &bounds, &[0.0; 24])?;
    let (lo, hi) = (traj.lower_envelope(), traj.upper_envelope());

    println!("step   p_B   nominal   lower   upper");
    for k in 0..24 {
        println!(
            "{:>4} {:>5.2} {:>9.3} {:>7.3} {:>7.3}",
            k,
            power[k],
            traj.nominal[k + 1],
            lo[k + 1],
            hi[k + 1]
        );
    }
    let report = check_feasible(&traj, &bounds, &spec)?;
    if report.is_feasible() {
        println!("feasible");
    }
    for kind in [LimitKind::EnergyBelowMin, LimitKind::EnergyAboveMax] {
        if let Some(v) = report.first(kind) {
            println!(
                "{:?} first at step {} by {:.3}",
                v.kind, v.step, v.magnitude
            );
        }
    }
    println!("{} violations in total", report.violations.len());
    Ok(())
}
