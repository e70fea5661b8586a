//! Fits a double-logistic CDF to every step of a synthetic quantile
//! forecast and prints the weights with the fit residual.
//!
//! cargo run --example fit_forecast -- [profile] [seed]

use bess_sched::forecast::{fit_forecast, synth_forecast, FitOptions};

fn main() -> bess_sched::Result<()> {
    let mut args = std::env::args().skip(1);
    let profile = args.next().unwrap_or_else(|| "pv_dominant".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let raw = synth_forecast(seed, &profile)?;
    let fitted = fit_forecast(&raw, &FitOptions::default())?;
    let model = fitted.model();

    println!("step  p_hat      w1     w2      w3     w4     w5      w6    rms");
    for (rec, p_hat) in fitted.records().iter().zip(&model.expected) {
        println!(
            "{:>4} {:>6.3}  {:.3} {:>6.3} {:>7.3}  {:.3} {:>6.3} {:>7.3}  {:.1e}",
            rec.step, p_hat, rec.w1, rec.w2, rec.w3, rec.w4, rec.w5, rec.w6, rec.fit_rms
        );
    }
    if fitted.any_degraded() {
        println!("some steps hit the iteration cap");
    }
    Ok(())
}
