mod common;

use bess_sched::mixed::{
    atom_probs, build_battery_dev, build_grid_dev, expected_battery_dev, expected_grid_dev_neg,
    expected_grid_dev_pos, expected_grid_dev_via_balance, grid_dev_quantile, lower_cutoff,
    simpson_integrate, upper_cutoff, AllocationBounds, DoubleLogisticCdf, QuadratureConfig,
};
use bess_sched::montecarlo::McConfig;
use proptest::prelude::*;

use common::{
    binomial_sigma, integrate, mixture_cdf, mixture_pdf, random_mixture, symmetric_mixture,
    SYMMETRIC,
};

fn qc() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn pdf_integrates_to_one_over_truncated_support() {
    let f = symmetric_mixture();
    let (lo, hi) = (lower_cutoff(&f, 1e-6), upper_cutoff(&f, 1e-6));
    let mass = integrate(|z| mixture_pdf(SYMMETRIC, z), lo, hi);
    assert!((mass - 1.0).abs() <= 1e-6, "{mass}");
}

#[test]
fn closed_form_atoms() {
    let f = symmetric_mixture();
    let b = AllocationBounds::new(-0.5, 0.5).unwrap();
    let (p1, p2) = atom_probs(&f, b);
    let expected = mixture_cdf(SYMMETRIC, -0.5);
    assert!((p1 - expected).abs() <= 1e-12 && (p1 - 0.38924).abs() <= 5e-6);
    assert!((p2 - (1.0 - mixture_cdf(SYMMETRIC, 0.5))).abs() <= 1e-12);
    let core = build_battery_dev(&f, b).core_mass(&qc());
    let oracle = mixture_cdf(SYMMETRIC, 0.5) - mixture_cdf(SYMMETRIC, -0.5);
    assert!((core - oracle).abs() <= 1e-9 && (core - 0.22152).abs() <= 5e-6);
    let g = build_grid_dev(&f, b);
    assert!((g.atom_zero - oracle).abs() <= 1e-12);
}

#[test]
fn asymmetric_bounds_match_adaptive_oracle() {
    let f = symmetric_mixture();
    let b = AllocationBounds::new(0.0, 1.0).unwrap();
    let e = expected_battery_dev(&f, b, &qc());
    let oracle = integrate(|z| z * mixture_pdf(SYMMETRIC, z), 0.0, 1.0)
        + (1.0 - mixture_cdf(SYMMETRIC, 1.0));
    assert!(e > 0.0);
    assert!((e - oracle).abs() <= 1e-6, "{e} vs {oracle}");
}

#[test]
fn simpson_on_logistic_density() {
    let f = DoubleLogisticCdf::single(0.0, 1.0).unwrap();
    let v = simpson_integrate(|z| f.pdf(z), -12.0, 12.0, 64).unwrap();
    let oracle = integrate(|z| f.pdf(z), -12.0, 12.0);
    assert!((v - oracle).abs() <= 1e-8);
    assert!((v - (f.cdf(12.0) - f.cdf(-12.0))).abs() <= 1e-8);
}

#[test]
fn grid_quantile_matches_sampling() {
    let f = symmetric_mixture();
    let b = AllocationBounds::new(-0.5, 0.5).unwrap();
    let g = build_grid_dev(&f, b);
    let analytic = grid_dev_quantile(&g, 0.95);
    let model = bess_sched::forecast::ProsumptionModel {
        step_hours: 1.0,
        start_hour: 6.0,
        expected: vec![0.0],
        deviations: vec![f],
    };
    let cfg = McConfig {
        sample_count: 1_000_000,
        seed: 3,
        antithetic: true,
    };
    let real = bess_sched::montecarlo::sample_prosumption(&model, &cfg).unwrap();
    let mut grid: Vec<f64> = real
        .values
        .iter()
        .map(|d| d - d.clamp(b.x_lower, b.x_upper))
        .collect();
    grid.sort_by(f64::total_cmp);
    let empirical = grid[(0.95 * grid.len() as f64) as usize];
    assert!(
        (analytic - empirical).abs() <= 0.01,
        "{analytic} vs {empirical}"
    );
    let atom = grid.iter().filter(|v| **v == 0.0).count() as f64 / grid.len() as f64;
    assert!((atom - 0.22152).abs() <= 3.0 * binomial_sigma(0.22152, grid.len()) + 1e-5);
}

#[test]
fn degenerate_interval_passes_everything_to_the_grid() {
    let f = symmetric_mixture();
    let b = AllocationBounds::new(0.0, 0.0).unwrap();
    let g = build_grid_dev(&f, b);
    assert!(g.atom_zero <= 1e-15);
    for q in [0.1, 0.3, 0.8] {
        assert!((grid_dev_quantile(&g, q) - f.quantile(q)).abs() <= 1e-8);
    }
}

fn bounds(f: &DoubleLogisticCdf, a: f64, b: f64) -> AllocationBounds {
    let spread = f.quantile(0.999) - f.quantile(0.001);
    AllocationBounds::new(-a * spread, b * spread).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mass_is_conserved(u in prop::array::uniform6(0.0f64..1.0), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = random_mixture(u);
        let m = build_battery_dev(&f, bounds(&f, a, b)).total_mass(&qc());
        prop_assert!((m - 1.0).abs() <= 1e-6, "{m}");
    }

    #[test]
    fn expectations_sum_to_zero(u in prop::array::uniform6(0.0f64..1.0), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = random_mixture(u);
        let bd = bounds(&f, a, b);
        let s = expected_battery_dev(&f, bd, &qc()) + expected_grid_dev_neg(&f, bd, &qc()) + expected_grid_dev_pos(&f, bd, &qc());
        prop_assert!(s.abs() <= 1e-5, "{s}");
        let via_balance = expected_grid_dev_via_balance(&f, bd, &qc());
        let direct = expected_grid_dev_neg(&f, bd, &qc()) + expected_grid_dev_pos(&f, bd, &qc());
        prop_assert!((via_balance - direct).abs() <= 1e-5);
    }

    #[test]
    fn grid_expectations_match_adaptive_oracle(u in prop::array::uniform6(0.0f64..1.0), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = random_mixture(u);
        let bd = bounds(&f, a, b);
        let (lo, hi) = (lower_cutoff(&f, 1e-6), upper_cutoff(&f, 1e-6));
        let down = integrate(|z| (z - bd.x_lower) * f.pdf(z), lo, bd.x_lower.max(lo));
        let up = integrate(|z| (z - bd.x_upper) * f.pdf(z), bd.x_upper.min(hi), hi);
        prop_assert!((expected_grid_dev_neg(&f, bd, &qc()) - down).abs() <= 1e-6);
        prop_assert!((expected_grid_dev_pos(&f, bd, &qc()) - up).abs() <= 1e-6);
    }

    #[test]
    fn wider_interval_never_shrinks_the_atom(
        u in prop::array::uniform6(0.0f64..1.0),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        da in 0.0f64..0.5,
        db in 0.0f64..0.5,
    ) {
        let f = random_mixture(u);
        let atom = |bd: AllocationBounds| build_grid_dev(&f, bd).atom_zero;
        let base = bounds(&f, a, b);
        prop_assert!(atom(bounds(&f, a, b + db)) >= atom(base));
        prop_assert!(atom(bounds(&f, a + da, b)) >= atom(base));
    }

    #[test]
    fn grid_quantile_inverts_cdf_off_the_atom(
        u in prop::array::uniform6(0.0f64..1.0),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        r in 0.001f64..0.999,
    ) {
        let f = random_mixture(u);
        let g = build_grid_dev(&f, bounds(&f, a, b));
        let below = g.cdf(-1e-300);
        let at = g.cdf(0.0);
        // spread r over the probability levels outside the atom
        let s = r * (below + 1.0 - at);
        let q = if s < below { s } else { at + (s - below) };
        prop_assume!(q > 1e-6 && q < 1.0 - 1e-6 && (q < below - 1e-9 || q > at + 1e-9));
        let z = grid_dev_quantile(&g, q);
        prop_assert!((g.cdf(z) - q).abs() <= 1e-8, "q {q} z {z} F {}", g.cdf(z));
    }
}
