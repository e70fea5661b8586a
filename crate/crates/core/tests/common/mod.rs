//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::sync::OnceLock;

use bess_sched::battery::BatterySpec;
use bess_sched::forecast::{fit_forecast, synth_forecast, FitOptions, ProsumptionModel};
use bess_sched::mixed::{DoubleLogisticCdf, QuadratureConfig};
use bess_sched::scheduler::{
    build_problem, solve, CostWeights, Problem, ScheduleSolution, SolverConfig,
};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut k = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = g(c - x) + g(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (k * h, ((k - gauss) * h).abs())
}

fn adapt(g: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = kronrod(g, a, b);
    if err <= tol.max(1e-15 * v.abs()) || err < 1e-20 || depth >= 30 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(g, a, m, 0.5 * tol, depth + 1) + adapt(g, m, b, 0.5 * tol, depth + 1)
}

/// Adaptive Gauss-Kronrod (7, 15) to an absolute tolerance of about 1e-13.
pub fn integrate(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return -integrate_ordered(&g, b, a);
    }
    integrate_ordered(&g, a, b)
}

fn integrate_ordered(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(g, a, b, 1e-13, 0)
}

pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut w = x.to_vec();
    (0..x.len())
        .map(|i| {
            w[i] = x[i] + h;
            let fp = f(&w);
            w[i] = x[i] - h;
            let fm = f(&w);
            w[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Closed-form logistic mixture CDF, written out from the weights.
pub fn mixture_cdf(w: [f64; 6], z: f64) -> f64 {
    let s = |x: f64| 1.0 / (1.0 + (-x).exp());
    w[0] * s(w[1] * (z - w[2])) + w[3] * s(w[4] * (z - w[5]))
}

pub fn mixture_pdf(w: [f64; 6], z: f64) -> f64 {
    let d = |m: f64, a: f64, l: f64| {
        let e = (-(a * (z - l)).abs()).exp();
        m * a * e / ((1.0 + e) * (1.0 + e))
    };
    d(w[0], w[1], w[2]) + d(w[3], w[4], w[5])
}

/// Deterministic deviation-free schedule by dynamic programming over the
/// energy state. Each pass discretizes the reachable states, the next pass
/// zooms in on the previous optimal path.
pub fn dp_reference(p_hat: &[f64], spec: &BatterySpec, c1: f64, c2: f64) -> Vec<f64> {
    let k = p_hat.len();
    let t = spec.step_hours;
    let mu = spec.loss;
    let power = |delta: f64| {
        if delta >= 0.0 {
            delta / (t * (1.0 + mu))
        } else {
            delta / (t * (1.0 - mu))
        }
    };
    let cost = |step: usize, p: f64| {
        let pg = p_hat[step] - p;
        if pg > 0.0 {
            c1 * pg * pg
        } else {
            c2 * pg * pg
        }
    };
    let grid = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        let lo = lo.max(spec.e_min);
        let hi = hi.min(spec.e_max);
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let mut grids: Vec<Vec<f64>> = (0..k).map(|_| grid(spec.e_min, spec.e_max, 1351)).collect();
    let mut path = vec![spec.e0; k];
    for pass in 0..7 {
        // value[j]: best cost from step i onwards starting at state j of grid i-1
        let mut next_value = vec![0.0; grids[k - 1].len()];
        let mut choice: Vec<Vec<usize>> = vec![Vec::new(); k];
        for i in (0..k).rev() {
            let prev: Vec<f64> = if i == 0 {
                vec![spec.e0]
            } else {
                grids[i - 1].clone()
            };
            let mut value = vec![f64::INFINITY; prev.len()];
            let mut arg = vec![0usize; prev.len()];
            for (a, e_prev) in prev.iter().enumerate() {
                for (b, e_next) in grids[i].iter().enumerate() {
                    let p = power(e_prev - e_next);
                    if p < spec.p_min - 1e-12 || p > spec.p_max + 1e-12 {
                        continue;
                    }
                    let v = cost(i, p) + next_value[b];
                    if v < value[a] {
                        value[a] = v;
                        arg[a] = b;
                    }
                }
            }
            choice[i] = arg;
            next_value = value;
        }
        let mut idx = 0;
        for i in 0..k {
            idx = choice[i][idx];
            path[i] = grids[i][idx];
        }
        if pass < 6 {
            for i in 0..k {
                let g = &grids[i];
                let spacing = (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64;
                grids[i] = grid(path[i] - 10.0 * spacing, path[i] + 10.0 * spacing, 201);
            }
        }
    }
    let mut e_prev = spec.e0;
    path.iter()
        .map(|&e| {
            let p = power(e_prev - e);
            e_prev = e;
            p
        })
        .collect()
}

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub const SYMMETRIC: [f64; 6] = [0.5, 2.0, -1.0, 0.5, 2.0, 1.0];

pub fn symmetric_mixture() -> DoubleLogisticCdf {
    DoubleLogisticCdf::from_array(SYMMETRIC).unwrap()
}

/// Pseudo-random valid mixture from a seed, zero mean.
pub fn random_mixture(u: [f64; 6]) -> DoubleLogisticCdf {
    let m = 0.05 + 0.9 * u[0];
    DoubleLogisticCdf::new(
        m,
        0.3 + 5.0 * u[1],
        -3.0 + 6.0 * u[2],
        1.0 - m,
        0.3 + 5.0 * u[3],
        -3.0 + 6.0 * u[4],
    )
    .unwrap()
    .centered()
}

pub struct PresetRuns {
    pub model: ProsumptionModel,
    pub spec: BatterySpec,
    pub problems: Vec<Problem>,
    pub solutions: Vec<ScheduleSolution>,
}

pub const CASES: [&str; 3] = ["case1", "case2", "case3"];

pub fn preset_model() -> ProsumptionModel {
    let raw = synth_forecast(1, "pv_dominant").unwrap();
    fit_forecast(&raw, &FitOptions::default()).unwrap().model()
}

/// The three weight presets solved once per test binary.
pub fn preset_runs() -> &'static PresetRuns {
    static RUNS: OnceLock<PresetRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let model = preset_model();
        let spec = BatterySpec::default();
        let problems: Vec<Problem> = CASES
            .iter()
            .map(|c| {
                let w = CostWeights::preset(c, model.horizon()).unwrap();
                build_problem(&model, &spec, &w, &QuadratureConfig::default()).unwrap()
            })
            .collect();
        let solutions = problems
            .iter()
            .map(|p| solve(p, &SolverConfig::default()).unwrap())
            .collect();
        PresetRuns {
            model,
            spec,
            problems,
            solutions,
        }
    })
}
