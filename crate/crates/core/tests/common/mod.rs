#![allow(dead_code)]

use cpl_core::adapters::HvdcSpec;
use cpl_core::ode::{integrate_characteristic, integrate_from, refine_equilibrium, Flow, FlowState, RawOutcome};
use cpl_core::oracle::{enumerate_equilibria_2d, DEFAULT_GRID_DENSITY};
use cpl_core::seed::build_characteristic_seed;
use cpl_core::{
    assess, classify, eval_jacobian, eval_rhs, in_characteristic_set, ClassifyOptions,
    IntegrationOptions, Outcome, SystemData,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rlc(b1: f64, b2: f64) -> SystemData {
    let (r1, r2) = (0.04, 0.06);
    SystemData::from_rows(
        &[vec![1.0 / r2 + 1.0 / r1, -1.0 / r2], vec![-1.0 / r2, 1.0 / r2]],
        vec![b1, b2],
        vec![24.0 / r1, 0.0],
    )
    .unwrap()
}

pub fn hvdc_spec() -> HvdcSpec {
    HvdcSpec::from_incidence(
        &[400e3],
        &[-160e6, 140e6, -180e6],
        &[0.0229e-6, 0.0229e-6, 0.3435e-6],
        &[vec![-1, -1, -1, 0, 0]],
        &[vec![0, 0, 1, 0, 1], vec![1, 0, 0, -1, 0], vec![0, 1, 0, 1, -1]],
        &[0.9576, 1.4365, 1.9153, 1.9153, 0.9576],
    )
    .unwrap()
}

/// Nonzero draw from `[-5, 5]` with `|b| >= 0.05`.
pub fn power(rng: &mut impl Rng) -> f64 {
    loop {
        let b: f64 = rng.gen_range(-5.0..5.0);
        if b.abs() >= 0.05 {
            return b;
        }
    }
}

/// Connected, strictly diagonally dominant Stieltjes matrix with random
/// `b` and `w`.
pub fn random_system(rng: &mut impl Rng, n: usize) -> SystemData {
    let mut a = vec![vec![0.0; n]; n];
    let link = |a: &mut Vec<Vec<f64>>, i: usize, j: usize, g: f64| {
        a[i][j] -= g;
        a[j][i] -= g;
        a[i][i] += g;
        a[j][j] += g;
    };
    for j in 1..n {
        let i = rng.gen_range(0..j);
        let g = rng.gen_range(0.1..3.0);
        link(&mut a, i, j, g);
    }
    for i in 0..n {
        for j in i + 1..n {
            if a[i][j] == 0.0 && rng.gen_bool(0.3) {
                let g = rng.gen_range(0.1..3.0);
                link(&mut a, i, j, g);
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += rng.gen_range(0.1..3.0);
    }
    let b = (0..n).map(|_| power(rng)).collect();
    let w = (0..n).map(|_| rng.gen_range(-1.0..8.0)).collect();
    SystemData::from_rows(&a, b, w).unwrap()
}

pub fn random_dim_system(rng: &mut impl Rng) -> SystemData {
    let n = rng.gen_range(1..=4);
    random_system(rng, n)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()))
        .fold(0.0, f64::max)
}

/// Classifier and brute-force oracle agree on existence, and on the
/// dominant point when one exists. Returns the dominant point.
pub fn check_oracle_agreement(sys: &SystemData) -> Result<Option<Vec<f64>>, String> {
    let outcome = classify(sys, &ClassifyOptions::default()).map_err(|e| e.to_string())?.outcome;
    let x_max = match &outcome {
        Outcome::Dominant { x_max, .. } => Some(x_max.clone()),
        Outcome::NoEquilibrium { .. } => None,
        other => return Err(format!("classifier inconclusive: {other:?}")),
    };
    let mut density = DEFAULT_GRID_DENSITY;
    loop {
        let list = enumerate_equilibria_2d(sys, density).map_err(|e| e.to_string())?;
        let agree = list.is_empty() == x_max.is_none();
        if agree {
            if let Some(x) = &x_max {
                let top = list.dominant().ok_or("oracle points have no dominant element")?;
                let rel = max_rel(x, &top.x);
                if rel > 1e-6 {
                    return Err(format!("x_max {x:?} vs oracle {:?} (rel {rel:e})", top.x));
                }
                for p in &list.points {
                    if p.x.iter().zip(x).any(|(pi, xi)| *pi > xi * (1.0 + 1e-9)) {
                        return Err(format!("oracle point {:?} not dominated by {x:?}", p.x));
                    }
                }
            }
            return Ok(x_max);
        }
        if density >= 4 * DEFAULT_GRID_DENSITY {
            return Err(format!(
                "existence disagreement: classifier {}, oracle {} point(s) at density {density}",
                outcome.label(),
                list.points.len()
            ));
        }
        density *= 2;
    }
}

/// Integration from `1.5 x_max` returns to `x_max`, which is Hurwitz.
pub fn check_right_attraction(sys: &SystemData, x_max: &[f64]) -> Result<(), String> {
    let start: Vec<f64> = x_max.iter().map(|v| 1.5 * v).collect();
    let (_, raw) = integrate_from(sys, &start, &IntegrationOptions::default()).map_err(|e| e.to_string())?;
    let RawOutcome::Converged { x_limit, .. } = raw else {
        return Err(format!("no reconvergence from 1.5 x_max: {raw:?}"));
    };
    let back = refine_equilibrium(sys, &x_limit).map_err(|e| e.to_string())?;
    let rel = max_rel(&back, x_max);
    if rel > 1e-6 {
        return Err(format!("reconverged to {back:?}, expected {x_max:?}"));
    }
    let report = assess(sys, x_max).map_err(|e| e.to_string())?;
    if !report.hurwitz {
        return Err(format!("x_max not Hurwitz: {:?}", report.eigenvalues));
    }
    Ok(())
}

/// `x_a(t) <= x_b(t) + 1e-7 scale` on a shared time grid.
pub fn check_monotone(sys: &SystemData, xa: &[f64], xb: &[f64]) -> Result<(), String> {
    let opts = IntegrationOptions::default();
    let mut fa = Flow::new(sys, xa, &opts).map_err(|e| e.to_string())?;
    let mut fb = Flow::new(sys, xb, &opts).map_err(|e| e.to_string())?;
    let scale = xb.iter().copied().fold(1.0, f64::max);
    for k in 1..=60 {
        let t = 0.25 * k as f64;
        let (FlowState::At(a), FlowState::At(b)) = (fa.advance_to(t), fb.advance_to(t)) else {
            return Ok(());
        };
        for i in 0..a.len() {
            if a[i] > b[i] + 1e-7 * scale {
                return Err(format!("t = {t}: x_a[{i}] = {} > x_b[{i}] = {}", a[i], b[i]));
            }
        }
    }
    Ok(())
}

/// Seed in the characteristic set, strict decay along the run, collapse
/// only on loads, and seed-independent limits.
pub fn check_characteristic(sys: &SystemData) -> Result<(), String> {
    let opts = IntegrationOptions::default();
    let seed = build_characteristic_seed(sys, 1.05).map_err(|e| e.to_string())?;
    if seed.margin <= 0.0 || !in_characteristic_set(sys, &seed.x0, 0.0) {
        return Err(format!("seed outside the characteristic set: {seed:?}"));
    }
    let (traj, raw) = integrate_characteristic(sys, &seed.x0, &opts).map_err(|e| e.to_string())?;
    if let Some(s) = traj.samples.iter().find(|s| !s.derivative_negative) {
        return Err(format!("f not negative at t = {}: {:?}", s.t, s.rhs));
    }
    match raw {
        RawOutcome::Collapsed { indices, .. } => {
            if let Some(i) = indices.iter().find(|&&i| sys.b()[i] <= 0.0) {
                return Err(format!("collapsed coordinate {i} has b = {}", sys.b()[*i]));
            }
        }
        RawOutcome::Converged { x_limit, .. } => {
            let other = build_characteristic_seed(sys, 2.0).map_err(|e| e.to_string())?;
            let (_, raw2) = integrate_characteristic(sys, &other.x0, &opts).map_err(|e| e.to_string())?;
            let RawOutcome::Converged { x_limit: x2, .. } = raw2 else {
                return Err(format!("second seed did not converge: {raw2:?}"));
            };
            let r1 = refine_equilibrium(sys, &x_limit).map_err(|e| e.to_string())?;
            let r2 = refine_equilibrium(sys, &x2).map_err(|e| e.to_string())?;
            let tol = 10.0 * opts.converge_tol * sys.residual_scale();
            let gap = r1.iter().zip(&r2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap > tol {
                return Err(format!("limits differ by {gap:e}: {r1:?} vs {r2:?}"));
            }
        }
        RawOutcome::BudgetExhausted { t, .. } => return Err(format!("budget exhausted at t = {t}")),
    }
    Ok(())
}

/// Analytic Jacobian against central differences, `1e-5` relative to the
/// largest entry.
pub fn check_jacobian(sys: &SystemData, x: &[f64]) -> Result<(), String> {
    let jac = eval_jacobian(sys, x).map_err(|e| e.to_string())?;
    let scale = jac.amax();
    let n = x.len();
    for j in 0..n {
        let h = 1e-5 * x[j];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = eval_rhs(sys, &xp).map_err(|e| e.to_string())?;
        let fm = eval_rhs(sys, &xm).map_err(|e| e.to_string())?;
        for i in 0..n {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            if (fd - jac[(i, j)]).abs() > 1e-5 * scale {
                return Err(format!("df{i}/dx{j}: analytic {} vs difference {fd}", jac[(i, j)]));
            }
        }
    }
    Ok(())
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.5))).collect()
}
