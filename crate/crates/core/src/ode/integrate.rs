use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stepper::{Attempt, Stepper};
use crate::error::{Error, Result};
use crate::model::{characteristic_margin, eval_rhs, SystemData};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    /// Absolute tolerance as a fraction of `max_i x0_i`.
    pub abs_tol: f64,
    /// A coordinate counts as collapsed below `collapse_threshold * x0_i`.
    pub collapse_threshold: f64,
    /// Convergence when `||f(x)||_inf <= converge_tol * max(1, ||w||_inf)`.
    pub converge_tol: f64,
    pub max_time: f64,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            collapse_threshold: 1e-6,
            converge_tol: 1e-8,
            max_time: 1e4,
            max_steps: 200_000,
        }
    }
}

impl IntegrationOptions {
    pub fn check(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("collapse_threshold", self.collapse_threshold),
            ("converge_tol", self.converge_tol),
            ("max_time", self.max_time),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Options(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Options("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Every component of `f(x)` is negative.
    pub derivative_negative: bool,
    /// `min_i x_i / x0_i`.
    pub min_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Collapse,
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// Accepted steps of one integration run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub rejected_steps: usize,
}

impl Trajectory {
    fn push(&mut self, t: f64, x: &[f64], rhs: &[f64], x0: &[f64]) {
        let min_ratio = x
            .iter()
            .zip(x0)
            .map(|(a, b)| a / b)
            .fold(f64::INFINITY, f64::min);
        self.samples.push(Sample {
            t,
            x: x.to_vec(),
            rhs: rhs.to_vec(),
            derivative_negative: rhs.iter().all(|v| *v < 0.0),
            min_ratio,
        });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.samples.last().map(|s| s.x.as_slice())
    }

    /// CSV with header `t,x1,...,xn` and one row per accepted step.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.samples.first().map_or(0, |s| s.x.len());
        let mut header = String::from("t");
        for i in 1..=n {
            header.push_str(&format!(",x{i}"));
        }
        writeln!(out, "{header}")?;
        for s in &self.samples {
            let mut row = s.t.to_string();
            for v in &s.x {
                row.push(',');
                row.push_str(&v.to_string());
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawOutcome {
    /// Coordinates (0-based) driven to zero, with the localized crossing time
    /// of the collapse threshold.
    Collapsed { indices: Vec<usize>, t_collapse: f64 },
    Converged { x_limit: Vec<f64>, t: f64 },
    BudgetExhausted { last_state: Vec<f64>, t: f64 },
}

/// Integrates from a characteristic seed. Fails if `x0` is not in the
/// characteristic set; use [`integrate_from`] for arbitrary starts.
pub fn integrate_characteristic(
    sys: &SystemData,
    x0: &[f64],
    opts: &IntegrationOptions,
) -> Result<(Trajectory, RawOutcome)> {
    let margin = characteristic_margin(sys, x0)?;
    if !(margin > 0.0) {
        return Err(Error::NotCharacteristic { margin });
    }
    integrate_from(sys, x0, opts)
}

/// Integrates `dx/dt = f(x)` from any positive state until collapse,
/// convergence or budget exhaustion.
pub fn integrate_from(
    sys: &SystemData,
    x0: &[f64],
    opts: &IntegrationOptions,
) -> Result<(Trajectory, RawOutcome)> {
    opts.check()?;
    eval_rhs(sys, x0)?;
    let n = sys.dim();
    let x_scale = x0.iter().copied().fold(0.0, f64::max);
    let res_tol = opts.converge_tol * sys.residual_scale();
    let mut st = Stepper::new(sys, x0, opts.rel_tol, opts.abs_tol * x_scale);
    let mut traj = Trajectory::default();
    traj.push(0.0, &st.x, &st.f, x0);

    if inf_norm(&st.f) <= res_tol {
        traj.events.push(Event { t: 0.0, kind: EventKind::Converged });
        return Ok((traj, RawOutcome::Converged { x_limit: st.x.clone(), t: 0.0 }));
    }

    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps || st.t >= opts.max_time {
            return Ok(exhausted(traj, &st));
        }
        let (x_prev, f_prev, t_prev) = (st.x.clone(), st.f.clone(), st.t);
        match st.attempt(opts.max_time) {
            Attempt::Rejected | Attempt::OutOfDomain => {
                traj.rejected_steps += 1;
                steps += 1;
                continue;
            }
            Attempt::Underflow => {
                // the step size collapsed before a coordinate reached the
                // threshold; accept a collapse only with the right signature
                let i = (0..n)
                    .min_by(|&i, &j| (st.x[i] / x0[i]).total_cmp(&(st.x[j] / x0[j])))
                    .unwrap();
                if sys.b()[i] > 0.0 && st.f[i] < 0.0 && st.x[i] < 1e-3 * x0[i] {
                    traj.events.push(Event { t: st.t, kind: EventKind::Collapse });
                    return Ok((
                        traj,
                        RawOutcome::Collapsed { indices: vec![i], t_collapse: st.t },
                    ));
                }
                return Ok(exhausted(traj, &st));
            }
            Attempt::Accepted { h_used } => {
                steps += 1;
                if h_used == 0.0 {
                    continue;
                }
                traj.push(st.t, &st.x, &st.f, x0);

                let collapsed: Vec<usize> = (0..n)
                    .filter(|&i| {
                        st.x[i] < opts.collapse_threshold * x0[i]
                            && sys.b()[i] > 0.0
                            && st.f[i] < 0.0
                            && st.f[i] <= f_prev[i]
                    })
                    .collect();
                if !collapsed.is_empty() {
                    let t_c = localize_crossing(
                        &st,
                        &x_prev,
                        &f_prev,
                        t_prev,
                        h_used,
                        &collapsed,
                        opts.collapse_threshold,
                        x0,
                    );
                    traj.events.push(Event { t: t_c, kind: EventKind::Collapse });
                    return Ok((
                        traj,
                        RawOutcome::Collapsed { indices: collapsed, t_collapse: t_c },
                    ));
                }

                if inf_norm(&st.f) <= res_tol {
                    traj.events.push(Event { t: st.t, kind: EventKind::Converged });
                    return Ok((traj, RawOutcome::Converged { x_limit: st.x.clone(), t: st.t }));
                }
            }
        }
    }
}

fn exhausted(mut traj: Trajectory, st: &Stepper) -> (Trajectory, RawOutcome) {
    traj.events.push(Event { t: st.t, kind: EventKind::BudgetExhausted });
    (traj, RawOutcome::BudgetExhausted { last_state: st.x.clone(), t: st.t })
}

/// Bisects the last accepted step for the first time a collapsing
/// coordinate drops below its threshold, to `1e-3` relative in time.
#[allow(clippy::too_many_arguments)]
fn localize_crossing(
    st: &Stepper,
    x_prev: &[f64],
    f_prev: &[f64],
    t_prev: f64,
    h: f64,
    indices: &[usize],
    threshold: f64,
    x0: &[f64],
) -> f64 {
    let below = |x: &[f64]| indices.iter().any(|&i| x[i] < threshold * x0[i]);
    let (mut lo, mut hi) = (0.0, h);
    while (hi - lo) > 1e-3 * (t_prev + hi) {
        let mid = 0.5 * (lo + hi);
        match st.probe(x_prev, f_prev, mid) {
            Some(x) if !below(&x) => lo = mid,
            _ => hi = mid,
        }
    }
    t_prev + hi
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fixed-schedule flow for sampling several trajectories on a common grid.
#[derive(Debug, Clone)]
pub struct Flow<'a> {
    stepper: Stepper<'a>,
    max_steps: usize,
    steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowState {
    At(Vec<f64>),
    /// Left the positive orthant (or stalled) before the requested time.
    Ended { t: f64, last: Vec<f64> },
}

impl<'a> Flow<'a> {
    pub fn new(sys: &'a SystemData, x0: &[f64], opts: &IntegrationOptions) -> Result<Self> {
        opts.check()?;
        eval_rhs(sys, x0)?;
        let x_scale = x0.iter().copied().fold(0.0, f64::max);
        Ok(Flow {
            stepper: Stepper::new(sys, x0, opts.rel_tol, opts.abs_tol * x_scale),
            max_steps: opts.max_steps,
            steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.stepper.t
    }

    pub fn state(&self) -> &[f64] {
        &self.stepper.x
    }

    /// Integrates up to exactly `t`.
    pub fn advance_to(&mut self, t: f64) -> FlowState {
        while self.stepper.t < t {
            if self.steps >= self.max_steps {
                return self.ended();
            }
            self.steps += 1;
            match self.stepper.attempt(t) {
                Attempt::Underflow => return self.ended(),
                Attempt::Accepted { .. } | Attempt::Rejected | Attempt::OutOfDomain => {}
            }
        }
        FlowState::At(self.stepper.x.clone())
    }

    fn ended(&self) -> FlowState {
        FlowState::Ended { t: self.stepper.t, last: self.stepper.x.clone() }
    }
}
