use serde::{Deserialize, Serialize};

use super::integrate::{inf_norm, integrate_characteristic, IntegrationOptions, RawOutcome, Trajectory};
use super::refine::refine_equilibrium;
use crate::error::{Error, Result};
use crate::model::{eval_rhs, SystemData, ValidationReport};
use crate::seed::{build_characteristic_seed, CharacteristicSeed, DEFAULT_SAFETY};
use crate::stability::{assess_with, StabilityReport, DEFAULT_HYPER_TOL};

/// Largest relative move Newton may make from the integrated limit before
/// the result is distrusted.
const MAX_POLISH_DRIFT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub integration: IntegrationOptions,
    pub safety: f64,
    pub hyper_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            integration: IntegrationOptions::default(),
            safety: DEFAULT_SAFETY,
            hyper_tol: DEFAULT_HYPER_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InconclusiveReason {
    BudgetExhausted,
    NewtonFailure,
    NonHyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// A characteristic solution collapsed; there are no equilibria.
    NoEquilibrium {
        /// 0-based.
        collapsed: Vec<usize>,
        collapse_time: f64,
    },
    /// The characteristic solution converged to the dominant equilibrium.
    Dominant {
        x_max: Vec<f64>,
        residual: f64,
        stability: StabilityReport,
    },
    Inconclusive {
        reason: InconclusiveReason,
        detail: String,
        last_state: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        stability: Option<StabilityReport>,
    },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::NoEquilibrium { .. } => "none",
            Outcome::Dominant { .. } => "dominant",
            Outcome::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn x_max(&self) -> Option<&[f64]> {
        match self {
            Outcome::Dominant { x_max, .. } => Some(x_max),
            _ => None,
        }
    }

    pub fn is_dominant(&self) -> bool {
        matches!(self, Outcome::Dominant { .. })
    }
}

/// Everything produced by one run of the classification procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub validation: ValidationReport,
    pub seed: CharacteristicSeed,
    pub trajectory: Trajectory,
    pub raw: RawOutcome,
    pub outcome: Outcome,
}

impl Analysis {
    /// Set when some `b_i = 0`, which the existence theory excludes.
    pub fn zero_power_deviation(&self) -> bool {
        !self.validation.zero_power_nodes.is_empty()
    }
}

/// Seed, integrate and inspect: collapse of the characteristic solution
/// means no equilibrium exists, convergence yields the dominant one.
pub fn classify(sys: &SystemData, opts: &ClassifyOptions) -> Result<Analysis> {
    opts.integration.check()?;
    if !(opts.hyper_tol >= 0.0) {
        return Err(Error::Options(format!("hyper_tol must be nonnegative, got {}", opts.hyper_tol)));
    }
    let (sys, validation) = sys.validated()?;
    let seed = build_characteristic_seed(&sys, opts.safety)?;
    let (trajectory, raw) = integrate_characteristic(&sys, &seed.x0, &opts.integration)?;
    let outcome = interpret(&sys, &raw, opts.hyper_tol)?;
    Ok(Analysis { validation, seed, trajectory, raw, outcome })
}

fn interpret(sys: &SystemData, raw: &RawOutcome, hyper_tol: f64) -> Result<Outcome> {
    Ok(match raw {
        RawOutcome::Collapsed { indices, t_collapse } => Outcome::NoEquilibrium {
            collapsed: indices.clone(),
            collapse_time: *t_collapse,
        },
        RawOutcome::BudgetExhausted { last_state, t } => Outcome::Inconclusive {
            reason: InconclusiveReason::BudgetExhausted,
            detail: format!("integration budget exhausted at t = {t}"),
            last_state: last_state.clone(),
            stability: None,
        },
        RawOutcome::Converged { x_limit, .. } => match refine_equilibrium(sys, x_limit) {
            Err(e) => Outcome::Inconclusive {
                reason: InconclusiveReason::NewtonFailure,
                detail: e.to_string(),
                last_state: x_limit.clone(),
                stability: None,
            },
            Ok(x) => {
                let drift = x
                    .iter()
                    .zip(x_limit)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                let size = inf_norm(x_limit);
                if drift > MAX_POLISH_DRIFT * size {
                    return Ok(Outcome::Inconclusive {
                        reason: InconclusiveReason::NewtonFailure,
                        detail: format!("Newton moved {drift:e} away from the integrated limit"),
                        last_state: x_limit.clone(),
                        stability: None,
                    });
                }
                let stability = assess_with(sys, &x, hyper_tol)?;
                if stability.non_hyperbolic_suspect {
                    Outcome::Inconclusive {
                        reason: InconclusiveReason::NonHyperbolic,
                        detail: format!(
                            "smallest |eigenvalue| {:e} at the limit point",
                            stability.hyperbolicity_margin
                        ),
                        last_state: x,
                        stability: Some(stability),
                    }
                } else {
                    let residual = inf_norm(&eval_rhs(sys, &x)?);
                    Outcome::Dominant { x_max: x, residual, stability }
                }
            }
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rlc(b1: f64, b2: f64) -> SystemData {
        let (r1, r2) = (0.04, 0.06);
        SystemData::from_rows(
            &[vec![1.0 / r2 + 1.0 / r1, -1.0 / r2], vec![-1.0 / r2, 1.0 / r2]],
            vec![b1, b2],
            vec![24.0 / r1, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn rlc_feasible_point() {
        let a = classify(&rlc(500.0, 450.0), &ClassifyOptions::default()).unwrap();
        let Outcome::Dominant { x_max, stability, .. } = &a.outcome else {
            panic!("{:?}", a.outcome)
        };
        assert!((x_max[0] - 22.24).abs() <= 0.01, "{x_max:?}");
        assert!((x_max[1] - 20.95).abs() <= 0.01, "{x_max:?}");
        assert!(stability.long_term_stable);
        assert_eq!(stability.unique_stable, Some(true));
    }

    #[test]
    fn rlc_infeasible_point() {
        let a = classify(&rlc(3000.0, 1000.0), &ClassifyOptions::default()).unwrap();
        let Outcome::NoEquilibrium { collapsed, collapse_time } = &a.outcome else {
            panic!("{:?}", a.outcome)
        };
        assert_eq!(collapsed, &vec![1]);
        assert!(collapse_time.is_finite());
    }

    #[test]
    fn double_root_is_inconclusive() {
        let s = SystemData::scalar(1.0, 1.0, 2.0).unwrap();
        let a = classify(&s, &ClassifyOptions::default()).unwrap();
        assert!(
            matches!(
                a.outcome,
                Outcome::Inconclusive { reason: InconclusiveReason::NonHyperbolic, .. }
            ),
            "{:?}",
            a.outcome
        );
    }

    #[test]
    fn invalid_system_propagates() {
        let s = SystemData::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]], vec![1.0, 1.0], vec![1.0, 1.0])
            .unwrap();
        assert!(matches!(classify(&s, &ClassifyOptions::default()), Err(Error::Invalid(_))));
    }

    #[test]
    fn zero_power_is_flagged_not_fatal() {
        let s = SystemData::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]], vec![0.0, 1.0], vec![3.0, 3.0])
            .unwrap();
        let a = classify(&s, &ClassifyOptions::default()).unwrap();
        assert!(a.zero_power_deviation());
        assert!(a.outcome.is_dominant());
    }
}
