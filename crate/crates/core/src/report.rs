//! Serializable summary of one analysis run.

use serde::{Deserialize, Serialize};

use crate::model::ValidationReport;
use crate::ode::{Analysis, ClassifyOptions, InconclusiveReason, Outcome};
use crate::seed::CharacteristicSeed;
use crate::stability::StabilityReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEcho {
    pub model: String,
    pub n: usize,
}

/// Outcome with node numbers shifted to 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportOutcome {
    Dominant {
        x_max: Vec<f64>,
        residual: f64,
    },
    None {
        collapsed_nodes: Vec<usize>,
        collapse_time: f64,
    },
    Inconclusive {
        reason: InconclusiveReason,
        detail: String,
        last_state: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryInfo {
    pub samples: usize,
    pub rejected_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub input: InputEcho,
    pub options: ClassifyOptions,
    pub validation: ValidationReport,
    pub seed: CharacteristicSeed,
    pub outcome: ReportOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    /// Some `b_i = 0`; the existence theory does not cover this case.
    pub zero_power_deviation: bool,
    pub trajectory: TrajectoryInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl AnalysisReport {
    pub fn new(model: &str, analysis: &Analysis, options: &ClassifyOptions) -> Self {
        let (outcome, stability) = match &analysis.outcome {
            Outcome::Dominant { x_max, residual, stability } => (
                ReportOutcome::Dominant { x_max: x_max.clone(), residual: *residual },
                Some(stability.clone()),
            ),
            Outcome::NoEquilibrium { collapsed, collapse_time } => (
                ReportOutcome::None {
                    collapsed_nodes: collapsed.iter().map(|i| i + 1).collect(),
                    collapse_time: *collapse_time,
                },
                None,
            ),
            Outcome::Inconclusive { reason, detail, last_state, stability } => (
                ReportOutcome::Inconclusive {
                    reason: *reason,
                    detail: detail.clone(),
                    last_state: last_state.clone(),
                },
                stability.clone(),
            ),
        };
        AnalysisReport {
            input: InputEcho { model: model.to_string(), n: analysis.seed.x0.len() },
            options: *options,
            validation: analysis.validation.clone(),
            seed: analysis.seed.clone(),
            outcome,
            stability,
            zero_power_deviation: analysis.zero_power_deviation(),
            trajectory: TrajectoryInfo {
                samples: analysis.trajectory.len(),
                rejected_steps: analysis.trajectory.rejected_steps,
                path: None,
            },
            timings: None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.outcome {
            ReportOutcome::Dominant { .. } => "dominant",
            ReportOutcome::None { .. } => "none",
            ReportOutcome::Inconclusive { .. } => "inconclusive",
        }
    }
}
