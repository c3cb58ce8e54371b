//! Reductions of network models to the canonical `(A, b, w)` form.
//!
//! Units are SI throughout. Node references in serialized specs are 1-based;
//! in memory they are 0-based.

mod ac;
mod hvdc;
mod microgrid;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use ac::{build_from_ac, AcGridSpec, AcLine, AcNode};
pub use hvdc::{build_from_hvdc, HvdcLine, HvdcSpec, NodeRef, PowerNode, VoltageNode};
pub use microgrid::{build_from_dc_microgrid, DcLine, DcMicrogridSpec, DcNode};

use crate::error::{Error, Result};
use crate::model::{validate_system, SystemData};

/// A network description tagged by its `model` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NetworkSpec {
    Ac(AcGridSpec),
    Hvdc(HvdcSpec),
    DcMicrogrid(DcMicrogridSpec),
    Raw(SystemData),
}

impl NetworkSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            NetworkSpec::Ac(_) => "ac",
            NetworkSpec::Hvdc(_) => "hvdc",
            NetworkSpec::DcMicrogrid(_) => "dc_microgrid",
            NetworkSpec::Raw(_) => "raw",
        }
    }

    /// Reduces to canonical form. Adapter outputs are validated; raw systems
    /// are returned as given.
    pub fn reduce(&self) -> Result<SystemData> {
        match self {
            NetworkSpec::Ac(s) => build_from_ac(s),
            NetworkSpec::Hvdc(s) => build_from_hvdc(s),
            NetworkSpec::DcMicrogrid(s) => build_from_dc_microgrid(s),
            NetworkSpec::Raw(s) => Ok(s.clone()),
        }
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Malformed(format!("{name} is not finite")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Malformed(format!("{name} must be positive, got {v}")))
    }
}

fn check_endpoints(line: usize, from: usize, to: usize, n: usize) -> Result<()> {
    if from >= n || to >= n {
        return Err(Error::Malformed(format!(
            "line {} references a node outside 1..={n}",
            line + 1
        )));
    }
    if from == to {
        return Err(Error::Malformed(format!("line {} is a self-loop", line + 1)));
    }
    Ok(())
}

/// Node-by-line incidence with each column oriented `+1` at the lower
/// endpoint index and `-1` at the higher one.
fn incidence(n: usize, ends: &[(usize, usize)]) -> DMatrix<f64> {
    let mut inc = DMatrix::zeros(n, ends.len());
    for (k, &(a, b)) in ends.iter().enumerate() {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        inc[(lo, k)] = 1.0;
        inc[(hi, k)] = -1.0;
    }
    inc
}

/// `B diag(g) B^T`.
fn weighted_gram(inc: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut scaled = inc.clone();
    for (k, g) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(*g);
    }
    &scaled * inc.transpose()
}

/// Symmetric, non-positive off-diagonal and weakly diagonally dominant with
/// nonnegative diagonal, which makes the matrix positive semidefinite.
fn check_weighted_laplacian(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            if m[(i, j)] > 0.0 || m[(i, j)] != m[(j, i)] {
                return Err(Error::Malformed(format!(
                    "line conductance matrix entry ({}, {}) = {} breaks the Laplacian pattern",
                    i + 1,
                    j + 1,
                    m[(i, j)]
                )));
            }
            off += m[(i, j)].abs();
        }
        if m[(i, i)] < off * (1.0 - 1e-12) {
            return Err(Error::Malformed(format!(
                "line conductance matrix row {} is not diagonally dominant",
                i + 1
            )));
        }
    }
    Ok(())
}

fn validated_output(sys: SystemData) -> Result<SystemData> {
    let report = validate_system(&sys);
    if report.passed {
        Ok(sys)
    } else {
        Err(Error::Invalid(report))
    }
}

/// Serde helpers for 1-based node numbers in documents.
pub(crate) mod one_based {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        if v == 0 {
            return Err(de::Error::custom("node numbers start at 1"));
        }
        Ok((v - 1) as usize)
    }
}
