use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_endpoints, finite, one_based, validated_output};
use crate::error::{Error, Result};
use crate::model::SystemData;

/// Per-node ZIP reactive load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcNode {
    /// Constant-impedance coefficient, S.
    pub admittance: f64,
    /// Constant-current coefficient, A.
    pub current: f64,
    /// Constant reactive power, var.
    pub reactive_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcLine {
    #[serde(with = "one_based")]
    pub from: usize,
    #[serde(with = "one_based")]
    pub to: usize,
    /// Line susceptance, S; non-positive for a connected pair.
    pub susceptance: f64,
}

/// Decoupled reactive power balance of an AC network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcGridSpec {
    pub nodes: Vec<AcNode>,
    #[serde(default)]
    pub lines: Vec<AcLine>,
}

/// `A_ii = sum_j |B_ij| - Y_i`, `A_ij = -|B_ij|`, `w = k`, `b = -Q`.
pub fn build_from_ac(spec: &AcGridSpec) -> Result<SystemData> {
    let n = spec.nodes.len();
    if n == 0 {
        return Err(Error::Malformed("AC grid has no nodes".into()));
    }
    let mut a = DMatrix::zeros(n, n);
    for (k, line) in spec.lines.iter().enumerate() {
        check_endpoints(k, line.from, line.to, n)?;
        let b = finite("susceptance", line.susceptance)?;
        if b > 0.0 {
            return Err(Error::Malformed(format!(
                "line {} has positive susceptance {b}",
                k + 1
            )));
        }
        let g = b.abs();
        a[(line.from, line.to)] -= g;
        a[(line.to, line.from)] -= g;
        a[(line.from, line.from)] += g;
        a[(line.to, line.to)] += g;
    }
    let mut w = DVector::zeros(n);
    let mut bvec = DVector::zeros(n);
    for (i, node) in spec.nodes.iter().enumerate() {
        a[(i, i)] -= finite("admittance", node.admittance)?;
        w[i] = finite("current", node.current)?;
        bvec[i] = -finite("reactive_power", node.reactive_power)?;
    }
    validated_output(SystemData::new(a, bvec, w)?)
}
