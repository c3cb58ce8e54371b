use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_weighted_laplacian, finite, incidence, positive, validated_output, weighted_gram};
use crate::error::{Error, Result};
use crate::model::SystemData;

/// Endpoint of an HVDC line: a voltage-controlled (`V`) or power-controlled
/// (`P`) node, 0-based within its group. Written `"V1"`, `"P3"` in
/// documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    V(usize),
    P(usize),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::V(i) => write!(f, "V{}", i + 1),
            NodeRef::P(i) => write!(f, "P{}", i + 1),
        }
    }
}

impl FromStr for NodeRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("node reference {s:?} is not V<k> or P<k>"));
        let (kind, num) = s.split_at_checked(1).ok_or_else(bad)?;
        let k: usize = num.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match kind {
            "V" | "v" => Ok(NodeRef::V(k - 1)),
            "P" | "p" => Ok(NodeRef::P(k - 1)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for NodeRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageNode {
    /// Regulated voltage, V.
    pub voltage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerNode {
    /// Power setpoint, W. Positive when the converter draws power.
    pub power: f64,
    /// Shunt conductance, S.
    pub shunt_conductance: f64,
    /// Dynamic parameters, carried but unused by the steady-state reduction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacitance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvdcLine {
    pub from: NodeRef,
    pub to: NodeRef,
    /// Ohm.
    pub resistance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inductance: Option<f64>,
}

/// Multi-terminal HVDC network with `s` voltage-controlled and `n`
/// power-controlled terminals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvdcSpec {
    pub v_nodes: Vec<VoltageNode>,
    pub p_nodes: Vec<PowerNode>,
    pub lines: Vec<HvdcLine>,
}

impl HvdcSpec {
    /// Builds a spec from split incidence matrices (`s x m` and `n x m`,
    /// entries in {-1, 0, 1}); every column of the stacked matrix must hold
    /// exactly one `+1` and one `-1`.
    pub fn from_incidence(
        v_voltages: &[f64],
        p_powers: &[f64],
        p_shunts: &[f64],
        b_v: &[Vec<i8>],
        b_p: &[Vec<i8>],
        resistances: &[f64],
    ) -> Result<Self> {
        let (s, n, m) = (v_voltages.len(), p_powers.len(), resistances.len());
        if p_shunts.len() != n || b_v.len() != s || b_p.len() != n {
            return Err(Error::Malformed("incidence dimensions do not match node counts".into()));
        }
        if b_v.iter().chain(b_p).any(|row| row.len() != m) {
            return Err(Error::Malformed("incidence rows must have one entry per line".into()));
        }
        let mut lines = Vec::with_capacity(m);
        for k in 0..m {
            let mut plus = Vec::new();
            let mut minus = Vec::new();
            let entries = b_v
                .iter()
                .enumerate()
                .map(|(i, r)| (NodeRef::V(i), r[k]))
                .chain(b_p.iter().enumerate().map(|(i, r)| (NodeRef::P(i), r[k])));
            for (node, e) in entries {
                match e {
                    1 => plus.push(node),
                    -1 => minus.push(node),
                    0 => {}
                    other => {
                        return Err(Error::Malformed(format!(
                            "incidence entry {other} in column {} is not in {{-1, 0, 1}}",
                            k + 1
                        )))
                    }
                }
            }
            if plus.len() != 1 || minus.len() != 1 {
                return Err(Error::Malformed(format!(
                    "incidence column {} needs exactly one +1 and one -1",
                    k + 1
                )));
            }
            lines.push(HvdcLine {
                from: plus[0],
                to: minus[0],
                resistance: resistances[k],
                inductance: None,
            });
        }
        Ok(HvdcSpec {
            v_nodes: v_voltages.iter().map(|&voltage| VoltageNode { voltage }).collect(),
            p_nodes: p_powers
                .iter()
                .zip(p_shunts)
                .map(|(&power, &shunt_conductance)| PowerNode {
                    power,
                    shunt_conductance,
                    capacitance: None,
                    time_constant: None,
                })
                .collect(),
            lines,
        })
    }

    /// Stacked position of a node: voltage nodes first.
    fn stacked(&self, node: NodeRef) -> usize {
        match node {
            NodeRef::V(i) => i,
            NodeRef::P(i) => self.v_nodes.len() + i,
        }
    }

    fn check(&self) -> Result<()> {
        if self.p_nodes.is_empty() {
            return Err(Error::Malformed("HVDC network has no power-controlled nodes".into()));
        }
        for (k, line) in self.lines.iter().enumerate() {
            for end in [line.from, line.to] {
                let ok = match end {
                    NodeRef::V(i) => i < self.v_nodes.len(),
                    NodeRef::P(i) => i < self.p_nodes.len(),
                };
                if !ok {
                    return Err(Error::Malformed(format!(
                        "line {} references missing node {end}",
                        k + 1
                    )));
                }
            }
            if line.from == line.to {
                return Err(Error::Malformed(format!("line {} is a self-loop", k + 1)));
            }
            positive("resistance", line.resistance)?;
        }
        for node in &self.v_nodes {
            finite("voltage", node.voltage)?;
        }
        for node in &self.p_nodes {
            finite("power", node.power)?;
            if !(finite("shunt_conductance", node.shunt_conductance)? >= 0.0) {
                return Err(Error::Malformed(format!(
                    "shunt conductance {} is negative",
                    node.shunt_conductance
                )));
            }
        }
        Ok(())
    }
}

/// `A = B_P R^-1 B_P^T + G`, `b = P`, `w = -B_P R^-1 B_V^T V_V`.
pub fn build_from_hvdc(spec: &HvdcSpec) -> Result<SystemData> {
    spec.check()?;
    let (s, n) = (spec.v_nodes.len(), spec.p_nodes.len());
    let ends: Vec<(usize, usize)> = spec
        .lines
        .iter()
        .map(|l| (spec.stacked(l.from), spec.stacked(l.to)))
        .collect();
    let inc = incidence(s + n, &ends);
    let b_v = inc.rows(0, s).into_owned();
    let b_p = inc.rows(s, n).into_owned();
    let conductances: Vec<f64> = spec.lines.iter().map(|l| 1.0 / l.resistance).collect();

    let lap = weighted_gram(&b_p, &conductances);
    check_weighted_laplacian(&lap)?;
    let g = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        spec.p_nodes.iter().map(|p| p.shunt_conductance),
    ));
    let a = lap + g;

    let v = DVector::from_iterator(s, spec.v_nodes.iter().map(|v| v.voltage));
    let mut b_p_scaled = b_p.clone();
    for (k, c) in conductances.iter().enumerate() {
        b_p_scaled.column_mut(k).scale_mut(*c);
    }
    let w = -(b_p_scaled * b_v.transpose() * v);
    let b = DVector::from_iterator(n, spec.p_nodes.iter().map(|p| p.power));
    validated_output(SystemData::new(a, b, w)?)
}
