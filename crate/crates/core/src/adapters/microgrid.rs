use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{check_endpoints, finite, incidence, one_based, positive, validated_output, weighted_gram};
use crate::error::{Error, Result};
use crate::model::SystemData;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcNode {
    /// Ohm.
    pub filter_resistance: f64,
    /// V.
    pub source_voltage: f64,
    /// Constant-impedance load, S.
    pub impedance_load: f64,
    /// Constant-current load, A.
    pub current_load: f64,
    /// Constant-power load, W.
    pub power_load: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_inductance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_capacitance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcLine {
    #[serde(with = "one_based")]
    pub from: usize,
    #[serde(with = "one_based")]
    pub to: usize,
    /// Ohm.
    pub resistance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inductance: Option<f64>,
}

/// Kron-reduced DC microgrid with a buck-converter source at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcMicrogridSpec {
    pub nodes: Vec<DcNode>,
    #[serde(default)]
    pub lines: Vec<DcLine>,
}

/// `A = R_t^-1 + Y + B R^-1 B^T`, `b = P`, `w = R_t^-1 u - k`.
pub fn build_from_dc_microgrid(spec: &DcMicrogridSpec) -> Result<SystemData> {
    let n = spec.nodes.len();
    if n == 0 {
        return Err(Error::Malformed("DC microgrid has no nodes".into()));
    }
    let mut ends = Vec::with_capacity(spec.lines.len());
    let mut conductances = Vec::with_capacity(spec.lines.len());
    for (k, line) in spec.lines.iter().enumerate() {
        check_endpoints(k, line.from, line.to, n)?;
        conductances.push(1.0 / positive("line resistance", line.resistance)?);
        ends.push((line.from, line.to));
    }
    let mut a = weighted_gram(&incidence(n, &ends), &conductances);
    let mut w = DVector::zeros(n);
    let mut b = DVector::zeros(n);
    for (i, node) in spec.nodes.iter().enumerate() {
        let gt = 1.0 / positive("filter resistance", node.filter_resistance)?;
        let y = finite("impedance load", node.impedance_load)?;
        if y < 0.0 {
            return Err(Error::Malformed(format!(
                "node {} has negative impedance load {y}",
                i + 1
            )));
        }
        a[(i, i)] += gt + y;
        w[i] = gt * finite("source voltage", node.source_voltage)? - finite("current load", node.current_load)?;
        b[i] = finite("power load", node.power_load)?;
    }
    validated_output(SystemData::new(a, b, w)?)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn node(rt: f64, u: f64, y: f64, k: f64, p: f64) -> DcNode {
        DcNode {
            filter_resistance: rt,
            source_voltage: u,
            impedance_load: y,
            current_load: k,
            power_load: p,
            filter_inductance: None,
            filter_capacitance: None,
        }
    }

    #[test]
    fn single_node() {
        let spec = DcMicrogridSpec { nodes: vec![node(1.0, 5.0, 1.0, 1.0, 1.0)], lines: vec![] };
        let s = build_from_dc_microgrid(&spec).unwrap();
        assert_eq!(s.a()[(0, 0)], 2.0);
        assert_eq!(s.w()[0], 4.0);
        assert_eq!(s.b()[0], 1.0);
    }

    #[test]
    fn two_nodes_give_symmetric_example() {
        let spec = DcMicrogridSpec {
            nodes: vec![node(1.0, 3.0, 0.0, 0.0, 1.0), node(1.0, 3.0, 0.0, 0.0, 1.0)],
            lines: vec![DcLine { from: 1, to: 0, resistance: 1.0, inductance: None }],
        };
        let s = build_from_dc_microgrid(&spec).unwrap();
        assert_eq!(s.a().as_slice(), &[2.0, -1.0, -1.0, 2.0]);
        assert_eq!(s.w().as_slice(), &[3.0, 3.0]);
        assert_eq!(s.b().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn negative_impedance_load_is_malformed() {
        let spec = DcMicrogridSpec { nodes: vec![node(1.0, 5.0, -0.1, 0.0, 1.0)], lines: vec![] };
        assert!(matches!(build_from_dc_microgrid(&spec), Err(Error::Malformed(_))));
    }

    #[test]
    fn zero_resistance_is_malformed() {
        let spec = DcMicrogridSpec { nodes: vec![node(0.0, 5.0, 0.0, 0.0, 1.0)], lines: vec![] };
        assert!(matches!(build_from_dc_microgrid(&spec), Err(Error::Malformed(_))));
    }

    #[test]
    fn document_parsing() {
        let doc = r#"{"nodes":[{"filter_resistance":1,"source_voltage":3,"impedance_load":0,"current_load":0,"power_load":1},
                     {"filter_resistance":1,"source_voltage":3,"impedance_load":0,"current_load":0,"power_load":1,"filter_capacitance":1e-3}],
                     "lines":[{"from":1,"to":2,"resistance":1}]}"#;
        let spec: DcMicrogridSpec = serde_json::from_str(doc).unwrap();
        assert_eq!(spec.lines[0].to, 1);
        assert!(build_from_dc_microgrid(&spec).is_ok());
    }
}
