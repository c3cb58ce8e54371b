//! Canonical system `A x + stack(b_i / x_i) = w` and its associated flow
//! `dx/dt = f(x) = -A x - stack(b_i / x_i) + w` on the positive orthant.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on `A`.
pub const SYM_TOL: f64 = 1e-10;

/// `<a> = max(a, 0)`.
#[inline]
pub fn pos_part(a: f64) -> f64 {
    a.max(0.0)
}

/// The triple `(A, b, w)`.
///
/// Construction only checks shapes and finiteness. The structural
/// assumptions on `A` are checked by [`validate_system`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct SystemData {
    a: DMatrix<f64>,
    b: DVector<f64>,
    w: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    w: Vec<f64>,
}

impl TryFrom<RawSystem> for SystemData {
    type Error = Error;

    fn try_from(raw: RawSystem) -> Result<Self> {
        if raw.a.len() != raw.n {
            return Err(Error::Dimension(format!(
                "A has {} rows, n = {}",
                raw.a.len(),
                raw.n
            )));
        }
        SystemData::from_rows(&raw.a, raw.b, raw.w)
    }
}

impl From<SystemData> for RawSystem {
    fn from(sys: SystemData) -> Self {
        RawSystem {
            n: sys.dim(),
            a: sys.a_rows(),
            b: sys.b.iter().copied().collect(),
            w: sys.w.iter().copied().collect(),
        }
    }
}

impl SystemData {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, w: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::Dimension("empty system".into()));
        }
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", n, a.ncols())));
        }
        if b.len() != n || w.len() != n {
            return Err(Error::Dimension(format!(
                "n = {n} but b has {} and w has {} entries",
                b.len(),
                w.len()
            )));
        }
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("A"));
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("b"));
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("w"));
        }
        Ok(SystemData { a, b, w })
    }

    /// Builds a system from row-major nested vectors.
    pub fn from_rows(a: &[Vec<f64>], b: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = a.len();
        if let Some((i, row)) = a.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {i} of A has {} entries, expected {n}",
                row.len()
            )));
        }
        let a = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        SystemData::new(a, DVector::from_vec(b), DVector::from_vec(w))
    }

    /// Scalar system `a x + b / x = w`.
    pub fn scalar(a: f64, b: f64, w: f64) -> Result<Self> {
        SystemData::from_rows(&[vec![a]], vec![b], vec![w])
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn a_rows(&self) -> Vec<Vec<f64>> {
        self.a
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Copy of this system with the power vector replaced.
    pub fn with_b(&self, b: DVector<f64>) -> Result<Self> {
        SystemData::new(self.a.clone(), b, self.w.clone())
    }

    /// Replaces `A` by `(A + A^T) / 2`.
    pub fn symmetrized(mut self) -> Self {
        let t = self.a.transpose();
        self.a = (&self.a + t) * 0.5;
        self
    }

    /// `max(1, ||w||_inf)`, the reference magnitude for residual tolerances.
    pub fn residual_scale(&self) -> f64 {
        self.w.amax().max(1.0)
    }

    /// Runs [`validate_system`] and returns the symmetrized system if it
    /// passes.
    pub fn validated(&self) -> Result<(SystemData, ValidationReport)> {
        let report = validate_system(self);
        if report.passed {
            Ok((self.clone().symmetrized(), report))
        } else {
            Err(Error::Invalid(report))
        }
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "state has {} entries, n = {}",
                x.len(),
                self.dim()
            )));
        }
        match x.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            Some((index, &value)) => Err(Error::Domain { index, value }),
            None => Ok(()),
        }
    }

    /// `f(x)` without argument checks. Callers guarantee `x > 0`.
    pub(crate) fn rhs_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.w[i] - self.b[i] / x[i];
            for (j, xj) in x.iter().enumerate() {
                acc -= self.a[(i, j)] * xj;
            }
            out[i] = acc;
        }
    }

    /// Magnitude of the terms summed in `f_i(x)`; bounds the rounding error
    /// of the evaluation.
    pub fn rhs_term_scale(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let ax: f64 = (0..n).map(|j| (self.a[(i, j)] * x[j]).abs()).sum();
                ax + (self.b[i] / x[i]).abs() + self.w[i].abs()
            })
            .collect()
    }
}

/// One failed rule of [`validate_system`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
    /// Nodes with `b_i = 0`; 0-based in memory, 1-based when serialized.
    #[serde(default, with = "one_based_list")]
    pub zero_power_nodes: Vec<usize>,
}

mod one_based_list {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|i| i + 1))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        Vec::<usize>::deserialize(d)?
            .into_iter()
            .map(|i| i.checked_sub(1).ok_or_else(|| de::Error::custom("node numbers start at 1")))
            .collect()
    }
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        if self.passed {
            return "passed".into();
        }
        self.violations
            .iter()
            .map(|v| format!("{}: {}", v.rule, v.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())
    }
}

pub mod rules {
    pub const SYMMETRIC: &str = "symmetric";
    pub const POSITIVE_DEFINITE: &str = "positive_definite";
    pub const OFF_DIAGONAL_SIGN: &str = "off_diagonal_nonpositive";
}

/// Checks `A` symmetric, positive definite and with non-positive
/// off-diagonal entries; flags zero power coefficients as warnings.
pub fn validate_system(sys: &SystemData) -> ValidationReport {
    let a = sys.a();
    let n = sys.dim();
    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    let amax = a.amax();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYM_TOL * amax {
        violations.push(Violation {
            rule: rules::SYMMETRIC.into(),
            detail: format!("max |A_ij - A_ji| = {asym:e} exceeds {SYM_TOL:e} * {amax:e}"),
        });
    }

    let mut positive = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] > 0.0 {
                positive.push(format!("A[{},{}] = {}", i + 1, j + 1, a[(i, j)]));
            }
        }
    }
    if !positive.is_empty() {
        violations.push(Violation {
            rule: rules::OFF_DIAGONAL_SIGN.into(),
            detail: positive.join(", "),
        });
    }

    let sym = (a + a.transpose()) * 0.5;
    if Cholesky::new(sym).is_none() {
        violations.push(Violation {
            rule: rules::POSITIVE_DEFINITE.into(),
            detail: "Cholesky factorization hit a non-positive pivot".into(),
        });
    }

    let zero_power_nodes: Vec<usize> = (0..n).filter(|&i| sys.b()[i] == 0.0).collect();
    if !zero_power_nodes.is_empty() {
        let list: Vec<String> = zero_power_nodes.iter().map(|i| (i + 1).to_string()).collect();
        warnings.push(format!(
            "b_i = 0 at node(s) {}; results carry a zero-power deviation flag",
            list.join(", ")
        ));
    }

    ValidationReport {
        passed: violations.is_empty(),
        violations,
        warnings,
        zero_power_nodes,
    }
}

/// `f(x) = -A x - stack(b_i / x_i) + w`.
pub fn eval_rhs(sys: &SystemData, x: &[f64]) -> Result<Vec<f64>> {
    sys.check_state(x)?;
    let mut out = vec![0.0; sys.dim()];
    sys.rhs_into(x, &mut out);
    Ok(out)
}

/// `grad f(x) = -A + diag(b_i / x_i^2)`.
pub fn eval_jacobian(sys: &SystemData, x: &[f64]) -> Result<DMatrix<f64>> {
    sys.check_state(x)?;
    let mut jac = -sys.a().clone();
    for (i, xi) in x.iter().enumerate() {
        jac[(i, i)] += sys.b()[i] / (xi * xi);
    }
    Ok(jac)
}

/// `min_i [(A x)_i - <w_i> - <-b_i> / x_i]`; positive iff `x` lies in the
/// characteristic set.
pub fn characteristic_margin(sys: &SystemData, x: &[f64]) -> Result<f64> {
    sys.check_state(x)?;
    let xv = DVector::from_column_slice(x);
    let ax = sys.a() * xv;
    Ok((0..sys.dim())
        .map(|i| ax[i] - pos_part(sys.w()[i]) - pos_part(-sys.b()[i]) / x[i])
        .fold(f64::INFINITY, f64::min))
}

/// Membership in the characteristic set with a strictness margin.
/// Non-positive or mis-sized states are not members.
pub fn in_characteristic_set(sys: &SystemData, x: &[f64], margin: f64) -> bool {
    characteristic_margin(sys, x).is_ok_and(|m| m > margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym2() -> SystemData {
        SystemData::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]], vec![1.0, 1.0], vec![3.0, 3.0])
            .unwrap()
    }

    fn rlc(b1: f64, b2: f64) -> SystemData {
        let (r1, r2, e) = (0.04, 0.06, 24.0);
        SystemData::from_rows(
            &[vec![1.0 / r2 + 1.0 / r1, -1.0 / r2], vec![-1.0 / r2, 1.0 / r2]],
            vec![b1, b2],
            vec![e / r1, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn validates_symmetric_m_matrix() {
        let r = validate_system(&sym2());
        assert!(r.passed, "{r}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn rejects_singular_laplacian() {
        let s = SystemData::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]], vec![1.0, 1.0], vec![0.0, 0.0])
            .unwrap();
        let r = validate_system(&s);
        assert!(!r.passed);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, rules::POSITIVE_DEFINITE);
    }

    #[test]
    fn rejects_positive_off_diagonal() {
        let s = SystemData::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], vec![1.0, 1.0], vec![0.0, 0.0])
            .unwrap();
        let r = validate_system(&s);
        assert!(!r.passed);
        assert!(r.violations.iter().any(|v| v.rule == rules::OFF_DIAGONAL_SIGN));
    }

    #[test]
    fn rejects_asymmetry_beyond_tolerance() {
        let s = SystemData::from_rows(&[vec![2.0, -1.0], vec![-1.001, 2.0]], vec![1.0, 1.0], vec![0.0, 0.0])
            .unwrap();
        let r = validate_system(&s);
        assert!(r.violations.iter().any(|v| v.rule == rules::SYMMETRIC));

        let tiny = SystemData::from_rows(
            &[vec![2.0, -1.0], vec![-1.0 - 1e-12, 2.0]],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let (v, r) = tiny.validated().unwrap();
        assert!(r.passed);
        assert_eq!(v.a()[(0, 1)], v.a()[(1, 0)]);
    }

    #[test]
    fn zero_power_is_a_warning() {
        let s = SystemData::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]], vec![0.0, 1.0], vec![3.0, 3.0])
            .unwrap();
        let r = validate_system(&s);
        assert!(r.passed);
        assert_eq!(r.zero_power_nodes, vec![0]);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn construction_rejects_bad_shapes_and_nan() {
        assert!(matches!(
            SystemData::from_rows(&[vec![1.0, 0.0]], vec![1.0], vec![1.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            SystemData::from_rows(&[vec![1.0]], vec![1.0, 2.0], vec![1.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            SystemData::scalar(f64::NAN, 1.0, 1.0),
            Err(Error::NonFinite("A"))
        ));
        assert!(matches!(
            SystemData::scalar(1.0, 1.0, f64::INFINITY),
            Err(Error::NonFinite("w"))
        ));
    }

    #[test]
    fn rhs_examples() {
        let s = SystemData::scalar(1.0, -1.0, 0.0).unwrap();
        assert_close!(eval_rhs(&s, &[1.0]).unwrap()[0], 0.0, 1e-15);

        assert_eq!(eval_rhs(&sym2(), &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);

        let f = eval_rhs(&rlc(500.0, 450.0), &[22.24, 20.95]).unwrap();
        assert!(f.iter().all(|v| v.abs() <= 0.1), "{f:?}");
    }

    #[test]
    fn rhs_domain_fault() {
        assert!(matches!(
            eval_rhs(&sym2(), &[1.0, 0.0]),
            Err(Error::Domain { index: 1, .. })
        ));
        assert!(matches!(
            eval_jacobian(&sym2(), &[-1.0, 1.0]),
            Err(Error::Domain { index: 0, .. })
        ));
        assert!(eval_rhs(&sym2(), &[1.0]).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let j = eval_jacobian(&sym2(), &[1.0, 1.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]));

        let s = SystemData::scalar(1.0, 2.0, 0.0).unwrap();
        assert_close!(eval_jacobian(&s, &[2.0]).unwrap()[(0, 0)], -0.5, 1e-15);
    }

    #[test]
    fn characteristic_set_examples() {
        let s = rlc(500.0, 450.0);
        assert!(in_characteristic_set(&s, &[25.01, 25.77], 0.0));
        assert!(!in_characteristic_set(&s, &[10.0, 10.0], 0.0));
        assert!(in_characteristic_set(&s, &[50.4, 88.2], 0.0));
        assert!(!in_characteristic_set(&s, &[50.4, -1.0], 0.0));
    }

    #[test]
    fn serde_round_trip_and_strictness() {
        let s = sym2();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SystemData>(&text).unwrap(), s);

        let extra = r#"{"n":1,"A":[[1.0]],"b":[1.0],"w":[1.0],"c":0}"#;
        assert!(serde_json::from_str::<SystemData>(extra).is_err());
        let wrong_n = r#"{"n":2,"A":[[1.0]],"b":[1.0],"w":[1.0]}"#;
        assert!(serde_json::from_str::<SystemData>(wrong_n).is_err());
        let nan = r#"{"n":1,"A":[[NaN]],"b":[1.0],"w":[1.0]}"#;
        assert!(serde_json::from_str::<SystemData>(nan).is_err());
        let overflow = r#"{"n":1,"A":[[1e999]],"b":[1.0],"w":[1.0]}"#;
        assert!(serde_json::from_str::<SystemData>(overflow).is_err());
    }
}
