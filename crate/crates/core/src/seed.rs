//! Construction of a starting point inside the characteristic set from the
//! system data alone.
//!
//! A cone point `z > 0` with `A z > 0` is scaled by a factor `mu` large
//! enough that `mu z` clears every per-node inequality
//! `mu^2 (Az)_i - mu <w_i> - <-b_i> / z_i > 0`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{characteristic_margin, pos_part, SystemData};

pub const DEFAULT_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSeed {
    /// Cone point, `z > 0` and `A z > 0`.
    pub z: Vec<f64>,
    pub mu: f64,
    /// `mu * z`.
    pub x0: Vec<f64>,
    /// `min_i [(A x0)_i - <w_i> - <-b_i> / x0_i]`.
    pub margin: f64,
}

/// Solves `A z = 1`.
///
/// For a symmetric positive definite `A` with non-positive off-diagonal
/// entries the inverse is entrywise nonnegative with a positive diagonal,
/// so the solution is strictly positive and `A z = 1 > 0`.
pub fn find_positive_cone_point(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| Error::ConePoint("A is not positive definite".into()))?;
    let z = chol.solve(&DVector::from_element(n, 1.0));
    if let Some(i) = (0..n).find(|&i| !(z[i] > 0.0)) {
        return Err(Error::ConePoint(format!("z[{i}] = {} is not positive", z[i])));
    }
    let az = a * &z;
    if let Some(i) = (0..n).find(|&i| !(az[i] > 0.0)) {
        return Err(Error::ConePoint(format!("(Az)[{i}] = {} is not positive", az[i])));
    }
    Ok(z.iter().copied().collect())
}

/// Per-node lower bound on the scaling factor:
/// `(<w_i> + sqrt(<w_i>^2 + 4 (Az)_i <-b_i> / z_i)) / (2 (Az)_i)`.
pub fn scaling_bounds(sys: &SystemData, z: &[f64]) -> Vec<f64> {
    let az = sys.a() * DVector::from_column_slice(z);
    (0..sys.dim())
        .map(|i| {
            let wp = pos_part(sys.w()[i]);
            let bm = pos_part(-sys.b()[i]);
            if bm == 0.0 {
                wp / az[i]
            } else {
                (wp + (wp * wp + 4.0 * az[i] * bm / z[i]).sqrt()) / (2.0 * az[i])
            }
        })
        .collect()
}

/// Seed `x0 = mu z` with `mu = safety * max_i bound_i` (or `mu = safety`
/// when every bound vanishes). `sys` must already be validated.
pub fn build_characteristic_seed(sys: &SystemData, safety: f64) -> Result<CharacteristicSeed> {
    if !(safety > 1.0) || !safety.is_finite() {
        return Err(Error::SeedMargin { margin: f64::NAN, safety });
    }
    let z = find_positive_cone_point(sys.a())?;
    let bound = scaling_bounds(sys, &z)
        .into_iter()
        .fold(0.0_f64, f64::max);
    let mu = if bound > 0.0 { safety * bound } else { safety };
    let x0: Vec<f64> = z.iter().map(|zi| mu * zi).collect();
    let margin = characteristic_margin(sys, &x0)?;
    if !(margin > 0.0) {
        return Err(Error::SeedMargin { margin, safety });
    }
    Ok(CharacteristicSeed { z, mu, x0, margin })
}
