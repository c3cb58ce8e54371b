use nalgebra::DVector;

use super::integrate::inf_norm;
use crate::error::{Error, Result};
use crate::model::{eval_jacobian, eval_rhs, SystemData};

/// Residual target for a refined equilibrium, relative to
/// [`SystemData::residual_scale`].
pub const REFINE_TOL: f64 = 1e-9;

const MAX_ITER: usize = 100;
const MAX_BACKTRACK: usize = 50;

/// Damped Newton polish of `f(x) = 0`.
///
/// Iterates until the residual stops decreasing, so that the result sits at
/// the rounding floor rather than just inside [`REFINE_TOL`]. Steps are
/// shortened to keep every iterate strictly positive.
pub fn refine_equilibrium(sys: &SystemData, x_approx: &[f64]) -> Result<Vec<f64>> {
    let tol = REFINE_TOL * sys.residual_scale();
    let mut x = x_approx.to_vec();
    let mut r = eval_rhs(sys, &x)?;
    let mut rn = inf_norm(&r);

    for iterations in 0..MAX_ITER {
        if rn == 0.0 {
            return Ok(x);
        }
        let jac = eval_jacobian(sys, &x)?;
        let rhs = -DVector::from_column_slice(&r);
        let Some(dx) = jac.lu().solve(&rhs) else {
            return if rn <= tol {
                Ok(x)
            } else {
                Err(Error::SingularJacobian)
            };
        };
        if dx.iter().any(|v| !v.is_finite()) {
            return if rn <= tol {
                Ok(x)
            } else {
                Err(Error::SingularJacobian)
            };
        }

        let mut alpha: f64 = 1.0;
        for (xi, di) in x.iter().zip(dx.iter()) {
            if *di < 0.0 {
                alpha = alpha.min(0.9 * xi / -di);
            }
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + alpha * d).collect();
            if let Ok(rt) = eval_rhs(sys, &trial) {
                let rtn = inf_norm(&rt);
                if rtn < rn {
                    accepted = Some((trial, rt, rtn));
                    break;
                }
            }
            alpha *= 0.5;
        }

        match accepted {
            Some((xt, rt, rtn)) => {
                x = xt;
                r = rt;
                rn = rtn;
            }
            None if rn <= tol => return Ok(x),
            None => {
                return Err(Error::NewtonStalled { residual: rn, iterations });
            }
        }
    }
    if rn <= tol {
        Ok(x)
    } else {
        Err(Error::NewtonStalled { residual: rn, iterations: MAX_ITER })
    }
}
