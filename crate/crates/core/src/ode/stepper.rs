//! Dormand-Prince 5(4) pair with FSAL and an I-controller, restricted to the
//! positive orthant: a step whose stages leave it is rejected and halved.

use crate::model::SystemData;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th order weights minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Attempt {
    Accepted { h_used: f64 },
    Rejected,
    OutOfDomain,
    Underflow,
}

/// Integrator state for `dx/dt = f(x)`.
#[derive(Debug, Clone)]
pub(crate) struct Stepper<'a> {
    sys: &'a SystemData,
    rel_tol: f64,
    abs_tol: f64,
    pub t: f64,
    pub x: Vec<f64>,
    /// `f(x)` at the current state.
    pub f: Vec<f64>,
    pub h: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    x_new: Vec<f64>,
}

impl<'a> Stepper<'a> {
    /// `x0` must be strictly positive.
    pub fn new(sys: &'a SystemData, x0: &[f64], rel_tol: f64, abs_tol: f64) -> Self {
        let n = sys.dim();
        let mut f = vec![0.0; n];
        sys.rhs_into(x0, &mut f);
        // initial step: a small fraction of the time for any coordinate to
        // move by its own magnitude
        let h = x0
            .iter()
            .zip(&f)
            .map(|(x, d)| if *d == 0.0 { f64::INFINITY } else { x / d.abs() })
            .fold(f64::INFINITY, f64::min);
        let h = if h.is_finite() { 1e-3 * h } else { 1e-3 };
        Stepper {
            sys,
            rel_tol,
            abs_tol,
            t: 0.0,
            x: x0.to_vec(),
            f,
            h,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            x_new: vec![0.0; n],
        }
    }

    fn stage(&mut self, h: f64, coeffs: &[(usize, f64)], out: usize) -> bool {
        for i in 0..self.x.len() {
            let mut acc = 0.0;
            for &(s, c) in coeffs {
                acc += c * if s == 0 { self.f[i] } else { self.k[s][i] };
            }
            self.tmp[i] = self.x[i] + h * acc;
        }
        if self.tmp.iter().any(|v| !(*v > 0.0)) {
            return false;
        }
        let mut k = std::mem::take(&mut self.k[out]);
        self.sys.rhs_into(&self.tmp, &mut k);
        self.k[out] = k;
        true
    }

    /// Computes the stages of a step of size `h` into `x_new` / `k[6]`.
    /// Returns the scaled error norm, or `None` if a stage left the domain.
    fn trial(&mut self, h: f64) -> Option<f64> {
        let ok = self.stage(h, &[(0, A21)], 1)
            && self.stage(h, &[(0, A31), (1, A32)], 2)
            && self.stage(h, &[(0, A41), (1, A42), (2, A43)], 3)
            && self.stage(h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4)
            && self.stage(h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5)
            && self.stage(h, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)], 6);
        if !ok {
            return None;
        }
        // stage 7 evaluates f at the 5th order solution (FSAL)
        self.x_new.copy_from_slice(&self.tmp);
        let mut err: f64 = 0.0;
        for i in 0..self.x.len() {
            let e = h
                * (E1 * self.f[i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let sc = self.abs_tol + self.rel_tol * self.x[i].abs().max(self.x_new[i].abs());
            err = err.max(e.abs() / sc);
        }
        Some(err)
    }

    /// Attempts one step, never passing `t_end`.
    pub fn attempt(&mut self, t_end: f64) -> Attempt {
        let remaining = t_end - self.t;
        if remaining <= 4.0 * f64::EPSILON * self.t.abs() {
            self.t = t_end;
            return Attempt::Accepted { h_used: 0.0 };
        }
        let clipped = self.h >= remaining;
        let h = if clipped { remaining } else { self.h };
        if h <= 1e-14 * self.t.abs() || h < 1e-300 {
            return Attempt::Underflow;
        }
        match self.trial(h) {
            None => {
                self.h = 0.5 * h;
                Attempt::OutOfDomain
            }
            Some(err) if err > 1.0 || !err.is_finite() => {
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                } else {
                    MIN_FACTOR
                };
                self.h = h * factor;
                Attempt::Rejected
            }
            Some(err) => {
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                self.t = if clipped { t_end } else { self.t + h };
                std::mem::swap(&mut self.x, &mut self.x_new);
                std::mem::swap(&mut self.f, &mut self.k[6]);
                // a step clipped at t_end keeps the previous proposal
                if !clipped || h * factor < self.h {
                    self.h = h * factor;
                }
                Attempt::Accepted { h_used: h }
            }
        }
    }

    /// State after a single step of size `h` from `(x, f)`, without touching
    /// the stepper's own state. `None` when a stage leaves the domain.
    pub fn probe(&self, x: &[f64], f: &[f64], h: f64) -> Option<Vec<f64>> {
        let mut scratch = Stepper {
            sys: self.sys,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            t: 0.0,
            x: x.to_vec(),
            f: f.to_vec(),
            h,
            k: self.k.clone(),
            tmp: self.tmp.clone(),
            x_new: self.x_new.clone(),
        };
        scratch.trial(h).map(|_| scratch.x_new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_matches_exponential() {
        // b = 0 turns the flow into dx/dt = -x + 1
        let sys = SystemData::scalar(1.0, 0.0, 1.0).unwrap();
        let mut st = Stepper::new(&sys, &[3.0], 1e-10, 1e-12);
        while st.t < 2.0 {
            assert!(matches!(
                st.attempt(2.0),
                Attempt::Accepted { .. } | Attempt::Rejected
            ));
        }
        assert_eq!(st.t, 2.0);
        let exact = 1.0 + 2.0 * (-2.0f64).exp();
        assert!((st.x[0] - exact).abs() < 1e-9, "{} vs {exact}", st.x[0]);
    }

    #[test]
    fn fifth_order_convergence() {
        // dx/dt = -x - 1/x + 3 has no closed form handy; compare step sizes instead
        let sys = SystemData::scalar(1.0, 1.0, 3.0).unwrap();
        let run = |h: f64| {
            let mut st = Stepper::new(&sys, &[4.0], 1.0, 1.0);
            let mut x = st.x.clone();
            let mut f = st.f.clone();
            let mut t = 0.0;
            while t < 1.0 - 1e-12 {
                x = st.probe(&x, &f, h).unwrap();
                sys.rhs_into(&x, &mut f);
                t += h;
            }
            st.x = x;
            st.x[0]
        };
        let fine = run(1e-3);
        let e1 = (run(0.1) - fine).abs();
        let e2 = (run(0.05) - fine).abs();
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }
}
