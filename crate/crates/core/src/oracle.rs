//! Brute-force equilibrium enumeration for one- and two-node systems.
//!
//! Deliberately shares no numerics with the integrator or the Newton polish
//! in [`crate::ode`]: roots come from the quadratic formula (`n = 1`) or a
//! log-grid scan with a hand-written 2x2 Newton (`n = 2`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemData;
use crate::seed::{build_characteristic_seed, DEFAULT_SAFETY};

pub const DEFAULT_GRID_DENSITY: usize = 400;

const RESIDUAL_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-6;

/// Fig. 1 behaviors of `x' = -a x - b/x + w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarCase {
    /// `b < 0`: one globally attractive equilibrium.
    A,
    /// No equilibria.
    B,
    /// One non-hyperbolic equilibrium (double root).
    C,
    /// Two equilibria, the larger one stable.
    D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub x: Vec<f64>,
    pub hurwitz: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumList {
    /// Sorted by descending first coordinate.
    pub points: Vec<EquilibriumPoint>,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_density: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalar_case: Option<ScalarCase>,
}

impl EquilibriumList {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The point dominating all others componentwise, if one does.
    pub fn dominant(&self) -> Option<&EquilibriumPoint> {
        self.points.iter().find(|p| {
            self.points
                .iter()
                .all(|q| q.x.iter().zip(&p.x).all(|(qi, pi)| *qi <= *pi * (1.0 + DEDUP_TOL)))
        })
    }
}

/// Positive roots of `a x^2 - w x + b = 0`.
pub fn solve_scalar(a: f64, b: f64, w: f64) -> Result<EquilibriumList> {
    if !(a > 0.0) || !a.is_finite() || !b.is_finite() || !w.is_finite() || b == 0.0 {
        return Err(Error::Options(format!("solve_scalar needs a > 0 and b != 0, got a = {a}, b = {b}")));
    }
    let point = |x: f64| EquilibriumPoint { x: vec![x], hurwitz: -a + b / (x * x) < 0.0 };
    let disc = w * w - 4.0 * a * b;
    let (points, case) = if b < 0.0 {
        // Roots have opposite signs; pick the positive one without cancellation.
        let x = (w + disc.sqrt()) / (2.0 * a);
        let x = if w >= 0.0 { x } else { 2.0 * b / (w - disc.sqrt()) };
        (vec![point(x)], ScalarCase::A)
    } else if w <= 0.0 || disc < 0.0 {
        (vec![], ScalarCase::B)
    } else if disc == 0.0 {
        let x = w / (2.0 * a);
        (vec![EquilibriumPoint { x: vec![x], hurwitz: false }], ScalarCase::C)
    } else {
        let hi = (w + disc.sqrt()) / (2.0 * a);
        let lo = b / (a * hi);
        (vec![point(hi), point(lo)], ScalarCase::D)
    };
    Ok(EquilibriumList { points, exhaustive: true, grid_density: None, scalar_case: Some(case) })
}

/// Scans `[eps, x0_1] x [eps, x0_2]` on a log grid and runs Newton from every
/// cell where both residual components change sign.
pub fn enumerate_equilibria_2d(sys: &SystemData, grid_density: usize) -> Result<EquilibriumList> {
    if sys.dim() != 2 {
        return Err(Error::Dimension(format!("2-node oracle given n = {}", sys.dim())));
    }
    if grid_density < 2 {
        return Err(Error::Options("grid density must be at least 2".into()));
    }
    let (sys, _) = sys.validated()?;
    let seed = build_characteristic_seed(&sys, DEFAULT_SAFETY)?;
    let p = Params::new(&sys);

    let c = seed.x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let big_w = (0..2)
        .map(|i| p.w[i].abs() + c * (p.a[i][0].abs() + p.a[i][1].abs()))
        .fold(0.0_f64, f64::max);
    let min_b = p.b[0].abs().min(p.b[1].abs());
    let hi = [seed.x0[0] * 1.01, seed.x0[1] * 1.01];
    let lo = if min_b > 0.0 {
        0.5 * min_b / (2.0 * big_w)
    } else {
        1e-9 * hi[0].min(hi[1])
    };

    let axis = |h: f64| -> Vec<f64> {
        let (l0, l1) = (lo.ln(), h.ln());
        (0..=grid_density)
            .map(|k| (l0 + (l1 - l0) * k as f64 / grid_density as f64).exp())
            .collect()
    };
    let (g0, g1) = (axis(hi[0]), axis(hi[1]));

    let values: Vec<[f64; 2]> = (0..g0.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let g1 = &g1;
            let p = &p;
            let x0 = g0[i];
            g1.iter().map(move |&x1| p.rhs([x0, x1]))
        })
        .collect();
    let at = |i: usize, j: usize| values[i * g1.len() + j];

    let candidates: Vec<[f64; 2]> = (0..grid_density)
        .into_par_iter()
        .flat_map_iter(|i| {
            let p = &p;
            let (g0, g1) = (&g0, &g1);
            (0..grid_density).filter_map(move |j| {
                let corners = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
                let changes = |k: usize| {
                    let lo = corners.iter().any(|c| c[k] <= 0.0);
                    let hi = corners.iter().any(|c| c[k] >= 0.0);
                    lo && hi
                };
                if !(changes(0) && changes(1)) {
                    return None;
                }
                let start = [(g0[i] * g0[i + 1]).sqrt(), (g1[j] * g1[j + 1]).sqrt()];
                p.newton(start)
            })
        })
        .collect();

    let mut points: Vec<[f64; 2]> = Vec::new();
    for x in candidates {
        let dup = points.iter().any(|q| {
            let scale = q[0].abs().max(q[1].abs()).max(1.0);
            (q[0] - x[0]).abs().max((q[1] - x[1]).abs()) <= DEDUP_TOL * scale
        });
        if !dup {
            points.push(x);
        }
    }
    points.sort_by(|u, v| v[0].total_cmp(&u[0]).then(v[1].total_cmp(&u[1])));
    Ok(EquilibriumList {
        points: points
            .into_iter()
            .map(|x| EquilibriumPoint { hurwitz: p.hurwitz(x), x: x.to_vec() })
            .collect(),
        exhaustive: false,
        grid_density: Some(grid_density),
        scalar_case: None,
    })
}

/// Dispatches on dimension: closed form for `n = 1`, grid scan for `n = 2`.
pub fn enumerate(sys: &SystemData, grid_density: usize) -> Result<EquilibriumList> {
    match sys.dim() {
        1 => {
            let (sys, _) = sys.validated()?;
            solve_scalar(sys.a()[(0, 0)], sys.b()[0], sys.w()[0])
        }
        2 => enumerate_equilibria_2d(sys, grid_density),
        n => Err(Error::Dimension(format!("the oracle handles n <= 2, got n = {n}"))),
    }
}

struct Params {
    a: [[f64; 2]; 2],
    b: [f64; 2],
    w: [f64; 2],
    tol: f64,
}

impl Params {
    fn new(sys: &SystemData) -> Self {
        let m = sys.a();
        Params {
            a: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            b: [sys.b()[0], sys.b()[1]],
            w: [sys.w()[0], sys.w()[1]],
            tol: RESIDUAL_TOL * sys.residual_scale(),
        }
    }

    fn rhs(&self, x: [f64; 2]) -> [f64; 2] {
        let f = |i: usize| -self.a[i][0] * x[0] - self.a[i][1] * x[1] - self.b[i] / x[i] + self.w[i];
        [f(0), f(1)]
    }

    fn jac(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        [
            [-self.a[0][0] + self.b[0] / (x[0] * x[0]), -self.a[0][1]],
            [-self.a[1][0], -self.a[1][1] + self.b[1] / (x[1] * x[1])],
        ]
    }

    fn hurwitz(&self, x: [f64; 2]) -> bool {
        let j = self.jac(x);
        let half_tr = 0.5 * (j[0][0] + j[1][1]);
        let half_diff = 0.5 * (j[0][0] - j[1][1]);
        half_tr + half_diff.hypot(j[0][1]) < 0.0
    }

    fn newton(&self, mut x: [f64; 2]) -> Option<[f64; 2]> {
        let norm = |f: [f64; 2]| f[0].abs().max(f[1].abs());
        let mut f = self.rhs(x);
        for _ in 0..200 {
            let j = self.jac(x);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let d = [
                (-f[0] * j[1][1] + f[1] * j[0][1]) / det,
                (-f[1] * j[0][0] + f[0] * j[1][0]) / det,
            ];
            let mut t = 1.0_f64;
            for k in 0..2 {
                if d[k] < 0.0 {
                    t = t.min(0.9 * x[k] / -d[k]);
                }
            }
            let mut next = None;
            for _ in 0..60 {
                let trial = [x[0] + t * d[0], x[1] + t * d[1]];
                let ft = self.rhs(trial);
                if norm(ft) < norm(f) {
                    next = Some((trial, ft));
                    break;
                }
                t *= 0.5;
            }
            match next {
                Some((xn, fnext)) => {
                    x = xn;
                    f = fnext;
                }
                None => break,
            }
        }
        (norm(f) <= self.tol && x[0] > 0.0 && x[1] > 0.0).then_some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_cases() {
        let a = solve_scalar(1.0, -1.0, 0.0).unwrap();
        assert_eq!(a.scalar_case, Some(ScalarCase::A));
        assert_eq!(a.points.len(), 1);
        assert_close!(a.points[0].x[0], 1.0, 1e-15);
        assert!(a.points[0].hurwitz);

        let b = solve_scalar(1.0, 1.0, 0.0).unwrap();
        assert_eq!(b.scalar_case, Some(ScalarCase::B));
        assert!(b.is_empty());

        let c = solve_scalar(1.0, 1.0, 2.0).unwrap();
        assert_eq!(c.scalar_case, Some(ScalarCase::C));
        assert_eq!(c.points[0].x, vec![1.0]);
        assert!(!c.points[0].hurwitz);

        let d = solve_scalar(1.0, 2.0, 3.0).unwrap();
        assert_eq!(d.scalar_case, Some(ScalarCase::D));
        assert_close!(d.points[0].x[0], 2.0, 1e-15);
        assert_close!(d.points[1].x[0], 1.0, 1e-15);
        assert!(d.points[0].hurwitz && !d.points[1].hurwitz);
        assert!(d.exhaustive);
    }

    #[test]
    fn scalar_negative_w_with_negative_b() {
        // x^2 + x - 2 = 0
        let l = solve_scalar(1.0, -2.0, -1.0).unwrap();
        assert_close!(l.points[0].x[0], 1.0, 1e-15);
    }

    #[test]
    fn scalar_rejects_zero_b() {
        assert!(solve_scalar(1.0, 0.0, 1.0).is_err());
        assert!(solve_scalar(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_two_node() {
        let s = SystemData::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]], vec![1.0, 1.0], vec![3.0, 3.0])
            .unwrap();
        let l = enumerate_equilibria_2d(&s, DEFAULT_GRID_DENSITY).unwrap();
        let exact = (3.0 + 5f64.sqrt()) / 2.0;
        let stable: Vec<_> = l.points.iter().filter(|p| p.hurwitz).collect();
        assert_eq!(stable.len(), 1);
        assert_close!(stable[0].x[0], exact, 1e-12);
        assert_close!(stable[0].x[1], exact, 1e-12);
        assert!(!l.exhaustive);
        assert_eq!(l.dominant().unwrap().x, stable[0].x);
    }

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
    fn rlc_points() {
        let l = enumerate_equilibria_2d(&rlc(500.0, 450.0), DEFAULT_GRID_DENSITY).unwrap();
        let top = l.dominant().unwrap();
        assert!((top.x[0] - 22.24).abs() < 0.01 && (top.x[1] - 20.95).abs() < 0.01, "{:?}", top.x);
        assert!(top.hurwitz);
        let none = enumerate_equilibria_2d(&rlc(3000.0, 1000.0), DEFAULT_GRID_DENSITY).unwrap();
        assert!(none.is_empty(), "{none:?}");
    }

    #[test]
    fn dimension_guard() {
        let s = SystemData::from_rows(
            &[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]],
            vec![1.0; 3],
            vec![3.0; 3],
        )
        .unwrap();
        assert!(matches!(enumerate(&s, 10), Err(Error::Dimension(_))));
    }

    #[test]
    fn grid_is_deterministic() {
        let s = rlc(500.0, 450.0);
        assert_eq!(enumerate(&s, 100).unwrap(), enumerate(&s, 100).unwrap());
    }
}
