//! Feasibility maps over a two-coordinate slice of `b`.

use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemData;
use crate::ode::{classify, ClassifyOptions, Outcome};

/// Relative width in `b` at which boundary bisection stops.
pub const BOUNDARY_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * (k as f64 / last)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemData,
    /// 0-based.
    pub axis_i: usize,
    pub axis_j: usize,
    pub range_i: AxisRange,
    pub range_j: AxisRange,
}

impl SweepSpec {
    pub fn check(&self) -> Result<()> {
        let n = self.base.dim();
        if self.axis_i >= n || self.axis_j >= n {
            return Err(Error::Sweep(format!("axis index out of range for n = {n}")));
        }
        if self.axis_i == self.axis_j {
            return Err(Error::Sweep("sweep axes must differ".into()));
        }
        for r in [self.range_i, self.range_j] {
            if !r.lo.is_finite() || !r.hi.is_finite() {
                return Err(Error::Sweep("range bounds must be finite".into()));
            }
            if r.steps < 2 {
                return Err(Error::Sweep(format!("need at least 2 steps per axis, got {}", r.steps)));
            }
        }
        Ok(())
    }

    fn system_at(&self, bi: f64, bj: f64) -> Result<SystemData> {
        let mut b: DVector<f64> = self.base.b().clone();
        b[self.axis_i] = bi;
        b[self.axis_j] = bj;
        self.base.with_b(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Dominant,
    None,
    Inconclusive,
}

impl CellKind {
    pub fn label(self) -> &'static str {
        match self {
            CellKind::Dominant => "dominant",
            CellKind::None => "none",
            CellKind::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub b_i: f64,
    pub b_j: f64,
    pub kind: CellKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub b_i: f64,
    pub b_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub axis_i: usize,
    pub axis_j: usize,
    pub n: usize,
    pub values_i: Vec<f64>,
    pub values_j: Vec<f64>,
    /// Row-major: `cells[p * values_j.len() + q]` holds `(values_i[p], values_j[q])`.
    pub cells: Vec<Cell>,
    /// `(p, q)` of dominant cells with a `none` neighbour.
    pub boundary: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refined_boundary: Vec<BoundaryPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RegionMap {
    pub fn cell(&self, p: usize, q: usize) -> &Cell {
        &self.cells[p * self.values_j.len() + q]
    }

    /// Cell closest to `(b_i, b_j)`.
    pub fn nearest(&self, b_i: f64, b_j: f64) -> &Cell {
        let pick = |vals: &[f64], v: f64| {
            (0..vals.len())
                .min_by(|&a, &b| (vals[a] - v).abs().total_cmp(&(vals[b] - v).abs()))
                .unwrap_or(0)
        };
        self.cell(pick(&self.values_i, b_i), pick(&self.values_j, b_j))
    }

    /// Columns `b<i>,b<j>,outcome,x1..xn`, node numbers 1-based; state
    /// columns are empty unless the cell is dominant.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "b{},b{},outcome", self.axis_i + 1, self.axis_j + 1)?;
        for k in 1..=self.n {
            write!(out, ",x{k}")?;
        }
        writeln!(out)?;
        for c in &self.cells {
            write!(out, "{},{},{}", c.b_i, c.b_j, c.kind.label())?;
            match &c.x_max {
                Some(x) => {
                    for v in x {
                        write!(out, ",{v}")?;
                    }
                }
                None => {
                    for _ in 0..self.n {
                        write!(out, ",")?;
                    }
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

fn classify_cell(spec: &SweepSpec, opts: &ClassifyOptions, bi: f64, bj: f64) -> Cell {
    let outcome = spec.system_at(bi, bj).and_then(|s| classify(&s, opts));
    let (kind, x_max) = match outcome.map(|a| a.outcome) {
        Ok(Outcome::Dominant { x_max, .. }) => (CellKind::Dominant, Some(x_max)),
        Ok(Outcome::NoEquilibrium { .. }) => (CellKind::None, None),
        Ok(Outcome::Inconclusive { .. }) | Err(_) => (CellKind::Inconclusive, None),
    };
    Cell { b_i: bi, b_j: bj, kind, x_max }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Sweep(e.to_string()))
}

/// Classifies every grid cell independently on `workers` threads. Cell
/// failures become `inconclusive`; the sweep itself only fails on a bad spec.
pub fn sweep(spec: &SweepSpec, opts: &ClassifyOptions, workers: usize, refine: bool) -> Result<RegionMap> {
    spec.check()?;
    opts.integration.check()?;
    let (values_i, values_j) = (spec.range_i.values(), spec.range_j.values());
    let (ni, nj) = (values_i.len(), values_j.len());

    let mut warnings = Vec::new();
    let base_b = spec.base.b();
    let zero_elsewhere = (0..base_b.len())
        .filter(|&k| k != spec.axis_i && k != spec.axis_j && base_b[k] == 0.0)
        .count();
    if zero_elsewhere > 0 {
        warnings.push(format!("{zero_elsewhere} fixed node(s) have b = 0"));
    }
    for (name, vals, axis) in [("i", &values_i, spec.axis_i), ("j", &values_j, spec.axis_j)] {
        if vals.contains(&0.0) {
            warnings.push(format!("axis {name} (b{}) passes through b = 0", axis + 1));
        }
    }

    let pool = pool(workers)?;
    let cells: Vec<Cell> = pool.install(|| {
        (0..ni * nj)
            .into_par_iter()
            .map(|k| classify_cell(spec, opts, values_i[k / nj], values_j[k % nj]))
            .collect()
    });

    let at = |p: usize, q: usize| cells[p * nj + q].kind;
    let mut boundary = Vec::new();
    let mut pairs = Vec::new();
    for p in 0..ni {
        for q in 0..nj {
            if at(p, q) != CellKind::Dominant {
                continue;
            }
            let mut near = false;
            let neighbours = [
                (p.wrapping_sub(1), q),
                (p + 1, q),
                (p, q.wrapping_sub(1)),
                (p, q + 1),
            ];
            for (pp, qq) in neighbours {
                if pp < ni && qq < nj && at(pp, qq) == CellKind::None {
                    near = true;
                    pairs.push(((p, q), (pp, qq)));
                }
            }
            if near {
                boundary.push((p, q));
            }
        }
    }

    let refined_boundary = if refine {
        pool.install(|| {
            pairs
                .par_iter()
                .map(|&((p, q), (pp, qq))| {
                    let cell = |p: usize, q: usize| &cells[p * nj + q];
                    let (a, b) = (cell(p, q), cell(pp, qq));
                    bisect(spec, opts, (a.b_i, a.b_j), (b.b_i, b.b_j))
                })
                .collect()
        })
    } else {
        Vec::new()
    };

    Ok(RegionMap {
        axis_i: spec.axis_i,
        axis_j: spec.axis_j,
        n: spec.base.dim(),
        values_i,
        values_j,
        cells,
        boundary,
        refined_boundary,
        warnings,
    })
}

/// Classifies `samples` equally spaced points on the segment from `from` to
/// `to` in the `(b_i, b_j)` plane.
pub fn sweep_segment(
    spec: &SweepSpec,
    opts: &ClassifyOptions,
    from: (f64, f64),
    to: (f64, f64),
    samples: usize,
) -> Result<Vec<Cell>> {
    spec.check()?;
    if samples < 2 {
        return Err(Error::Sweep("a segment needs at least 2 samples".into()));
    }
    Ok((0..samples)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 / (samples - 1) as f64;
            let (bi, bj) = lerp(from, to, t);
            classify_cell(spec, opts, bi, bj)
        })
        .collect())
}

/// Number of dominant/none changes along consecutive cells.
pub fn count_transitions(cells: &[Cell]) -> usize {
    cells
        .windows(2)
        .filter(|w| {
            matches!(
                (w[0].kind, w[1].kind),
                (CellKind::Dominant, CellKind::None) | (CellKind::None, CellKind::Dominant)
            )
        })
        .count()
}

/// Bisects between a dominant and an infeasible point until the bracket is
/// within [`BOUNDARY_REL_TOL`] relative in `b`; returns the bracket midpoint.
pub fn refine_boundary(
    spec: &SweepSpec,
    opts: &ClassifyOptions,
    feasible: (f64, f64),
    infeasible: (f64, f64),
) -> Result<BoundaryPoint> {
    spec.check()?;
    let kind = |p: (f64, f64)| classify_cell(spec, opts, p.0, p.1).kind;
    if kind(feasible) != CellKind::Dominant || kind(infeasible) != CellKind::None {
        return Err(Error::Sweep("boundary refinement needs a dominant and a none endpoint".into()));
    }
    Ok(bisect(spec, opts, feasible, infeasible))
}

fn bisect(spec: &SweepSpec, opts: &ClassifyOptions, mut good: (f64, f64), mut bad: (f64, f64)) -> BoundaryPoint {
    let scale = good.0.abs().max(good.1.abs()).max(bad.0.abs()).max(bad.1.abs());
    for _ in 0..200 {
        let width = (good.0 - bad.0).abs().max((good.1 - bad.1).abs());
        if width <= BOUNDARY_REL_TOL * scale {
            break;
        }
        let mid = lerp(good, bad, 0.5);
        match classify_cell(spec, opts, mid.0, mid.1).kind {
            CellKind::Dominant => good = mid,
            CellKind::None => bad = mid,
            CellKind::Inconclusive => break,
        }
    }
    let (b_i, b_j) = lerp(good, bad, 0.5);
    BoundaryPoint { b_i, b_j }
}

fn lerp(a: (f64, f64), b: (f64, f64), t: f64) -> (f64, f64) {
    (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
}
