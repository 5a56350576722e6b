//! Paths of a flow in the compactified path space: `Φ(x, t) = tanh(x)/(1 + |t|)`,
//! the sup distance `d^F`, the Hausdorff distance on finite path sets and the
//! extraction of forward/backward paths from an event flow.
//!
//! Only the finite set of paths from a given set of starting points is
//! extracted; its maximal noncrossing completion is not computed.

use rayon::prelude::*;
use serde::Serialize;

use crate::flow_core::{EventFlow, Interval, SpaceTimePoint};
use crate::map_algebra::Side;
use crate::{Error, Result};

/// `Φ(x, t) = tanh(x)/(1 + |t|)`, with `tanh(±∞) = ±1`.
pub fn phi_compactify(x: f64, t: f64) -> f64 {
    x.tanh() / (1.0 + t.abs())
}

/// A path sampled on a time grid inside `[−n, n]`. Between samples the
/// compactified value `Φ(f(t), t)` is interpolated linearly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompactPath {
    pub start: SpaceTimePoint,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Set when some grid times fell outside the flow's horizon and the path
    /// was extended by a constant there.
    pub extended: bool,
}

impl CompactPath {
    pub fn new(start: SpaceTimePoint, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::OutOfRange("path grid must be non-empty, increasing and match the values".into()));
        }
        Ok(CompactPath { start, times, values, extended: false })
    }

    pub fn compact(&self) -> Vec<f64> {
        self.times.iter().zip(&self.values).map(|(&t, &x)| phi_compactify(x, t)).collect()
    }

    /// `Φ(f(t), t)` at any `t` in the grid's range.
    pub fn compact_at(&self, t: f64) -> f64 {
        let ts = &self.times;
        let i = ts.partition_point(|&s| s < t);
        if i < ts.len() && ts[i] == t {
            return phi_compactify(self.values[i], t);
        }
        if i == 0 || i == ts.len() {
            let j = i.min(ts.len() - 1);
            return phi_compactify(self.values[j], ts[j]);
        }
        let (a, b) = (phi_compactify(self.values[i - 1], ts[i - 1]), phi_compactify(self.values[i], ts[i]));
        a + (t - ts[i - 1]) * (b - a) / (ts[i] - ts[i - 1])
    }

    /// Half-width of the sampled window.
    pub fn window(&self) -> f64 {
        self.times[0].abs().max(self.times[self.times.len() - 1].abs())
    }
}

/// `d^F` on the sampled window, with the bound `2/(1 + n)` on what lies
/// beyond it kept separately.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FDistance {
    pub value: f64,
    pub truncation: f64,
}

/// `sup_t |Φ(f(t), t) − Φ(g(t), t)|` over the union of both grids.
pub fn dist_pi_f(f: &CompactPath, g: &CompactPath) -> FDistance {
    let value = if f.times == g.times {
        f.compact().iter().zip(g.compact()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    } else {
        let mut ts: Vec<f64> = f.times.iter().chain(&g.times).copied().collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.iter().fold(0.0_f64, |m, &t| m.max((f.compact_at(t) - g.compact_at(t)).abs()))
    };
    let n = f.window().min(g.window());
    FDistance { value, truncation: 2.0 / (1.0 + n) }
}

fn directed(a: &[CompactPath], b: &[CompactPath]) -> f64 {
    a.par_iter()
        .map(|f| b.iter().map(|g| dist_pi_f(f, g).value).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

/// Hausdorff distance induced by `d^F` on finite, non-empty path sets.
pub fn hausdorff_f(a: &[CompactPath], b: &[CompactPath]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::OutOfRange("Hausdorff distance needs non-empty sets".into()));
    }
    Ok(directed(a, b).max(directed(b, a)))
}

/// `sup_{f∈A} inf_{g∈B} d^F(f, g)`.
pub fn directed_hausdorff_f(a: &[CompactPath], b: &[CompactPath]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::OutOfRange("Hausdorff distance needs non-empty sets".into()));
    }
    Ok(directed(a, b))
}

/// A grid on `[−n, n]` that sees every value an event-flow path takes:
/// regular points, every event time and a point just before it, and `0`
/// where `1/(1 + |t|)` peaks.
pub fn path_grid(n: f64, regular: usize, flows: &[&EventFlow]) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..=regular).map(|k| -n + 2.0 * n * k as f64 / regular.max(1) as f64).collect();
    ts.push(0.0);
    for f in flows {
        for t in f.times() {
            if t.abs() <= n {
                ts.push(t);
                ts.push(t - 1e-9 * t.abs().max(1.0));
            }
        }
    }
    ts.retain(|t| t.abs() <= n);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// The paths through each point of `starts`: forward for `t ≥ s`, through the
/// inverse flow for `t < s`. Grid times outside the horizon get the value at
/// the nearest covered time and mark the path as extended.
pub fn extract_web(flow: &EventFlow, starts: &[SpaceTimePoint], grid: &[f64]) -> Result<Vec<CompactPath>> {
    let h = flow.horizon();
    let inside: Vec<f64> = grid.iter().copied().filter(|&t| h.contains(t)).collect();
    if inside.is_empty() {
        return Err(Error::OutsideHorizon("path grid".into(), h.to_string()));
    }
    starts
        .iter()
        .map(|&e| {
            if !h.contains(e.s) {
                return Err(Error::OutsideHorizon(format!("start ({}, {})", e.s, e.x), h.to_string()));
            }
            let vals = flow.backward_trajectory(e, &inside, Side::Right)?;
            let (first, last) = (vals[0], vals[vals.len() - 1]);
            let values: Vec<f64> = grid
                .iter()
                .map(|&t| {
                    if t < inside[0] {
                        first
                    } else if t > inside[inside.len() - 1] {
                        last
                    } else {
                        vals[inside.partition_point(|&s| s < t)]
                    }
                })
                .collect();
            let mut p = CompactPath::new(e, grid.to_vec(), values)?;
            p.extended = inside.len() < grid.len();
            Ok(p)
        })
        .collect()
}

/// Starting points on a `times × positions` lattice inside the window.
pub fn lattice_starts(n: f64, times: usize, positions: usize, span: Interval) -> Vec<SpaceTimePoint> {
    let mut out = Vec::with_capacity(times * positions);
    for i in 0..times {
        let s = -n + 2.0 * n * (i as f64 + 0.5) / times as f64;
        for j in 0..positions {
            let x = span.lo + (span.hi - span.lo) * (j as f64 + 0.5) / positions as f64;
            out.push(SpaceTimePoint::new(s, x));
        }
    }
    out
}

/// Largest spacing between neighbouring start positions sharing a start
/// time, measured after `tanh`.
pub fn start_mesh(starts: &[SpaceTimePoint]) -> f64 {
    let mut by_time: Vec<(f64, f64)> = starts.iter().map(|e| (e.s, e.x.tanh())).collect();
    by_time.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    by_time.windows(2).filter(|w| w[0].0 == w[1].0).fold(0.0, |m, w| m.max(w[1].1 - w[0].1))
}
