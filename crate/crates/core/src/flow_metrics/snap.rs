//! Snapping flows onto the countable class of dyadic staircase flows.

use crate::flow_core::{EventFlow, Interval};
use crate::map_algebra::{Knot, MonotoneMap, Side};
use crate::{Error, Result};

/// Offsets `c`, tried in order, for the evaluation points `(k + 1 − c) h`.
const OFFSETS: [f64; 9] = [0.5, 1.0 / 3.0, 2.0 / 3.0, 0.25, 0.75, 0.2, 0.4, 0.6, 0.8];

fn frac_near(x: f64, target: f64) -> bool {
    let d = (x - target).rem_euclid(1.0);
    d.min(1.0 - d) < 1e-9
}

/// The staircase `δ⁻¹ ∘ τ₂⁻¹ ∘ f ∘ τ₁ ∘ δ` with `h = 2^{−N}`, where `δ` rounds
/// up to `hℤ` and `τᵢ` shifts by `−cᵢ h`. The result is constant on every
/// open cell `(kh, (k+1)h)` and takes values in `hℤ`. The offsets differ so
/// that pieces of slope one do not carry grid points back onto the grid, and
/// are chosen so that no evaluation point or image meets a discontinuity.
pub fn snap_map(f: &MonotoneMap, big_n: u32) -> Result<MonotoneMap> {
    if big_n < 1 {
        return Err(Error::OutOfRange("snap level N must be at least 1".into()));
    }
    if !f.is_periodic() {
        return Err(Error::InfinitePeriod);
    }
    let p = f.period();
    let cells = (p * 2.0_f64.powi(big_n as i32)).round();
    if (cells * 0.5_f64.powi(big_n as i32) - p).abs() > 1e-12 * p || cells > 1e7 {
        return Err(Error::OutOfRange(format!("period {p} is not a multiple of 2^-{big_n}")));
    }
    for c1 in OFFSETS {
        for c2 in OFFSETS {
            if c1 != c2 {
                if let Some(m) = snap_with(f, big_n, c1, c2) {
                    return m;
                }
            }
        }
    }
    Err(Error::OutOfRange("no admissible grid offsets".into()))
}

/// `None` when the offsets `(c1, c2)` hit a discontinuity.
fn snap_with(f: &MonotoneMap, big_n: u32, c1: f64, c2: f64) -> Option<Result<MonotoneMap>> {
    let h = 0.5_f64.powi(big_n as i32);
    let p = f.period();
    let cells = (p / h).round() as usize;
    if f.knots().iter().any(|k| k.jump() > 0.0 && frac_near(k.x / h, 1.0 - c1)) {
        return None;
    }
    let values: Vec<f64> = (0..cells).map(|k| f.eval((k as f64 + 1.0 - c1) * h, Side::Right)).collect();
    if values.iter().any(|&y| frac_near(y / h + c2, 0.0)) {
        return None;
    }
    let level: Vec<f64> = values.iter().map(|&y| h * (y / h + c2).floor()).collect();
    let knots = (0..cells)
        .map(|k| {
            let left = if k == 0 { level[cells - 1] - p } else { level[k - 1] };
            Knot::new(k as f64 * h, left, level[k])
        })
        .collect();
    Some(MonotoneMap::new(p, knots))
}

/// Event times rounded to `4^{−N}ℤ` (a collision moves the later event one
/// grid step forward) and every event map replaced by [`snap_map`]. The
/// horizon grows if a rounded time falls outside it.
pub fn snap_to_grid(phi: &EventFlow, big_n: u32) -> Result<EventFlow> {
    if big_n < 1 {
        return Err(Error::OutOfRange("snap level N must be at least 1".into()));
    }
    let g = 0.25_f64.powi(big_n as i32);
    let mut h = phi.horizon();
    let mut events = Vec::with_capacity(phi.len());
    let mut prev = f64::NEG_INFINITY;
    for e in phi.events() {
        let mut t = (e.t / g).round() * g;
        if t <= prev {
            t = prev + g;
        }
        prev = t;
        if !h.contains(t) {
            h = Interval::new(h.lo.min(t - g), h.hi.max(t), h.lo_closed, h.hi_closed);
        }
        events.push((t, snap_map(&e.map.materialize(), big_n)?));
    }
    EventFlow::new(phi.period(), h, events)
}
