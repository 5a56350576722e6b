//! Random piecewise-linear maps for property tests and self-checks.

use rand::Rng as _;

use super::{mean_tilde, MonotoneMap};
use crate::rng::Rng;

/// A random period-1 map whose completed graph has `segments` legs, each a
/// jump, a flat or a sloped piece.
pub fn random_map(rng: &mut Rng, segments: usize) -> MonotoneMap {
    let segments = segments.max(2);
    let mut steps: Vec<(f64, f64)> = Vec::with_capacity(segments);
    for i in 0..segments {
        let kind = if i == 0 { 2 } else { rng.random_range(0..4) };
        let (dx, dy) = match kind {
            0 => (0.0, rng.random_range(0.05..1.0)),
            1 => (rng.random_range(0.05..1.0), 0.0),
            _ => (rng.random_range(0.05..1.0), rng.random_range(0.05..1.0)),
        };
        steps.push((dx, dy));
    }
    let sx: f64 = steps.iter().map(|s| s.0).sum();
    let sy: f64 = steps.iter().map(|s| s.1).sum();
    let mut x = rng.random::<f64>();
    let mut y = x + rng.random_range(-0.5..0.5);
    let mut v = Vec::with_capacity(segments);
    for (dx, dy) in steps {
        v.push((x, y));
        x += dx / sx;
        y += dy / sy;
    }
    MonotoneMap::from_graph(1.0, &v).expect("random graph is monotone")
}

/// A random mean-zero map other than the identity.
pub fn random_dstar_map(rng: &mut Rng, segments: usize) -> MonotoneMap {
    loop {
        let f = random_map(rng, segments);
        let m = mean_tilde(&f).expect("periodic");
        let g = f.add_constant(-m).expect("periodic");
        if !g.is_identity() {
            return g;
        }
    }
}
