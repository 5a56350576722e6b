//! Exact piecewise-linear monotone maps with the degree property.
//!
//! A [`MonotoneMap`] stores the pair `(f⁻, f⁺)` through a list of knots
//! `(x, y⁻, y⁺)` on one fundamental domain `[0, p)`. Between consecutive knots
//! `f⁺` is the straight line from `(xᵢ, y⁺ᵢ)` to `(xᵢ₊₁, y⁻ᵢ₊₁)`, and the list wraps
//! with `f(x + p) = f(x) + p`. A knot with `y⁻ < y⁺` is a jump, a segment with
//! equal end values is a flat.
//!
//! Most operations go through the completed graph: the monotone polyline
//! visiting `(x, y⁻)` then `(x, y⁺)` at every knot. Inversion reflects it,
//! rotation and scaling move it, and the cross transform turns it by 45°.

mod contraction;
mod functionals;
pub mod random;

pub use contraction::{cross, dist_d, uncross, Contraction};
pub use functionals::{
    kernel_b, localization_lambda, make_rmap, mean_square_tilde, mean_tilde, rho, rmap,
    sup_displacement, sup_distance, DisturbanceProfile, KernelB,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Knots closer than this (relative to the period) are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// Small monotonicity violations produced by rounding are clamped, larger ones rejected.
const CLAMP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub x: f64,
    pub y_minus: f64,
    pub y_plus: f64,
}

impl Knot {
    pub fn new(x: f64, y_minus: f64, y_plus: f64) -> Self {
        Knot { x, y_minus, y_plus }
    }

    pub fn continuous(x: f64, y: f64) -> Self {
        Knot::new(x, y, y)
    }

    pub fn jump(&self) -> f64 {
        self.y_plus - self.y_minus
    }

    fn value(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.y_minus,
            Side::Right => self.y_plus,
        }
    }

    fn shifted(&self, dx: f64, dy: f64) -> Knot {
        Knot::new(self.x + dx, self.y_minus + dy, self.y_plus + dy)
    }
}

/// A monotone map of period `p` (finite), or a map of the line equal to the
/// identity outside a bounded window (`p = ∞`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapJson", into = "MapJson")]
pub struct MonotoneMap {
    period: f64,
    knots: Vec<Knot>,
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    /// `null` encodes an infinite period.
    period: Option<f64>,
    breakpoints: Vec<[f64; 3]>,
}

impl TryFrom<MapJson> for MonotoneMap {
    type Error = Error;

    fn try_from(j: MapJson) -> Result<Self> {
        let knots = j.breakpoints.iter().map(|b| Knot::new(b[0], b[1], b[2])).collect();
        MonotoneMap::new(j.period.unwrap_or(f64::INFINITY), knots)
    }
}

impl From<MonotoneMap> for MapJson {
    fn from(m: MonotoneMap) -> Self {
        MapJson {
            period: m.period.is_finite().then_some(m.period),
            breakpoints: m.knots.iter().map(|k| [k.x, k.y_minus, k.y_plus]).collect(),
        }
    }
}

pub(crate) fn same_period(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= MERGE_TOL * a.max(b)
}

pub(crate) fn check_periods(a: f64, b: f64) -> Result<()> {
    if same_period(a, b) {
        Ok(())
    } else {
        Err(Error::PeriodMismatch(a, b))
    }
}

/// Split `x` as `x0 + k p` with `x0 ∈ [0, p)`; returns `(x0, k p)`.
pub(crate) fn wrap(x: f64, p: f64) -> (f64, f64) {
    let k = (x / p).floor();
    let mut x0 = x - k * p;
    let mut shift = k * p;
    if x0 >= p {
        x0 -= p;
        shift += p;
    }
    if x0 < 0.0 {
        x0 = 0.0;
    }
    (x0, shift)
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let interp = a.1 + (b.0 - a.0) * (c.1 - a.1) / (c.0 - a.0);
    (interp - b.1).abs() <= MERGE_TOL * b.1.abs().max(1.0)
}

impl MonotoneMap {
    /// Build a map from knots in any order; `x` values outside `[0, p)` are
    /// folded back with the degree property, knots closer than the merge
    /// tolerance are fused and redundant continuous knots are dropped.
    pub fn new(period: f64, knots: Vec<Knot>) -> Result<Self> {
        if !(period > 0.0) || period.is_nan() {
            return Err(Error::InvalidMap(format!("period must be positive, got {period}")));
        }
        for k in &knots {
            if !(k.x.is_finite() && k.y_minus.is_finite() && k.y_plus.is_finite()) {
                return Err(Error::InvalidMap(format!("non-finite knot {k:?}")));
            }
        }
        let mut knots = normalise(period, knots)?;
        simplify(period, &mut knots);
        Ok(MonotoneMap { period, knots })
    }

    pub fn identity(period: f64) -> Self {
        let knots = if period.is_finite() { vec![Knot::continuous(0.0, 0.0)] } else { Vec::new() };
        MonotoneMap { period, knots }
    }

    /// Translation `x ↦ x + c`.
    pub fn translation(period: f64, c: f64) -> Result<Self> {
        if period.is_infinite() {
            return Err(Error::InfinitePeriod);
        }
        MonotoneMap::new(period, vec![Knot::continuous(0.0, c)])
    }

    /// Rebuild a map from its completed graph, a monotone polyline given as
    /// vertices. Vertices sharing an `x` collapse to a jump.
    pub fn from_graph(period: f64, vertices: &[(f64, f64)]) -> Result<Self> {
        MonotoneMap::new(period, vertices.iter().map(|&(x, y)| Knot::continuous(x, y)).collect())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_finite()
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    fn tol(&self) -> f64 {
        tol_for(self.period)
    }

    pub fn is_identity(&self) -> bool {
        let tol = self.tol();
        self.knots
            .iter()
            .all(|k| (k.y_minus - k.x).abs() <= tol && (k.y_plus - k.x).abs() <= tol)
    }

    /// `f⁻(x)` or `f⁺(x)`.
    pub fn eval(&self, x: f64, side: Side) -> f64 {
        if !self.is_periodic() {
            return self.eval_line(x, side);
        }
        let p = self.period;
        let (x0, shift) = wrap(x, p);
        let n = self.knots.len();
        let idx = self.knots.partition_point(|k| k.x <= x0);
        let (i, base) = if idx == 0 { (n - 1, -p) } else { (idx - 1, 0.0) };
        let ki = &self.knots[i];
        let xi = ki.x + base;
        if x0 == xi {
            return shift + ki.value(side) + base;
        }
        let (xn, yn) = if i + 1 < n {
            let k = &self.knots[i + 1];
            (k.x + base, k.y_minus + base)
        } else {
            let k = &self.knots[0];
            (k.x + p + base, k.y_minus + p + base)
        };
        let y0 = ki.y_plus + base;
        shift + y0 + (x0 - xi) * (yn - y0) / (xn - xi)
    }

    fn eval_line(&self, x: f64, side: Side) -> f64 {
        let idx = self.knots.partition_point(|k| k.x <= x);
        if idx == 0 {
            return x;
        }
        let ki = &self.knots[idx - 1];
        if x == ki.x {
            return ki.value(side);
        }
        match self.knots.get(idx) {
            None => x,
            Some(kn) => ki.y_plus + (x - ki.x) * (kn.y_minus - ki.y_plus) / (kn.x - ki.x),
        }
    }

    /// The knot within merge tolerance of `x`, with the translation that moves
    /// it next to `x`.
    fn knot_near(&self, x: f64) -> Option<(Knot, f64)> {
        let tol = self.tol();
        if !self.is_periodic() {
            let idx = self.knots.partition_point(|k| k.x < x);
            return [idx.checked_sub(1), Some(idx)]
                .into_iter()
                .flatten()
                .filter_map(|i| self.knots.get(i))
                .find(|k| (k.x - x).abs() <= tol)
                .map(|k| (*k, 0.0));
        }
        let p = self.period;
        let (x0, shift) = wrap(x, p);
        let n = self.knots.len();
        let idx = self.knots.partition_point(|k| k.x < x0);
        let candidates = [
            (idx.checked_sub(1).unwrap_or(n - 1), if idx == 0 { -p } else { 0.0 }),
            (idx % n, if idx == n { p } else { 0.0 }),
        ];
        candidates.into_iter().find_map(|(i, base)| {
            let k = self.knots[i];
            ((k.x + base - x0).abs() <= tol).then_some((k, shift + base))
        })
    }

    /// Evaluation that treats arguments within merge tolerance of a knot as
    /// hitting it; used where the argument is itself a computed value.
    fn eval_snapped(&self, x: f64, side: Side) -> f64 {
        match self.knot_near(x) {
            Some((k, shift)) => k.value(side) + shift,
            None => self.eval(x, side),
        }
    }

    fn jump_at(&self, x: f64) -> f64 {
        self.knot_near(x).map_or(0.0, |(k, _)| k.jump())
    }

    /// `(f⁻¹)⁺(y) = inf{x : f⁺(x) > y}` or `(f⁻¹)⁻(y) = sup{x : f⁻(x) < y}`.
    /// Builds the inverse on every call; keep [`MonotoneMap::invert`] around
    /// for repeated use.
    pub fn eval_inverse(&self, y: f64, side: Side) -> f64 {
        self.invert().eval(y, side)
    }

    /// Vertices of the completed graph over one fundamental domain.
    pub fn graph(&self) -> Vec<(f64, f64)> {
        let mut v = Vec::with_capacity(2 * self.knots.len());
        for k in &self.knots {
            v.push((k.x, k.y_minus));
            if k.y_plus > k.y_minus {
                v.push((k.x, k.y_plus));
            }
        }
        v
    }

    /// `f⁻¹`: reflection of the completed graph in the diagonal. Jumps become
    /// flats and flats become jumps.
    pub fn invert(&self) -> MonotoneMap {
        let v: Vec<(f64, f64)> = self.graph().into_iter().map(|(x, y)| (y, x)).collect();
        MonotoneMap::from_graph(self.period, &v).expect("reflection of a valid graph is valid")
    }

    /// `f_θ(x) = f(x − θ) + θ`.
    pub fn rotate(&self, theta: f64) -> MonotoneMap {
        let knots = self.knots.iter().map(|k| k.shifted(theta, theta)).collect();
        MonotoneMap::new(self.period, knots).expect("rotation of a valid map is valid")
    }

    /// `σ_ε f(x) = f(εx)/ε`, with period `p/ε`.
    pub fn scale(&self, eps: f64) -> Result<MonotoneMap> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::OutOfRange(format!("scale factor must be positive, got {eps}")));
        }
        if eps == 1.0 {
            return Ok(self.clone());
        }
        let knots = self
            .knots
            .iter()
            .map(|k| Knot::new(k.x / eps, k.y_minus / eps, k.y_plus / eps))
            .collect();
        MonotoneMap::new(self.period / eps, knots)
    }

    /// `y ↦ f(y) + c`.
    pub fn add_constant(&self, c: f64) -> Result<MonotoneMap> {
        if !self.is_periodic() {
            return Err(Error::InfinitePeriod);
        }
        let knots = self.knots.iter().map(|k| k.shifted(0.0, c)).collect();
        MonotoneMap::new(self.period, knots)
    }

    /// Linear pieces over one fundamental domain, as `(x0, y0, x1, y1)` with
    /// `y0 = f⁺(x0)` and `y1 = f⁻(x1)`.
    pub(crate) fn pieces(&self) -> Vec<(f64, f64, f64, f64)> {
        let n = self.knots.len();
        if !self.is_periodic() {
            return self
                .knots
                .windows(2)
                .map(|w| (w[0].x, w[0].y_plus, w[1].x, w[1].y_minus))
                .collect();
        }
        (0..n)
            .map(|i| {
                let a = self.knots[i];
                let b = if i + 1 < n {
                    self.knots[i + 1]
                } else {
                    self.knots[0].shifted(self.period, self.period)
                };
                (a.x, a.y_plus, b.x, b.y_minus)
            })
            .collect()
    }
}

fn tol_for(period: f64) -> f64 {
    if period.is_finite() {
        MERGE_TOL * period.max(1.0)
    } else {
        MERGE_TOL
    }
}

fn normalise(period: f64, knots: Vec<Knot>) -> Result<Vec<Knot>> {
    let tol = tol_for(period);
    let mut ks: Vec<Knot> = if period.is_finite() {
        knots
            .into_iter()
            .map(|k| {
                let (x0, shift) = wrap(k.x, period);
                Knot::new(x0, k.y_minus - shift, k.y_plus - shift)
            })
            .collect()
    } else {
        knots
    };
    ks.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y_minus.total_cmp(&b.y_minus)));

    let mut merged: Vec<Knot> = Vec::with_capacity(ks.len());
    for k in ks {
        match merged.last_mut() {
            Some(last) if k.x - last.x <= tol => {
                last.y_minus = last.y_minus.min(k.y_minus);
                last.y_plus = last.y_plus.max(k.y_plus);
            }
            _ => merged.push(k),
        }
    }
    if period.is_finite() && merged.len() > 1 {
        let first = merged[0];
        let last = merged[merged.len() - 1];
        if last.x + tol >= first.x + period {
            merged.pop();
            merged[0].y_minus = first.y_minus.min(last.y_minus - period);
            merged[0].y_plus = first.y_plus.max(last.y_plus - period);
        }
    }
    if period.is_finite() && merged.is_empty() {
        return Err(Error::InvalidMap("a periodic map needs at least one knot".into()));
    }

    let clamp = |lo: f64, hi: &mut f64, what: &str| -> Result<()> {
        if *hi < lo {
            if lo - *hi > CLAMP_TOL * lo.abs().max(1.0) {
                return Err(Error::InvalidMap(format!("{what}: {hi} < {lo}")));
            }
            *hi = lo;
        }
        Ok(())
    };
    let n = merged.len();
    for i in 0..n {
        let k = merged[i];
        clamp(k.y_minus, &mut merged[i].y_plus, "jump with y⁻ > y⁺")?;
        if i + 1 < n {
            let yp = merged[i].y_plus;
            clamp(yp, &mut merged[i + 1].y_minus, "decreasing piece")?;
        }
    }
    if period.is_finite() {
        let yp = merged[n - 1].y_plus - period;
        let mut y0 = merged[0].y_minus;
        clamp(yp, &mut y0, "decreasing piece across the period boundary")?;
        merged[0].y_minus = y0;
        if merged[0].y_plus < y0 {
            merged[0].y_plus = y0;
        }
    } else if n > 0 {
        let (first, last) = (merged[0], merged[n - 1]);
        let ctol = CLAMP_TOL * first.x.abs().max(last.x.abs()).max(1.0);
        if (first.y_minus - first.x).abs() > ctol || (last.y_plus - last.x).abs() > ctol {
            return Err(Error::InvalidMap(
                "a map of the line must be the identity outside its knot window".into(),
            ));
        }
        merged[0].y_minus = first.x;
        merged[n - 1].y_plus = last.x;
    }
    Ok(merged)
}

/// Drop continuous knots lying on the segment through their neighbours.
fn simplify(period: f64, knots: &mut Vec<Knot>) {
    let periodic = period.is_finite();
    let tol = tol_for(period);
    loop {
        let n = knots.len();
        if n == 0 || (periodic && n == 1) {
            break;
        }
        let mut out: Vec<Knot> = Vec::with_capacity(n);
        let mut changed = false;
        for i in 0..n {
            let k = knots[i];
            if k.jump() > tol || (periodic && i == n - 1 && out.is_empty()) {
                out.push(k);
                continue;
            }
            let prev = match out.last() {
                Some(l) => (l.x, l.y_plus),
                None if periodic => (knots[n - 1].x - period, knots[n - 1].y_plus - period),
                None => (k.x - 1.0, k.x - 1.0),
            };
            let next = if i + 1 < n {
                (knots[i + 1].x, knots[i + 1].y_minus)
            } else if periodic {
                let f = out[0];
                (f.x + period, f.y_minus + period)
            } else {
                (k.x + 1.0, k.x + 1.0)
            };
            if collinear(prev, (k.x, k.y_plus), next) {
                changed = true;
            } else {
                out.push(k);
            }
        }
        *knots = out;
        if !changed {
            break;
        }
    }
    // A lone continuous knot is a translation; anchor it at the origin.
    if periodic && knots.len() == 1 && knots[0].jump() <= tol {
        let c = knots[0].y_plus - knots[0].x;
        knots[0] = Knot::continuous(0.0, c);
    }
}

/// `g ∘ f` as the pair `{g⁻∘f⁻, g⁺∘f⁺}`.
pub fn compose(g: &MonotoneMap, f: &MonotoneMap) -> Result<MonotoneMap> {
    compose_flagged(g, f).map(|(m, _)| m)
}

/// Like [`compose`], also reporting whether a flat of `f` lands on a jump of
/// `g`. In that case the true left modification of `g⁺∘f⁺` differs from
/// `g⁻∘f⁻`; the returned map always uses the left modification.
pub fn compose_flagged(g: &MonotoneMap, f: &MonotoneMap) -> Result<(MonotoneMap, bool)> {
    check_periods(g.period, f.period)?;
    if g.is_identity() {
        return Ok((f.clone(), false));
    }
    if f.is_identity() {
        return Ok((g.clone(), false));
    }
    let p = f.period;
    let periodic = f.is_periodic();
    let tol = f.tol();

    // (x, knot index of f if any)
    let mut cands: Vec<(f64, Option<usize>)> = Vec::new();
    for (i, k) in f.knots.iter().enumerate() {
        cands.push((k.x, Some(i)));
    }
    for (x0, y0, x1, y1) in f.pieces() {
        if y1 - y0 <= tol {
            continue;
        }
        for gk in &g.knots {
            let mut push = |c: f64| {
                if c > y0 && c < y1 {
                    let x = x0 + (c - y0) / (y1 - y0) * (x1 - x0);
                    if x > x0 && x < x1 {
                        cands.push((x, None));
                    }
                }
            };
            if periodic {
                let mut c = gk.x + ((y0 - gk.x) / p).ceil() * p;
                while c < y1 {
                    push(c);
                    c += p;
                }
            } else {
                push(gk.x);
            }
        }
    }
    if !periodic {
        let (lo, hi) = match (f.knots.first(), f.knots.last()) {
            (Some(a), Some(b)) => (a.x, b.x),
            _ => (f64::INFINITY, f64::NEG_INFINITY),
        };
        for gk in &g.knots {
            if gk.x < lo || gk.x > hi {
                cands.push((gk.x, None));
            }
        }
    }
    if periodic {
        for c in cands.iter_mut() {
            c.0 = wrap(c.0, p).0;
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut dedup: Vec<(f64, Option<usize>)> = Vec::with_capacity(cands.len());
    for c in cands {
        match dedup.last_mut() {
            Some(last) if c.0 - last.0 <= tol => {
                if last.1.is_none() {
                    *last = c;
                }
            }
            _ => dedup.push(c),
        }
    }

    let pieces = f.pieces();
    let n = f.knots.len();
    let mut flagged = false;
    let mut knots = Vec::with_capacity(dedup.len());
    for (x, idx) in dedup {
        let (u_minus, u_plus, flat_left) = match idx {
            Some(i) => {
                let k = f.knots[i];
                let flat = if periodic {
                    let prev = pieces[(i + n - 1) % n];
                    prev.3 - prev.1 <= tol
                } else if i == 0 {
                    false
                } else {
                    pieces[i - 1].3 - pieces[i - 1].1 <= tol
                };
                (k.y_minus, k.y_plus, flat)
            }
            None => {
                let u = f.eval(x, Side::Right);
                (u, u, false)
            }
        };
        let y_plus = g.eval_snapped(u_plus, Side::Right);
        let y_minus = if flat_left {
            if g.jump_at(u_minus) > tol {
                flagged = true;
            }
            g.eval_snapped(u_minus, Side::Right)
        } else {
            g.eval_snapped(u_minus, Side::Left)
        };
        knots.push(Knot::new(x, y_minus, y_plus));
    }
    Ok((MonotoneMap::new(p, knots)?, flagged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn half_rmap() -> MonotoneMap {
        rmap(0.5).unwrap()
    }

    /// Brute-force inverse straight from the infimum definition.
    fn inf_inverse(f: &MonotoneMap, y: f64, lo: f64, hi: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f.eval(m, Side::Right) > y {
                b = m;
            } else {
                a = m;
            }
        }
        b
    }

    #[test]
    fn eval_examples() {
        let id = MonotoneMap::identity(1.0);
        assert_eq!(id.eval(0.3, Side::Right), 0.3);
        let f = half_rmap();
        assert_abs_diff_eq!(f.eval(0.9, Side::Right), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(1.0, Side::Right), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(1.0, Side::Left), 0.5, epsilon = 1e-15);
        let g = rmap(0.2).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.5), (0.9, 0.8), (-0.05, -0.2)] {
            assert_abs_diff_eq!(g.eval(x, Side::Right), y, epsilon = 1e-15);
        }
    }

    #[test]
    fn degree_property_random() {
        let mut r = rng::stream(11, 0);
        for _ in 0..50 {
            let f = random::random_map(&mut r, 7);
            for j in 0..97 {
                let x = -2.0 + j as f64 * 0.0437;
                for side in [Side::Left, Side::Right] {
                    assert_abs_diff_eq!(f.eval(x + 1.0, side), f.eval(x, side) + 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_maps() {
        assert!(MonotoneMap::new(1.0, vec![Knot::new(0.0, 0.5, 0.1)]).is_err());
        assert!(MonotoneMap::new(1.0, vec![Knot::continuous(0.0, 0.0), Knot::continuous(0.5, -0.3)]).is_err());
        assert!(MonotoneMap::new(1.0, vec![]).is_err());
        assert!(MonotoneMap::new(-1.0, vec![Knot::continuous(0.0, 0.0)]).is_err());
        assert!(MonotoneMap::new(f64::INFINITY, vec![Knot::new(0.0, 1.0, 1.0)]).is_err());
    }

    #[test]
    fn knots_fold_into_fundamental_domain() {
        let f = MonotoneMap::new(1.0, vec![Knot::new(1.25, 1.0, 1.5)]).unwrap();
        assert_eq!(f.knots(), &[Knot::new(0.25, 0.0, 0.5)]);
    }

    #[test]
    fn compose_examples() {
        let id = MonotoneMap::identity(1.0);
        let mut r = rng::stream(12, 0);
        let f = random::random_map(&mut r, 6);
        assert_eq!(compose(&id, &f).unwrap(), f);
        let h = half_rmap();
        let hh = compose(&h, &h).unwrap();
        assert!(dist_d(&hh, &h).unwrap() < 1e-12);
        for j in 0..100 {
            let x = j as f64 / 100.0;
            assert_abs_diff_eq!(hh.eval(x, Side::Right), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn compose_matches_pointwise_oracle() {
        let mut r = rng::stream(13, 0);
        for _ in 0..100 {
            let f = random::random_map(&mut r, 6);
            let g = random::random_map(&mut r, 6);
            let gf = compose(&g, &f).unwrap();
            for j in 0..200 {
                let x = -0.5 + j as f64 / 133.0;
                let want = g.eval(f.eval(x, Side::Right), Side::Right);
                assert_abs_diff_eq!(gf.eval(x, Side::Right), want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn compose_left_limits_match() {
        let mut r = rng::stream(14, 0);
        for _ in 0..50 {
            let f = random::random_map(&mut r, 5);
            let g = random::random_map(&mut r, 5);
            let (gf, _) = compose_flagged(&g, &f).unwrap();
            for k in gf.knots() {
                let approx_left = gf.eval(k.x - 1e-9, Side::Right);
                assert_abs_diff_eq!(approx_left, k.y_minus, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn flat_onto_jump_is_flagged() {
        // f is flat at 0.5, g jumps at 0.5
        let f = MonotoneMap::new(1.0, vec![Knot::new(0.0, -0.5, 0.5)]).unwrap();
        let g = MonotoneMap::new(1.0, vec![Knot::new(0.5, 0.4, 0.6)]).unwrap();
        let (gf, flag) = compose_flagged(&g, &f).unwrap();
        assert!(flag);
        assert_abs_diff_eq!(gf.eval(0.3, Side::Right), 0.6, epsilon = 1e-15);
        let (_, flag) = compose_flagged(&f, &g).unwrap();
        assert!(!flag);
    }

    #[test]
    fn compose_period_mismatch() {
        let a = MonotoneMap::identity(1.0).rotate(0.1);
        let b = MonotoneMap::identity(2.0).rotate(0.1);
        assert_eq!(compose(&a, &b), Err(Error::PeriodMismatch(1.0, 2.0)));
    }

    #[test]
    fn invert_examples() {
        assert!(MonotoneMap::identity(1.0).invert().is_identity());
        let g = half_rmap().invert();
        for j in 0..400 {
            let y = -1.0 + j as f64 * 0.00731;
            let n = (y + 0.5).floor();
            assert_abs_diff_eq!(g.eval(y, Side::Right), n, epsilon = 1e-12);
        }
        let mut r = rng::stream(15, 0);
        for _ in 0..50 {
            let f = random::random_map(&mut r, 6);
            let fi = f.invert();
            for j in 0..60 {
                let y = -0.5 + j as f64 / 47.0;
                let want = inf_inverse(&f, y, -5.0, 5.0);
                assert_abs_diff_eq!(fi.eval(y, Side::Right), want, epsilon = 1e-9);
            }
            assert!(dist_d(&fi.invert(), &f).unwrap() < 1e-12);
        }
    }

    #[test]
    fn inverse_left_side_is_sup_definition() {
        let f = half_rmap();
        let g = f.invert();
        // f⁻ < 1/2 only on (-∞, 0]
        assert_abs_diff_eq!(g.eval(0.5, Side::Left), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.eval(0.5, Side::Right), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rotate_and_scale() {
        let mut r = rng::stream(16, 0);
        let f = random::random_map(&mut r, 6);
        assert!(dist_d(&f.rotate(0.0), &f).unwrap() < 1e-12);
        assert!(dist_d(&f.rotate(1.0), &f).unwrap() < 1e-12);
        for &th in &[0.13, 0.77, -2.4] {
            let g = f.rotate(th);
            for j in 0..50 {
                let x = j as f64 / 31.0;
                let want = f.eval(x - th, Side::Right) + th;
                assert_abs_diff_eq!(g.eval(x, Side::Right), want, epsilon = 1e-9);
            }
        }
        assert_eq!(f.scale(1.0).unwrap(), f);
        assert!(MonotoneMap::identity(1.0).scale(0.25).unwrap().is_identity());
        let s = f.scale(0.25).unwrap();
        assert_eq!(s.period(), 4.0);
        assert_abs_diff_eq!(sup_displacement(&s), sup_displacement(&f) / 0.25, epsilon = 1e-9);
        for j in 0..50 {
            let x = j as f64 / 7.0;
            assert_abs_diff_eq!(s.eval(x, Side::Right), f.eval(0.25 * x, Side::Right) / 0.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn line_maps() {
        let f = MonotoneMap::new(
            f64::INFINITY,
            vec![Knot::new(0.0, 0.0, 0.5), Knot::continuous(1.0, 1.0)],
        )
        .unwrap();
        assert_eq!(f.eval(-3.0, Side::Right), -3.0);
        assert_eq!(f.eval(0.0, Side::Left), 0.0);
        assert_eq!(f.eval(0.0, Side::Right), 0.5);
        assert_eq!(f.eval(0.5, Side::Right), 0.75);
        assert_eq!(f.eval(7.0, Side::Right), 7.0);
        let g = f.invert();
        assert_eq!(g.eval(0.25, Side::Right), 0.0);
        assert_eq!(g.eval(0.75, Side::Right), 0.5);
        let ff = compose(&g, &f).unwrap();
        for j in 0..30 {
            let x = -1.0 + j as f64 * 0.1;
            assert_abs_diff_eq!(ff.eval(x, Side::Right), x, epsilon = 1e-12);
        }
        let t = f.rotate(2.0);
        assert_eq!(t.eval(2.5, Side::Right), 2.75);
    }

    #[test]
    fn json_round_trip() {
        let mut r = rng::stream(17, 0);
        let f = random::random_map(&mut r, 5);
        let s = serde_json::to_string(&f).unwrap();
        let back: MonotoneMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let line = MonotoneMap::identity(f64::INFINITY);
        let s = serde_json::to_string(&line).unwrap();
        assert!(s.contains("null"));
        let back: MonotoneMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, line);
        let bad = r#"{"period":1.0,"breakpoints":[[0.0,0.5,0.1]]}"#;
        assert!(serde_json::from_str::<MonotoneMap>(bad).is_err());
    }
}
