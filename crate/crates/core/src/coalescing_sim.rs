//! Euler sampler for coalescing Brownian motions on the line and the circle.
//!
//! Clusters of merged paths are kept in spatial order (cyclic order on the
//! circle) and only neighbours can collide. Every start keeps its own label;
//! a merged label follows the driver of its cluster, shifted by an integer on
//! the circle.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::flow_core::SpaceTimePoint;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Circle,
    Line,
}

/// Relative tolerance for locating a start time on the grid.
const GRID_TOL: f64 = 1e-9;

struct Engine {
    geometry: Geometry,
    dt: f64,
    sd: f64,
    bridge: bool,
    /// Lifted position, indexed by cluster id (the lowest label in the cluster).
    pos: Vec<f64>,
    /// Integer lift making the cyclic chain increase; zero on the line.
    lift: Vec<f64>,
    members: Vec<Vec<usize>>,
    driver: Vec<usize>,
    offset: Vec<f64>,
    /// Cluster ids in spatial order.
    order: Vec<usize>,
    collisions: Option<Vec<Vec<f64>>>,
}

impl Engine {
    fn new(geometry: Geometry, dt: f64, bridge: bool, labels: usize, track: bool) -> Self {
        Engine {
            geometry,
            dt,
            sd: dt.sqrt(),
            bridge,
            pos: vec![f64::NAN; labels],
            lift: vec![0.0; labels],
            members: vec![Vec::new(); labels],
            driver: (0..labels).collect(),
            offset: vec![0.0; labels],
            order: Vec::new(),
            collisions: track.then(|| {
                let mut m = vec![vec![f64::INFINITY; labels]; labels];
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = 0.0;
                }
                m
            }),
        }
    }

    fn chain(&self, i: usize) -> f64 {
        let c = self.order[i];
        self.pos[c] + self.lift[c]
    }

    /// Gaps between neighbours; on the circle the last one wraps around.
    fn gaps(&self) -> Vec<f64> {
        let m = self.order.len();
        let mut g: Vec<f64> = (0..m.saturating_sub(1)).map(|i| self.chain(i + 1) - self.chain(i)).collect();
        if self.geometry == Geometry::Circle && m >= 2 {
            g.push(self.chain(0) + 1.0 - self.chain(m - 1));
        }
        g
    }

    fn value(&self, label: usize) -> f64 {
        self.pos[self.driver[label]] + self.offset[label]
    }

    fn label_value(&self, label: usize) -> Option<f64> {
        let d = self.driver[label];
        (!self.members[d].is_empty()).then(|| self.value(label))
    }

    fn clusters(&self) -> usize {
        self.order.len()
    }

    /// Merge the clusters at order positions `i` and `i + 1` (cyclically).
    fn merge(&mut self, i: usize, t: f64) {
        let m = self.order.len();
        let (j, k) = (i, (i + 1) % m);
        let (a, b) = (self.order[j], self.order[k]);
        let (keep, gone, gone_at) = if a < b { (a, b, k) } else { (b, a, j) };
        let shift = match self.geometry {
            Geometry::Circle => (self.pos[gone] - self.pos[keep]).round(),
            Geometry::Line => 0.0,
        };
        self.attach(gone, keep, shift, t);
        // dropping either end of a cyclic chain keeps it increasing
        self.order.remove(gone_at);
    }

    /// Move every label of cluster `gone` onto the driver `keep`.
    fn attach(&mut self, gone: usize, keep: usize, shift: f64, t: f64) {
        if let Some(col) = self.collisions.as_mut() {
            for &x in &self.members[gone] {
                for &y in &self.members[keep] {
                    col[x][y] = t;
                    col[y][x] = t;
                }
            }
        }
        let moved = std::mem::take(&mut self.members[gone]);
        for &x in &moved {
            self.driver[x] = keep;
            self.offset[x] += shift;
        }
        self.members[keep].extend(moved);
    }

    /// Merge the clusters driving labels `x` and `y` if they are still apart
    /// and adjacent.
    fn merge_labels(&mut self, x: usize, y: usize, t: f64) {
        let (cx, cy) = (self.driver[x], self.driver[y]);
        let m = self.order.len();
        if cx == cy || m < 2 {
            return;
        }
        let i = self.order.iter().position(|&c| c == cx).expect("live cluster");
        if self.order[(i + 1) % m] == cy {
            self.merge(i, t);
        } else if self.order[(i + m - 1) % m] == cy {
            self.merge((i + m - 1) % m, t);
        }
    }

    /// Add a new label at `x`, merging if it sits on an existing cluster.
    fn insert(&mut self, label: usize, x: f64, t: f64) {
        self.pos[label] = x;
        self.members[label] = vec![label];
        let m = self.order.len();
        if m == 0 {
            self.order.push(label);
            return;
        }
        let xc = match self.geometry {
            Geometry::Line => x,
            Geometry::Circle => {
                let c0 = self.chain(0);
                c0 + (x - c0).rem_euclid(1.0)
            }
        };
        let hit = |c: f64| (c - xc).abs() <= 1e-12 * xc.abs().max(1.0);
        let idx = self.order.partition_point(|&c| self.pos[c] + self.lift[c] <= xc);
        let mut near = vec![];
        if idx > 0 {
            near.push(idx - 1);
        }
        if idx < m {
            near.push(idx);
        }
        if let Some(&i) = near.iter().find(|&&i| hit(self.chain(i))) {
            self.absorb_new(label, self.order[i], t);
        } else if self.geometry == Geometry::Circle && hit(self.chain(0) + 1.0) {
            self.absorb_new(label, self.order[0], t);
        } else {
            self.lift[label] = (xc - x).round();
            self.order.insert(idx, label);
        }
    }

    fn absorb_new(&mut self, label: usize, cluster: usize, t: f64) {
        let shift = match self.geometry {
            Geometry::Circle => (self.pos[label] - self.pos[cluster]).round(),
            Geometry::Line => 0.0,
        };
        if label < cluster {
            // the new label has the lower index, so it becomes the driver
            self.pos[label] = self.pos[cluster] + shift;
            self.lift[label] = self.lift[cluster] - shift;
            let at = self.order.iter().position(|&c| c == cluster).expect("live cluster");
            self.order[at] = label;
            self.attach(cluster, label, -shift, t);
        } else {
            self.attach(label, cluster, shift, t);
        }
    }

    /// Order-neighbour pairs as driver ids, aligned with [`Engine::gaps`].
    fn pairs(&self) -> Vec<(usize, usize)> {
        let m = self.order.len();
        let mut p: Vec<(usize, usize)> = self.order.windows(2).map(|w| (w[0], w[1])).collect();
        if self.geometry == Geometry::Circle && m >= 2 {
            p.push((self.order[m - 1], self.order[0]));
        }
        p
    }

    fn step(&mut self, rng: &mut Rng, t_end: f64) {
        let before = if self.bridge { self.gaps() } else { Vec::new() };
        for &c in &self.order {
            let z: f64 = StandardNormal.sample(rng);
            self.pos[c] += self.sd * z;
        }
        let after = self.gaps();
        let pairs = self.pairs();
        let mut hit: Vec<(usize, usize)> = Vec::new();
        for (i, &g) in after.iter().enumerate() {
            let crossed = g <= 0.0 || {
                self.bridge && {
                    // the difference of two paths has variance 2 dt per step
                    let p = (-before[i] * g / self.dt).exp();
                    p > 1e-300 && rng.random::<f64>() < p
                }
            };
            if crossed {
                hit.push(pairs[i]);
            }
        }
        for (x, y) in hit {
            self.merge_labels(x, y, t_end);
        }
        // a merged driver can leave a neighbour behind; resolve by sign
        while self.order.len() >= 2 {
            match self.gaps().iter().position(|&g| g <= 0.0) {
                Some(i) => self.merge(i, t_end),
                None => break,
            }
        }
    }
}

/// Sampled coalescing paths on the grid `t0 + k dt`.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySet {
    pub geometry: Geometry,
    pub dt: f64,
    pub starts: Vec<SpaceTimePoint>,
    pub times: Vec<f64>,
    /// `paths[j][k]` is the lifted value of start `j` at `times[k]`, NaN before its start.
    pub paths: Vec<Vec<f64>>,
    /// First grid time at which two paths differ by an integer (circle) or
    /// coincide (line); infinity if they never do within the horizon.
    pub collisions: Vec<Vec<f64>>,
}

impl TrajectorySet {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.starts.len()).map(|j| format!("z{j}")));
        out.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.paths.iter().map(|p| p[k].to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// For starts sharing one start time and sorted in one period `[x₀, x₀ + 1)`
    /// on the circle: the lifted preimage of `y` under the map from the start
    /// time to the last grid time, located to within half the start spacing.
    pub fn preimage_at_end(&self, y: f64) -> Result<f64> {
        if self.geometry != Geometry::Circle {
            return Err(Error::OutOfRange("preimage needs starts on the circle".into()));
        }
        let last = self.times.len() - 1;
        let xs: Vec<f64> = self.starts.iter().map(|s| s.x).collect();
        let ys: Vec<f64> = self.paths.iter().map(|p| p[last]).collect();
        circle_preimage(&xs, &ys, y)
    }
}

/// Preimage of `y` under a non-decreasing degree-one map known only at the
/// sorted starts `xs` (one period) with images `ys`: the midpoint of the two
/// neighbouring starts whose images bracket `y`.
pub fn circle_preimage(xs: &[f64], ys: &[f64], y: f64) -> Result<f64> {
    let m = xs.len();
    if m == 0 || ys.len() != m {
        return Err(Error::OutOfRange("need one image per start".into()));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) || xs[m - 1] >= xs[0] + 1.0 {
        return Err(Error::OutOfRange("starts must be sorted within one period".into()));
    }
    // shift y by an integer so that the answer lies in the first period
    let n = (y - ys[0]).floor();
    let target = y - n;
    let j = ys.partition_point(|&v| v <= target);
    let (xa, xb) = match j {
        0 => (xs[m - 1] - 1.0, xs[0]),
        j if j == m => (xs[m - 1], xs[0] + 1.0),
        j => (xs[j - 1], xs[j]),
    };
    Ok(0.5 * (xa + xb) + n)
}

/// Number of whole steps of size `dt` in `span`, forgiving rounding in `span / dt`.
fn step_count(span: f64, dt: f64) -> usize {
    (span / dt * (1.0 + 1e-12)).floor() as usize
}

fn grid_index(s: f64, t0: f64, dt: f64) -> Result<usize> {
    let k = ((s - t0) / dt).round();
    if ((t0 + k * dt) - s).abs() > GRID_TOL * dt.max(s.abs()) {
        return Err(Error::OutOfRange(format!("start time {s} is not on the grid {t0} + k·{dt}")));
    }
    Ok(k as usize)
}

/// Coalescing Brownian motions from `starts` on the grid `t0 + k dt` up to
/// `t_end`, where `t0` is the earliest start time. Start times must lie on
/// the grid. With `bridge` set, a pair whose gap stays positive still merges
/// with the Brownian-bridge crossing probability `exp(−ab/dt)`.
pub fn sample_coalescing(
    starts: &[SpaceTimePoint],
    geometry: Geometry,
    dt: f64,
    t_end: f64,
    bridge: bool,
    rng: &mut Rng,
) -> Result<TrajectorySet> {
    if starts.is_empty() {
        return Err(Error::OutOfRange("no starting points".into()));
    }
    let t0 = starts.iter().map(|s| s.s).fold(f64::INFINITY, f64::min);
    if !(dt > 0.0) || dt >= t_end - t0 {
        return Err(Error::OutOfRange(format!("dt = {dt} must be positive and below the horizon length {}", t_end - t0)));
    }
    let steps = step_count(t_end - t0, dt);
    let births: Vec<usize> = starts.iter().map(|s| grid_index(s.s, t0, dt)).collect::<Result<_>>()?;
    let times: Vec<f64> = (0..=steps).map(|k| t0 + k as f64 * dt).collect();
    let m = starts.len();
    let mut eng = Engine::new(geometry, dt, bridge, m, true);
    let mut paths = vec![vec![f64::NAN; steps + 1]; m];
    let mut by_birth: Vec<usize> = (0..m).collect();
    by_birth.sort_by_key(|&j| (births[j], j));
    let mut next = 0;
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            eng.step(rng, t);
        }
        while next < m && births[by_birth[next]] == k {
            let j = by_birth[next];
            eng.insert(j, starts[j].x, t);
            next += 1;
        }
        for (j, p) in paths.iter_mut().enumerate() {
            if let Some(v) = eng.label_value(j) {
                p[k] = v;
            }
        }
    }
    let collisions = eng.collisions.take().unwrap_or_default();
    Ok(TrajectorySet { geometry, dt, starts: starts.to_vec(), times, paths, collisions })
}

/// Positions at `t_end` of coalescing motions started at time 0 from `xs`.
/// Only the endpoints are kept, so memory does not grow with the horizon.
pub fn coalescing_map(xs: &[f64], geometry: Geometry, dt: f64, t_end: f64, bridge: bool, rng: &mut Rng) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::OutOfRange("no starting points".into()));
    }
    if !(dt > 0.0) || dt >= t_end {
        return Err(Error::OutOfRange(format!("dt = {dt} must be positive and below the horizon {t_end}")));
    }
    let mut eng = Engine::new(geometry, dt, bridge, xs.len(), false);
    for (j, &x) in xs.iter().enumerate() {
        eng.insert(j, x, 0.0);
    }
    for k in 1..=step_count(t_end, dt) {
        eng.step(rng, k as f64 * dt);
    }
    Ok((0..xs.len()).map(|j| eng.value(j)).collect())
}

/// One run of `N` equally spaced circle starts until a single class remains.
#[derive(Clone, Debug)]
pub struct CoalescenceRun {
    /// First grid time with a single class.
    pub time: f64,
    /// Gap vectors `B^k` at `S ∧ t` for each requested `t`.
    pub gaps: Vec<Vec<f64>>,
    /// `S ∧ t` for each requested `t`.
    pub stopped_at: Vec<f64>,
}

/// Gaps `B^k = φ(k/N) − φ((k−1)/N)`, `k = 1..N`.
fn label_gaps(eng: &Engine, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let hi = if k == n { eng.value(0) + 1.0 } else { eng.value(k) };
            hi - eng.value(k - 1)
        })
        .collect()
}

/// Runs the `N`-point circle system until complete coalescence, recording
/// the label gaps at `S ∧ t` for each `t` in `record` (sorted). There is no
/// fixed horizon: the same path is continued until it coalesces.
pub fn coalescence_run(n: usize, dt: f64, bridge: bool, record: &[f64], rng: &mut Rng) -> Result<CoalescenceRun> {
    if n == 0 || !(dt > 0.0) {
        return Err(Error::OutOfRange("need N ≥ 1 and dt > 0".into()));
    }
    let mut eng = Engine::new(Geometry::Circle, dt, bridge, n, false);
    for k in 0..n {
        eng.insert(k, k as f64 / n as f64, 0.0);
    }
    let mut gaps = Vec::with_capacity(record.len());
    let mut stopped_at = Vec::with_capacity(record.len());
    let mut k = 0_u64;
    let mut t = 0.0;
    loop {
        while gaps.len() < record.len() && (record[gaps.len()] <= t || eng.clusters() == 1) {
            gaps.push(label_gaps(&eng, n));
            stopped_at.push(t.min(record[stopped_at.len()]));
        }
        if eng.clusters() == 1 {
            break;
        }
        k += 1;
        t = k as f64 * dt;
        eng.step(rng, t);
    }
    Ok(CoalescenceRun { time: t, gaps, stopped_at })
}

/// First grid time at which the `N` equally spaced circle starts form a
/// single class.
pub fn complete_coalescence_time(n: usize, dt: f64, rng: &mut Rng) -> Result<f64> {
    Ok(coalescence_run(n, dt, false, &[], rng)?.time)
}

/// `E(e^{λT}) = √λ / sin √λ` for `λ < π²`, continued by `√|λ| / sinh √|λ|`
/// for negative `λ`.
pub fn laplace_reference(lambda: f64) -> Result<f64> {
    if !(lambda < PI * PI) {
        return Err(Error::OutOfRange(format!("lambda must be below pi^2, got {lambda}")));
    }
    let r = lambda.abs().sqrt();
    Ok(if lambda == 0.0 {
        1.0
    } else if lambda > 0.0 {
        r / r.sin()
    } else {
        r / r.sinh()
    })
}

/// `M_t = e^{λt} Σ sin(√λ B^k)`.
pub fn sine_martingale(gaps: &[f64], lambda: f64, t: f64) -> f64 {
    let r = lambda.sqrt();
    (lambda * t).exp() * gaps.iter().map(|g| (r * g).sin()).sum::<f64>()
}

/// First grid time at which a standard 3-dimensional Brownian motion from the
/// origin reaches norm 1.
pub fn bes3_passage_time(dt: f64, rng: &mut Rng) -> f64 {
    let sd = dt.sqrt();
    let mut b = [0.0_f64; 3];
    let mut k = 0_u64;
    loop {
        k += 1;
        for c in &mut b {
            let z: f64 = StandardNormal.sample(rng);
            *c += sd * z;
        }
        if b[0] * b[0] + b[1] * b[1] + b[2] * b[2] >= 1.0 {
            return k as f64 * dt;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::{mean_se, normal_cdf};
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn p(s: f64, x: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(s, x)
    }

    #[test]
    fn equal_starts_coincide() {
        let mut r = rng::stream(1, 0);
        let ts = sample_coalescing(&[p(0.0, 0.3), p(0.0, 0.3)], Geometry::Line, 0.01, 1.0, false, &mut r).unwrap();
        assert_eq!(ts.collisions[0][1], 0.0);
        assert_eq!(ts.paths[0], ts.paths[1]);
    }

    #[test]
    fn circle_integer_shift_is_kept() {
        let mut r = rng::stream(2, 0);
        let ts = sample_coalescing(&[p(0.0, 0.2), p(0.0, 1.2)], Geometry::Circle, 0.01, 1.0, false, &mut r).unwrap();
        assert_eq!(ts.collisions[0][1], 0.0);
        for k in 0..ts.times.len() {
            assert_abs_diff_eq!(ts.paths[1][k] - ts.paths[0][k], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn absorbing_and_non_crossing() {
        let mut r = rng::stream(3, 0);
        let starts: Vec<_> = (0..8).map(|k| p(0.0, k as f64 / 8.0)).collect();
        for geometry in [Geometry::Line, Geometry::Circle] {
            for bridge in [false, true] {
                let ts = sample_coalescing(&starts, geometry, 1e-3, 0.5, bridge, &mut r).unwrap();
                for k in 0..ts.times.len() {
                    for j in 1..8 {
                        assert!(ts.paths[j - 1][k] <= ts.paths[j][k]);
                    }
                    if geometry == Geometry::Circle {
                        assert!(ts.paths[7][k] <= ts.paths[0][k] + 1.0);
                    }
                    for a in 0..8 {
                        for b in 0..8 {
                            let d = ts.paths[b][k] - ts.paths[a][k];
                            let met = ts.times[k] >= ts.collisions[a][b];
                            if met {
                                assert_abs_diff_eq!(d, d.round(), epsilon = 1e-12);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn late_start_is_nan_before_birth() {
        let mut r = rng::stream(4, 0);
        let ts = sample_coalescing(&[p(0.0, 0.0), p(0.5, 3.0)], Geometry::Line, 0.1, 1.0, false, &mut r).unwrap();
        assert!(ts.paths[1][4].is_nan());
        assert_eq!(ts.paths[1][5], 3.0);
        assert!(sample_coalescing(&[p(0.0, 0.0), p(0.55, 3.0)], Geometry::Line, 0.1, 1.0, false, &mut r).is_err());
        assert!(sample_coalescing(&[p(0.0, 0.0)], Geometry::Line, 1.0, 1.0, false, &mut r).is_err());
    }

    #[test]
    fn line_hitting_law() {
        // the difference is a Brownian motion of variance 2t, so by reflection
        // P(T ≤ t) = 2(1 − Φ(a / √(2t)))
        let (a, t, runs) = (0.3, 0.25, 4000);
        let mut hits = 0;
        for run in 0..runs {
            let mut r = rng::stream(5, run);
            let ts = sample_coalescing(&[p(0.0, 0.0), p(0.0, a)], Geometry::Line, 1e-4, t, true, &mut r).unwrap();
            if ts.collisions[0][1] <= t {
                hits += 1;
            }
        }
        let want = 2.0 * (1.0 - normal_cdf(a / (2.0 * t).sqrt(), 0.0, 1.0));
        let est = hits as f64 / runs as f64;
        let se = (want * (1.0 - want) / runs as f64).sqrt();
        assert!((est - want).abs() < 4.0 * se, "{est} vs {want}");
    }

    #[test]
    fn coalescence_small_cases() {
        let mut r = rng::stream(6, 0);
        assert_eq!(complete_coalescence_time(1, 1e-3, &mut r).unwrap(), 0.0);
        let run = coalescence_run(4, 1e-3, false, &[0.0, 0.01, 100.0], &mut r).unwrap();
        assert_eq!(run.gaps[0], vec![0.25; 4]);
        assert_eq!(run.stopped_at[2], run.time);
        let last = &run.gaps[2];
        assert_abs_diff_eq!(last.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(last.iter().filter(|&&g| g.abs() < 1e-12).count(), 3);
    }

    #[test]
    fn laplace_reference_values() {
        assert_eq!(laplace_reference(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(laplace_reference(PI * PI / 4.0).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(laplace_reference(1.0).unwrap(), 1.188395105778121, epsilon = 1e-12);
        assert_abs_diff_eq!(laplace_reference(-1.0).unwrap(), 1.0 / 1.0_f64.sinh(), epsilon = 1e-15);
        assert_abs_diff_eq!(laplace_reference(1e-8).unwrap(), 1.0, epsilon = 1e-8);
        assert!(laplace_reference(PI * PI).is_err());
    }

    #[test]
    fn sine_martingale_values() {
        let n = 8;
        let lambda: f64 = 2.0;
        assert_abs_diff_eq!(
            sine_martingale(&vec![1.0 / n as f64; n], lambda, 0.0),
            n as f64 * (lambda.sqrt() / n as f64).sin(),
            epsilon = 1e-15
        );
        let mut g = vec![0.0; n];
        g[0] = 1.0;
        assert_abs_diff_eq!(sine_martingale(&g, lambda, 0.3), (0.6_f64).exp() * lambda.sqrt().sin(), epsilon = 1e-15);
    }

    #[test]
    fn bes3_mean() {
        let mut xs = Vec::new();
        for run in 0..2000 {
            let mut r = rng::stream(7, run);
            let t = bes3_passage_time(1e-4, &mut r);
            assert!(t >= 1e-4);
            xs.push(t);
        }
        let (m, se) = mean_se(&xs);
        // discrete monitoring overshoots by O(√dt)
        assert!((m - 1.0 / 3.0).abs() < 4.0 * se + 0.01, "{m} ± {se}");
    }

    #[test]
    fn endpoint_map_matches_full_sampler() {
        let xs = [0.0, 0.1, 0.45, 0.5, 0.9];
        let starts: Vec<SpaceTimePoint> = xs.iter().map(|&x| p(0.0, x)).collect();
        let full = sample_coalescing(&starts, Geometry::Circle, 1e-3, 0.5, true, &mut rng::stream(8, 2)).unwrap();
        let ends = coalescing_map(&xs, Geometry::Circle, 1e-3, 0.5, true, &mut rng::stream(8, 2)).unwrap();
        assert_eq!(full.times.len(), 501);
        for (j, e) in ends.iter().enumerate() {
            assert_eq!(*e, full.paths[j][500]);
        }
        assert!(circle_preimage(&[0.5, 0.2], &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn preimage_of_identity_like_flow() {
        let mut r = rng::stream(8, 0);
        let starts: Vec<_> = (0..200).map(|k| p(0.0, k as f64 / 200.0)).collect();
        let ts = sample_coalescing(&starts, Geometry::Circle, 1e-6, 2e-6, false, &mut r).unwrap();
        for y in [0.1, 0.55, 3.7, -2.2] {
            assert_abs_diff_eq!(ts.preimage_at_end(y).unwrap(), y, epsilon = 0.01);
        }
    }
}
