//! Distances between event flows.
//!
//! `d_C^{(n)}` is exact. For the Skorokhod-type `d_D^{(n)}` only an upper
//! bound is computed: the infimum over all time changes is replaced by a
//! minimum over an explicit family of piecewise-linear warps, and for each
//! warp the inner supremum over intervals is evaluated exactly. Whether the
//! event-matching family attains the true infimum is not known.

mod cells;
mod snap;

pub use cells::{dist_c_n, dist_d_n_upper, inner_sup, DUpper};
pub use snap::{snap_map, snap_to_grid};

use serde::Serialize;

use crate::flow_core::{EventFlow, Interval};
use crate::{Error, Result};

/// Cap on the number of warps in a default family.
pub const MAX_WARPS: usize = 10_000;

/// An increasing piecewise-linear homeomorphism of the line, given by anchor
/// pairs `(t, λ(t))` and equal to the identity outside the anchor range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeWarp {
    anchors: Vec<(f64, f64)>,
}

impl TimeWarp {
    pub fn identity() -> Self {
        TimeWarp { anchors: Vec::new() }
    }

    /// Anchors must increase strictly in both coordinates, and the first and
    /// last must be fixed points so that the warp joins the identity.
    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        if anchors.iter().any(|&(t, l)| !t.is_finite() || !l.is_finite()) {
            return Err(Error::InvalidWarp("anchors must be finite".into()));
        }
        if anchors.windows(2).any(|w| !(w[0].0 < w[1].0 && w[0].1 < w[1].1)) {
            return Err(Error::InvalidWarp("anchors must increase strictly".into()));
        }
        if let (Some(a), Some(b)) = (anchors.first(), anchors.last()) {
            if a.0 != a.1 || b.0 != b.1 {
                return Err(Error::InvalidWarp("end anchors must lie on the diagonal".into()));
            }
        }
        let mut anchors = anchors;
        // drop interior anchors that sit on a straight run
        let mut i = 1;
        while i + 1 < anchors.len() {
            let (p, c, q) = (anchors[i - 1], anchors[i], anchors[i + 1]);
            let lerp = p.1 + (c.0 - p.0) * (q.1 - p.1) / (q.0 - p.0);
            if lerp == c.1 {
                anchors.remove(i);
            } else {
                i += 1;
            }
        }
        if anchors.len() == 2 || anchors.iter().all(|&(t, l)| t == l) {
            anchors.clear();
        }
        Ok(TimeWarp { anchors })
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn is_identity(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        lerp_table(&self.anchors, t, |a| a.0, |a| a.1)
    }

    pub fn eval_inverse(&self, u: f64) -> f64 {
        lerp_table(&self.anchors, u, |a| a.1, |a| a.0)
    }

    pub fn inverse(&self) -> TimeWarp {
        TimeWarp { anchors: self.anchors.iter().map(|&(t, l)| (l, t)).collect() }
    }

    /// `self ∘ inner`. Fails only if rounding merges two anchors.
    pub fn compose(&self, inner: &TimeWarp) -> Result<TimeWarp> {
        let mut ts: Vec<f64> = inner.anchors.iter().map(|a| a.0).collect();
        ts.extend(self.anchors.iter().map(|a| inner.eval_inverse(a.0)));
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        TimeWarp::new(ts.into_iter().map(|t| (t, self.eval(inner.eval(t)))).collect())
    }

    /// Image of an interval; endpoint membership is preserved.
    pub fn map_interval(&self, iv: &Interval) -> Interval {
        Interval::new(self.eval(iv.lo), self.eval(iv.hi), iv.lo_closed, iv.hi_closed)
    }
}

/// Piecewise-linear interpolation through a sorted table, identity outside.
/// An exact hit on a node returns the node's image exactly.
fn lerp_table(a: &[(f64, f64)], x: f64, key: impl Fn(&(f64, f64)) -> f64, val: impl Fn(&(f64, f64)) -> f64) -> f64 {
    let n = a.len();
    if n == 0 {
        return x;
    }
    let i = a.partition_point(|p| key(p) < x);
    if i < n && key(&a[i]) == x {
        return val(&a[i]);
    }
    if i == 0 || i == n {
        return x;
    }
    let (p, q) = (&a[i - 1], &a[i]);
    val(p) + (x - key(p)) * (val(q) - val(p)) / (key(q) - key(p))
}

/// `γ(λ) = sup|λ(t) − t| ∨ sup|log slope|`, exact over the anchor segments.
pub fn gamma(w: &TimeWarp) -> f64 {
    let disp = w.anchors.iter().fold(0.0_f64, |m, &(t, l)| m.max((l - t).abs()));
    w.anchors.windows(2).fold(disp, |m, s| {
        let slope = (s[1].1 - s[0].1) / (s[1].0 - s[0].0);
        m.max(slope.ln().abs())
    })
}

/// `χ_n(I) = 0 ∨ (n + 1 − R) ∧ 1` with `R = sup I ∨ (−inf I)`.
pub fn chi_n(iv: &Interval, n: u32) -> f64 {
    chi_of_radius(iv.radius(), n)
}

fn chi_of_radius(r: f64, n: u32) -> f64 {
    (n as f64 + 1.0 - r).clamp(0.0, 1.0)
}

/// The identity together with warps matching the `k`-th event of `phi` to the
/// `(k + o)`-th event of `psi` for every offset `|o| ≤ max_offset`, anchored to
/// the identity at `±(n + 2)`. At most [`MAX_WARPS`] warps.
pub fn default_family(phi: &EventFlow, psi: &EventFlow, n: u32, max_offset: usize) -> Vec<TimeWarp> {
    let edge = n as f64 + 2.0;
    let inside = |f: &EventFlow| -> Vec<f64> { f.times().into_iter().filter(|t| t.abs() < edge).collect() };
    let (a, b) = (inside(phi), inside(psi));
    let mut out = vec![TimeWarp::identity()];
    let max_offset = max_offset as i64;
    for o in -max_offset..=max_offset {
        if out.len() >= MAX_WARPS {
            break;
        }
        let mut anchors = vec![(-edge, -edge)];
        for (i, &t) in a.iter().enumerate() {
            let j = i as i64 + o;
            if j >= 0 && (j as usize) < b.len() {
                anchors.push((t, b[j as usize]));
            }
        }
        if anchors.len() == 1 {
            continue;
        }
        anchors.push((edge, edge));
        if let Ok(w) = TimeWarp::new(anchors) {
            if !out.contains(&w) {
                out.push(w);
            }
        }
    }
    out
}

/// `Σ_{n ≤ n_max} 2^{−n} (d^{(n)} ∧ 1)`, with truncation error at most
/// `2^{−n_max}`. `d` supplies the level distances.
pub fn full_metric(n_max: u32, mut d: impl FnMut(u32) -> Result<f64>) -> Result<(f64, f64)> {
    let mut total = 0.0;
    for n in 1..=n_max {
        total += 0.5_f64.powi(n as i32) * d(n)?.min(1.0);
    }
    Ok((total, 0.5_f64.powi(n_max as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(&TimeWarp::identity()), 0.0);
        // a bump moving 0 to 0.1 with identity outside [-1, 1]
        let w = TimeWarp::new(vec![(-1.0, -1.0), (0.0, 0.1), (1.0, 1.0)]).unwrap();
        let want = 0.1_f64.max(1.1_f64.ln()).max(0.9_f64.ln().abs());
        assert_abs_diff_eq!(gamma(&w), want, epsilon = 1e-15);
        assert_abs_diff_eq!(gamma(&w.inverse()), gamma(&w), epsilon = 1e-15);
        // dense sampling never exceeds the exact value
        for j in 0..=1000 {
            let t = -1.5 + 3.0 * j as f64 / 1000.0;
            assert!((w.eval(t) - t).abs() <= gamma(&w) + 1e-15);
        }
    }

    #[test]
    fn warp_validation() {
        assert!(TimeWarp::new(vec![(-1.0, -1.0), (0.0, 0.5), (0.5, 0.4), (1.0, 1.0)]).is_err());
        assert!(TimeWarp::new(vec![(-1.0, -0.9), (1.0, 1.0)]).is_err());
        assert!(TimeWarp::new(vec![(-1.0, -1.0), (0.0, 0.0), (1.0, 1.0)]).unwrap().is_identity());
    }

    #[test]
    fn inverse_and_compose() {
        let w = TimeWarp::new(vec![(-2.0, -2.0), (-0.5, -0.2), (0.3, 0.9), (2.0, 2.0)]).unwrap();
        let v = TimeWarp::new(vec![(-3.0, -3.0), (0.0, -0.4), (3.0, 3.0)]).unwrap();
        let wv = w.compose(&v).unwrap();
        for j in 0..=200 {
            let t = -4.0 + 8.0 * j as f64 / 200.0;
            assert_abs_diff_eq!(w.eval_inverse(w.eval(t)), t, epsilon = 1e-12);
            assert_abs_diff_eq!(w.inverse().eval(t), w.eval_inverse(t), epsilon = 1e-12);
            assert_abs_diff_eq!(wv.eval(t), w.eval(v.eval(t)), epsilon = 1e-12);
        }
        assert!(gamma(&wv) <= gamma(&w) + gamma(&v) + 1e-12);
        assert_eq!(w.eval(-0.5), -0.2);
        assert_eq!(w.eval_inverse(0.9), 0.3);
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi_n(&Interval::open_closed(0.0, 1.0), 2), 1.0);
        assert_eq!(chi_n(&Interval::open_closed(0.0, 3.0), 2), 0.0);
        assert_eq!(chi_n(&Interval::open_closed(0.0, 2.5), 2), 0.5);
        assert_eq!(chi_n(&Interval::open_closed(-2.25, 0.0), 2), 0.75);
    }

    #[test]
    fn full_metric_truncation() {
        let (d, tail) = full_metric(10, |_| Ok(5.0)).unwrap();
        assert_abs_diff_eq!(d + tail, 1.0, epsilon = 1e-15);
    }
}
