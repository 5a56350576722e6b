//! Exact evaluation of `d_C^{(n)}` and of the inner supremum of `d_D^{(n)}`
//! for a fixed warp.
//!
//! For event flows `Φ_I` only depends on which events `I` contains, so the
//! supremum over intervals reduces to finitely many endpoint slots: a
//! breakpoint taken open or closed, or the open gap between two breakpoints.
//! Inside a pair of slots `χ_n(I)` and `χ_n(λ(I))` are affine in the
//! endpoints away from the lines `hi = −lo` and `λ(hi) = −λ(lo)`, and the
//! norm is convex in them, so the supremum sits at a vertex of the cell cut
//! by those lines.

use rayon::prelude::*;
use serde::Serialize;

use super::{chi_of_radius, gamma, TimeWarp};
use crate::flow_core::{EventFlow, Interval};
use crate::map_algebra::{check_periods, compose, cross, dist_d, Contraction, MonotoneMap};
use crate::{Error, Result};

/// Best value over a warp family, with the warp that attains it.
#[derive(Clone, Debug, Serialize)]
pub struct DUpper {
    pub value: f64,
    pub gamma: f64,
    pub inner: f64,
    pub warp: TimeWarp,
    pub candidates: usize,
}

fn require(f: &EventFlow, iv: Interval, who: &str) -> Result<()> {
    if iv.is_subset_of(&f.horizon()) {
        Ok(())
    } else {
        Err(Error::HorizonTooSmall(format!("{who} has horizon {} but {iv} is needed", f.horizon())))
    }
}

/// Composes events `lo..hi` of a flow, extending a cached prefix when possible.
struct Prefix<'a> {
    flow: &'a EventFlow,
    start: usize,
    end: usize,
    map: MonotoneMap,
    cross: Contraction,
}

impl<'a> Prefix<'a> {
    fn new(flow: &'a EventFlow, start: usize) -> Self {
        Prefix {
            flow,
            start,
            end: start,
            map: MonotoneMap::identity(flow.period()),
            cross: Contraction::zero(flow.period()),
        }
    }

    fn extend_to(&mut self, end: usize) -> Result<()> {
        if end <= self.end {
            return Ok(());
        }
        for e in &self.flow.events()[self.end..end] {
            self.map = compose(&e.map.materialize(), &self.map)?;
        }
        self.end = end;
        self.cross = cross(&self.map)?;
        Ok(())
    }

    fn cross_for(&self, end: usize) -> Option<&Contraction> {
        (end > self.start).then_some(&self.cross)
    }
}

/// `d_C^{(n)}(φ, ψ) = sup_{−n < s < t < n} d_𝒟(φ_{(s,t]}, ψ_{(s,t]})`. The
/// supremum runs over contiguous blocks of the merged event times.
pub fn dist_c_n(phi: &EventFlow, psi: &EventFlow, n: u32) -> Result<f64> {
    check_periods(phi.period(), psi.period())?;
    let nn = n as f64;
    let window = Interval::open(-nn, nn);
    require(phi, window, "phi")?;
    require(psi, window, "psi")?;
    let mut times: Vec<f64> = phi.times().into_iter().chain(psi.times()).filter(|t| window.contains(*t)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let idx = |f: &EventFlow, t: f64| f.events().partition_point(|e| e.t <= t);
    let mut best = 0.0_f64;
    for (i, &first) in times.iter().enumerate() {
        let mut a = Prefix::new(phi, phi.events().partition_point(|e| e.t < first));
        let mut b = Prefix::new(psi, psi.events().partition_point(|e| e.t < first));
        for &last in &times[i..] {
            a.extend_to(idx(phi, last))?;
            b.extend_to(idx(psi, last))?;
            best = best.max(dist_d(&a.map, &b.map)?);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    /// Range of the endpoint position.
    u: f64,
    v: f64,
    /// First included event when used as the lower endpoint.
    phi_lo: usize,
    psi_lo: usize,
    /// One past the last included event when used as the upper endpoint.
    phi_hi: usize,
    psi_hi: usize,
}

/// The cell vertices of `[l0, l1] × [h0, h1]` cut by `hi = −lo` and
/// `λ(hi) = −λ(lo)`, where `λ` is affine on both sides.
fn cell_vertices(w: &TimeWarp, l: (f64, f64), h: (f64, f64)) -> Vec<(f64, f64)> {
    let affine = |(a, b): (f64, f64)| {
        let s = if b > a { (w.eval(b) - w.eval(a)) / (b - a) } else { 1.0 };
        (w.eval(a) - s * a, s)
    };
    let (al, sl) = affine(l);
    let (ah, sh) = affine(h);
    let mut pts = vec![(l.0, h.0), (l.0, h.1), (l.1, h.0), (l.1, h.1)];
    for lo in [l.0, l.1] {
        pts.push((lo, -lo));
        pts.push((lo, -(al + ah + sl * lo) / sh));
    }
    for hi in [h.0, h.1] {
        pts.push((-hi, hi));
        pts.push((-(al + ah + sh * hi) / sl, hi));
    }
    if sh != sl {
        let lo = (al + ah) / (sh - sl);
        pts.push((lo, -lo));
    }
    pts.retain(|&(lo, hi)| lo >= l.0 && lo <= l.1 && hi >= h.0 && hi <= h.1 && lo <= hi);
    pts
}

/// `sup_I ‖χ_n(I) φ_I^× − χ_n(λ(I)) ψ_{λ(I)}^×‖` for one warp `λ`, exact.
pub fn inner_sup(phi: &EventFlow, psi: &EventFlow, n: u32, w: &TimeWarp) -> Result<f64> {
    check_periods(phi.period(), psi.period())?;
    let nn = n as f64;
    let edge = nn + 1.0;
    let lo_b = (-edge).min(w.eval_inverse(-edge));
    let hi_b = edge.max(w.eval_inverse(edge));
    // outside (lo_b, hi_b) both weights vanish
    require(phi, Interval::open(lo_b, hi_b), "phi")?;
    require(psi, Interval::open(w.eval(lo_b), w.eval(hi_b)), "psi")?;

    let p_pos: Vec<f64> = phi.times().into_iter().filter(|&t| t > lo_b && t < hi_b).collect();
    let p_off = phi.events().partition_point(|e| e.t <= lo_b);
    let (q_lo, q_hi) = (w.eval(lo_b), w.eval(hi_b));
    let q_off = psi.events().partition_point(|e| e.t <= q_lo);
    let q_pos: Vec<f64> =
        psi.times().into_iter().filter(|&u| u > q_lo && u < q_hi).map(|u| w.eval_inverse(u)).collect();

    let mut breaks: Vec<f64> = vec![lo_b, hi_b];
    for c in [nn, edge] {
        breaks.extend([c, -c, w.eval_inverse(c), w.eval_inverse(-c)]);
    }
    breaks.extend(w.anchors().iter().map(|a| a.0));
    breaks.extend(&p_pos);
    breaks.extend(&q_pos);
    breaks.retain(|&b| b >= lo_b && b <= hi_b);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let before = |pos: &[f64], b: f64| pos.partition_point(|&t| t < b);
    let upto = |pos: &[f64], b: f64| pos.partition_point(|&t| t <= b);
    let mut slots = Vec::with_capacity(3 * breaks.len());
    for (k, &b) in breaks.iter().enumerate() {
        let (pb, pu) = (p_off + before(&p_pos, b), p_off + upto(&p_pos, b));
        let (qb, qu) = (q_off + before(&q_pos, b), q_off + upto(&q_pos, b));
        // open then closed, so upper indices never decrease along the list
        slots.push(Slot { u: b, v: b, phi_lo: pu, psi_lo: qu, phi_hi: pb, psi_hi: qb });
        slots.push(Slot { u: b, v: b, phi_lo: pb, psi_lo: qb, phi_hi: pu, psi_hi: qu });
        if let Some(&next) = breaks.get(k + 1) {
            slots.push(Slot { u: b, v: next, phi_lo: pu, psi_lo: qu, phi_hi: pu, psi_hi: qu });
        }
    }

    let mut best = 0.0_f64;
    for lo in &slots {
        let mut a = Prefix::new(phi, lo.phi_lo);
        let mut b = Prefix::new(psi, lo.psi_lo);
        let mut cached: Option<((usize, usize), Vec<f64>, Vec<f64>)> = None;
        for hi in slots.iter().filter(|h| h.u >= lo.v) {
            let verts = cell_vertices(w, (lo.u, lo.v), (hi.u, hi.v));
            if verts.is_empty() {
                continue;
            }
            let key = (hi.phi_hi, hi.psi_hi);
            if cached.as_ref().map(|c| c.0) != Some(key) {
                a.extend_to(hi.phi_hi)?;
                b.extend_to(hi.psi_hi)?;
                let zero = Contraction::zero(phi.period());
                let fa = a.cross_for(hi.phi_hi).unwrap_or(&zero);
                let fb = b.cross_for(hi.psi_hi).unwrap_or(&zero);
                let (x, y) = fa.merged_values(fb)?;
                cached = Some((key, x, y));
            }
            let (_, x, y) = cached.as_ref().unwrap();
            for (l, h) in verts {
                let ca = chi_of_radius(h.max(-l), n);
                let cb = chi_of_radius(w.eval(h).max(-w.eval(l)), n);
                if ca == 0.0 && cb == 0.0 {
                    continue;
                }
                let v = x.iter().zip(y).fold(0.0_f64, |m, (p, q)| m.max((ca * p - cb * q).abs()));
                best = best.max(v);
            }
        }
    }
    Ok(best)
}

/// Minimum over `{identity} ∪ warps` of `γ(λ) ∨ inner_sup(λ)`: an upper bound
/// on `d_D^{(n)}(φ, ψ)`.
pub fn dist_d_n_upper(phi: &EventFlow, psi: &EventFlow, n: u32, warps: &[TimeWarp]) -> Result<DUpper> {
    let id = TimeWarp::identity();
    let mut family: Vec<&TimeWarp> = vec![&id];
    family.extend(warps.iter().filter(|w| !w.is_identity()));
    let scored: Vec<(f64, f64, usize)> = family
        .par_iter()
        .enumerate()
        .map(|(i, w)| Ok((gamma(w), inner_sup(phi, psi, n, w)?, i)))
        .collect::<Result<_>>()?;
    let &(g, inner, i) = scored
        .iter()
        .min_by(|a, b| a.0.max(a.1).total_cmp(&b.0.max(b.1)).then(a.2.cmp(&b.2)))
        .expect("family contains the identity");
    Ok(DUpper { value: g.max(inner), gamma: g, inner, warp: family[i].clone(), candidates: family.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_metrics::{chi_n, default_family};
    use crate::map_algebra::{random, rmap};
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use rand::Rng as _;

    fn random_flow(r: &mut rng::Rng, k: usize, h: f64) -> EventFlow {
        let mut ts: Vec<f64> = (0..k).map(|_| r.random_range(-h + 0.5..h - 0.5)).collect();
        ts.sort_by(f64::total_cmp);
        let events = ts.into_iter().map(|t| (t, random::random_map(r, 3))).collect();
        EventFlow::new(1.0, Interval::open_closed(-h, h), events).unwrap()
    }

    /// Dense enumeration of intervals, with both endpoint kinds and points
    /// nudged around every event.
    fn brute_inner(phi: &EventFlow, psi: &EventFlow, n: u32, w: &TimeWarp) -> f64 {
        let edge = n as f64 + 1.0;
        let mut xs: Vec<f64> = (0..=160).map(|j| -edge - 0.3 + (2.0 * edge + 0.6) * j as f64 / 160.0).collect();
        for t in phi.times().into_iter().chain(psi.times().into_iter().map(|u| w.eval_inverse(u))) {
            xs.extend([t - 1e-9, t, t + 1e-9]);
        }
        xs.retain(|x| phi.horizon().contains(*x) && psi.horizon().contains(w.eval(*x)));
        let mut best = 0.0_f64;
        for &lo in &xs {
            for &hi in xs.iter().filter(|&&h| h >= lo) {
                for (lc, hc) in [(false, false), (false, true), (true, false), (true, true)] {
                    let iv = Interval::new(lo, hi, lc, hc);
                    let jv = w.map_interval(&iv);
                    if iv.is_empty() || !iv.is_subset_of(&phi.horizon()) || !jv.is_subset_of(&psi.horizon()) {
                        continue;
                    }
                    let f = cross(&phi.flow_map(&iv).unwrap()).unwrap();
                    let g = cross(&psi.flow_map(&jv).unwrap()).unwrap();
                    let (x, y) = f.merged_values(&g).unwrap();
                    let (a, b) = (chi_n(&iv, n), chi_n(&jv, n));
                    best = x.iter().zip(&y).fold(best, |m, (p, q)| m.max((a * p - b * q).abs()));
                }
            }
        }
        best
    }

    #[test]
    fn one_event_against_empty() {
        let g = rmap(0.5).unwrap().rotate(0.2);
        let h = Interval::open_closed(-4.0, 4.0);
        let phi = EventFlow::new(1.0, h, vec![(0.5, g.clone())]).unwrap();
        let psi = EventFlow::empty(1.0, h);
        let want = dist_d(&g, &MonotoneMap::identity(1.0)).unwrap();
        assert_abs_diff_eq!(dist_c_n(&phi, &psi, 1).unwrap(), want, epsilon = 1e-15);
        assert_eq!(dist_c_n(&phi, &phi, 1).unwrap(), 0.0);
        assert_eq!(dist_d_n_upper(&phi, &phi, 1, &[]).unwrap().value, 0.0);
        assert_abs_diff_eq!(dist_d_n_upper(&phi, &psi, 1, &[]).unwrap().value, want, epsilon = 1e-15);
        // an event outside (−n, n) only counts for d_D, and only with weight χ
        let far = EventFlow::new(1.0, h, vec![(1.5, g.clone())]).unwrap();
        assert_eq!(dist_c_n(&far, &psi, 1).unwrap(), 0.0);
        assert_abs_diff_eq!(dist_d_n_upper(&far, &psi, 1, &[]).unwrap().value, 0.5 * want, epsilon = 1e-15);
    }

    #[test]
    fn horizon_checks() {
        let phi = EventFlow::empty(1.0, Interval::open_closed(-1.5, 1.5));
        assert!(matches!(dist_c_n(&phi, &phi, 2), Err(Error::HorizonTooSmall(_))));
        assert!(matches!(inner_sup(&phi, &phi, 1, &TimeWarp::identity()), Err(Error::HorizonTooSmall(_))));
        assert!(dist_c_n(&phi, &phi, 1).is_ok());
    }

    #[test]
    fn shifted_flow_is_close_in_d_but_not_in_c() {
        let g = rmap(0.5).unwrap();
        let h = Interval::open_closed(-5.0, 5.0);
        for delta in [0.01, 0.05] {
            let phi = EventFlow::new(1.0, h, vec![(0.3, g.clone())]).unwrap();
            let psi = EventFlow::new(1.0, h, vec![(0.3 + delta, g.clone())]).unwrap();
            assert_abs_diff_eq!(dist_c_n(&phi, &psi, 1).unwrap(), 0.25, epsilon = 1e-15);
            let d = dist_d_n_upper(&phi, &psi, 1, &default_family(&phi, &psi, 1, 2)).unwrap();
            assert!(d.value <= delta + 1e-12, "{d:?}");
            assert!(d.value >= 0.0 && !d.warp.is_identity());
        }
    }

    #[test]
    fn inner_sup_matches_brute_force() {
        let mut r = rng::stream(71, 0);
        for case in 0..6 {
            let phi = random_flow(&mut r, 1 + case % 3, 3.5);
            let psi = random_flow(&mut r, 2, 3.5);
            let mut warps = default_family(&phi, &psi, 1, 1);
            warps.push(TimeWarp::new(vec![(-2.5, -2.5), (-0.4, 0.1), (1.0, 1.3), (2.5, 2.5)]).unwrap());
            for w in &warps {
                let exact = inner_sup(&phi, &psi, 1, w).unwrap();
                let brute = brute_inner(&phi, &psi, 1, w);
                assert!(brute <= exact + 1e-12, "brute {brute} above exact {exact}");
                // the brute grid is 1/40 wide, weights are 1-Lipschitz, |f^×| ≤ 1/2
                assert!(exact - brute <= 0.02, "exact {exact} brute {brute}");
            }
        }
    }

    #[test]
    fn ordering_and_symmetry() {
        let mut r = rng::stream(72, 0);
        for _ in 0..8 {
            // events inside (−n, n) so that d_D ≤ d_C holds with the identity warp
            let mut phi = random_flow(&mut r, 3, 3.5);
            let mut psi = random_flow(&mut r, 3, 3.5);
            let keep = |f: &EventFlow| {
                let ev = f.events().iter().filter(|e| e.t.abs() < 1.9).map(|e| (e.t, e.map.materialize())).collect();
                EventFlow::new(1.0, f.horizon(), ev).unwrap()
            };
            phi = keep(&phi);
            psi = keep(&psi);
            let c = dist_c_n(&phi, &psi, 2).unwrap();
            let id = inner_sup(&phi, &psi, 2, &TimeWarp::identity()).unwrap();
            assert!(id <= c + 1e-12, "{id} > {c}");
            assert_abs_diff_eq!(c, dist_c_n(&psi, &phi, 2).unwrap(), epsilon = 1e-12);
            let fam = default_family(&phi, &psi, 1, 2);
            let inv: Vec<TimeWarp> = fam.iter().map(|w| w.inverse()).collect();
            let d1 = dist_d_n_upper(&phi, &psi, 1, &fam).unwrap().value;
            let d2 = dist_d_n_upper(&psi, &phi, 1, &inv).unwrap().value;
            assert_abs_diff_eq!(d1, d2, epsilon = 1e-9);
        }
    }
}
