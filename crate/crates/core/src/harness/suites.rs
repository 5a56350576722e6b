//! Deterministic property suites: map algebra, flow algebra, flow metrics and
//! web metrics. Each returns one [`Check`] per property, with the worst
//! violation over all cases as the estimate.

use rand::Rng as _;

use super::report::{Check, Table};
use crate::flow_core::{sample_flow, Embedding, EventFlow, Interval, SpaceTimePoint};
use crate::flow_metrics::{default_family, dist_c_n, dist_d_n_upper, inner_sup, snap_map, TimeWarp};
use crate::map_algebra::{
    compose, cross, dist_d, make_rmap, random, rho, rmap, sup_displacement, uncross, MonotoneMap, Side,
};
use crate::rng::{self, Rng};
use crate::web_bridge::{
    directed_hausdorff_f, dist_pi_f, extract_web, hausdorff_f, lattice_starts, path_grid, start_mesh, CompactPath,
};
use crate::Result;

pub const TOL: f64 = 1e-9;

/// r values of the r-map family used by the exact suites.
pub const R_FAMILY: [f64; 6] = [0.5, 0.3, 0.2, 0.1, 0.05, 0.02];

/// Tracks the worst violation of one property over many cases.
struct Worst {
    name: &'static str,
    null: &'static str,
    n: usize,
    max: f64,
}

impl Worst {
    fn new(name: &'static str, null: &'static str) -> Self {
        Worst { name, null, n: 0, max: f64::NEG_INFINITY }
    }

    fn add(&mut self, v: f64) {
        self.n += 1;
        // NaN must fail the check, so it wins the maximum
        self.max = if v.is_nan() || self.max.is_nan() { f64::NAN } else { self.max.max(v) };
    }

    fn check(&self, criterion: u8, tol: f64) -> Check {
        // no cases, or a NaN case, is a failure
        let est = if self.max.is_nan() || self.n == 0 { f64::INFINITY } else { self.max };
        Check::at_most(criterion, self.name, self.null, self.n, est, tol)
    }
}

fn grid(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| lo + (hi - lo) * (i as f64 + 0.37) / k as f64)
}

/// Worst violation of `f⁻(x−e)−e ≤ g⁻(x) ≤ g⁺(x) ≤ f⁺(x+e)+e` over the
/// points `xs`; positive means the sandwich fails.
fn sandwich_violation(f: &MonotoneMap, g: &MonotoneMap, e: f64, xs: &[f64]) -> f64 {
    xs.iter().fold(f64::NEG_INFINITY, |m, &x| {
        let lo = f.eval(x - e, Side::Left) - e - g.eval(x, Side::Left);
        let hi = g.eval(x, Side::Right) - f.eval(x + e, Side::Right) - e;
        m.max(lo).max(hi)
    })
}

/// Points where the sandwich is tight: knots of `g`, knots of `f` moved by
/// `±e`, and a regular grid.
fn sandwich_points(f: &MonotoneMap, g: &MonotoneMap, e: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = grid(0.0, 1.0, 400).collect();
    for k in g.knots() {
        xs.extend([k.x, k.x - 1e-12, k.x + 1e-12]);
    }
    for k in f.knots() {
        xs.extend([k.x + e, k.x - e, k.x + e + 1e-12, k.x - e - 1e-12]);
    }
    xs
}

/// Criterion 1: 200 random maps of the mean-zero class plus the r-map family.
pub fn algebra_suite(seed: u64, n_maps: usize) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut r = rng::stream(seed, 0);
    let mut maps: Vec<MonotoneMap> = (0..n_maps).map(|i| random::random_dstar_map(&mut r, 2 + i % 6)).collect();
    for &v in &R_FAMILY {
        maps.push(rmap(v)?);
    }
    let mut degree = Worst::new("degree property", "f(x+1) = f(x)+1 on both sides");
    let mut zero = Worst::new("d(f,f) = 0", "d_D(f,f) = 0");
    let mut sym = Worst::new("symmetry", "d_D(f,g) = d_D(g,f)");
    let mut tri = Worst::new("triangle inequality", "d_D(f,h) <= d_D(f,g) + d_D(g,h)");
    let mut sep = Worst::new("separation", "d_D(f,g) > 0 for f != g (count of zeros)");
    let mut sand = Worst::new("eps-characterization holds", "sandwich holds at eps + 1e-9");
    let mut sharp = Worst::new("eps-characterization sharp", "sandwich fails at eps - 1e-3 (count of misses)");
    let mut half = Worst::new("2 d(f,id) = |f - id|", "2 d_D(f,id) = sup displacement");
    let mut round = Worst::new("cross/uncross round trip", "uncross(cross f) = f");
    let mut inv = Worst::new("cross of inverse", "(f^-1)^x = -f^x");
    let mut rho_inv = Worst::new("rho(f^-1) = rho(f)", "relative difference 0");
    let mut fr3 = Worst::new("jump bound", "sup|f - id| <= (3/rho)^(1/3)");
    let mut rho_r = Worst::new("rho(r-map)", "rho = 3/(2 r^3), relative difference 0");
    let mut table = Table::new("algebra", &["case", "rho", "sup_displacement", "d_to_identity"]);
    let id = MonotoneMap::identity(1.0);

    for (i, f) in maps.iter().enumerate() {
        for _ in 0..20 {
            let x = r.random_range(-3.0..3.0);
            for side in [Side::Left, Side::Right] {
                degree.add((f.eval(x + 1.0, side) - f.eval(x, side) - 1.0).abs());
            }
        }
        let disp = sup_displacement(f);
        let d_id = dist_d(f, &id)?;
        half.add((2.0 * d_id - disp).abs());
        round.add(dist_d(&uncross(&cross(f)?)?, f)?);
        let fi = f.invert();
        inv.add(cross(&fi)?.sup_distance(&cross(f)?.negate())?);
        let (rf, rfi) = (rho(f)?, rho(&fi)?);
        rho_inv.add((rfi / rf - 1.0).abs());
        fr3.add(disp - (3.0 / rf).cbrt());
        zero.add(dist_d(f, f)?);
        table.push(vec![i as f64, rf, disp, d_id]);

        let g = &maps[(i + 1) % maps.len()];
        let h = &maps[(i + 7) % maps.len()];
        let (fg, gf, gh, fh) = (dist_d(f, g)?, dist_d(g, f)?, dist_d(g, h)?, dist_d(f, h)?);
        sym.add((fg - gf).abs());
        tri.add(fh - fg - gh);
        sep.add(if f != g && fg == 0.0 { 1.0 } else { 0.0 });
        for (a, b) in [(f, g), (g, f)] {
            sand.add(sandwich_violation(a, b, fg + TOL, &sandwich_points(a, b, fg + TOL)));
        }
        if fg > 1e-3 {
            let e = fg - 1e-3;
            let worst = sandwich_violation(f, g, e, &sandwich_points(f, g, e))
                .max(sandwich_violation(g, f, e, &sandwich_points(g, f, e)));
            sharp.add(if worst > 0.0 { 0.0 } else { 1.0 });
        }
    }
    for &v in &R_FAMILY {
        rho_r.add((rho(&rmap(v)?)? / (1.5 / (v * v * v)) - 1.0).abs());
    }
    let checks = vec![
        degree.check(1, TOL),
        zero.check(1, TOL),
        sym.check(1, TOL),
        tri.check(1, TOL),
        sep.check(1, 0.0),
        sand.check(1, 0.0),
        sharp.check(1, 0.0),
        half.check(1, TOL),
        round.check(1, TOL),
        inv.check(1, TOL),
        rho_inv.check(1, TOL),
        fr3.check(1, TOL),
        rho_r.check(1, TOL),
    ];
    Ok((checks, vec![table]))
}

/// A flow of `k` random maps at uniform times in `(−span, span)`.
pub fn random_flow(r: &mut Rng, k: usize, span: f64, horizon: Interval) -> Result<EventFlow> {
    let mut ts: Vec<f64> = (0..k).map(|_| r.random_range(-span..span)).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let events = ts
        .into_iter()
        .map(|t| {
            let segs = 2 + r.random_range(0..4);
            (t, random::random_map(r, segs))
        })
        .collect();
    EventFlow::new(1.0, horizon, events)
}

/// A random interval inside `(lo, hi)` with random endpoint flags, split at
/// a random point (an event time half of the time) into `I₁ ⊕ I₂`.
fn random_split(r: &mut Rng, lo: f64, hi: f64, times: &[f64]) -> (Interval, Interval, Interval) {
    let mut a = r.random_range(lo..hi);
    let mut c = r.random_range(lo..hi);
    if a > c {
        std::mem::swap(&mut a, &mut c);
    }
    let inside: Vec<f64> = times.iter().copied().filter(|&t| t > a && t < c).collect();
    let b = if !inside.is_empty() && r.random::<bool>() {
        inside[r.random_range(0..inside.len())]
    } else {
        r.random_range(a..=c)
    };
    let (lc, hc, mid) = (r.random::<bool>(), r.random::<bool>(), r.random::<bool>());
    let whole = Interval::new(a, c, lc, hc);
    // the split point goes to exactly one side
    (whole, Interval::new(a, b, lc, mid), Interval::new(b, c, !mid, hc))
}

/// Criterion 2: flow composition, weak-flow inequalities and reversal.
pub fn flow_algebra_suite(seed: u64) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut r = rng::stream(seed, 1);
    let h = Interval::open_closed(-3.0, 3.0);
    let mut flows: Vec<EventFlow> = (0..20).map(|i| random_flow(&mut r, 1 + i % 12, 2.9, h)).collect::<Result<_>>()?;
    for (i, v) in [0.3, 0.2].into_iter().enumerate() {
        let emb = if i == 0 { Embedding::Lattice } else { Embedding::Poisson };
        flows.push(sample_flow(&make_rmap(v)?, emb, h, rng::derive_seed(seed, i as u64))?);
    }
    let mut lwf = Worst::new("composition equality", "Phi_I = Phi_I2 o Phi_I1 for I = I1 + I2");
    let mut wf = Worst::new("weak-flow inequalities", "Phi-_I2 o Phi-_I1 <= Phi-_I <= Phi+_I <= Phi+_I2 o Phi+_I1");
    let mut rr = Worst::new("double reversal", "reverse(reverse(Phi)) = Phi");
    let mut rev = Worst::new("reversal is inversion", "reverse(Phi)_I = (Phi_-I)^-1");
    let xs: Vec<f64> = grid(-1.0, 2.0, 100).collect();
    for f in &flows {
        let times = f.times();
        let back = f.reverse().reverse();
        rr.add(if back.times() == times { 0.0 } else { f64::INFINITY });
        let fr = f.reverse();
        for _ in 0..10 {
            let (whole, i1, i2) = random_split(&mut r, -3.0, 3.0, &times);
            let (m, m1, m2) = (f.flow_map(&whole)?, f.flow_map(&i1)?, f.flow_map(&i2)?);
            let comp = compose(&m2, &m1)?;
            lwf.add(dist_d(&m, &comp)?);
            for &x in &xs {
                for side in [Side::Left, Side::Right] {
                    lwf.add((m.eval(x, side) - m2.eval(m1.eval(x, side), side)).abs());
                }
                let lo = m2.eval(m1.eval(x, Side::Left), Side::Left);
                let hi = m2.eval(m1.eval(x, Side::Right), Side::Right);
                let (ml, mr) = (m.eval(x, Side::Left), m.eval(x, Side::Right));
                wf.add((lo - ml).max(ml - mr).max(mr - hi));
            }
            rr.add(dist_d(&back.flow_map(&whole)?, &m)?);
            let neg = whole.neg();
            rev.add(dist_d(&fr.flow_map(&neg)?, &m.invert())?);
        }
    }
    let checks = vec![lwf.check(2, TOL), wf.check(2, TOL), rr.check(2, TOL), rev.check(2, TOL)];
    Ok((checks, Vec::new()))
}

/// Criterion 7: distances between flows and dyadic snapping.
pub fn metric_suite(seed: u64, pairs: usize, n: u32) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut r = rng::stream(seed, 2);
    let nn = n as f64;
    // events inside (−n, n), horizon wide enough for warps anchored at ±(n+2)
    let h = Interval::open_closed(-nn - 3.0, nn + 3.0);
    let mut same = Worst::new("identical flows", "d_D upper bound of (phi, phi) = 0");
    let mut below = Worst::new("d_D upper <= d_C", "identity-warp bound and family bound do not exceed d_C");
    let mut snap = Worst::new("snap error", "d_D(snap_N f, f) / (4 2^-N) <= 1");
    let mut table = Table::new("metric_pairs", &["pair", "d_c", "d_d_upper", "identity_inner"]);
    for i in 0..pairs {
        let phi = random_flow(&mut r, 1 + i % 5, nn - 0.1, h)?;
        let psi = random_flow(&mut r, 1 + (i + 2) % 5, nn - 0.1, h)?;
        let d_self = dist_d_n_upper(&phi, &phi, n, &default_family(&phi, &phi, n, 2))?;
        same.add(d_self.value);
        let dc = dist_c_n(&phi, &psi, n)?;
        let ident = inner_sup(&phi, &psi, n, &TimeWarp::identity())?;
        let up = dist_d_n_upper(&phi, &psi, n, &default_family(&phi, &psi, n, 2))?;
        below.add((ident - dc).max(up.value - dc));
        table.push(vec![i as f64, dc, up.value, ident]);
        for e in phi.events() {
            let f = e.map.materialize();
            for big_n in [2, 4, 6, 8] {
                let bound = 4.0 * 0.5_f64.powi(big_n as i32);
                snap.add(dist_d(&snap_map(&f, big_n)?, &f)? / bound);
            }
        }
    }
    for &v in &R_FAMILY {
        let f = rmap(v)?.rotate(0.37);
        for big_n in [2, 4, 6, 8] {
            let bound = 4.0 * 0.5_f64.powi(big_n as i32);
            snap.add(dist_d(&snap_map(&f, big_n)?, &f)? / bound);
        }
    }
    let mut checks = vec![same.check(7, TOL), below.check(7, TOL), snap.check(7, 1.0)];

    // the same O(1) events, delayed by δ
    let g = rmap(0.5)?;
    let base = [(-1.2, 0.1), (0.1, 0.6), (0.9, 0.85)];
    let mut shifts = Table::new("metric_shift", &["delta", "d_c", "d_d_upper"]);
    for delta in [0.01, 0.05] {
        let mk = |dt: f64| EventFlow::new(1.0, h, base.iter().map(|&(t, a)| (t + dt, g.rotate(a))).collect());
        let (phi, psi) = (mk(0.0)?, mk(delta)?);
        let dc = dist_c_n(&phi, &psi, n)?;
        let up = dist_d_n_upper(&phi, &psi, n, &default_family(&phi, &psi, n, 2))?;
        shifts.push(vec![delta, dc, up.value]);
        checks.push(Check::at_most(7, format!("shift {delta}: d_D upper"), "d_D upper <= 2 delta", 1, up.value, 2.0 * delta));
        checks.push(Check::at_least(7, format!("shift {delta}: d_C"), "d_C stays of order one", 1, dc, 0.2));
    }
    Ok((checks, vec![table, shifts]))
}

fn random_path(r: &mut Rng, times: &[f64]) -> Result<CompactPath> {
    let x0 = r.random_range(-2.0..2.0);
    let mut x = x0;
    let values = times
        .iter()
        .map(|_| {
            x += r.random_range(-0.5..0.5);
            x
        })
        .collect();
    CompactPath::new(SpaceTimePoint::new(times[0], x0), times.to_vec(), values)
}

/// Criterion 8: metric axioms of `d^F` and the Hausdorff distance, and the
/// continuity bound for paths extracted from pairs of flows.
pub fn web_suite(seed: u64, pairs: usize, n: u32) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut r = rng::stream(seed, 3);
    let nn = n as f64;
    let coarse: Vec<f64> = (0..=20).map(|k| -nn + 2.0 * nn * k as f64 / 20.0).collect();
    let fine: Vec<f64> = (0..=33).map(|k| -nn + 2.0 * nn * k as f64 / 33.0).collect();
    let mut pm = Worst::new("d^F axioms", "d^F(f,f) = 0, symmetry, triangle inequality");
    let mut hm = Worst::new("Hausdorff axioms", "H(A,A) = 0, symmetry, triangle inequality");
    for k in 0..50 {
        let g = |i: usize| if (k + i) % 2 == 0 { &coarse } else { &fine };
        let (a, b, c) = (random_path(&mut r, g(0))?, random_path(&mut r, g(1))?, random_path(&mut r, g(2))?);
        let d = |x: &CompactPath, y: &CompactPath| dist_pi_f(x, y).value;
        pm.add(d(&a, &a));
        pm.add((d(&a, &b) - d(&b, &a)).abs());
        pm.add(d(&a, &c) - d(&a, &b) - d(&b, &c));
    }
    for _ in 0..20 {
        let mut set = |m: usize| -> Result<Vec<CompactPath>> { (0..m).map(|_| random_path(&mut r, &coarse)).collect() };
        let (a, b, c) = (set(3)?, set(5)?, set(4)?);
        hm.add(hausdorff_f(&a, &a)?);
        hm.add((hausdorff_f(&a, &b)? - hausdorff_f(&b, &a)?).abs());
        hm.add(hausdorff_f(&a, &c)? - hausdorff_f(&a, &b)? - hausdorff_f(&b, &c)?);
    }
    let mut checks = vec![pm.check(8, 1e-12), hm.check(8, 1e-12)];

    let h = Interval::open_closed(-nn - 1.0, nn + 1.0);
    let span = Interval::closed_open(-1.0, 1.0);
    let starts = lattice_starts(nn, 4, 32, span);
    let fine = lattice_starts(nn, 8, 128, span);
    let mut bound = Worst::new("continuity bound", "H(paths of phi, paths of psi) <= d_C + resolution of both path sets");
    let mut table = Table::new("web_pairs", &["pair", "hausdorff", "d_c", "slack", "start_mesh"]);
    for i in 0..pairs {
        let phi = random_flow(&mut r, 4, nn - 0.1, h)?;
        // half the pairs are small perturbations, half independent
        let psi = if i % 2 == 0 {
            let events = phi.events().iter().map(|e| (e.t, e.map.materialize().rotate(0.05))).collect();
            EventFlow::new(1.0, h, events)?
        } else {
            random_flow(&mut r, 4, nn - 0.1, h)?
        };
        let dc = dist_c_n(&phi, &psi, n)?;
        let grid = path_grid(nn, 40, &[&phi, &psi]);
        let (a, b) = (extract_web(&phi, &starts, &grid)?, extract_web(&psi, &starts, &grid)?);
        let hf = hausdorff_f(&a, &b)?;
        // how far paths from a finer start set stray from the coarse ones
        let slack = directed_hausdorff_f(&extract_web(&phi, &fine, &grid)?, &a)?
            + directed_hausdorff_f(&extract_web(&psi, &fine, &grid)?, &b)?;
        bound.add(hf - dc - slack);
        table.push(vec![i as f64, hf, dc, slack, start_mesh(&starts)]);
    }
    checks.push(bound.check(8, 0.0));
    Ok((checks, vec![table]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for (checks, _) in [
            algebra_suite(3, 12).unwrap(),
            flow_algebra_suite(3).unwrap(),
            metric_suite(3, 3, 1).unwrap(),
            web_suite(3, 2, 1).unwrap(),
        ] {
            for c in checks {
                assert!(c.pass, "{c:?}");
            }
        }
    }

    #[test]
    fn worst_keeps_nan() {
        let mut w = Worst::new("x", "y");
        w.add(0.0);
        w.add(f64::NAN);
        w.add(1.0);
        assert!(!w.check(1, 10.0).pass);
        assert!(!Worst::new("x", "y").check(1, 10.0).pass);
        let mut w = Worst::new("x", "y");
        w.add(-0.5);
        assert_eq!(w.check(1, 0.0).estimate, -0.5);
    }

    #[test]
    fn sandwich_detects_distance() {
        let f = rmap(0.3).unwrap();
        let g = f.rotate(0.1);
        let e = dist_d(&f, &g).unwrap();
        assert!(sandwich_violation(&f, &g, e + TOL, &sandwich_points(&f, &g, e + TOL)) <= 0.0);
        assert!(sandwich_violation(&f, &g, e - 1e-3, &sandwich_points(&f, &g, e - 1e-3)) > 0.0);
    }
}
