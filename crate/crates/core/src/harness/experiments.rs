//! Monte Carlo experiments. Replication `i` of a sample draws only from
//! seeds derived from `(seed, sample, i)`, so results do not depend on the
//! thread schedule.

use rayon::prelude::*;

use super::config::{ExperimentConfig, Rung};
use super::report::{Check, Table};
use super::stats::{ks_test, mean_se, normal_cdf, two_sample_ks, var_se};
use crate::coalescing_sim::{
    bes3_passage_time, circle_preimage, coalescence_run, coalescing_map, laplace_reference, Geometry,
};
use crate::flow_core::{sample_flow, Embedding, EventFlow, Interval, SpaceTimePoint};
use crate::map_algebra::{DisturbanceProfile, Side};
use crate::rng::{self, derive_seed};
use crate::Result;

pub const ALPHA: f64 = 0.01;

/// Upper 1% point of the Kolmogorov distribution.
const KS_CRIT: f64 = 1.628;
/// One-sided 1% normal quantile, used for ladder comparisons.
const Z_ONE_SIDED: f64 = 2.326;

type Output = (Vec<Check>, Vec<Table>);

fn replicate<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// A flow on `horizon` in the `eps`-rescaled picture: sampled on `ε² horizon`
/// and rescaled.
fn flow(profile: &DisturbanceProfile, emb: Embedding, eps: f64, horizon: Interval, seed: u64) -> Result<EventFlow> {
    sample_flow(profile, emb, horizon.scale(eps * eps), seed)?.rescale(eps)
}

/// Paths from `(0, 0)` and `(0, sep)` read at `times`, and their collision
/// time (infinite if they stay apart). After the collision the second path
/// is pinned to the first plus a whole number of periods.
pub struct Pair {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub collision: f64,
}

pub fn pair_paths(f: &EventFlow, sep: f64, times: &[f64]) -> Pair {
    let p = f.period();
    let (mut a, mut b) = (0.0, sep);
    let mut collision = f64::INFINITY;
    let mut out = Pair { z1: Vec::with_capacity(times.len()), z2: Vec::with_capacity(times.len()), collision };
    let ev = f.events();
    let mut j = ev.partition_point(|e| e.t <= 0.0);
    for &t in times {
        while j < ev.len() && ev[j].t <= t {
            a = ev[j].map.eval(a, Side::Right);
            if collision.is_finite() {
                b = a + ((b - a) / p).round() * p;
            } else {
                b = ev[j].map.eval(b, Side::Right);
                let k = (b - a) / p;
                if (k - k.round()).abs() <= 1e-9 {
                    collision = ev[j].t;
                    b = a + k.round() * p;
                }
            }
            j += 1;
        }
        out.z1.push(a);
        out.z2.push(b);
    }
    out.collision = collision;
    out
}

/// `X_t` from `(0, 0)` on every rung: KS against `N(0, t)`, mean and
/// variance z-tests, and on a ladder the KS statistic may not grow by more
/// than its own 1% critical value from one rung to the next.
pub fn flow_convergence(cfg: &ExperimentConfig, rungs: &[Rung], seed: u64) -> Result<Output> {
    let t = cfg.horizon;
    let n = cfg.n_runs;
    let mut checks = Vec::new();
    let mut samples = Table::new("x_samples", &["rung", "run", "x"]);
    let mut summary = Table::new("x_summary", &["rung", "r", "rho", "mean", "mean_se", "var", "var_se", "ks_d", "ks_p"]);
    let mut ds = Vec::new();
    for (k, rung) in rungs.iter().enumerate() {
        let base = derive_seed(seed, k as u64);
        let xs = replicate(n, |i| {
            let f = flow(&rung.profile, cfg.embedding, cfg.eps, Interval::open_closed(0.0, t), derive_seed(base, i))?;
            Ok(f.trajectory(SpaceTimePoint::new(0.0, 0.0), &[t], Side::Right)?[0])
        })?;
        let (m, mse) = mean_se(&xs);
        let (v, vse) = var_se(&xs);
        let (d, p) = ks_test(&xs, |x| normal_cdf(x, 0.0, t.sqrt()))?;
        let null = format!("X_t ~ N(0, {t}) at {}", rung.label);
        checks.push(Check::p(3, format!("{}: KS vs normal", rung.label), null.clone(), n, d, p, ALPHA));
        checks.push(Check::z(3, format!("{}: mean", rung.label), format!("E X_t = 0 at {}", rung.label), n, m, mse, 0.0, 4.0));
        checks.push(Check::z(3, format!("{}: variance", rung.label), format!("Var X_t = {t} at {}", rung.label), n, v, vse, t, 4.0));
        for (i, x) in xs.iter().enumerate() {
            samples.push(vec![k as f64, i as f64, *x]);
        }
        summary.push(vec![k as f64, rung.r.unwrap_or(f64::NAN), rung.profile.rho, m, mse, v, vse, d, p]);
        ds.push(d);
    }
    let tol = KS_CRIT / (n as f64).sqrt();
    for (k, w) in ds.windows(2).enumerate() {
        checks.push(Check::at_most(
            3,
            format!("ladder: KS statistic {} -> {}", rungs[k].label, rungs[k + 1].label),
            "KS distance to the limit does not grow along the ladder",
            n,
            w[1] - w[0],
            tol,
        ));
    }
    Ok((checks, vec![summary, samples]))
}

/// `E[Z¹_t Z²_t − (t − T)⁺] = 0` on every rung and time, with `|deviation|`
/// non-increasing along the ladder up to a one-sided 1% z-margin.
pub fn pair_covariance(cfg: &ExperimentConfig, rungs: &[Rung], seed: u64) -> Result<Output> {
    let times = &cfg.params.times;
    let sep = cfg.params.separation;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let n = cfg.n_runs;
    let mut checks = Vec::new();
    let mut summary = Table::new("pair_summary", &["rung", "r", "t", "deviation", "se"]);
    let mut samples = Table::new("pair_samples", &["rung", "run", "t", "z1", "z2", "collision"]);
    let mut devs: Vec<Vec<(f64, f64)>> = Vec::new();
    for (k, rung) in rungs.iter().enumerate() {
        let base = derive_seed(seed, k as u64);
        let pairs = replicate(n, |i| {
            let f = flow(&rung.profile, cfg.embedding, cfg.eps, Interval::open_closed(0.0, t_max), derive_seed(base, i))?;
            Ok(pair_paths(&f, sep, times))
        })?;
        let mut row = Vec::new();
        for (j, &t) in times.iter().enumerate() {
            let stat: Vec<f64> = pairs.iter().map(|p| p.z1[j] * p.z2[j] - (t - p.collision).max(0.0)).collect();
            let (m, se) = mean_se(&stat);
            checks.push(Check::z(
                4,
                format!("{}: t = {t}", rung.label),
                format!("E[Z1 Z2 - (t - T)+] = 0 at t = {t}, {}", rung.label),
                n,
                m,
                se,
                0.0,
                4.0,
            ));
            summary.push(vec![k as f64, rung.r.unwrap_or(f64::NAN), t, m, se]);
            row.push((m, se));
        }
        for (i, p) in pairs.iter().enumerate() {
            for (j, &t) in times.iter().enumerate() {
                samples.push(vec![k as f64, i as f64, t, p.z1[j], p.z2[j], p.collision]);
            }
        }
        devs.push(row);
    }
    for k in 1..devs.len() {
        for (j, &t) in times.iter().enumerate() {
            let ((a, sa), (b, sb)) = (devs[k - 1][j], devs[k][j]);
            let margin = Z_ONE_SIDED * (sa * sa + sb * sb).sqrt();
            checks.push(Check::at_most(
                4,
                format!("ladder {} -> {}: t = {t}", rungs[k - 1].label, rungs[k].label),
                "|deviation| does not increase along the ladder",
                n,
                b.abs() - a.abs(),
                margin,
            ));
        }
    }
    Ok((checks, vec![summary, samples]))
}

/// Complete coalescence time of `N` equally spaced circle points against its
/// mean, Laplace transform and the halved BES(3) passage time.
pub fn coalescence_time(cfg: &ExperimentConfig, seed: u64) -> Result<Output> {
    let n = cfg.n_runs;
    let (pts, dt, bridge) = (cfg.params.n_points, cfg.dt, cfg.params.bridge);
    let s1 = derive_seed(seed, 1);
    let s2 = derive_seed(seed, 2);
    let ts = replicate(n, |i| Ok(coalescence_run(pts, dt, bridge, &[], &mut rng::stream(s1, i))?.time))?;
    let bes = replicate(n, |i| Ok(0.5 * bes3_passage_time(dt, &mut rng::stream(s2, i))))?;
    let mut checks = Vec::new();
    let (m, se) = mean_se(&ts);
    checks.push(Check::z(5, "mean", "E T = 1/6", n, m, se, 1.0 / 6.0, 3.0));
    for &l in &cfg.params.lambdas {
        let e: Vec<f64> = ts.iter().map(|t| (l * t).exp()).collect();
        let (m, se) = mean_se(&e);
        let want = laplace_reference(l)?;
        checks.push(Check::z(5, format!("Laplace at {l}"), format!("E exp({l} T) = sqrt(l)/sin(sqrt(l))"), n, m, se, want, 3.0));
    }
    let (d, p) = two_sample_ks(&ts, &bes)?;
    checks.push(Check::p(5, "KS vs BES(3)/2", "T has the law of half the BES(3) passage time to 1", n, d, p, ALPHA));
    let mut table = Table::new("coalescence_samples", &["run", "t", "bes3_half"]);
    for i in 0..n {
        table.push(vec![i as f64, ts[i], bes[i]]);
    }
    Ok((checks, vec![table]))
}

/// Functionals `(Z_t, T ∧ t)` of the reversed flow of `f` against the flow
/// of `f⁻¹`, and forward against backward one-point marginals of the
/// coalescing sampler.
pub fn time_reversal(cfg: &ExperimentConfig, rung: &Rung, seed: u64) -> Result<Output> {
    let n = cfg.n_runs;
    let t = cfg.horizon;
    let sep = cfg.params.separation;
    let inv = DisturbanceProfile::new(rung.profile.map.invert())?;
    let (sa, sb, sc, sd) = (derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3), derive_seed(seed, 4));
    let functional = |p: Pair| (p.z1[0], p.collision.min(t));
    let hat = replicate(n, |i| {
        let f = flow(&rung.profile, cfg.embedding, cfg.eps, Interval::closed(-t, 0.0), derive_seed(sa, i))?;
        Ok(functional(pair_paths(&f.reverse(), sep, &[t])))
    })?;
    let direct = replicate(n, |i| {
        let f = flow(&inv, cfg.embedding, cfg.eps, Interval::open_closed(0.0, t), derive_seed(sb, i))?;
        Ok(functional(pair_paths(&f, sep, &[t])))
    })?;
    let mut checks = Vec::new();
    let split = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { v.iter().cloned().unzip() };
    let ((hz, ht), (dz, dtt)) = (split(&hat), split(&direct));
    let (d, p) = two_sample_ks(&hz, &dz)?;
    checks.push(Check::p(6, "Z_t: reversed f vs f^-1", "Z_t has the same law under both flows", n, d, p, ALPHA));
    let (d, p) = two_sample_ks(&ht, &dtt)?;
    checks.push(Check::p(6, "T ^ t: reversed f vs f^-1", "T ^ t has the same law under both flows", n, d, p, ALPHA));

    let (rdt, bridge, m) = (cfg.params.reversal_dt, cfg.params.bridge, cfg.params.n_points);
    let xs: Vec<f64> = (0..m).map(|k| k as f64 / m as f64).collect();
    let forward = replicate(n, |i| Ok(coalescing_map(&[0.0], Geometry::Circle, rdt, t, bridge, &mut rng::stream(sc, i))?[0]))?;
    let backward = replicate(n, |i| {
        let ys = coalescing_map(&xs, Geometry::Circle, rdt, t, bridge, &mut rng::stream(sd, i))?;
        Ok(-circle_preimage(&xs, &ys, 0.0)?)
    })?;
    let (d, p) = two_sample_ks(&forward, &backward)?;
    checks.push(Check::p(6, "coalescing: forward vs backward", "forward and backward one-point displacements agree in law", n, d, p, ALPHA));

    let mut table = Table::new("reversal_samples", &["run", "z_hat", "t_hat", "z_inv", "t_inv", "forward", "backward"]);
    for i in 0..n {
        table.push(vec![i as f64, hz[i], ht[i], dz[i], dtt[i], forward[i], backward[i]]);
    }
    Ok((checks, vec![table]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_algebra::{make_rmap, rmap};

    #[test]
    fn pair_paths_by_hand() {
        // r-map(1/2) sends the whole circle to 1/2, so one event joins the pair
        let f = EventFlow::new(1.0, Interval::open_closed(0.0, 1.0), vec![(0.4, rmap(0.5).unwrap())]).unwrap();
        let p = pair_paths(&f, 0.3, &[0.2, 0.5, 1.0]);
        assert_eq!(p.z1, vec![0.0, 0.5, 0.5]);
        assert_eq!(p.z2, vec![0.3, 0.5, 0.5]);
        assert_eq!(p.collision, 0.4);
        let empty = EventFlow::empty(1.0, Interval::open_closed(0.0, 1.0));
        assert_eq!(pair_paths(&empty, 0.3, &[1.0]).collision, f64::INFINITY);
    }

    #[test]
    fn rescaled_flow_keeps_unit_variance() {
        let p = make_rmap(0.2).unwrap();
        let f = flow(&p, Embedding::Lattice, 0.5, Interval::open_closed(0.0, 1.0), 3).unwrap();
        assert_eq!(f.period(), 2.0);
        assert_eq!(f.len() as f64, (p.rho * 0.25).floor());
        assert!(f.times().iter().all(|&t| t > 0.0 && t <= 1.0));
    }
}
