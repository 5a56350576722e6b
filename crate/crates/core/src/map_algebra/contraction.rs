use super::{check_periods, wrap, MonotoneMap, MERGE_TOL};
use crate::{Error, Result};

const SLOPE_TOL: f64 = 1e-9;

/// A periodic 1-Lipschitz piecewise-linear function, stored by its samples
/// `(t, v)` with `t ∈ [0, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Contraction {
    period: f64,
    samples: Vec<(f64, f64)>,
}

impl Contraction {
    pub fn zero(period: f64) -> Self {
        Contraction { period, samples: vec![(0.0, 0.0)] }
    }

    pub fn new(period: f64, samples: Vec<(f64, f64)>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::NotContraction(format!("period must be finite and positive, got {period}")));
        }
        if samples.is_empty() {
            return Err(Error::NotContraction("no samples".into()));
        }
        let tol = MERGE_TOL * period.max(1.0);
        let mut s: Vec<(f64, f64)> = samples.into_iter().map(|(t, v)| (wrap(t, period).0, v)).collect();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(s.len());
        for (t, v) in s {
            match out.last() {
                Some(&(lt, lv)) if t - lt <= tol => {
                    if (v - lv).abs() > SLOPE_TOL.max(tol) {
                        return Err(Error::NotContraction(format!("two values at t = {t}")));
                    }
                }
                _ => out.push((t, v)),
            }
        }
        if out.len() > 1 {
            let (ft, fv) = out[0];
            let &(lt, lv) = out.last().unwrap();
            if lt + tol >= ft + period {
                if (lv - fv).abs() > SLOPE_TOL.max(tol) {
                    return Err(Error::NotContraction(format!("two values at t = {ft}")));
                }
                out.pop();
            }
        }
        let n = out.len();
        for i in 0..n {
            let (t0, v0) = out[i];
            let (t1, v1) = if i + 1 < n { out[i + 1] } else { (out[0].0 + period, out[0].1) };
            if (v1 - v0).abs() > (t1 - t0) * (1.0 + SLOPE_TOL) + tol {
                return Err(Error::NotContraction(format!(
                    "slope {} on [{t0}, {t1}]",
                    (v1 - v0) / (t1 - t0)
                )));
            }
        }
        drop_collinear(period, &mut out);
        Ok(Contraction { period, samples: out })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn eval(&self, t: f64) -> f64 {
        let p = self.period;
        let (t0, _) = wrap(t, p);
        let s = &self.samples;
        let n = s.len();
        let idx = s.partition_point(|a| a.0 <= t0);
        let ((ta, va), (tb, vb)) = match idx {
            0 => ((s[n - 1].0 - p, s[n - 1].1), s[0]),
            i if i == n => (s[n - 1], (s[0].0 + p, s[0].1)),
            i => (s[i - 1], s[i]),
        };
        if tb == ta {
            return va;
        }
        va + (t0 - ta) * (vb - va) / (tb - ta)
    }

    pub fn negate(&self) -> Contraction {
        Contraction {
            period: self.period,
            samples: self.samples.iter().map(|&(t, v)| (t, -v)).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, &(_, v)| m.max(v.abs()))
    }

    /// Values of both functions on the merged sample abscissae of one period.
    pub fn merged_values(&self, other: &Contraction) -> Result<(Vec<f64>, Vec<f64>)> {
        check_periods(self.period, other.period)?;
        let mut ts: Vec<f64> = self.samples.iter().chain(&other.samples).map(|s| s.0).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        Ok((
            ts.iter().map(|&t| self.eval(t)).collect(),
            ts.iter().map(|&t| other.eval(t)).collect(),
        ))
    }

    /// `‖self − other‖`, attained on the merged sample abscissae.
    pub fn sup_distance(&self, other: &Contraction) -> Result<f64> {
        let (a, b) = self.merged_values(other)?;
        Ok(a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
    }
}

fn drop_collinear(period: f64, s: &mut Vec<(f64, f64)>) {
    loop {
        let n = s.len();
        if n <= 1 {
            break;
        }
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
        let mut changed = false;
        for i in 0..n {
            let cur = s[i];
            if i == n - 1 && out.is_empty() {
                out.push(cur);
                continue;
            }
            let prev = out.last().copied().unwrap_or((s[n - 1].0 - period, s[n - 1].1));
            let next = if i + 1 < n { s[i + 1] } else { (out[0].0 + period, out[0].1) };
            let interp = prev.1 + (cur.0 - prev.0) * (next.1 - prev.1) / (next.0 - prev.0);
            if (interp - cur.1).abs() <= MERGE_TOL * cur.1.abs().max(1.0) {
                changed = true;
            } else {
                out.push(cur);
            }
        }
        *s = out;
        if !changed {
            break;
        }
    }
    if s.len() == 1 {
        s[0].0 = 0.0;
    }
}

/// The cross transform `f^×`: the completed graph seen in axes turned by 45°,
/// `(x, y) ↦ ((x + y)/2, (y − x)/2)`.
pub fn cross(f: &MonotoneMap) -> Result<Contraction> {
    if !f.is_periodic() {
        return Err(Error::InfinitePeriod);
    }
    let samples = f.graph().into_iter().map(|(x, y)| (0.5 * (x + y), 0.5 * (y - x))).collect();
    Contraction::new(f.period(), samples)
}

/// Inverse of [`cross`]: segments of slope 1 become jumps, slope −1 flats.
pub fn uncross(g: &Contraction) -> Result<MonotoneMap> {
    let v: Vec<(f64, f64)> = g.samples.iter().map(|&(t, v)| (t - v, t + v)).collect();
    MonotoneMap::from_graph(g.period, &v)
}

/// `d_𝒟(f, g) = ‖f^× − g^×‖`.
pub fn dist_d(f: &MonotoneMap, g: &MonotoneMap) -> Result<f64> {
    check_periods(f.period(), g.period())?;
    cross(f)?.sup_distance(&cross(g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_algebra::{compose, random, rmap, sup_displacement, sup_distance, Side};
    use crate::rng;
    use approx::assert_abs_diff_eq;

    /// `f^×(t)` straight from the sandwich `(x + f⁻(x))/2 ≤ t ≤ (x + f⁺(x))/2`,
    /// solved by bisection on `x`.
    fn cross_oracle(f: &MonotoneMap, t: f64) -> f64 {
        let (mut a, mut b) = (t - 3.0, t + 3.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if 0.5 * (m + f.eval(m, Side::Right)) < t {
                a = m;
            } else {
                b = m;
            }
        }
        t - b
    }

    #[test]
    fn cross_examples() {
        assert_eq!(cross(&MonotoneMap::identity(1.0)).unwrap(), Contraction::zero(1.0));
        let c = cross(&rmap(0.5).unwrap()).unwrap();
        for j in 0..=100 {
            let t = -0.25 + j as f64 / 100.0;
            let want = if t <= 0.25 { t } else { 0.5 - t };
            assert_abs_diff_eq!(c.eval(t), want, epsilon = 1e-12);
            assert_abs_diff_eq!(c.eval(t), cross_oracle(&rmap(0.5).unwrap(), t), epsilon = 1e-9);
        }
        let mut r = rng::stream(21, 0);
        for _ in 0..50 {
            let f = random::random_map(&mut r, 6);
            let c = cross(&f).unwrap();
            for j in 0..40 {
                let t = j as f64 / 37.0;
                assert_abs_diff_eq!(c.eval(t), cross_oracle(&f, t), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn uncross_examples() {
        assert!(uncross(&Contraction::zero(1.0)).unwrap().is_identity());
        let saw = Contraction::new(1.0, vec![(-0.25, -0.25), (0.25, 0.25)]).unwrap();
        let f = uncross(&saw).unwrap();
        assert!(dist_d(&f, &rmap(0.5).unwrap()).unwrap() < 1e-12);
        // a slope-1 rise of height 2a becomes a jump of height 4a = 2 × rise
        let a = 0.1;
        let saw = Contraction::new(1.0, vec![(0.0, -a), (2.0 * a, a), (0.5, a), (0.5 + 2.0 * a, -a)]).unwrap();
        let f = uncross(&saw).unwrap();
        let jumps: Vec<f64> = f.knots().iter().map(|k| k.jump()).filter(|&j| j > 1e-12).collect();
        assert_eq!(jumps.len(), 1);
        assert_abs_diff_eq!(jumps[0], 4.0 * a, epsilon = 1e-12);
    }

    #[test]
    fn rejects_steep_functions() {
        assert!(matches!(
            Contraction::new(1.0, vec![(0.0, 0.0), (0.1, 0.2)]),
            Err(Error::NotContraction(_))
        ));
    }

    #[test]
    fn round_trip_random() {
        let mut r = rng::stream(22, 0);
        for _ in 0..100 {
            let f = random::random_map(&mut r, 8);
            let back = uncross(&cross(&f).unwrap()).unwrap();
            for j in 0..50 {
                let x = j as f64 / 49.0;
                for side in [Side::Left, Side::Right] {
                    assert_abs_diff_eq!(back.eval(x, side), f.eval(x, side), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn dist_examples() {
        let mut r = rng::stream(23, 0);
        let id = MonotoneMap::identity(1.0);
        assert_abs_diff_eq!(dist_d(&rmap(0.5).unwrap(), &id).unwrap(), 0.25, epsilon = 1e-15);
        for _ in 0..100 {
            let f = random::random_map(&mut r, 6);
            let g = random::random_map(&mut r, 6);
            assert_eq!(dist_d(&f, &f).unwrap(), 0.0);
            let d = dist_d(&f, &g).unwrap();
            assert!(d <= sup_distance(&f, &g).unwrap() + 1e-12);
            assert_abs_diff_eq!(2.0 * dist_d(&f, &id).unwrap(), sup_displacement(&f), epsilon = 1e-12);
            assert_abs_diff_eq!(cross(&f.invert()).unwrap().sup_distance(&cross(&f).unwrap().negate()).unwrap(), 0.0, epsilon = 1e-12);
            let gf = compose(&g, &f).unwrap();
            assert!(dist_d(&f, &gf).unwrap() <= sup_displacement(&g) + 1e-12);
        }
    }
}
