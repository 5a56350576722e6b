use super::{EventFlow, Interval, SpaceTimePoint};
use crate::map_algebra::Side;
use crate::{Error, Result};

fn check_sorted(times: &[f64]) -> Result<()> {
    if times.windows(2).all(|w| w[0] <= w[1]) && times.iter().all(|t| t.is_finite()) {
        Ok(())
    } else {
        Err(Error::OutOfRange("time grid must be finite and non-decreasing".into()))
    }
}

impl EventFlow {
    /// `X_t = Φ^±_{(s,t]}(x)` on a grid of times `t ≥ s`, applying each event
    /// once.
    pub fn trajectory(&self, e: SpaceTimePoint, times: &[f64], side: Side) -> Result<Vec<f64>> {
        check_sorted(times)?;
        if let Some(&t0) = times.first() {
            if t0 < e.s {
                return Err(Error::OutOfRange(format!("time {t0} precedes the start time {}", e.s)));
            }
        }
        let Some(&t_max) = times.last() else { return Ok(Vec::new()) };
        self.check_within(&Interval::open_closed(e.s, t_max))?;
        let mut j = self.events.partition_point(|ev| ev.t <= e.s);
        let mut x = e.x;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            while j < self.events.len() && self.events[j].t <= t {
                x = self.events[j].map.eval(x, side);
                j += 1;
            }
            out.push(x);
        }
        Ok(out)
    }

    /// The forward trajectory for `t ≥ s`, extended to `t < s` by the inverse
    /// flow `(Φ_{(t,s]})⁻¹(x)`.
    pub fn backward_trajectory(&self, e: SpaceTimePoint, times: &[f64], side: Side) -> Result<Vec<f64>> {
        check_sorted(times)?;
        let split = times.partition_point(|&t| t < e.s);
        let (before, after) = times.split_at(split);
        let mut out = vec![0.0; before.len()];
        if let Some(&t_min) = before.first() {
            self.check_within(&Interval::open_closed(t_min, e.s))?;
            let mut j = self.events.partition_point(|ev| ev.t <= e.s);
            let mut y = e.x;
            for (k, &t) in before.iter().enumerate().rev() {
                while j > 0 && self.events[j - 1].t > t {
                    y = self.events[j - 1].map.eval_inverse(y, side);
                    j -= 1;
                }
                out[k] = y;
            }
        }
        out.extend(self.trajectory(e, after, side)?);
        Ok(out)
    }
}
