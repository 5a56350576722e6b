use std::fmt;

use serde::{Deserialize, Serialize};

/// A real interval with explicit endpoint membership. `lo > hi`, or `lo == hi`
/// with an open end, is the empty interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Interval { lo, hi, lo_closed, hi_closed }
    }

    /// `(lo, hi]`, the shape used for flow increments.
    pub fn open_closed(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi, false, true)
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi, false, false)
    }

    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi, true, false)
    }

    pub fn empty() -> Self {
        Interval::open(0.0, 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }

    /// `−I = {−t : t ∈ I}`.
    pub fn neg(&self) -> Self {
        Interval::new(-self.hi, -self.lo, self.hi_closed, self.lo_closed)
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(c > 0.0, "interval scale factor must be positive");
        Interval::new(self.lo * c, self.hi * c, self.lo_closed, self.hi_closed)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        let lo_ok = self.lo > other.lo || (self.lo == other.lo && (other.lo_closed || !self.lo_closed));
        let hi_ok = self.hi < other.hi || (self.hi == other.hi && (other.hi_closed || !self.hi_closed));
        lo_ok && hi_ok
    }

    /// `sup I ∨ (−inf I)`.
    pub fn radius(&self) -> f64 {
        self.hi.max(-self.lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_and_emptiness() {
        let i = Interval::open_closed(0.0, 1.0);
        assert!(!i.contains(0.0) && i.contains(1.0) && i.contains(0.5));
        assert!(Interval::empty().is_empty());
        assert!(Interval::closed(0.5, 0.5).contains(0.5));
        assert!(!Interval::closed(0.5, 0.5).is_empty());
        assert!(Interval::open_closed(0.5, 0.5).is_empty());
        assert_eq!(i.neg(), Interval::closed_open(-1.0, 0.0));
    }

    #[test]
    fn subsets() {
        let h = Interval::open_closed(0.0, 1.0);
        assert!(Interval::open_closed(0.0, 1.0).is_subset_of(&h));
        assert!(!Interval::closed(0.0, 1.0).is_subset_of(&h));
        assert!(Interval::open(0.0, 1.0).is_subset_of(&h));
        assert!(!Interval::open_closed(0.0, 1.5).is_subset_of(&h));
        assert!(Interval::empty().is_subset_of(&h));
    }
}
