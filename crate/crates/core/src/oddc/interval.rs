use serde::{Deserialize, Serialize};

/// A real interval with optional bounds. Omitted bounds are infinite; by
/// default the lower bound is open and the upper closed, matching tree
/// branches `x > t` and `x <= t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default)]
    pub lo_closed: bool,
    #[serde(default = "closed")]
    pub hi_closed: bool,
}

fn closed() -> bool {
    true
}

impl Default for Interval {
    fn default() -> Self {
        Self::all()
    }
}

impl Interval {
    pub fn all() -> Self {
        Self { lo: None, hi: None, lo_closed: false, hi_closed: true }
    }

    /// `(t, inf)`.
    pub fn greater_than(t: f64) -> Self {
        Self { lo: Some(t), ..Self::all() }
    }

    /// `(-inf, t]`.
    pub fn at_most(t: f64) -> Self {
        Self { hi: Some(t), ..Self::all() }
    }

    /// `[v, v]`.
    pub fn point(v: f64) -> Self {
        Self { lo: Some(v), hi: Some(v), lo_closed: true, hi_closed: true }
    }

    /// `(a, b)`.
    pub fn open(a: f64, b: f64) -> Self {
        Self { lo: Some(a), hi: Some(b), lo_closed: false, hi_closed: false }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = match self.lo {
            None => true,
            Some(l) => v > l || (self.lo_closed && v == l),
        };
        let below = match self.hi {
            None => true,
            Some(h) => v < h || (self.hi_closed && v == h),
        };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        match (self.lo, self.hi) {
            (Some(l), Some(h)) => l > h || (l == h && !(self.lo_closed && self.hi_closed)),
            _ => false,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match (self.lo, other.lo) {
            (None, _) => (other.lo, other.lo_closed),
            (_, None) => (self.lo, self.lo_closed),
            (Some(a), Some(b)) if a > b => (Some(a), self.lo_closed),
            (Some(a), Some(b)) if b > a => (Some(b), other.lo_closed),
            (Some(a), Some(_)) => (Some(a), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match (self.hi, other.hi) {
            (None, _) => (other.hi, other.hi_closed),
            (_, None) => (self.hi, self.hi_closed),
            (Some(a), Some(b)) if a < b => (Some(a), self.hi_closed),
            (Some(a), Some(b)) if b < a => (Some(b), other.hi_closed),
            (Some(a), Some(_)) => (Some(a), self.hi_closed && other.hi_closed),
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        let lower = match (self.lo, other.lo) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a > b || (a == b && (other.lo_closed || !self.lo_closed)),
        };
        let upper = match (self.hi, other.hi) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a < b || (a == b && (other.hi_closed || !self.hi_closed)),
        };
        lower && upper
    }
}

/// `x[feature]` lies in `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub feature: usize,
    pub interval: Interval,
}

impl Constraint {
    pub fn new(feature: usize, interval: Interval) -> Self {
        Self { feature, interval }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        assert!(Interval::greater_than(65.0).contains(65.5));
        assert!(!Interval::greater_than(65.0).contains(65.0));
        assert!(Interval::at_most(1.0).contains(1.0));
        assert!(Interval::point(1.0).contains(1.0) && !Interval::point(1.0).contains(0.0));
    }

    #[test]
    fn subsets() {
        assert!(Interval::greater_than(65.5).is_subset_of(&Interval::greater_than(65.0)));
        assert!(Interval::greater_than(65.0).is_subset_of(&Interval::greater_than(65.0)));
        assert!(!Interval::greater_than(64.0).is_subset_of(&Interval::greater_than(65.0)));
        assert!(!Interval::all().is_subset_of(&Interval::greater_than(65.0)));
        assert!(Interval::point(1.0).is_subset_of(&Interval::greater_than(0.5)));
        assert!(!Interval::greater_than(0.5).is_subset_of(&Interval::point(1.0)));
        assert!(Interval::open(2.0, 1.0).is_subset_of(&Interval::point(7.0)));
    }

    #[test]
    fn intersections() {
        let i = Interval::greater_than(1.0).intersect(&Interval::at_most(3.0));
        assert!(i.contains(3.0) && !i.contains(1.0));
        assert!(Interval::greater_than(2.0).intersect(&Interval::at_most(2.0)).is_empty());
        assert!(!Interval::point(2.0).is_empty());
    }

    #[test]
    fn json_defaults() {
        let i: Interval = serde_json::from_str(r#"{"lo": 65}"#).unwrap();
        assert_eq!(i, Interval::greater_than(65.0));
    }
}
