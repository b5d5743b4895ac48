use serde::{Deserialize, Serialize};

use crate::map::{Branch, TentParams};

/// Endpoints closer than this to `0`, `1` or `2 − s` are snapped onto them.
pub(crate) const SNAP: f64 = 1e-13;

/// A connected component of some `f^{-k}(J)`, with endpoint openness.
///
/// `J` is open; closed endpoints appear when a left pullback reaches `0`
/// from inside (the parent contains `2 − s` in its interior), and a right
/// pullback of such a component then contains `1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Component {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Contains the point `1`, so its pullback is connected across `c`.
    pub fn contains_one(&self) -> bool {
        self.hi_closed && self.hi >= 1.0 - SNAP
    }

    /// Membership respecting endpoint openness, with tolerance `tol` on the
    /// interior test.
    pub fn holds(&self, x: f64, tol: f64) -> bool {
        (self.lo + tol < x && x < self.hi - tol)
            || (self.lo_closed && (x - self.lo).abs() <= tol)
            || (self.hi_closed && (x - self.hi).abs() <= tol)
    }

    /// The component of `f⁻¹(self)` on `branch`, if that branch reaches
    /// `self`. Not meaningful when [`contains_one`](Self::contains_one).
    pub fn pullback(&self, p: &TentParams, branch: Branch) -> Option<Component> {
        let s = p.slope();
        match branch {
            Branch::Right => {
                let mut lo = 1.0 - self.hi / s;
                let mut hi = 1.0 - self.lo / s;
                lo = lo.max(p.critical_point());
                if self.lo.abs() <= SNAP {
                    hi = 1.0;
                }
                if (lo - p.critical_point()).abs() <= SNAP {
                    lo = p.critical_point();
                }
                Some(Component { lo, hi, lo_closed: self.hi_closed, hi_closed: self.lo_closed })
            }
            Branch::Left => {
                let floor = p.left_image_floor();
                if self.hi <= floor + SNAP {
                    return None;
                }
                let (lo, lo_closed) = if (self.lo - floor).abs() <= SNAP {
                    (0.0, self.lo_closed)
                } else if self.lo < floor {
                    (0.0, true)
                } else {
                    ((self.lo - floor) / s, self.lo_closed)
                };
                let hi = ((self.hi - floor) / s).min(p.critical_point());
                Some(Component { lo, hi, lo_closed, hi_closed: self.hi_closed })
            }
        }
    }

    /// `f^{-1}(self)` when it is connected across `c` (`self` contains 1).
    pub fn critical_pullback(&self, p: &TentParams) -> Component {
        let left = self.pullback(p, Branch::Left);
        let right = self.pullback(p, Branch::Right).expect("right pullback always exists");
        let (lo, lo_closed) = left.map_or((p.critical_point(), true), |l| (l.lo, l.lo_closed));
        Component { lo, hi: right.hi, lo_closed, hi_closed: right.hi_closed }
    }
}

/// Lift of `x` along the branch path `path`, if every step is available.
pub fn lift(p: &TentParams, path: &[Branch], x: f64) -> Option<f64> {
    path.iter().try_fold(x, |y, &b| p.inverse(b, y).ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_pullbacks_stay_open() {
        let p = TentParams::new(2.0).unwrap();
        let j = Component::open(0.0, 0.5);
        let l = j.pullback(&p, Branch::Left).unwrap();
        assert_eq!((l.lo, l.hi, l.lo_closed), (0.0, 0.25, false));
        let r = j.pullback(&p, Branch::Right).unwrap();
        assert_eq!((r.lo, r.hi, r.hi_closed), (0.75, 1.0, false));
        assert!(!r.contains_one());
    }

    #[test]
    fn closed_endpoint_chain() {
        let p = TentParams::new(1.7).unwrap();
        // J straddles 2 − s = 0.3, so its left pullback reaches 0
        let j = Component::open(0.2, 0.4);
        let l = j.pullback(&p, Branch::Left).unwrap();
        assert!(l.lo == 0.0 && l.lo_closed);
        let r = l.pullback(&p, Branch::Right).unwrap();
        assert!(r.contains_one());
        let k = r.critical_pullback(&p);
        assert!(k.lo < p.critical_point() && p.critical_point() < k.hi);
        assert!(p.apply(k.lo) >= r.lo - 1e-12);
    }

    #[test]
    fn lift_follows_path() {
        let p = TentParams::new(1.7).unwrap();
        let j = Component::open(0.5, 0.6);
        let k = j.pullback(&p, Branch::Right).unwrap().pullback(&p, Branch::Left).unwrap();
        let y = lift(&p, &[Branch::Right, Branch::Left], 0.55).unwrap();
        assert!(k.holds(y, 0.0));
        assert!((p.apply(p.apply(y)) - 0.55).abs() < 1e-14);
    }
}
