//! The normalized core tent map.
//!
//! The core interval is rescaled to `[0, 1]` so that `f(c) = 1` and
//! `f(1) = 0`. The unique affine branches with slope `±s` satisfying this are
//!
//! ```text
//! left:  f(x) = s·x + (2 − s)   for 0 ≤ x ≤ c
//! right: f(x) = s·(1 − x)       for c ≤ x ≤ 1
//! ```
//!
//! with critical point `c = 1 − 1/s`.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rigor::{Enclosure, Jet};

/// Working tolerance for point comparisons on `[0, 1]` in scalar mode.
pub const TOL: f64 = 1e-12;

/// Default tolerance for matching critical-orbit points in [`TentParams::detect_markov`].
pub const DEFAULT_MARKOV_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Scalar,
    Enclosure,
}

impl std::str::FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scalar" => Ok(Self::Scalar),
            "enclosure" | "interval" => Ok(Self::Enclosure),
            other => Err(Error::InvalidArgument(format!("unknown precision mode {other:?}"))),
        }
    }
}

/// Which monotone branch of `f` a point lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Branch {
    pub fn as_char(self) -> char {
        match self {
            Branch::Left => 'L',
            Branch::Right => 'R',
        }
    }

    pub fn from_char(ch: char) -> Result<Self> {
        match ch {
            'L' | 'l' => Ok(Branch::Left),
            'R' | 'r' => Ok(Branch::Right),
            other => Err(Error::InvalidArgument(format!("branch letter {other:?}"))),
        }
    }

    /// Parse an `L`/`R` word.
    pub fn parse_word(word: &str) -> Result<Vec<Branch>> {
        word.chars().map(Branch::from_char).collect()
    }

    pub fn word(branches: &[Branch]) -> String {
        branches.iter().map(|b| b.as_char()).collect()
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A non-trivial subinterval `[lo, hi]` of `[0, 1]`.
///
/// Endpoint openness is not tracked; interior tests use [`TOL`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < -TOL || hi > 1.0 + TOL || hi - lo <= TOL {
            return Err(Error::BadInterval { lo, hi });
        }
        Ok(Self { lo: lo.max(0.0), hi: hi.min(1.0) })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Closed membership with tolerance.
    pub fn contains(&self, x: f64) -> bool {
        self.lo - TOL <= x && x <= self.hi + TOL
    }

    /// Strict interior membership; points within [`TOL`] of an endpoint are
    /// treated as endpoints.
    pub fn interior_contains(&self, x: f64) -> bool {
        self.lo + TOL < x && x < self.hi - TOL
    }

    pub fn is_unit(&self) -> bool {
        self.lo <= TOL && self.hi >= 1.0 - TOL
    }

    pub fn approx_eq(&self, other: &Interval, tol: f64) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo - TOL <= other.lo && other.hi <= self.hi + TOL
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The (at most two) preimages of a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preimages {
    pub left: Option<f64>,
    pub right: f64,
}

impl Preimages {
    pub fn iter(&self) -> impl Iterator<Item = (f64, Branch)> + '_ {
        self.left
            .map(|x| (x, Branch::Left))
            .into_iter()
            .chain(std::iter::once((self.right, Branch::Right)))
    }

    pub fn len(&self) -> usize {
        1 + usize::from(self.left.is_some())
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// An eventually periodic critical orbit: `f^{a+q}(c) = f^a(c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovStructure {
    pub preperiod: usize,
    pub period: usize,
    /// `c, f(c), …, f^{a+q-1}(c)` in orbit order; these are all distinct.
    pub orbit_points: Vec<f64>,
    /// Set only when interval Newton in the slope variable proves that the
    /// slope enclosure contains exactly one slope with this critical orbit.
    pub certified: bool,
    /// The Newton-refined enclosure of that slope, when certified.
    pub slope_enclosure: Option<Enclosure>,
}

impl MarkovStructure {
    /// Sorted distinct orbit points together with the endpoints 0 and 1.
    pub fn partition_points(&self) -> Vec<f64> {
        sorted_cut_points(self.orbit_points.iter().copied())
    }
}

/// Sorts, deduplicates within [`TOL`] and adds `0` and `1`.
pub(crate) fn sorted_cut_points(points: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = points.into_iter().chain([0.0, 1.0]).collect();
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if (p - last).abs() <= TOL => {}
            _ => out.push(p),
        }
    }
    // keep the exact endpoints when a nearby orbit point was merged into them
    if let Some(first) = out.first_mut() {
        *first = 0.0;
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Parameters of the normalized core tent map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TentParams {
    s: f64,
    c: f64,
    /// An enclosure of the true slope. Degenerate when the slope is the
    /// given `f64` exactly.
    slope: Enclosure,
    precision: Precision,
}

impl TentParams {
    /// The map with slope exactly `s` (as an `f64`), in scalar mode.
    pub fn new(s: f64) -> Result<Self> {
        Self::from_enclosure(Enclosure::point(s), Precision::Scalar)
    }

    pub fn with_precision(s: f64, precision: Precision) -> Result<Self> {
        Self::from_enclosure(Enclosure::point(s), precision)
    }

    /// A map whose true slope is only known to lie in `slope`. The working
    /// `f64` slope is the midpoint.
    pub fn from_enclosure(slope: Enclosure, precision: Precision) -> Result<Self> {
        let s = slope.mid();
        if !(SQRT_2 - 1e-12..=2.0 + 1e-12).contains(&s) {
            return Err(Error::SlopeOutOfRange(s));
        }
        let s = s.clamp(SQRT_2, 2.0);
        Ok(Self { s, c: 1.0 - 1.0 / s, slope, precision })
    }

    /// The golden-mean slope `(1 + √5)/2`, whose critical orbit has period 3.
    pub fn golden() -> Self {
        let s = 0.5 * (1.0 + 5f64.sqrt());
        Self::from_enclosure(Enclosure::ulps(s, 4), Precision::Scalar).expect("golden slope in range")
    }

    /// The slope `√2`, whose critical orbit is eventually fixed.
    pub fn sqrt2() -> Self {
        Self::from_enclosure(Enclosure::ulps(SQRT_2, 2), Precision::Scalar).expect("sqrt2 slope in range")
    }

    pub fn in_mode(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn slope(&self) -> f64 {
        self.s
    }

    pub fn critical_point(&self) -> f64 {
        self.c
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn slope_enclosure(&self) -> Enclosure {
        self.slope
    }

    /// `f(0) = 2 − s`, the lower end of the left branch's image.
    pub fn left_image_floor(&self) -> f64 {
        2.0 - self.s
    }

    pub fn is_sqrt2(&self) -> bool {
        (self.s - SQRT_2).abs() <= 1e-9
    }

    pub fn is_two(&self) -> bool {
        (self.s - 2.0).abs() <= 1e-12
    }

    /// `√2` and `2` are accepted here but sit outside the open range most
    /// of the theory is stated for.
    pub fn is_endpoint(&self) -> bool {
        self.is_sqrt2() || self.is_two()
    }

    /// Refuse `s = √2` unless `allow` is set.
    pub fn require_interior(&self, allow: bool) -> Result<()> {
        if self.is_sqrt2() && !allow {
            Err(Error::EndpointSlope)
        } else {
            Ok(())
        }
    }

    /// Tolerance carried by point results. In enclosure mode this is the
    /// width of a one-step evaluation at the critical point.
    pub fn width(&self) -> f64 {
        match self.precision {
            Precision::Scalar => TOL,
            Precision::Enclosure => self.eval_enclosure(self.critical_enclosure()).width().max(TOL),
        }
    }

    fn check_domain(&self, x: f64) -> Result<f64> {
        if !(-TOL..=1.0 + TOL).contains(&x) {
            return Err(Error::Domain(x));
        }
        Ok(x.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn left(&self, x: f64) -> f64 {
        self.s * x + (2.0 - self.s)
    }

    #[inline]
    pub fn right(&self, x: f64) -> f64 {
        self.s * (1.0 - x)
    }

    /// `f(x)` without the domain check. `f(c)` is returned as exactly `1`.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x < self.c {
            self.left(x).clamp(0.0, 1.0)
        } else if x > self.c {
            self.right(x).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.apply(self.check_domain(x)?))
    }

    pub fn critical_enclosure(&self) -> Enclosure {
        1.0 - Enclosure::point(1.0) / self.slope
    }

    /// An enclosure of `f(x)` for every `x` in `x` and every slope in the
    /// slope enclosure.
    pub fn eval_enclosure(&self, x: Enclosure) -> Enclosure {
        let s = self.slope;
        let c = self.critical_enclosure();
        let left = s * x + (2.0 - s);
        let right = s * (1.0 - x);
        let out = if x.hi < c.lo {
            left
        } else if x.lo > c.hi {
            right
        } else {
            left.hull(right).hull(Enclosure::point(1.0))
        };
        Enclosure::new(out.lo.max(0.0), out.hi.min(1.0))
    }

    /// Inverse of one branch. The left inverse needs `y ≥ 2 − s`.
    pub fn inverse(&self, branch: Branch, y: f64) -> Result<f64> {
        match branch {
            Branch::Right => Ok((1.0 - y / self.s).clamp(self.c, 1.0)),
            Branch::Left => {
                if y < self.left_image_floor() - TOL {
                    Err(Error::BranchUnavailable(y))
                } else {
                    Ok(((y - (2.0 - self.s)) / self.s).clamp(0.0, self.c))
                }
            }
        }
    }

    pub fn preimages(&self, y: f64) -> Result<Preimages> {
        let y = self.check_domain(y)?;
        Ok(Preimages {
            left: self.inverse(Branch::Left, y).ok(),
            right: self.inverse(Branch::Right, y)?,
        })
    }

    /// Branch label of a point; `None` within [`TOL`] of `c`.
    pub fn branch_of(&self, x: f64) -> Option<Branch> {
        if x < self.c - TOL {
            Some(Branch::Left)
        } else if x > self.c + TOL {
            Some(Branch::Right)
        } else {
            None
        }
    }

    /// The exact image `f(J)`.
    pub fn image_interval(&self, j: &Interval) -> Interval {
        let a = self.apply(j.lo);
        let b = self.apply(j.hi);
        if j.interior_contains(self.c) {
            Interval { lo: a.min(b), hi: 1.0 }
        } else {
            Interval { lo: a.min(b), hi: a.max(b) }
        }
    }

    /// `f^n(J)`.
    pub fn image_iterate(&self, j: &Interval, n: usize) -> Interval {
        (0..n).fold(*j, |acc, _| self.image_interval(&acc))
    }

    /// The connected component of `f⁻¹(J)` containing `through`.
    pub fn pullback_component(&self, j: &Interval, through: f64) -> Result<Interval> {
        let through = self.check_domain(through)?;
        if !j.contains(self.apply(through)) {
            return Err(Error::NotInPreimage(through));
        }
        let floor = self.left_image_floor();
        let left_part = || -> Option<(f64, f64)> {
            if j.hi <= floor + TOL {
                return None;
            }
            let lo = if j.lo <= floor { 0.0 } else { (j.lo - floor) / self.s };
            Some((lo, (j.hi - floor) / self.s))
        };
        let right_part = (1.0 - j.hi / self.s, 1.0 - j.lo / self.s);
        let reaches_one = j.hi >= 1.0 - TOL;
        let (lo, hi) = match (self.branch_of(through), reaches_one) {
            // f⁻¹ of an interval containing 1 is connected across c
            (_, true) => (left_part().map_or(self.c, |l| l.0), right_part.1),
            (Some(Branch::Left), false) => left_part().ok_or(Error::NotInPreimage(through))?,
            (Some(Branch::Right), false) => right_part,
            (None, false) => return Err(Error::NotInPreimage(through)),
        };
        Interval::new(lo, hi)
    }

    /// `[c, f(c), …, f^n(c)]`. The first three entries are exactly `c, 1, 0`.
    pub fn critical_orbit(&self, n: usize) -> Vec<f64> {
        let mut orbit = Vec::with_capacity(n + 1);
        orbit.push(self.c);
        if n >= 1 {
            orbit.push(1.0);
        }
        if n >= 2 {
            orbit.push(0.0);
        }
        while orbit.len() <= n {
            let x = *orbit.last().unwrap();
            orbit.push(self.apply(x));
        }
        orbit
    }

    /// Detects an eventually periodic critical orbit within `n` iterates.
    ///
    /// In scalar mode orbit points are matched within `tol`. In enclosure
    /// mode orbit enclosures must overlap, and the match is certified when
    /// interval Newton in the slope proves a unique Markov slope exists in
    /// the slope enclosure.
    pub fn detect_markov(&self, n: usize, tol: f64) -> Option<MarkovStructure> {
        match self.precision {
            Precision::Scalar => {
                let orbit = self.critical_orbit(n);
                let (a, k) = first_match(&orbit, |x, y| (x - y).abs() <= tol)?;
                Some(MarkovStructure {
                    preperiod: a,
                    period: k - a,
                    orbit_points: orbit[..k].to_vec(),
                    certified: false,
                    slope_enclosure: None,
                })
            }
            Precision::Enclosure => self.detect_markov_enclosed(n, tol),
        }
    }

    fn detect_markov_enclosed(&self, n: usize, tol: f64) -> Option<MarkovStructure> {
        let search = self.newton_search_enclosure(tol);
        let probe = TentParams { slope: search, ..*self };
        let mut orbit = vec![probe.critical_enclosure(), Enclosure::point(1.0), Enclosure::point(0.0)];
        while orbit.len() <= n {
            let next = probe.eval_enclosure(*orbit.last().unwrap());
            if next.width() > 0.5 {
                break;
            }
            orbit.push(next);
        }
        orbit.truncate(n + 1);
        // a match must also hold at the given slope, otherwise the search
        // enclosure merely contains some nearby Markov slope
        let scalar = self.critical_orbit(orbit.len().saturating_sub(1));
        let mut fallback = None;
        for k in 1..orbit.len() {
            for a in 0..k {
                if !orbit[k].overlaps(orbit[a]) || (scalar[k] - scalar[a]).abs() > tol {
                    continue;
                }
                let points: Vec<f64> = self.critical_orbit(k)[..k].to_vec();
                let certified = newton_markov(search, a, k);
                let found = MarkovStructure {
                    preperiod: a,
                    period: k - a,
                    orbit_points: points,
                    certified: certified.is_some(),
                    slope_enclosure: certified,
                };
                if found.certified {
                    return Some(found);
                }
                fallback.get_or_insert(found);
            }
        }
        fallback
    }

    /// Slope enclosure used for certification: the stored one, widened to a
    /// small radius when it is a single point.
    fn newton_search_enclosure(&self, tol: f64) -> Enclosure {
        let radius = (8.0 * tol).max(4.0 * f64::EPSILON * self.s);
        if self.slope.width() >= radius {
            self.slope
        } else {
            Enclosure::around(self.s, radius)
        }
    }

    /// Sorted points `{0, 1} ∪ {c, f(c), …, f^n(c)}`. When the orbit is
    /// detected as eventually periodic the exact finite set is used rather
    /// than the drifting floating-point iterates.
    pub fn orbit_cut_points(&self, n: usize) -> Vec<f64> {
        let horizon = n.min(64);
        let scalar = TentParams { precision: Precision::Scalar, ..*self };
        match scalar.detect_markov(horizon, DEFAULT_MARKOV_TOL) {
            Some(ms) => {
                let take = (n + 1).min(ms.orbit_points.len());
                sorted_cut_points(ms.orbit_points[..take].iter().copied())
            }
            None => sorted_cut_points(self.critical_orbit(n)),
        }
    }

    /// Components of `[0,1] ∖ {c, f(c), …, f^n(c)}`, sorted left to right.
    pub fn complement_components(&self, n: usize) -> Vec<Interval> {
        self.orbit_cut_points(n)
            .windows(2)
            .map(|w| Interval { lo: w[0], hi: w[1] })
            .collect()
    }

    /// Upper bound `2⌈−log|J| / log(s²/2)⌉` on the covering time.
    ///
    /// Second images expand by `s²/2` until they cover, which controls even
    /// iterates only. The odd ceiling `⌈−2 log|J| / log(s²/2)⌉` can fall one
    /// short: at the golden slope `J = [0.0044, 0.8838]` has ceiling 1 while
    /// `f(J) = [0.188, 1]`.
    pub fn covering_bound(&self, len: f64) -> Result<usize> {
        if self.is_sqrt2() {
            return Err(Error::VacuousBound);
        }
        let k = -len.ln() / (self.s * self.s / 2.0).ln();
        Ok(2 * k.max(0.0).ceil() as usize)
    }

    /// The least `N` with `f^N(J) = [0, 1]`.
    pub fn covering_time(&self, j: &Interval) -> Result<usize> {
        let bound = self.covering_bound(j.len())?;
        let mut current = *j;
        for n in 0..=bound + 64 {
            if current.is_unit() {
                return Ok(n);
            }
            current = self.image_interval(&current);
        }
        Err(Error::Invariant(format!("interval {j} failed to cover within {bound} + 64 steps")))
    }
}

fn first_match<T: Copy>(orbit: &[T], same: impl Fn(T, T) -> bool) -> Option<(usize, usize)> {
    (1..orbit.len()).find_map(|k| (0..k).find(|&a| same(orbit[k], orbit[a])).map(|a| (a, k)))
}

/// Interval Newton for `g(s) = f_s^k(c_s) − f_s^a(c_s)` on `slope`.
/// Returns the contracted enclosure of the unique root when `N(S) ⊂ int S`.
fn newton_markov(slope: Enclosure, a: usize, k: usize) -> Option<Enclosure> {
    let over_range = orbit_jets(Jet::variable(slope), k)?;
    let derivative = over_range[k].deriv - over_range[a].deriv;
    if derivative.contains_zero() {
        return None;
    }
    let m = slope.mid();
    let at_mid = orbit_jets(Jet::variable(Enclosure::point(m)), k)?;
    let value = at_mid[k].value - at_mid[a].value;
    let step = m - value / derivative;
    step.interior_of(slope).then_some(step)
}

/// Jets of `f_s^i(c_s)` for `i ≤ k`, or `None` if a branch cannot be decided
/// uniformly over the slope enclosure.
fn orbit_jets(s: Jet, k: usize) -> Option<Vec<Jet>> {
    let one = Jet::constant(Enclosure::point(1.0));
    let two = Jet::constant(Enclosure::point(2.0));
    let c = one - one / s;
    let mut jets = vec![c, one, Jet::constant(Enclosure::point(0.0))];
    while jets.len() <= k {
        let x = *jets.last().unwrap();
        let side = x.value - c.value;
        let next = if side.is_negative() {
            s * x + two - s
        } else if side.is_positive() {
            s * (one - x)
        } else {
            return None;
        };
        jets.push(next);
    }
    jets.truncate(k + 1);
    Some(jets)
}
