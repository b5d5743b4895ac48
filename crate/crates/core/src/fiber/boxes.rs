//! Maximal 0-boxes.
//!
//! Pull the open base interval `J` back through the branches of `f`. A
//! component `P` at depth `k` that contains the point `1` has a connected
//! preimage straddling `c`; the threads through it are folded and leave the
//! box. Every such exclusion is recorded up to depth `L = N' + D`. For
//! `x ∈ J` the fiber of an exclusion has `α_x = φ(x_k)/s^k` where `x_k` is
//! the lift of `x` into `P` (zero when `x` has no lift there), so the
//! unrecorded exclusions weigh at most `Σ_{k>L} M s^{−k} = M s^{−L}/(s − 1)`.
//!
//! Only components holding a post-critical point can have an excluded
//! descendant, which keeps the search tree linear in the depth.

use std::collections::VecDeque;

use serde::Serialize;

use super::pullback::{lift, Component, SNAP};
use super::MeasureEnclosure;
use crate::density::{quasi_random_points, DensitySource, StepDensity};
use crate::error::{Error, Result};
use crate::map::{Branch, Interval, Precision, TentParams, DEFAULT_MARKOV_TOL, TOL};
use crate::orbit::precise_critical_orbit;
use crate::thread::FiniteThread;

/// Default truncation depth `D` beyond the flat prefix.
pub const DEFAULT_DEPTH: usize = 30;
/// Default cap on the number of pullback components visited.
pub const DEFAULT_BOX_BUDGET: usize = 1_000_000;
/// Orbit points checked beyond the thread depth before calling a membership
/// verdict `In` at a non-Markov slope.
const MEMBERSHIP_HORIZON: usize = 64;

/// The set `{f^t(c) : t ≥ 1}`: exact when the critical orbit is finite,
/// otherwise a double-double prefix with error bounds.
#[derive(Clone, Debug)]
enum PostCritical {
    Finite(Vec<f64>),
    Prefix(Vec<(f64, f64)>),
}

impl PostCritical {
    fn new(p: &TentParams, horizon: usize) -> Self {
        let scalar = p.in_mode(Precision::Scalar);
        match scalar.detect_markov(64, DEFAULT_MARKOV_TOL) {
            Some(ms) => {
                let mut pts = ms.orbit_points[1..].to_vec();
                if ms.preperiod == 0 {
                    pts.push(ms.orbit_points[0]);
                }
                Self::Finite(pts)
            }
            None => Self::Prefix(precise_critical_orbit(p, horizon + 1)[1..].to_vec()),
        }
    }

    /// Whether `k` holds `f^t(c)` for some `1 ≤ t ≤ max_t`.
    fn held_by(&self, k: &Component, max_t: usize) -> bool {
        match self {
            Self::Finite(pts) => pts.iter().any(|&x| k.holds(x, SNAP)),
            Self::Prefix(pts) => pts.iter().take(max_t).any(|&(x, err)| k.holds(x, err + SNAP)),
        }
    }

    fn len(&self) -> usize {
        match self {
            Self::Finite(_) => usize::MAX,
            Self::Prefix(pts) => pts.len(),
        }
    }
}

/// One excluded cylinder: the threads through the `c`-containing pullback
/// below the component `parent`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcludedCylinder {
    /// Branch word from `J` to `parent`; its length is the depth `k`.
    pub path: String,
    pub parent: Component,
    /// The component of `f^{-(k+1)}(J)` containing `c`.
    pub critical: Component,
    #[serde(skip)]
    branches: Vec<Branch>,
}

impl ExcludedCylinder {
    pub fn depth(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }
}

/// The maximal 0-box over an open interval `J`, truncated at depth `N' + D`.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroBox {
    pub slope: f64,
    pub base: Interval,
    /// `N'`: no pullback within this depth may contain `c`.
    pub prefix: usize,
    /// `D`: exclusions are enumerated to depth `N' + D`.
    pub depth: usize,
    pub excluded: Vec<ExcludedCylinder>,
    /// `sup φ · s^{−(N'+D)}/(s − 1)`.
    pub tail_bound: f64,
    pub density_sup: f64,
    pub density_source: DensitySource,
    /// Pointwise error of the density, zero if the source gives none.
    pub density_error: f64,
    pub components_visited: usize,
    /// Set when the post-critical set is finite, which makes `In`
    /// membership verdicts exact.
    pub finite_post_critical: bool,
    #[serde(skip)]
    params: TentParams,
    #[serde(skip)]
    density: StepDensity,
    #[serde(skip)]
    pc: PostCritical,
}

pub fn build_box(p: &TentParams, phi: &StepDensity, j: Interval, prefix: usize, depth: usize) -> Result<ZeroBox> {
    build_box_with_budget(p, phi, j, prefix, depth, DEFAULT_BOX_BUDGET)
}

/// Breadth-first search over pullback components of `J` to depth
/// `L = prefix + depth`, expanding only components that hold a post-critical
/// point.
pub fn build_box_with_budget(
    p: &TentParams,
    phi: &StepDensity,
    j: Interval,
    prefix: usize,
    depth: usize,
    budget: usize,
) -> Result<ZeroBox> {
    let total = prefix + depth;
    let pc = PostCritical::new(p, total + MEMBERSHIP_HORIZON);
    let mut queue: VecDeque<(Component, Vec<Branch>)> = VecDeque::new();
    queue.push_back((Component::open(j.lo, j.hi), Vec::new()));
    let mut excluded = Vec::new();
    let mut visited = 0usize;
    while let Some((comp, path)) = queue.pop_front() {
        visited += 1;
        if visited > budget {
            return Err(Error::BudgetExceeded(budget));
        }
        let k = path.len();
        if comp.contains_one() {
            if k < prefix {
                return Err(Error::FlatPrefixViolated { depth: k + 1, prefix });
            }
            excluded.push(ExcludedCylinder {
                path: Branch::word(&path),
                parent: comp,
                critical: comp.critical_pullback(p),
                branches: path,
            });
            continue;
        }
        if k == total || !pc.held_by(&comp, total - k + 1) {
            continue;
        }
        for b in [Branch::Left, Branch::Right] {
            if let Some(child) = comp.pullback(p, b) {
                let mut child_path = path.clone();
                child_path.push(b);
                queue.push_back((child, child_path));
            }
        }
    }
    let s = p.slope();
    let sup = phi.sup();
    Ok(ZeroBox {
        slope: s,
        base: j,
        prefix,
        depth,
        excluded,
        tail_bound: sup * s.powi(-(total as i32)) / (s - 1.0),
        density_sup: sup,
        density_source: phi.source,
        density_error: phi.pointwise_error.unwrap_or(0.0),
        components_visited: visited,
        finite_post_critical: matches!(pc, PostCritical::Finite(_)),
        params: *p,
        density: phi.clone(),
        pc,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    In,
    Out,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MembershipVerdict {
    pub membership: Membership,
    /// Deepest level whose pullback was examined.
    pub checked_depth: usize,
    /// For `In`: whether the verdict holds at every depth (finite
    /// post-critical set) rather than to `checked_depth` plus the orbit
    /// horizon.
    pub certified: bool,
}

impl ZeroBox {
    pub fn params(&self) -> &TentParams {
        &self.params
    }

    pub fn density(&self) -> &StepDensity {
        &self.density
    }

    /// `N' + D`.
    pub fn total_depth(&self) -> usize {
        self.prefix + self.depth
    }

    /// Radius around breakpoints and critical-orbit points that probes
    /// avoid: one enclosure width, capped at a thousandth of `|J|` so that
    /// shallow boxes still admit probes.
    pub fn guard(&self) -> f64 {
        self.tail_bound.min(1e-3 * self.base.len()).max(1e-9).max(self.params.width())
    }

    fn check_probe(&self, x: f64) -> Result<()> {
        if !(self.base.lo < x && x < self.base.hi) {
            return Err(Error::NotInPreimage(x));
        }
        let guard = self.guard();
        if self.params.critical_orbit(64).iter().any(|&q| (q - x).abs() <= guard) {
            return Err(Error::OnCriticalOrbit(x));
        }
        if self.density.breakpoint_distance(x) <= guard {
            return Err(Error::AtBreakpoint(x));
        }
        Ok(())
    }

    /// `count` quasi-random probes in `J` avoiding breakpoints and the
    /// critical orbit by [`guard`](Self::guard).
    pub fn probes(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut pool = 4 * count + 16;
        while out.len() < count && pool < 1 << 20 {
            out.clear();
            for x in quasi_random_points(self.base.lo, self.base.hi, pool) {
                if self.check_probe(x).is_ok() {
                    out.push(x);
                    if out.len() == count {
                        break;
                    }
                }
            }
            pool *= 4;
        }
        out
    }

    /// `α_x(B)` as an enclosure: `φ(x)` minus the recorded exclusions,
    /// widened by the tail bound below and by the density error on both
    /// sides.
    pub fn alpha(&self, x: f64) -> Result<MeasureEnclosure> {
        self.check_probe(x)?;
        let p = &self.params;
        let s = p.slope();
        let mut excluded_mass = 0.0;
        let mut weight = 1.0;
        for e in &self.excluded {
            if let Some(y) = lift(p, e.branches(), x) {
                let scale = s.powi(-(e.depth() as i32));
                excluded_mass += self.density.value_at(y) * scale;
                weight += scale;
            }
        }
        let value = self.density.value_at(x) - excluded_mass;
        let err = self.density_error * weight + 4.0 * f64::EPSILON * value.abs() * (1 + self.excluded.len()) as f64;
        Ok(MeasureEnclosure::new(value - self.tail_bound - err, value + err))
    }

    /// Membership of `t` using its first `depth` levels.
    pub fn membership(&self, t: &FiniteThread, depth: usize) -> MembershipVerdict {
        self.membership_of(t.coords(), depth)
    }

    /// [`membership`](Self::membership) for raw thread coordinates, so that
    /// shifted threads can be tested without copying.
    pub(crate) fn membership_of(&self, coords: &[f64], depth: usize) -> MembershipVerdict {
        let p = &self.params;
        let c = p.critical_point();
        let depth = depth.min(coords.len() - 1);
        let out = |k| MembershipVerdict { membership: Membership::Out, checked_depth: k, certified: true };
        let mut comp = Component::open(self.base.lo, self.base.hi);
        if !comp.holds(coords[0], 0.0) {
            return out(0);
        }
        for i in 0..depth {
            if comp.contains_one() {
                return out(i);
            }
            let b = if coords[i + 1] < c { Branch::Left } else { Branch::Right };
            match comp.pullback(p, b) {
                Some(next) => comp = next,
                None => return out(i + 1),
            }
        }
        if comp.contains_one() {
            return out(depth);
        }
        let (membership, certified) = if self.pc.held_by(&comp, MEMBERSHIP_HORIZON.min(self.pc.len())) {
            (Membership::Unknown, false)
        } else {
            (Membership::In, self.finite_post_critical)
        };
        MembershipVerdict { membership, checked_depth: depth, certified }
    }

    /// The thread over `b` through the same pullback components as `t`.
    pub fn holonomy_transport(&self, t: &FiniteThread, b: f64) -> Result<FiniteThread> {
        match self.membership(t, t.depth()).membership {
            Membership::In => {}
            Membership::Unknown => return Err(Error::MembershipUnknown),
            Membership::Out => return Err(Error::InvalidArgument("thread is outside the box".into())),
        }
        if !(self.base.lo < b && b < self.base.hi) {
            return Err(Error::NotInPreimage(b));
        }
        let p = &self.params;
        let c = p.critical_point();
        let branches: Vec<Branch> =
            t.coords()[1..].iter().map(|&x| if x < c { Branch::Left } else { Branch::Right }).collect();
        FiniteThread::from_branches(p, b, &branches)
    }
}

/// Outcome of [`holonomy_check`].
#[derive(Clone, Debug, Serialize)]
pub struct HolonomyReport {
    pub probes: Vec<f64>,
    pub alphas: Vec<MeasureEnclosure>,
    /// Largest `|mid_i − mid_j|`.
    pub max_difference: f64,
    /// Smallest `(w_i + w_j) − |mid_i − mid_j|` over pairs.
    pub min_slack: f64,
    pub pass: bool,
    /// `V/s^{N'+D}`, the proof's pairing bound at the truncation depth;
    /// reported for comparison only.
    pub variation_modulus: f64,
}

/// Evaluates `α` at every probe; passes iff every pair of midpoints differs
/// by at most the sum of the two enclosure widths.
pub fn holonomy_check(b: &ZeroBox, probes: &[f64]) -> Result<HolonomyReport> {
    if probes.len() < 2 {
        return Err(Error::InvalidArgument("holonomy needs at least two probes".into()));
    }
    let alphas = probes.iter().map(|&x| b.alpha(x)).collect::<Result<Vec<_>>>()?;
    let mut max_difference: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for i in 0..alphas.len() {
        for k in i + 1..alphas.len() {
            let d = (alphas[i].mid() - alphas[k].mid()).abs();
            max_difference = max_difference.max(d);
            min_slack = min_slack.min(alphas[i].width() + alphas[k].width() - d);
        }
    }
    Ok(HolonomyReport {
        probes: probes.to_vec(),
        alphas,
        max_difference,
        min_slack,
        pass: min_slack >= 0.0,
        variation_modulus: b.density().total_variation() * b.slope.powi(-(b.total_depth() as i32)),
    })
}

/// The component of `I ∖ {c, f(c), …, f^N(c)}` on which `φ` attains its
/// supremum `M`; ties go to the leftmost. Returns the index and interval.
pub fn pccomp_component(p: &TentParams, phi: &StepDensity, n: usize) -> (usize, Interval) {
    let comps = p.complement_components(n);
    let sup_on = |j: &Interval| {
        phi.cells()
            .filter(|&(a, b, _)| b > j.lo + TOL && a < j.hi - TOL)
            .map(|(_, _, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let sups: Vec<f64> = comps.iter().map(sup_on).collect();
    let best = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let index = sups.iter().position(|&v| v >= best * (1.0 - 1e-12)).expect("at least one component");
    (index, comps[index])
}

#[derive(Clone, Debug, Serialize)]
pub struct PccompReport {
    pub component_index: usize,
    pub n: usize,
    /// `M = sup φ`.
    pub sup: f64,
    /// `M(1 − s^{−N})`.
    pub bound: f64,
    pub probe: f64,
    pub alpha: MeasureEnclosure,
    /// `α.lower ≥ M(1 − s^{−N}) − width`.
    pub alpha_bound_met: bool,
    /// `(M(1 − s^{−N}) − width)·m(J)`, the lower bound this gives for
    /// `μ̂(B)`.
    pub measure_lower_bound: f64,
    /// `M(1 − s^{1−N}/(s − 1))`. Exclusions start at depth `N` and can occur
    /// at every depth, each weighing at most `M s^{−k}`, so this is what the
    /// geometric series actually guarantees. It is weaker than `bound` for
    /// `s < 2`, and `bound` does fail for some such slopes (1.9 with `N = 4`).
    pub series_bound: f64,
    pub series_bound_met: bool,
    #[serde(rename = "box")]
    pub zero_box: ZeroBox,
}

/// The positive-measure box: the maximal 0-box over the component where
/// `φ` is largest, with flat prefix `N` and truncation depth `D`.
pub fn pccomp_box(p: &TentParams, phi: &StepDensity, n: usize, depth: usize) -> Result<PccompReport> {
    let (index, j) = pccomp_component(p, phi, n);
    let zero_box = build_box(p, phi, j, n, depth)?;
    let probe = *zero_box
        .probes(1)
        .first()
        .ok_or_else(|| Error::Invariant(format!("no admissible probe in {j}")))?;
    let alpha = zero_box.alpha(probe)?;
    let sup = phi.sup();
    let s = p.slope();
    let bound = sup * (1.0 - s.powi(-(n as i32)));
    let series_bound = sup * (1.0 - s.powi(1 - n as i32) / (s - 1.0));
    Ok(PccompReport {
        component_index: index,
        n,
        sup,
        bound,
        probe,
        alpha,
        alpha_bound_met: alpha.lower >= bound - alpha.width(),
        measure_lower_bound: (bound - alpha.width()) * j.len(),
        series_bound,
        series_bound_met: alpha.lower >= series_bound - alpha.width(),
        zero_box,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::reference_density;

    fn setup(s: f64) -> (TentParams, StepDensity) {
        let p = if s == 0.0 { TentParams::golden() } else { TentParams::new(s).unwrap() };
        let phi = reference_density(&p).unwrap();
        (p, phi)
    }

    #[test]
    fn full_tent_box_has_no_exclusions() {
        let (p, phi) = setup(2.0);
        let b = build_box(&p, &phi, Interval::new(0.0, 0.5).unwrap(), 1, 30).unwrap();
        assert!(b.excluded.is_empty());
        assert!(b.finite_post_critical);
        let a = b.alpha(0.3).unwrap();
        assert!((a.upper - 1.0).abs() < 1e-14);
        assert!((a.lower - (1.0 - 2f64.powi(-31))).abs() < 1e-14);
        let report = holonomy_check(&b, &[0.1, 0.3, 0.45]).unwrap();
        assert_eq!(report.max_difference, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn golden_box_has_no_exclusions() {
        let (p, phi) = setup(0.0);
        let c = p.critical_point();
        let b = build_box(&p, &phi, Interval::new(0.0, c).unwrap(), 0, 30).unwrap();
        assert!(b.excluded.is_empty());
        let a = b.alpha(0.2).unwrap();
        assert!((a.upper - 0.7236067977499789).abs() < 1e-14);
        assert!((a.width() - b.tail_bound).abs() < 1e-14);
        let probes = b.probes(5);
        assert_eq!(probes.len(), 5);
        assert_eq!(holonomy_check(&b, &probes).unwrap().max_difference, 0.0);
    }

    #[test]
    fn generic_slope_box_has_exclusions_and_holonomy() {
        let (p, phi) = setup(1.7);
        let (_, j) = pccomp_component(&p, &phi, 4);
        let b = build_box(&p, &phi, j, 4, 30).unwrap();
        assert!(!b.excluded.is_empty());
        let s: f64 = 1.7;
        assert!((b.tail_bound - phi.sup() * s.powi(-34) / 0.7).abs() < 1e-20);
        let report = holonomy_check(&b, &b.probes(5)).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn tail_bound_decreases_with_depth() {
        let (p, phi) = setup(1.7);
        let (_, j) = pccomp_component(&p, &phi, 4);
        let widths: Vec<f64> = [10, 20, 30]
            .iter()
            .map(|&d| build_box(&p, &phi, j, 4, d).unwrap().tail_bound)
            .collect();
        assert!(widths[0] > widths[1] && widths[1] > widths[2]);
    }

    #[test]
    fn pccomp_on_full_tent() {
        let (p, phi) = setup(2.0);
        let r = pccomp_box(&p, &phi, 4, 30).unwrap();
        assert_eq!(r.zero_box.base, Interval { lo: 0.0, hi: 0.5 });
        assert!(r.alpha.lower >= 0.9375);
        assert!(r.alpha_bound_met);
    }

    #[test]
    fn series_bound_holds_where_the_sharper_constant_fails() {
        let (p, phi) = setup(1.9);
        let r = pccomp_box(&p, &phi, 4, 30).unwrap();
        assert!(r.series_bound_met);
        assert!(!r.alpha_bound_met, "{:?} vs {}", r.alpha, r.bound);
        for s in [1.45, 1.5, 1.7, 1.8, 1.95] {
            let (p, phi) = setup(s);
            assert!(pccomp_box(&p, &phi, 4, 30).unwrap().series_bound_met, "slope {s}");
        }
    }

    #[test]
    fn flat_prefix_is_enforced() {
        let (p, phi) = setup(1.7);
        // (0.2, 0.4) holds f³(c) = 0.3, so a c-pullback appears at depth 3
        let e = build_box(&p, &phi, Interval::new(0.2, 0.4).unwrap(), 5, 5).unwrap_err();
        assert!(matches!(e, Error::FlatPrefixViolated { .. }));
    }

    #[test]
    fn membership_and_transport() {
        let (p, phi) = setup(2.0);
        let b = build_box(&p, &phi, Interval::new(0.0, 0.5).unwrap(), 1, 30).unwrap();
        let word = Branch::parse_word("RRL").unwrap();
        let t = FiniteThread::from_branches(&p, 0.3, &word).unwrap();
        let v = b.membership(&t, 3);
        assert_eq!(v.membership, Membership::In);
        assert!(v.certified);
        let moved = b.holonomy_transport(&t, 0.4).unwrap();
        assert_eq!(moved.branch_word(&p), "RRL");
        for i in 0..=3 {
            assert!((moved.coord(i) - t.coord(i)).abs() <= 0.1 / 2f64.powi(i as i32) + 1e-15);
        }
        let back = b.holonomy_transport(&moved, 0.3).unwrap();
        for (x, y) in back.coords().iter().zip(t.coords()) {
            assert!((x - y).abs() < 1e-15);
        }
        let outside = FiniteThread::new(&p, vec![0.7]).unwrap();
        assert_eq!(b.membership(&outside, 0).membership, Membership::Out);
    }

    #[test]
    fn excluded_threads_are_out() {
        let (p, phi) = setup(1.7);
        let (_, j) = pccomp_component(&p, &phi, 4);
        let b = build_box(&p, &phi, j, 4, 30).unwrap();
        let e = &b.excluded[0];
        let x = b.probes(1)[0];
        if let Some(y) = lift(&p, e.branches(), x) {
            let mut t = FiniteThread::from_branches(&p, x, e.branches()).unwrap();
            assert!((t.coord(e.depth()) - y).abs() < 1e-15);
            t = t.extend(&p, Branch::Right).unwrap();
            assert_eq!(b.membership(&t, t.depth()).membership, Membership::Out);
        }
    }
}
