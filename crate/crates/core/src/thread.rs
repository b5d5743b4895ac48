//! Finite threads, interval threads and flat arcs.
//!
//! A point of the inverse limit is a thread `(x₀, x₁, …)` with
//! `f(x_{i+1}) = x_i`; here it is truncated at depth `N`. An interval thread
//! `⟨J₀, J₁, …⟩` with `f(J_{i+1}) = J_i` describes an arc. The arc is
//! `m`-flat when `c` avoids the interior of `J_i` for every `i > m`; then the
//! levels beyond `m` are determined by `J_m` and the projection to level `m`
//! is injective. Flatness past the truncation depth is not observable, so
//! verdicts carry the depth they were checked to.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{Branch, Interval, TentParams, TOL};
use crate::rigor::Enclosure;

/// Consistency tolerance for `f(x_{i+1}) = x_i`.
const THREAD_TOL: f64 = 64.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteThread {
    coords: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl FiniteThread {
    /// Validates `f(x_{i+1}) = x_i` for every consecutive pair.
    pub fn new(p: &TentParams, coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("a thread needs at least x₀".into()));
        }
        let tol = THREAD_TOL.max(p.width());
        for (i, w) in coords.windows(2).enumerate() {
            let defect = (p.eval(w[1])? - w[0]).abs();
            if defect > tol {
                return Err(Error::InconsistentThread { level: i, defect });
            }
        }
        p.eval(coords[0])?;
        Ok(Self { coords })
    }

    /// `x₀` pulled back along `branches`: `x_{i+1}` is the preimage of `x_i`
    /// on branch `branches[i]`.
    pub fn from_branches(p: &TentParams, x0: f64, branches: &[Branch]) -> Result<Self> {
        let mut coords = Vec::with_capacity(branches.len() + 1);
        coords.push(x0);
        p.eval(x0)?;
        for &b in branches {
            let next = p.inverse(b, *coords.last().unwrap())?;
            coords.push(next);
        }
        Ok(Self { coords })
    }

    /// Pulls `x0` back `depth` times choosing uniformly among the available
    /// branches.
    pub fn random_backward(p: &TentParams, x0: f64, depth: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut t = Self::from_branches(p, x0, &[])?;
        for _ in 0..depth {
            t = t.extend_random(p, rng);
        }
        Ok(t)
    }

    pub(crate) fn from_coords_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn depth(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `π_i`, the level-`i` coordinate.
    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn base(&self) -> f64 {
        self.coords[0]
    }

    /// Branch label of `x_i` for `i = 1..=depth`; `None` within [`TOL`] of `c`.
    pub fn branches(&self, p: &TentParams) -> Vec<Option<Branch>> {
        self.coords[1..].iter().map(|&x| p.branch_of(x)).collect()
    }

    /// The branch word of levels `1..=depth`, with `c` written as `C`.
    pub fn branch_word(&self, p: &TentParams) -> String {
        self.branches(p).iter().map(|b| b.map_or('C', Branch::as_char)).collect()
    }

    /// `f̂(x̂) = (f(x₀), x₀, x₁, …)`. With `keep_depth` the last coordinate is
    /// dropped so the depth stays the same.
    pub fn shift_forward(&self, p: &TentParams, keep_depth: bool) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len() + 1);
        coords.push(p.apply(self.coords[0]));
        coords.extend_from_slice(&self.coords);
        if keep_depth {
            coords.pop();
        }
        Self { coords }
    }

    /// `f̂⁻¹(x̂) = (x₁, x₂, …)`, extended at the bottom by the preimage of
    /// `x_N` on `branch`. A depth-0 thread gains its new base this way.
    pub fn shift_backward(&self, p: &TentParams, branch: Branch) -> Result<Self> {
        let extended = self.extend(p, branch)?;
        Ok(Self { coords: extended.coords[1..].to_vec() })
    }

    pub fn shift(&self, p: &TentParams, direction: Direction, branch: Option<Branch>) -> Result<Self> {
        match direction {
            Direction::Forward => Ok(self.shift_forward(p, false)),
            Direction::Backward => {
                let b = branch.ok_or_else(|| Error::InvalidArgument("backward shift needs a branch".into()))?;
                self.shift_backward(p, b)
            }
        }
    }

    /// Appends the preimage of `x_N` on `branch`.
    pub fn extend(&self, p: &TentParams, branch: Branch) -> Result<Self> {
        let mut coords = self.coords.clone();
        coords.push(p.inverse(branch, *coords.last().unwrap())?);
        Ok(Self { coords })
    }

    pub fn extend_random(&self, p: &TentParams, rng: &mut impl Rng) -> Self {
        let last = *self.coords.last().unwrap();
        let pre = p.preimages(last).expect("thread coordinates lie in [0, 1]");
        let next = match pre.left {
            Some(l) if rng.random::<bool>() => l,
            _ => pre.right,
        };
        let mut coords = self.coords.clone();
        coords.push(next);
        Self { coords }
    }

    /// `(x₁, x₂, …)`, the tail re-indexed as a thread of depth `N − 1`.
    pub fn tail(&self) -> Result<Self> {
        if self.coords.len() < 2 {
            return Err(Error::InvalidArgument("a depth-0 thread has no tail".into()));
        }
        Ok(Self { coords: self.coords[1..].to_vec() })
    }

    pub fn truncate(&self, depth: usize) -> Self {
        Self { coords: self.coords[..=depth.min(self.depth())].to_vec() }
    }
}

/// Enclosure of `d(x̂, x̂′) = Σ |x_i − x′_i| / 2^i` from the coordinates up to
/// depth `N`; the unseen tail adds at most `2^{−N+1}`.
pub fn dhat(a: &FiniteThread, b: &FiniteThread) -> Result<Enclosure> {
    if a.depth() != b.depth() {
        return Err(Error::DepthMismatch(a.depth(), b.depth()));
    }
    let mut lower = 0.0;
    let mut scale = 1.0;
    for (x, y) in a.coords.iter().zip(&b.coords) {
        lower += (x - y).abs() * scale;
        scale *= 0.5;
    }
    let n = a.depth() as i32;
    let lower = lower * (1.0 - 2.0 * f64::EPSILON);
    Ok(Enclosure::new(lower, (lower + 2f64.powi(1 - n)).next_up()))
}

/// A depth-stamped boolean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthVerdict {
    pub value: bool,
    /// Levels checked: `0..=depth`.
    pub depth: usize,
}

/// `⟨J₀, …, J_N⟩` with `f(J_{i+1}) = J_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalThread {
    intervals: Vec<Interval>,
}

impl IntervalThread {
    /// Validates `f(J_{i+1}) = J_i` up to [`TOL`].
    pub fn new(p: &TentParams, intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("an interval thread needs J₀".into()));
        }
        for (i, w) in intervals.windows(2).enumerate() {
            let img = p.image_interval(&w[1]);
            let defect = (img.lo - w[0].lo).abs().max((img.hi - w[0].hi).abs());
            if defect > 1e3 * TOL {
                return Err(Error::InconsistentThread { level: i, defect });
            }
        }
        Ok(Self { intervals })
    }

    /// The thread with `J_m` given: levels below `m` are images, and level
    /// `m + k` is the branch-`tail[k-1]` pullback of level `m + k − 1`.
    pub fn from_level(p: &TentParams, m: usize, j_m: Interval, tail: &[Branch]) -> Result<Self> {
        let mut intervals = vec![j_m];
        for _ in 0..m {
            let next = p.image_interval(intervals.last().unwrap());
            intervals.push(next);
        }
        intervals.reverse();
        for &b in tail {
            let next = branch_pullback(p, intervals.last().unwrap(), b)?;
            intervals.push(next);
        }
        Ok(Self { intervals })
    }

    pub fn depth(&self) -> usize {
        self.intervals.len() - 1
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn level(&self, i: usize) -> Interval {
        self.intervals[i]
    }

    /// `⟨f(J₀), J₀, J₁, …⟩`.
    pub fn shift_forward(&self, p: &TentParams) -> Self {
        let mut intervals = Vec::with_capacity(self.intervals.len() + 1);
        intervals.push(p.image_interval(&self.intervals[0]));
        intervals.extend_from_slice(&self.intervals);
        Self { intervals }
    }

    /// `c ∉ int J_i` for all `m < i ≤ depth`.
    pub fn is_m_flat(&self, p: &TentParams, m: usize) -> DepthVerdict {
        let c = p.critical_point();
        let value = self.intervals.iter().skip(m + 1).all(|j| !j.interior_contains(c));
        DepthVerdict { value, depth: self.depth() }
    }

    /// The least `m` at which the truncated thread is flat.
    pub fn flat_level(&self, p: &TentParams) -> usize {
        let c = p.critical_point();
        self.intervals.iter().rposition(|j| j.interior_contains(c)).unwrap_or(0)
    }

    /// Level-0 thread through the point `y ∈ J_m`.
    pub fn thread_through(&self, p: &TentParams, m: usize, y: f64) -> Result<FiniteThread> {
        if !self.intervals[m].contains(y) {
            return Err(Error::NotInPreimage(y));
        }
        let mut coords = vec![y];
        for _ in 0..m {
            coords.push(p.apply(*coords.last().unwrap()));
        }
        coords.reverse();
        for i in m + 1..=self.depth() {
            let b = flat_branch(p, &self.intervals[i]).ok_or(Error::NotFlat { m, level: i })?;
            let prev = *coords.last().unwrap();
            coords.push(p.inverse(b, prev)?);
        }
        Ok(FiniteThread { coords })
    }

    /// The sub-arc over `sub ⊆ J_m`, lifted through the levels above `m`.
    pub fn sub_thread(&self, p: &TentParams, m: usize, sub: Interval) -> Result<Self> {
        if !self.intervals[m].contains_interval(&sub) {
            return Err(Error::BadInterval { lo: sub.lo, hi: sub.hi });
        }
        let mut intervals = vec![sub];
        for _ in 0..m {
            let next = p.image_interval(intervals.last().unwrap());
            intervals.push(next);
        }
        intervals.reverse();
        for i in m + 1..=self.depth() {
            let b = flat_branch(p, &self.intervals[i]).ok_or(Error::NotFlat { m, level: i })?;
            let next = branch_pullback(p, intervals.last().unwrap(), b)?;
            intervals.push(next);
        }
        Ok(Self { intervals })
    }

    /// Splits the `m`-flat arc into its maximal 0-flat pieces: the intervals
    /// of monotonicity of `f^m` on `J_m`, cut where `f^k(y) = c` for some
    /// `0 ≤ k < m`.
    pub fn flat_decompose(&self, p: &TentParams, m: usize) -> Result<Decomposition> {
        if m > self.depth() {
            return Err(Error::DepthMismatch(m, self.depth()));
        }
        if let Some(level) = self.first_non_flat_level(p, m) {
            return Err(Error::NotFlat { m, level });
        }
        let jm = self.intervals[m];
        let bounds = monotone_pieces(p, jm, m);
        let mut pieces = Vec::with_capacity(bounds.len());
        for w in bounds.windows(2) {
            let sub = Interval { lo: w[0], hi: w[1] };
            pieces.push(self.sub_thread(p, m, sub)?);
        }
        let nodes = bounds[1..bounds.len() - 1]
            .iter()
            .map(|&z| self.thread_through(p, m, z))
            .collect::<Result<Vec<_>>>()?;
        Ok(Decomposition { level: m, pieces, nodes })
    }

    fn first_non_flat_level(&self, p: &TentParams, m: usize) -> Option<usize> {
        let c = p.critical_point();
        (m + 1..=self.depth()).find(|&i| self.intervals[i].interior_contains(c))
    }

    /// `ρ`: the total level-0 length of the 0-flat pieces.
    pub fn rho(&self, p: &TentParams, m: usize) -> Result<f64> {
        Ok(self.flat_decompose(p, m)?.rho())
    }

    /// The largest `ℓ` with `J_ℓ = [0, 1]` and the radius `2^{−ℓ}` to which
    /// the arc is dense, or `None` if no level is full.
    pub fn epsilon_density_radius(&self, p: &TentParams) -> Result<Option<DensityRadius>> {
        let Some(level) = self.intervals.iter().rposition(Interval::is_unit) else {
            return Ok(None);
        };
        let rho = self.rho(p, self.flat_level(p))?;
        let bound = p.slope().powi(level as i32);
        Ok(Some(DensityRadius {
            level,
            radius: 0.5f64.powi(level as i32),
            rho,
            rho_lower_bound: bound,
            rho_bound_holds: rho >= bound * (1.0 - 1e-12),
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRadius {
    pub level: usize,
    pub radius: f64,
    pub rho: f64,
    /// `s^ℓ`.
    pub rho_lower_bound: f64,
    pub rho_bound_holds: bool,
}

/// Which side of `c` an interval with `c` outside its interior lies on.
fn flat_branch(p: &TentParams, j: &Interval) -> Option<Branch> {
    let c = p.critical_point();
    if j.hi <= c + TOL {
        Some(Branch::Left)
    } else if j.lo >= c - TOL {
        Some(Branch::Right)
    } else {
        None
    }
}

/// The interval `K` on branch `b` with `f(K) = j`.
fn branch_pullback(p: &TentParams, j: &Interval, b: Branch) -> Result<Interval> {
    let lo = p.inverse(b, j.lo)?;
    let hi = p.inverse(b, j.hi)?;
    Interval::new(lo.min(hi), lo.max(hi))
}

/// Breakpoints (including the ends of `j`) of the monotone pieces of `f^m`
/// on `j`.
fn monotone_pieces(p: &TentParams, j: Interval, m: usize) -> Vec<f64> {
    let mut cuts = vec![j.lo];
    collect_cuts(p, j, m, &mut |y| cuts.push(y));
    cuts.push(j.hi);
    cuts
}

/// Calls `emit` with the interior points `y` of `j` with `f^k(y) = c` for
/// some `k < m`, in increasing order.
fn collect_cuts(p: &TentParams, j: Interval, m: usize, emit: &mut dyn FnMut(f64)) {
    if m == 0 {
        return;
    }
    let c = p.critical_point();
    let halves: Vec<(Interval, Branch)> = if j.interior_contains(c) {
        vec![(Interval { lo: j.lo, hi: c }, Branch::Left), (Interval { lo: c, hi: j.hi }, Branch::Right)]
    } else {
        vec![(j, flat_branch(p, &j).expect("c outside the interior"))]
    };
    for (k, (half, branch)) in halves.iter().enumerate() {
        if k == 1 {
            emit(c);
        }
        let image = p.image_interval(half);
        let mut inner = Vec::new();
        collect_cuts(p, image, m - 1, &mut |y| inner.push(y));
        let mut pulled: Vec<f64> = inner
            .into_iter()
            .filter_map(|y| p.inverse(*branch, y).ok())
            .filter(|&y| half.interior_contains(y))
            .collect();
        if *branch == Branch::Right {
            pulled.reverse();
        }
        pulled.into_iter().for_each(&mut *emit);
    }
}

/// Distinct points `y ∈ int J` with `f^k(y) = c` for some `0 ≤ k < m`,
/// found by backward enumeration from `c` (independent of
/// [`IntervalThread::flat_decompose`]).
pub fn critical_preimages_in(p: &TentParams, j: &Interval, m: usize) -> Vec<f64> {
    let mut found = Vec::new();
    let mut level = vec![p.critical_point()];
    for _ in 0..m {
        found.extend(level.iter().copied().filter(|&y| j.interior_contains(y)));
        level = level
            .iter()
            .flat_map(|&y| {
                let pre = p.preimages(y).expect("points of [0, 1]");
                pre.left.into_iter().chain(std::iter::once(pre.right))
            })
            .collect();
    }
    found.sort_by(f64::total_cmp);
    found.dedup_by(|a, b| (*a - *b).abs() <= TOL);
    found
}

/// A finite efficient 0-flat decomposition: consecutive pieces share one
/// node thread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub level: usize,
    pub pieces: Vec<IntervalThread>,
    pub nodes: Vec<FiniteThread>,
}

impl Decomposition {
    pub fn rho(&self) -> f64 {
        self.pieces.iter().map(|piece| piece.level(0).len()).sum()
    }

    /// Index of the piece whose level-`m` interval contains `y`.
    pub fn piece_containing(&self, y: f64) -> Option<usize> {
        self.pieces.iter().position(|piece| piece.level(self.level).contains(y))
    }

    /// Plot data: one row per piece (its level-`m` and level-0 intervals)
    /// and one per node (its level-`m` and level-0 coordinates).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,index,level_m_lo,level_m_hi,x0_lo,x0_hi\n");
        for (i, piece) in self.pieces.iter().enumerate() {
            let (jm, j0) = (piece.level(self.level), piece.level(0));
            let _ = writeln!(out, "piece,{i},{},{},{},{}", jm.lo, jm.hi, j0.lo, j0.hi);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let (z, z0) = (node.coord(self.level), node.base());
            let _ = writeln!(out, "node,{i},{z},{z},{z0},{z0}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn shift_examples() {
        let p = TentParams::new(2.0).unwrap();
        let t = FiniteThread::from_branches(&p, 0.5, &[Branch::Left, Branch::Right]).unwrap();
        assert_eq!(t.shift_forward(&p, false).base(), 1.0);
        let fixed = FiniteThread::new(&p, vec![2.0 / 3.0; 6]).unwrap();
        let back = fixed.shift_backward(&p, Branch::Right).unwrap();
        for (a, b) in back.coords().iter().zip(fixed.coords()) {
            assert!((a - b).abs() < 1e-15);
        }
        let g = TentParams::golden();
        let t = FiniteThread::new(&g, vec![0.2]).unwrap();
        assert!(matches!(t.shift_backward(&g, Branch::Left), Err(Error::BranchUnavailable(_))));
        assert!(FiniteThread::new(&p, vec![0.3, 0.3]).is_err());
    }

    #[test]
    fn flatness_examples() {
        let p = TentParams::new(2.0).unwrap();
        // J₁ = [0.3, 0.8] straddles c = 0.5
        let j = IntervalThread::from_level(&p, 1, iv(0.3, 0.8), &[Branch::Left, Branch::Left]).unwrap();
        assert!(j.level(0).approx_eq(&iv(0.4, 1.0), 1e-15));
        assert!(!j.is_m_flat(&p, 0).value);
        assert!(j.is_m_flat(&p, 1).value);
        let g = TentParams::golden();
        let c = g.critical_point();
        let j = IntervalThread::from_level(&g, 0, iv(0.05, c - 0.05), &[]).unwrap();
        assert!(j.is_m_flat(&g, 0).value);
    }

    #[test]
    fn decomposition_examples() {
        let p = TentParams::new(2.0).unwrap();
        let j = IntervalThread::from_level(&p, 1, iv(0.3, 0.8), &[Branch::Right; 3]).unwrap();
        let d = j.flat_decompose(&p, 1).unwrap();
        assert_eq!(d.pieces.len(), 2);
        assert_eq!(d.nodes.len(), 1);
        assert_eq!(d.nodes[0].coord(1), 0.5);
        assert_eq!(d.nodes[0].base(), 1.0);
        assert!((d.rho() - 1.0).abs() < 1e-15);

        let j = IntervalThread::from_level(&p, 2, iv(0.2, 0.9), &[]).unwrap();
        let d = j.flat_decompose(&p, 2).unwrap();
        let cuts: Vec<f64> = d.nodes.iter().map(|n| n.coord(2)).collect();
        assert_eq!(cuts, vec![0.25, 0.5, 0.75]);
        assert_eq!(d.pieces.len(), 4);

        let flat = IntervalThread::from_level(&p, 0, iv(0.1, 0.2), &[Branch::Left; 4]).unwrap();
        let d = flat.flat_decompose(&p, 0).unwrap();
        assert_eq!((d.pieces.len(), d.nodes.len()), (1, 0));
        assert!((d.rho() - 0.1).abs() < 1e-15);
        assert!(flat.flat_decompose(&p, 7).is_err());
    }

    #[test]
    fn decompose_rejects_non_flat() {
        let p = TentParams::new(2.0).unwrap();
        let j = IntervalThread::from_level(&p, 1, iv(0.3, 0.8), &[]).unwrap();
        assert!(matches!(j.flat_decompose(&p, 0), Err(Error::NotFlat { m: 0, level: 1 })));
    }

    #[test]
    fn dhat_examples() {
        let p = TentParams::new(2.0).unwrap();
        let a = FiniteThread::from_branches(&p, 0.3, &[Branch::Left; 10]).unwrap();
        let e = dhat(&a, &a).unwrap();
        assert_eq!(e.lo, 0.0);
        assert!(e.hi >= 2f64.powi(-9));
        let b = FiniteThread::from_branches(&p, 0.2, &[Branch::Right; 10]).unwrap();
        assert!(matches!(dhat(&a, &b.truncate(5)), Err(Error::DepthMismatch(10, 5))));
        // 0-flat arc over [0.1, 0.2]: two threads 0.1 apart at level 0
        let arc = IntervalThread::from_level(&p, 0, iv(0.1, 0.2), &[Branch::Left; 30]).unwrap();
        let x = arc.thread_through(&p, 0, 0.1).unwrap();
        let y = arc.thread_through(&p, 0, 0.2).unwrap();
        assert!(dhat(&x, &y).unwrap().contains(0.1 * 4.0 / 3.0));
    }

    #[test]
    fn density_radius_examples() {
        let p = TentParams::new(2.0).unwrap();
        let j = IntervalThread::from_level(&p, 0, iv(0.0, 1.0), &[Branch::Left, Branch::Left]).unwrap();
        assert!(j.level(2).approx_eq(&iv(0.0, 0.25), 1e-15));
        let r = j.epsilon_density_radius(&p).unwrap().unwrap();
        assert_eq!((r.level, r.radius), (0, 1.0));
        assert!(r.rho_bound_holds);
        let r = j.shift_forward(&p).epsilon_density_radius(&p).unwrap().unwrap();
        assert_eq!((r.level, r.radius), (1, 0.5));
        assert!(r.rho >= 2.0 - 1e-12 && r.rho_bound_holds);
        let short = IntervalThread::from_level(&p, 0, iv(0.1, 0.2), &[Branch::Left; 3]).unwrap();
        assert!(short.epsilon_density_radius(&p).unwrap().is_none());
    }

    #[test]
    fn critical_preimages_match_cuts() {
        let p = TentParams::new(1.7).unwrap();
        let j = IntervalThread::from_level(&p, 5, iv(0.05, 0.95), &[]).unwrap();
        let d = j.flat_decompose(&p, 5).unwrap();
        let pre = critical_preimages_in(&p, &j.level(5), 5);
        assert_eq!(d.pieces.len(), pre.len() + 1);
        for (node, y) in d.nodes.iter().zip(&pre) {
            assert!((node.coord(5) - y).abs() < 1e-12);
        }
    }

    fn slope() -> impl Strategy<Value = f64> {
        prop_oneof![Just(1.5), Just(0.5 * (1.0 + 5f64.sqrt())), Just(1.7), Just(2.0), 1.42f64..2.0]
    }

    proptest! {
        #[test]
        fn rho_scales_by_s(s in slope(), m in 0usize..5, a in 0.0f64..1.0, len in 1e-3f64..0.5) {
            let p = TentParams::new(s).unwrap();
            let hi = (a + len).min(1.0);
            prop_assume!(hi - a > 1e-3);
            let j = IntervalThread::from_level(&p, m, iv(a, hi), &[]).unwrap();
            let rho = j.rho(&p, m).unwrap();
            let shifted = j.shift_forward(&p).rho(&p, m + 1).unwrap();
            prop_assert!((shifted - s * rho).abs() <= 1e-12 * shifted.max(1.0));
        }

        #[test]
        fn nodes_pass_through_c(s in slope(), m in 1usize..6, a in 0.0f64..0.5) {
            let p = TentParams::new(s).unwrap();
            let j = IntervalThread::from_level(&p, m, iv(a, a + 0.5), &[]).unwrap();
            let d = j.flat_decompose(&p, m).unwrap();
            let c = p.critical_point();
            for node in &d.nodes {
                prop_assert!((1..=m).any(|i| (node.coord(i) - c).abs() <= 1e-12));
            }
        }
    }
}
