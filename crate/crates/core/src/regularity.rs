//! Global leaf regularity.
//!
//! A thread whose coordinates stay at least `δ > 0` away from `c` is
//! globally leaf regular. Periodic backward itineraries give exact
//! examples: the branch word fixes an affine contraction whose fixed point
//! is the periodic thread. For typical points the module reports sampling
//! statistics — the largest gap of the critical orbit and the rate at which
//! `μ̂`-typical threads visit a shrunken positive-measure box under backward
//! shifts — as data only.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{StepDensity, HISTOGRAM_BATCHES};
use crate::error::{Error, Result};
use crate::fiber::{pccomp_box, Membership, MuHatSampler, PccompReport, ZeroBox, DEFAULT_DEPTH};
use crate::map::{Branch, Interval, TentParams};
use crate::rigor::Enclosure;
use crate::stats::{BatchMeans, Estimate};

/// Default bound on the period in [`search_periodic_gr`].
pub const DEFAULT_PERIOD_BOUND: usize = 20;

/// Carried by every typicality report.
pub const CATEGORY_DISCLAIMER: &str =
    "category-theoretic claims untested: dense G-delta statements are invisible to sampling";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    DeltaAvoidance,
    PeriodicInvariantSet,
    BackwardVisit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GRCertificate {
    pub kind: CertificateKind,
    /// Backward itinerary, repeated periodically.
    pub word: String,
    /// `x₀, …, x_{q−1}` of the periodic thread.
    pub orbit: Vec<f64>,
    /// `min_i |x_i − c|`.
    pub delta: f64,
    /// A rigorous lower bound for `δ` over the slope enclosure.
    pub delta_lower: f64,
    /// Number of thread levels checked.
    pub depth: usize,
    /// The orbit enclosures were verified to lie strictly inside their
    /// branch domains, so the periodic thread exists and avoids `c`.
    pub exact: bool,
}

impl GRCertificate {
    /// Pulls `x₀` back along the periodic word to `depth` levels in floating
    /// point and returns `min |x_i − c|` over that range.
    pub fn revalidate(&self, p: &TentParams, depth: usize) -> Result<f64> {
        let word = Branch::parse_word(&self.word)?;
        let c = p.critical_point();
        let mut x = self.orbit[0];
        let mut delta = (x - c).abs();
        for i in 0..depth {
            // backward steps contract, so rounding does not accumulate
            x = p.inverse(word[i % word.len()], x)?;
            delta = delta.min((x - c).abs());
        }
        Ok(delta)
    }
}

/// The composite of the inverse branches of `word`, as `x ↦ a·x + b`.
fn composite_inverse(s: Enclosure, word: &[Branch]) -> (Enclosure, Enclosure) {
    let one = Enclosure::point(1.0);
    let floor = 2.0 - s;
    word.iter().fold((one, Enclosure::point(0.0)), |(a, b), br| match br {
        Branch::Right => (-(a / s), 1.0 - b / s),
        Branch::Left => (a / s, (b - floor) / s),
    })
}

/// Certifies the periodic thread with backward itinerary `word`.
///
/// Fails with [`Error::NotRealizable`] if the fixed point escapes `[0, 1]`,
/// an orbit point lands on the wrong side of `c` (or cannot be separated
/// from it), or a left step starts below `2 − s`.
pub fn certify_periodic_gr(p: &TentParams, word: &str) -> Result<GRCertificate> {
    let branches = Branch::parse_word(word)?;
    if branches.is_empty() {
        return Err(Error::InvalidArgument("empty branch word".into()));
    }
    let refuse = || Error::NotRealizable(word.to_string());
    let s = p.slope_enclosure();
    let c = p.critical_enclosure();
    let floor = 2.0 - s;
    let (a, b) = composite_inverse(s, &branches);
    let x0 = b / (1.0 - a);
    if x0.lo < 0.0 || x0.hi > 1.0 {
        return Err(refuse());
    }
    let mut encl = vec![x0];
    let mut x = x0;
    for br in &branches {
        x = match br {
            Branch::Right => 1.0 - x / s,
            Branch::Left => {
                if x.lo < floor.hi {
                    return Err(refuse());
                }
                (x - floor) / s
            }
        };
        let on_side = match br {
            Branch::Right => x.lo > c.hi && x.hi <= 1.0,
            Branch::Left => x.hi < c.lo && x.lo >= 0.0,
        };
        if !on_side {
            return Err(refuse());
        }
        encl.push(x);
    }
    if !encl[branches.len()].overlaps(x0) {
        return Err(Error::Invariant(format!("periodic solve for {word} did not close")));
    }
    encl.pop();
    let cm = p.critical_point();
    let orbit: Vec<f64> = encl.iter().map(|e| e.mid()).collect();
    let delta = orbit.iter().map(|x| (x - cm).abs()).fold(f64::INFINITY, f64::min);
    let delta_lower = encl
        .iter()
        .map(|e| if e.lo > c.hi { e.lo - c.hi } else { c.lo - e.hi })
        .fold(f64::INFINITY, f64::min)
        .next_down();
    Ok(GRCertificate {
        kind: CertificateKind::PeriodicInvariantSet,
        word: word.to_string(),
        orbit,
        delta,
        delta_lower,
        depth: branches.len(),
        exact: delta_lower > 0.0,
    })
}

/// A `δ`-avoidance certificate for an explicit finite thread.
pub fn certify_delta_avoidance(p: &TentParams, coords: &[f64]) -> GRCertificate {
    let c = p.critical_point();
    let delta = coords.iter().map(|x| (x - c).abs()).fold(f64::INFINITY, f64::min);
    let word = coords[1..].iter().map(|&x| if x < c { 'L' } else { 'R' }).collect();
    GRCertificate {
        kind: CertificateKind::DeltaAvoidance,
        word,
        orbit: coords.to_vec(),
        delta,
        delta_lower: (delta - p.width()).max(0.0),
        depth: coords.len() - 1,
        exact: false,
    }
}

/// Lyndon words of length exactly `n` over `{L, R}` (with `L < R`), in
/// lexicographic order: one representative per primitive periodic orbit.
fn lyndon_words(n: usize) -> Vec<Vec<Branch>> {
    // Duval's algorithm generates all Lyndon words of length ≤ n in order
    let mut out = Vec::new();
    let mut w: Vec<u8> = vec![0];
    while !w.is_empty() {
        if w.len() == n {
            out.push(w.iter().map(|&d| if d == 0 { Branch::Left } else { Branch::Right }).collect());
        }
        let m = w.len();
        while w.len() < n {
            let next = w[w.len() - m];
            w.push(next);
        }
        while w.last() == Some(&1) {
            w.pop();
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out
}

/// All certifiable primitive periodic threads of period `≤ max_period`,
/// ordered by period and then lexicographically.
pub fn search_periodic_gr(p: &TentParams, max_period: usize) -> Vec<GRCertificate> {
    (1..=max_period)
        .flat_map(|n| {
            lyndon_words(n)
                .into_par_iter()
                .filter_map(|w| certify_periodic_gr(p, &Branch::word(&w)).ok())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Length of the largest component of `[0,1] ∖ {c, f(c), …, f^N(c)}`.
pub fn gap_statistic(p: &TentParams, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("gap statistic needs N >= 2".into()));
    }
    Ok(p.complement_components(n).iter().map(Interval::len).fold(0.0, f64::max))
}

/// `J′ = (a + ε, b − ε)` with `ε = (b − a)/4`.
pub fn shrink_quarter(j: &Interval) -> Interval {
    let eps = j.len() / 4.0;
    Interval { lo: j.lo + eps, hi: j.hi - eps }
}

#[derive(Clone, Debug, Serialize)]
pub struct VisitFractions {
    pub inner: Interval,
    pub samples: usize,
    /// `fractions[d]`: share of threads with some `n ≤ d` such that
    /// `f̂^{−n}` of the thread is in `B′`.
    pub fractions: Vec<f64>,
    /// Share with no visit up to `d` but an unknown verdict on the way.
    pub unknown: Vec<f64>,
    /// The depth-0 value with its batch-means standard error.
    pub depth_zero: Estimate,
}

impl VisitFractions {
    pub fn at(&self, depth: usize) -> f64 {
        self.fractions[depth.min(self.fractions.len() - 1)]
    }

    pub fn is_monotone(&self) -> bool {
        self.fractions.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Backward-visit statistics for `B′ = π₀⁻¹(inner) ∩ B`.
pub fn backward_visit_fraction(
    b: &ZeroBox,
    inner: Interval,
    sampler: &mut MuHatSampler,
    max_depth: usize,
    samples: usize,
    max_unknown: f64,
) -> Result<VisitFractions> {
    let need = max_depth + b.total_depth();
    if sampler.depth() < need {
        return Err(Error::DepthMismatch(sampler.depth(), need));
    }
    if !(b.base.lo <= inner.lo && inner.hi <= b.base.hi) {
        return Err(Error::InvalidArgument(format!("{inner} is not inside the box base {}", b.base)));
    }
    let mut first_visit = vec![0usize; max_depth + 2];
    // +1 where a thread's first unknown verdict occurs, −1 where it later
    // becomes a visit
    let mut unknown_delta = vec![0i64; max_depth + 2];
    let mut zero = BatchMeans::new(samples, HISTOGRAM_BATCHES);
    for _ in 0..samples {
        let t = sampler.next_thread();
        let coords = t.coords();
        let mut visit = None;
        let mut unknown = None;
        for n in 0..=max_depth {
            let x = coords[n];
            if !(inner.lo < x && x < inner.hi) {
                continue;
            }
            match b.membership_of(&coords[n..], b.total_depth()).membership {
                Membership::In => {
                    visit = Some(n);
                    break;
                }
                Membership::Unknown => {
                    unknown.get_or_insert(n);
                }
                Membership::Out => {}
            }
        }
        zero.push(if visit == Some(0) { 1.0 } else { 0.0 });
        first_visit[visit.unwrap_or(max_depth + 1)] += 1;
        if let Some(u) = unknown {
            unknown_delta[u] += 1;
            unknown_delta[visit.unwrap_or(max_depth + 1)] -= 1;
        }
    }
    let total = samples as f64;
    let mut fractions = Vec::with_capacity(max_depth + 1);
    let mut unknown = Vec::with_capacity(max_depth + 1);
    let (mut hit, mut unk) = (0usize, 0i64);
    for d in 0..=max_depth {
        hit += first_visit[d];
        unk += unknown_delta[d];
        fractions.push(hit as f64 / total);
        unknown.push(unk as f64 / total);
    }
    let worst = unknown.iter().copied().fold(0.0, f64::max);
    if worst > max_unknown {
        return Err(Error::Inconclusive { fraction: worst, threshold: max_unknown });
    }
    Ok(VisitFractions { inner, samples, fractions, unknown, depth_zero: zero.estimate() })
}

#[derive(Clone, Debug)]
pub struct TypicalityConfig {
    pub seed: u64,
    /// Flat prefix `N` of the positive-measure box.
    pub prefix: usize,
    pub box_depth: usize,
    pub visit_depth: usize,
    pub samples: usize,
    pub period_bound: usize,
    pub gap_depths: Vec<usize>,
    pub max_unknown: f64,
}

impl Default for TypicalityConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            prefix: 4,
            box_depth: DEFAULT_DEPTH,
            visit_depth: 200,
            samples: 10_000,
            period_bound: 12,
            gap_depths: vec![10, 100, 1000],
            max_unknown: 0.01,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapSample {
    pub n: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PccompSummary {
    pub base: Interval,
    pub prefix: usize,
    pub depth: usize,
    pub excluded: usize,
    pub tail_bound: f64,
    pub sup: f64,
    pub bound: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub alpha_bound_met: bool,
    pub measure_lower_bound: f64,
    pub series_bound: f64,
    pub series_bound_met: bool,
}

impl From<&PccompReport> for PccompSummary {
    fn from(r: &PccompReport) -> Self {
        Self {
            base: r.zero_box.base,
            prefix: r.zero_box.prefix,
            depth: r.zero_box.depth,
            excluded: r.zero_box.excluded.len(),
            tail_bound: r.zero_box.tail_bound,
            sup: r.sup,
            bound: r.bound,
            alpha_lower: r.alpha.lower,
            alpha_upper: r.alpha.upper,
            alpha_bound_met: r.alpha_bound_met,
            measure_lower_bound: r.measure_lower_bound,
            series_bound: r.series_bound,
            series_bound_met: r.series_bound_met,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalityReport {
    pub slope: f64,
    pub seed: u64,
    pub gap_statistics: Vec<GapSample>,
    #[serde(rename = "box")]
    pub pccomp: PccompSummary,
    pub visit: VisitFractions,
    pub periodic_certificates: usize,
    pub period_bound: usize,
    pub summary: Vec<String>,
    pub disclaimer: &'static str,
}

pub fn typicality_report(p: &TentParams, phi: &StepDensity, config: &TypicalityConfig) -> Result<TypicalityReport> {
    let gap_statistics = config
        .gap_depths
        .iter()
        .map(|&n| gap_statistic(p, n).map(|gap| GapSample { n, gap }))
        .collect::<Result<Vec<_>>>()?;
    let pccomp = pccomp_box(p, phi, config.prefix, config.box_depth)?;
    let b = &pccomp.zero_box;
    let inner = shrink_quarter(&b.base);
    let depth = config.visit_depth + b.total_depth();
    let mut sampler = MuHatSampler::with_stride(p, config.seed, depth, depth);
    let visit = backward_visit_fraction(b, inner, &mut sampler, config.visit_depth, config.samples, config.max_unknown)?;
    let periodic = search_periodic_gr(p, config.period_bound).len();
    let last = visit.at(config.visit_depth);
    let summary = vec![
        format!("positive-measure box over {} with mu-hat >= {:.6}", b.base, pccomp.measure_lower_bound),
        format!("backward-visit fraction {last:.4} at depth {}", config.visit_depth),
        format!("{periodic} certified periodic regular threads of period <= {}", config.period_bound),
    ];
    Ok(TypicalityReport {
        slope: p.slope(),
        seed: config.seed,
        gap_statistics,
        pccomp: PccompSummary::from(&pccomp),
        visit,
        periodic_certificates: periodic,
        period_bound: config.period_bound,
        summary,
        disclaimer: CATEGORY_DISCLAIMER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::reference_density;
    use crate::fiber::build_box;

    #[test]
    fn periodic_examples() {
        let two = TentParams::new(2.0).unwrap();
        let r = certify_periodic_gr(&two, "R").unwrap();
        assert!((r.orbit[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.delta - 1.0 / 6.0).abs() < 1e-15);
        assert!(r.exact);
        let rl = certify_periodic_gr(&two, "RL").unwrap();
        assert!((rl.orbit[0] - 0.4).abs() < 1e-15 && (rl.orbit[1] - 0.8).abs() < 1e-15);
        assert!((rl.delta - 0.1).abs() < 1e-15);

        let g = TentParams::golden();
        let s = g.slope();
        let r = certify_periodic_gr(&g, "R").unwrap();
        assert!((r.orbit[0] - s / (1.0 + s)).abs() < 1e-15);
        assert!((r.delta - 0.2360680).abs() < 1e-7);
    }

    #[test]
    fn unrealizable_words_are_refused() {
        let two = TentParams::new(2.0).unwrap();
        // the left fixed point is 0, whose thread is fine, but at s = 1.7 the
        // left branch cannot reach its own fixed point
        let p = TentParams::new(1.7).unwrap();
        assert!(matches!(certify_periodic_gr(&p, "L"), Err(Error::NotRealizable(_))));
        assert!(certify_periodic_gr(&two, "").is_err());
    }

    #[test]
    fn revalidation_under_doubled_depth() {
        let g = TentParams::golden();
        for cert in search_periodic_gr(&g, 8) {
            let d = cert.revalidate(&g, 2 * cert.depth).unwrap();
            assert!(d >= cert.delta_lower, "{cert:?}");
        }
    }

    #[test]
    fn lyndon_counts() {
        let counts: Vec<usize> = (1..=8).map(|n| lyndon_words(n).len()).collect();
        assert_eq!(counts, vec![2, 1, 2, 3, 6, 9, 18, 30]);
        assert_eq!(Branch::word(&lyndon_words(3)[0]), "LLR");
    }

    #[test]
    fn certificates_exist_at_reference_slopes() {
        for s in [1.5, 1.618_033_988_749_895, 1.7, 1.9, 2.0] {
            let p = TentParams::new(s).unwrap();
            assert!(!search_periodic_gr(&p, 6).is_empty(), "slope {s}");
        }
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_statistic(&TentParams::new(2.0).unwrap(), 1000).unwrap(), 0.5);
        let g = TentParams::golden();
        let gap = gap_statistic(&g, 1000).unwrap();
        assert!((gap - (1.0 - g.critical_point())).abs() < 1e-12);
        assert_eq!(gap, gap_statistic(&g, 10).unwrap());
        assert!(gap_statistic(&g, 1).is_err());
    }

    #[test]
    fn visit_fraction_on_full_tent() {
        let p = TentParams::new(2.0).unwrap();
        let phi = reference_density(&p).unwrap();
        let j = Interval::new(0.0, 0.5).unwrap();
        let b = build_box(&p, &phi, j, 1, 10).unwrap();
        let inner = shrink_quarter(&j);
        assert_eq!(inner, Interval { lo: 0.125, hi: 0.375 });
        let depth = 60 + b.total_depth();
        let mut sampler = MuHatSampler::with_stride(&p, 2, depth, depth);
        let v = backward_visit_fraction(&b, inner, &mut sampler, 60, 2000, 0.01).unwrap();
        assert!(v.is_monotone());
        assert!((v.at(0) - 0.25).abs() < 0.05);
        assert!(v.at(60) > 0.99);
    }
}
