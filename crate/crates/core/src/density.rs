//! The invariant density `φ` as a step function.
//!
//! Four sources are available:
//!
//! * [`markov_density`]: exact on the partition cut by a finite critical
//!   orbit, from the transfer-operator fixed point restricted to step
//!   functions.
//! * [`orbit_series_density`]: for any slope, the expansion of `φ` as a
//!   signed sum of indicator functions `1[x ≥ f^n(c)]` with geometrically
//!   decaying weights, truncated with an explicit pointwise error bound.
//! * [`ulam_density`]: Ulam's discretization on a uniform partition.
//! * [`orbit_histogram`]: a Birkhoff histogram of one seeded orbit, with
//!   batch-means standard errors per bin.
//!
//! Evaluation uses the right-continuous representative: at an interior
//! breakpoint the right cell's value is returned and flagged.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{MarkovStructure, TentParams, TOL};
use crate::orbit::{precise_critical_orbit, TypicalOrbit};
use crate::stats::batch_stderr;

/// Power-iteration residual (ℓ¹ on probability vectors) for [`ulam_density`].
pub const ULAM_TOL: f64 = 1e-12;
/// Default power-iteration budget for [`ulam_density`].
pub const ULAM_MAX_ITERATIONS: usize = 100_000;
/// Number of batches used for histogram standard errors.
pub const HISTOGRAM_BATCHES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensitySource {
    Ulam,
    MarkovExact,
    OrbitSeries,
    Histogram,
}

/// How a histogram orbit was split across independent seeded sub-orbits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sharding {
    pub seed: u64,
    pub shards: usize,
    pub length: usize,
}

/// A piecewise-constant density on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDensity {
    pub slope: f64,
    /// Strictly increasing, from `0` to `1`.
    pub breakpoints: Vec<f64>,
    /// One value per cell `[breakpoints[k], breakpoints[k+1])`.
    pub values: Vec<f64>,
    pub normalization_residual: f64,
    pub source: DensitySource,
    /// Bound on `|value − φ(x)|` for `x` farther than [`TOL`] from every
    /// breakpoint, when one is known.
    pub pointwise_error: Option<f64>,
    /// Per-cell standard errors (histograms only).
    pub std_errors: Option<Vec<f64>>,
    pub sharding: Option<Sharding>,
}

/// Result of [`StepDensity::eval`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: f64,
    pub at_breakpoint: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub x: f64,
    pub n: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDiagnostics {
    pub total_variation: f64,
    pub sup: f64,
    pub inf: f64,
    pub residuals: Vec<ResidualSample>,
}

impl StepDensity {
    fn from_parts(slope: f64, breakpoints: Vec<f64>, values: Vec<f64>, source: DensitySource) -> Result<Self> {
        debug_assert_eq!(breakpoints.len(), values.len() + 1);
        if let Some(k) = values.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Invariant(format!(
                "density value {} on cell [{}, {}] is not positive",
                values[k],
                breakpoints[k],
                breakpoints[k + 1]
            )));
        }
        let mut d = Self {
            slope,
            breakpoints,
            values,
            normalization_residual: 0.0,
            source,
            pointwise_error: None,
            std_errors: None,
            sharding: None,
        };
        d.normalization_residual = (d.mass() - 1.0).abs();
        Ok(d)
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.windows(2).zip(&self.values).map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// `∫ φ dm`.
    pub fn mass(&self) -> f64 {
        self.cells().map(|(lo, hi, v)| v * (hi - lo)).sum()
    }

    /// Index of the cell containing `x` under the right-cell convention,
    /// and whether `x` sits within [`TOL`] of an interior breakpoint.
    pub fn locate(&self, x: f64) -> (usize, bool) {
        let n = self.values.len();
        let k = self.breakpoints.partition_point(|&b| b <= x).saturating_sub(1).min(n - 1);
        // snap to the breakpoint on either side
        if k + 1 < n && self.breakpoints[k + 1] - x <= TOL {
            return (k + 1, true);
        }
        if k > 0 && x - self.breakpoints[k] <= TOL {
            return (k, true);
        }
        (k, false)
    }

    pub fn eval(&self, x: f64) -> DensityValue {
        let (k, at_breakpoint) = self.locate(x);
        DensityValue { value: self.values[k], at_breakpoint }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.eval(x).value
    }

    /// `∫_lo^hi φ dm`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.cells()
            .map(|(a, b, v)| {
                let overlap = b.min(hi) - a.max(lo);
                if overlap > 0.0 {
                    v * overlap
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `M = sup φ`.
    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Distance from `x` to the nearest interior breakpoint.
    pub fn breakpoint_distance(&self, x: f64) -> f64 {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        let k = inner.partition_point(|&b| b < x);
        let right = inner.get(k).map_or(f64::INFINITY, |&b| b - x);
        let left = k.checked_sub(1).map_or(f64::INFINITY, |i| x - inner[i]);
        left.min(right)
    }

    /// Total variation, extrema, and `phipropn` residuals at a fixed set of
    /// quasi-random probes for `n = 1, 2, 3`.
    pub fn diagnostics(&self) -> DensityDiagnostics {
        let mut residuals = Vec::new();
        if let Ok(p) = TentParams::new(self.slope) {
            for x in quasi_random_points(0.0, 1.0, 8) {
                for n in 1..=3 {
                    if let Ok(r) = phipropn_residual(&p, self, x, n) {
                        residuals.push(ResidualSample { x, n, residual: r });
                    }
                }
            }
        }
        DensityDiagnostics {
            total_variation: self.total_variation(),
            sup: self.sup(),
            inf: self.inf(),
            residuals,
        }
    }

    /// CSV with header `cell_lo,cell_hi,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_lo,cell_hi,value\n");
        for (lo, hi, v) in self.cells() {
            let _ = writeln!(out, "{lo},{hi},{v}");
        }
        out
    }

    /// Merge neighbouring cells whose values agree to `rel_tol`.
    fn merge_equal_cells(&mut self, rel_tol: f64) {
        let mut bps = vec![self.breakpoints[0]];
        let mut vals: Vec<f64> = Vec::new();
        for (k, &v) in self.values.iter().enumerate() {
            match vals.last() {
                Some(&last) if (v - last).abs() <= rel_tol * last.abs().max(v.abs()) => {
                    *bps.last_mut().unwrap() = self.breakpoints[k + 1];
                }
                _ => {
                    vals.push(v);
                    bps.push(self.breakpoints[k + 1]);
                }
            }
        }
        self.breakpoints = bps;
        self.values = vals;
    }
}

/// `count` points of the golden-ratio sequence in `(lo, hi)`.
pub fn quasi_random_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = 0.5 * (5f64.sqrt() - 1.0);
    (1..=count).map(|i| lo + (hi - lo) * (0.5 + i as f64 * step).fract()).collect()
}

/// Ulam's method: the stationary vector of the row-stochastic matrix
/// `P_ij = m(B_i ∩ f⁻¹B_j)/m(B_i)` on `bins` uniform bins.
///
/// The fixed vector is found by lazy power iteration `p ← (p + pP)/2` from
/// the uniform vector. The lazy step keeps convergence when `P` has an
/// eigenvalue `−1`, which happens at `s = √2` where the two halves of
/// `[0, 1]` are swapped.
pub fn ulam_density(p: &TentParams, bins: usize, max_iterations: usize) -> Result<StepDensity> {
    if bins < 16 {
        return Err(Error::InvalidArgument(format!("ulam needs at least 16 bins, got {bins}")));
    }
    if max_iterations == 0 {
        return Err(Error::InvalidArgument("ulam needs at least one iteration".into()));
    }
    let rows = ulam_rows(p, bins);
    let mut prob = vec![1.0 / bins as f64; bins];
    let mut next = vec![0.0; bins];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in rows.iter().enumerate() {
            let pi = prob[i];
            for &(j, w) in row {
                next[j] += pi * w;
            }
        }
        residual = prob.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        for (a, &b) in prob.iter_mut().zip(&next) {
            *a = 0.5 * (*a + b);
        }
        if residual <= ULAM_TOL {
            let total: f64 = prob.iter().sum();
            let values = prob.iter().map(|&q| q / total * bins as f64).collect();
            let breakpoints = (0..=bins).map(|k| k as f64 / bins as f64).collect();
            let mut d = StepDensity::from_parts(p.slope(), breakpoints, values, DensitySource::Ulam)?;
            d.normalization_residual = d.normalization_residual.max(residual);
            return Ok(d);
        }
    }
    Err(Error::NonConvergence { residual, iterations: max_iterations })
}

fn ulam_rows(p: &TentParams, bins: usize) -> Vec<Vec<(usize, f64)>> {
    let n = bins as f64;
    let c = p.critical_point();
    (0..bins)
        .map(|i| {
            let (u, v) = (i as f64 / n, (i + 1) as f64 / n);
            let pieces: Vec<(f64, f64)> = if u < c && c < v { vec![(u, c), (c, v)] } else { vec![(u, v)] };
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (a, b) in pieces {
                let weight = (b - a) * n;
                let (fa, fb) = (p.apply(a), p.apply(b));
                let (lo, hi) = (fa.min(fb), fa.max(fb));
                let len = hi - lo;
                if len <= 0.0 {
                    continue;
                }
                let first = ((lo * n).floor() as usize).min(bins - 1);
                let last = ((hi * n).ceil() as usize).clamp(first + 1, bins);
                for j in first..last {
                    let overlap = hi.min((j + 1) as f64 / n) - lo.max(j as f64 / n);
                    if overlap > 0.0 {
                        match row.last_mut() {
                            Some((jj, w)) if *jj == j => *w += weight * overlap / len,
                            _ => row.push((j, weight * overlap / len)),
                        }
                    }
                }
            }
            row
        })
        .collect()
}

/// The exact density on the partition cut by a finite critical orbit.
///
/// With cells `K_1, …, K_n` and `A_ij = 1` when `K_j ⊆ f(K_i)`, a step
/// function `ψ` is fixed by the transfer operator iff `ψ_j = Σ_i A_ij ψ_i / s`.
/// The homogeneous system together with `Σ ψ_i |K_i| = 1` is solved in the
/// least-squares sense; the returned residual is that of the fixed-point
/// equation, i.e. the `n = 1` self-consistency identity on each cell.
pub fn markov_density(p: &TentParams, ms: &MarkovStructure) -> Result<StepDensity> {
    let cuts = ms.partition_points();
    let n = cuts.len() - 1;
    let s = p.slope();
    let cells: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    let markov_tol = 1e-9;
    let mut transfer = DMatrix::<f64>::zeros(n + 1, n);
    for (i, &(u, v)) in cells.iter().enumerate() {
        let (fu, fv) = (p.apply(u), p.apply(v));
        let (lo, hi) = (fu.min(fv), fu.max(fv));
        for end in [lo, hi] {
            if cuts.iter().all(|&q| (q - end).abs() > markov_tol) {
                return Err(Error::SingularSystem(format!(
                    "image endpoint {end} of cell [{u}, {v}] is not a partition point"
                )));
            }
        }
        for (j, &(a, b)) in cells.iter().enumerate() {
            if lo - markov_tol <= a && b <= hi + markov_tol {
                transfer[(j, i)] += 1.0 / s;
            }
        }
    }
    let mut system = transfer.clone();
    for j in 0..n {
        system[(j, j)] -= 1.0;
        system[(n, j)] = cells[j].1 - cells[j].0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let psi = system
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let residual = (&system * &psi - &rhs).amax();
    if residual > 1e-9 {
        return Err(Error::SingularSystem(format!("fixed-point residual {residual:e}")));
    }
    let values: Vec<f64> = psi.iter().copied().collect();
    let mut d = StepDensity::from_parts(s, cuts, values, DensitySource::MarkovExact)?;
    d.pointwise_error = Some(residual.max(f64::EPSILON * d.sup()));
    d.merge_equal_cells(1e-12);
    let mass = d.mass();
    d.values.iter_mut().for_each(|v| *v /= mass);
    Ok(d)
}

/// Largest size of a dropped orbit-series coefficient we tolerate.
const SERIES_TAIL: f64 = 1e-17;
/// Orbit points must be known to this accuracy to be used as breakpoints.
const SERIES_POSITION_TOL: f64 = 1e-13;

/// The density for any slope, from the critical orbit `c_n = f^n(c)`:
///
/// ```text
/// φ(x) ∝ Σ_{n≥2} w_n · 1[x ≥ c_n],   w_2 = 1,   w_{n+1} = ±w_n / s
/// ```
///
/// where the sign is `+` when `c_n < c` and `−` when `c_n > c`. The sum
/// `Σ w_n 1[x ≥ c_n]` is fixed by the transfer operator up to the boundary
/// term of the infinite series, which vanishes since `|w_n| = s^{2−n}`.
/// The orbit is computed in double-double so that breakpoints stay accurate
/// for as long as the weights matter; `pointwise_error` bounds the effect of
/// the truncated terms after normalization.
pub fn orbit_series_density(p: &TentParams) -> Result<StepDensity> {
    let s = p.slope();
    let c = p.critical_point();
    // terms needed until |w_n| < SERIES_TAIL·(s − 1)
    let wanted = 2 + ((SERIES_TAIL * (s - 1.0)).ln() / -s.ln()).ceil() as usize;
    let orbit = precise_critical_orbit(p, wanted.max(4));
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    let mut base = 0.0;
    let mut w = 1.0;
    let mut last_used = 1;
    for (n, &(x, err)) in orbit.iter().enumerate().skip(2) {
        if err > SERIES_POSITION_TOL {
            break;
        }
        last_used = n;
        if x <= TOL {
            base += w;
        } else if x < 1.0 - TOL {
            jumps.push((x, w));
        }
        // a jump at 1 only affects a null set
        w *= if x < c { 1.0 / s } else { -1.0 / s };
    }
    // |w_n| for n > last_used form a geometric tail
    let tail = w.abs() * s / (s - 1.0);
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breakpoints = vec![0.0];
    let mut values = vec![base];
    let mut running = base;
    for (x, wj) in jumps {
        running += wj;
        if x - breakpoints.last().unwrap() <= TOL {
            *values.last_mut().unwrap() = running;
        } else {
            breakpoints.push(x);
            values.push(running);
        }
    }
    breakpoints.push(1.0);
    let z: f64 = breakpoints.windows(2).zip(&values).map(|(b, v)| v * (b[1] - b[0])).sum();
    if !(z > tail) {
        return Err(Error::SingularSystem(format!("orbit series normalization {z} is not positive")));
    }
    let values: Vec<f64> = values.iter().map(|v| v / z).collect();
    let sup = values.iter().copied().fold(0.0, f64::max);
    let mut d = StepDensity::from_parts(s, breakpoints, values, DensitySource::OrbitSeries)?;
    // truncated numerator terms, plus the resulting normalization error
    d.pointwise_error = Some(tail / z * (1.0 + sup) + 8.0 * f64::EPSILON * sup * last_used as f64);
    d.merge_equal_cells(1e-13);
    Ok(d)
}

/// The exact Markov density when the critical orbit is detected as finite,
/// otherwise the orbit-series density.
pub fn reference_density(p: &TentParams) -> Result<StepDensity> {
    let scalar = p.in_mode(crate::map::Precision::Scalar);
    match scalar.detect_markov(64, crate::map::DEFAULT_MARKOV_TOL) {
        Some(ms) => markov_density(p, &ms),
        None => orbit_series_density(p),
    }
}

/// Histogram of one seeded forward orbit on `bins` uniform bins.
pub fn orbit_histogram(p: &TentParams, seed: u64, length: usize, bins: usize) -> Result<StepDensity> {
    orbit_histogram_sharded(p, seed, length, bins, 1)
}

/// Histogram of `shards` independent seeded sub-orbits of `length / shards`
/// points each, run concurrently and merged in shard order.
pub fn orbit_histogram_sharded(
    p: &TentParams,
    seed: u64,
    length: usize,
    bins: usize,
    shards: usize,
) -> Result<StepDensity> {
    if length < 100_000 {
        return Err(Error::InvalidArgument(format!("orbit length {length} below 10^5")));
    }
    if bins == 0 || shards == 0 || shards > HISTOGRAM_BATCHES {
        return Err(Error::InvalidArgument(format!("bins = {bins}, shards = {shards}")));
    }
    let per_shard = length / shards;
    let batches_per_shard = HISTOGRAM_BATCHES / shards;
    let batch_len = per_shard / batches_per_shard;
    let used = batch_len * batches_per_shard * shards;
    let nb = bins as f64;
    let shard_batches: Vec<Vec<Vec<u32>>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut orbit = TypicalOrbit::with_stream(*p, seed, shard as u64);
            (0..batches_per_shard)
                .map(|_| {
                    let mut counts = vec![0u32; bins];
                    for _ in 0..batch_len {
                        let x = orbit.advance();
                        counts[((x * nb) as usize).min(bins - 1)] += 1;
                    }
                    counts
                })
                .collect()
        })
        .collect();
    let batches: Vec<Vec<u32>> = shard_batches.into_iter().flatten().collect();
    let width = 1.0 / nb;
    let mut values = vec![0.0; bins];
    let mut std_errors = vec![0.0; bins];
    let mut column = vec![0.0; batches.len()];
    for b in 0..bins {
        let total: u64 = batches.iter().map(|c| u64::from(c[b])).sum();
        values[b] = total as f64 / (used as f64 * width);
        for (slot, counts) in column.iter_mut().zip(&batches) {
            *slot = f64::from(counts[b]) / (batch_len as f64 * width);
        }
        std_errors[b] = batch_stderr(&column);
    }
    let breakpoints = (0..=bins).map(|k| k as f64 / nb).collect();
    let mut d = StepDensity::from_parts(p.slope(), breakpoints, values, DensitySource::Histogram)
        .map_err(|_| Error::Invariant("empty histogram bin; increase the orbit length".into()))?;
    d.std_errors = Some(std_errors);
    d.sharding = Some(Sharding { seed, shards, length: used });
    Ok(d)
}

/// `|φ(x) − Σ_{f^n(y)=x} φ(y)/s^n|`.
pub fn phipropn_residual(p: &TentParams, phi: &StepDensity, x: f64, n: usize) -> Result<f64> {
    if n == 0 || n > 24 {
        return Err(Error::InvalidArgument(format!("residual order n = {n} outside 1..=24")));
    }
    let x = p.eval(x).map(|_| x)?;
    let guard = p.width();
    if p.critical_orbit(n).iter().any(|&q| (q - x).abs() <= guard) {
        return Err(Error::OnCriticalOrbit(x));
    }
    let mut level = vec![x];
    for _ in 0..n {
        level = level
            .iter()
            .flat_map(|&y| {
                let pre = p.preimages(y).expect("preimages of points in [0, 1]");
                pre.left.into_iter().chain(std::iter::once(pre.right))
            })
            .collect();
    }
    let sum: f64 = level.iter().map(|&y| phi.value_at(y)).sum::<f64>() / p.slope().powi(n as i32);
    Ok((phi.value_at(x) - sum).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A_GOLDEN: f64 = 0.7236067977499789;
    const B_GOLDEN: f64 = 1.1708203932499369;

    fn golden_exact() -> StepDensity {
        let g = TentParams::golden();
        markov_density(&g, &g.detect_markov(10, 1e-12).unwrap()).unwrap()
    }

    #[test]
    fn golden_markov_values() {
        let d = golden_exact();
        assert_eq!(d.cell_count(), 2);
        assert!((d.values[0] - A_GOLDEN).abs() < 1e-12);
        assert!((d.values[1] - B_GOLDEN).abs() < 1e-12);
        assert!(d.normalization_residual < 1e-12);
        // independent closed form b = 1/((s−1)(3−s)), a = b/s
        let s = 0.5 * (1.0 + 5f64.sqrt());
        let b = 1.0 / ((s - 1.0) * (3.0 - s));
        assert!((d.values[1] - b).abs() < 1e-12);
        assert!((d.values[0] - b / s).abs() < 1e-12);
    }

    #[test]
    fn eval_density_examples() {
        let d = golden_exact();
        let v = d.eval(0.2);
        assert!((v.value - 0.7236068).abs() < 1e-7 && !v.at_breakpoint);
        let c = TentParams::golden().critical_point();
        let v = d.eval(c);
        assert!((v.value - 1.1708204).abs() < 1e-7 && v.at_breakpoint);
        let t = TentParams::new(2.0).unwrap();
        let one = markov_density(&t, &t.detect_markov(10, 1e-12).unwrap()).unwrap();
        assert_eq!(one.cell_count(), 1);
        assert!((one.value_at(0.37) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt2_markov_density() {
        let r = TentParams::sqrt2();
        let d = markov_density(&r, &r.detect_markov(10, 1e-12).unwrap()).unwrap();
        let s = std::f64::consts::SQRT_2;
        let q = 2.0 - s;
        // φ = a on [0, 2 − √2), s·a on [2 − √2, 1]
        assert_eq!(d.cell_count(), 2);
        assert!((d.breakpoints[1] - q).abs() < 1e-12);
        assert!((d.values[1] / d.values[0] - s).abs() < 1e-12);
        assert!((d.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_matches_markov_at_markov_slopes() {
        for p in [TentParams::golden(), TentParams::sqrt2(), TentParams::new(2.0).unwrap()] {
            let exact = markov_density(&p, &p.detect_markov(10, 1e-12).unwrap()).unwrap();
            let series = orbit_series_density(&p).unwrap();
            assert!(series.pointwise_error.unwrap() < 1e-12);
            for x in quasi_random_points(0.0, 1.0, 50) {
                if exact.breakpoint_distance(x) > 1e-9 {
                    assert!((exact.value_at(x) - series.value_at(x)).abs() < 1e-10, "s = {} x = {x}", p.slope());
                }
            }
        }
    }

    #[test]
    fn series_density_is_invariant_at_generic_slope() {
        let p = TentParams::new(1.7).unwrap();
        let d = orbit_series_density(&p).unwrap();
        assert!(d.normalization_residual < 1e-12);
        assert!(d.pointwise_error.unwrap() < 1e-12);
        for x in quasi_random_points(0.0, 1.0, 40) {
            for n in 1..=5 {
                let r = phipropn_residual(&p, &d, x, n).unwrap();
                assert!(r < 1e-9, "x = {x}, n = {n}: {r:e}");
            }
        }
    }

    #[test]
    fn ulam_full_tent_is_lebesgue() {
        let p = TentParams::new(2.0).unwrap();
        let d = ulam_density(&p, 1024, ULAM_MAX_ITERATIONS).unwrap();
        let err = d.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn ulam_close_to_exact_at_golden() {
        let exact = golden_exact();
        let d = ulam_density(&TentParams::golden(), 4096, ULAM_MAX_ITERATIONS).unwrap();
        let mut worst: f64 = 0.0;
        for (lo, hi, v) in d.cells() {
            let mid = 0.5 * (lo + hi);
            if exact.breakpoint_distance(mid) > 0.01 {
                worst = worst.max((v - exact.value_at(mid)).abs());
            }
        }
        assert!(worst < 5e-3, "{worst}");
    }

    #[test]
    fn ulam_converges_at_sqrt2() {
        let d = ulam_density(&TentParams::sqrt2(), 256, ULAM_MAX_ITERATIONS).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ulam_rejects_small_partitions() {
        assert!(ulam_density(&TentParams::golden(), 8, 10).is_err());
        let e = ulam_density(&TentParams::new(1.7).unwrap(), 64, 1).unwrap_err();
        assert!(matches!(e, Error::NonConvergence { iterations: 1, .. }));
    }

    #[test]
    fn phipropn_examples() {
        let t = TentParams::new(2.0).unwrap();
        let one = markov_density(&t, &t.detect_markov(10, 1e-12).unwrap()).unwrap();
        assert_eq!(phipropn_residual(&t, &one, 0.3, 5).unwrap(), 0.0);
        let g = TentParams::golden();
        assert!(phipropn_residual(&g, &golden_exact(), 0.2, 3).unwrap() < 1e-12);
        // f³(c) = 2 − 1.7 = 0.3 lies on the critical orbit
        let p = TentParams::new(1.7).unwrap();
        let u = ulam_density(&p, 1024, ULAM_MAX_ITERATIONS).unwrap();
        assert!(matches!(phipropn_residual(&p, &u, 0.3, 3), Err(Error::OnCriticalOrbit(_))));
        assert!(phipropn_residual(&p, &u, 0.31, 3).unwrap() < 0.05);
    }

    #[test]
    fn histogram_is_reproducible_and_shardable() {
        let p = TentParams::new(1.7).unwrap();
        let a = orbit_histogram(&p, 7, 200_000, 32).unwrap();
        let b = orbit_histogram(&p, 7, 200_000, 32).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let s1 = orbit_histogram_sharded(&p, 7, 200_000, 32, 4).unwrap();
        let s2 = orbit_histogram_sharded(&p, 7, 200_000, 32, 4).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.sharding.unwrap().shards, 4);
        assert!(orbit_histogram(&p, 7, 1000, 32).is_err());
    }

    #[test]
    fn diagnostics_bounds() {
        let d = golden_exact();
        let diag = d.diagnostics();
        assert!(diag.total_variation >= diag.sup - diag.inf);
        assert!(diag.sup >= 1.0 && diag.inf <= 1.0);
        assert!(diag.residuals.iter().all(|r| r.residual < 1e-12));
        assert!(d.to_csv().starts_with("cell_lo,cell_hi,value\n"));
        assert_eq!(d.to_csv().lines().count(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn series_densities_are_normalized_and_positive(s in 1.42f64..2.0) {
            let p = TentParams::new(s).unwrap();
            let d = orbit_series_density(&p).unwrap();
            prop_assert!(d.normalization_residual < 1e-12);
            prop_assert!(d.inf() > 0.0);
            prop_assert!(d.sup() >= 1.0);
        }
    }
}
