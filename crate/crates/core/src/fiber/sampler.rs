use std::collections::VecDeque;

use serde::Serialize;

use super::boxes::{Membership, ZeroBox};
use super::MeasureEnclosure;
use crate::error::{Error, Result};
use crate::map::{Branch, TentParams};
use crate::orbit::TypicalOrbit;
use crate::stats::{BatchMeans, Estimate};
use crate::thread::FiniteThread;

/// Threads distributed by the natural-extension measure `μ̂`.
///
/// A typical forward orbit `z_0, z_1, …` is read backwards: the thread
/// emitted at time `k` has `x₀ = z_k` and follows the branch labels of
/// `z_{k−1}, …, z_{k−n}`. Each coordinate is an exact preimage of the
/// previous one, and `x_i` stays within the orbit noise of `z_{k−i}` because
/// backward steps contract.
#[derive(Clone, Debug)]
pub struct MuHatSampler {
    params: TentParams,
    seed: u64,
    depth: usize,
    stride: usize,
    orbit: TypicalOrbit,
    history: VecDeque<Branch>,
}

impl MuHatSampler {
    pub fn new(p: &TentParams, seed: u64, depth: usize) -> Self {
        Self::with_stride(p, seed, depth, 1)
    }

    /// Emits one thread every `stride` orbit steps, which thins the serial
    /// correlation of consecutive windows.
    pub fn with_stride(p: &TentParams, seed: u64, depth: usize, stride: usize) -> Self {
        let mut orbit = TypicalOrbit::new(*p, seed);
        let mut history = VecDeque::with_capacity(depth + 1);
        for _ in 0..depth {
            history.push_front(orbit.current_branch());
            orbit.advance();
        }
        Self { params: *p, seed, depth, stride: stride.max(1), orbit, history }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn step(&mut self) {
        if self.depth > 0 {
            self.history.pop_back();
            self.history.push_front(self.orbit.current_branch());
        }
        self.orbit.advance();
    }

    pub fn next_thread(&mut self) -> FiniteThread {
        let p = &self.params;
        let mut coords = Vec::with_capacity(self.depth + 1);
        let mut x = self.orbit.current();
        coords.push(x);
        for &b in &self.history {
            // the left inverse is missing only within the orbit noise of 2 − s
            x = p.inverse(b, x).unwrap_or(0.0);
            coords.push(x);
        }
        for _ in 0..self.stride {
            self.step();
        }
        FiniteThread::from_coords_unchecked(coords)
    }
}

impl Iterator for MuHatSampler {
    type Item = FiniteThread;
    fn next(&mut self) -> Option<FiniteThread> {
        Some(self.next_thread())
    }
}

/// Monte Carlo check of `μ̂(B) = m(J)·α(B)`.
#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    pub seed: u64,
    pub samples: usize,
    /// Fraction of samples with verdict `in`.
    pub estimate: Estimate,
    pub unknown_fraction: f64,
    /// `m(J)·α` at the probe, as an enclosure.
    pub predicted: MeasureEnclosure,
    pub probe: f64,
    /// `|estimate − predicted midpoint|`.
    pub deviation: f64,
    /// `deviation` minus the half-width of `predicted` and the unknown
    /// fraction, in standard errors.
    pub excess_sigmas: f64,
    pub consistent: bool,
}

/// Samples `samples` threads and counts how many lie in `b`. Unknown
/// verdicts count as out for the estimate; they are allowed to close the
/// gap to the prediction, and more than `max_unknown` of them makes the
/// result inconclusive.
pub fn muhat_box_measure(
    b: &ZeroBox,
    sampler: &mut MuHatSampler,
    samples: usize,
    max_unknown: f64,
) -> Result<ProductReport> {
    if sampler.depth() < b.total_depth() {
        return Err(Error::DepthMismatch(sampler.depth(), b.total_depth()));
    }
    let mut inside = BatchMeans::new(samples, crate::density::HISTOGRAM_BATCHES);
    let mut unknown = 0usize;
    for _ in 0..samples {
        let t = sampler.next_thread();
        let v = match b.membership(&t, b.total_depth()).membership {
            Membership::In => 1.0,
            Membership::Out => 0.0,
            Membership::Unknown => {
                unknown += 1;
                0.0
            }
        };
        inside.push(v);
    }
    let unknown_fraction = unknown as f64 / samples as f64;
    if unknown_fraction > max_unknown {
        return Err(Error::Inconclusive { fraction: unknown_fraction, threshold: max_unknown });
    }
    let probe = *b.probes(1).first().ok_or_else(|| Error::Invariant("no admissible probe".into()))?;
    let alpha = b.alpha(probe)?;
    let m = b.base.len();
    let predicted = MeasureEnclosure::new(alpha.lower * m, alpha.upper * m);
    let estimate = inside.estimate();
    let deviation = (estimate.mean - predicted.mid()).abs();
    let slack = 0.5 * predicted.width() + unknown_fraction;
    let excess = (deviation - slack).max(0.0);
    let excess_sigmas = if excess == 0.0 { 0.0 } else { excess / estimate.stderr };
    Ok(ProductReport {
        seed: sampler.seed(),
        samples,
        estimate,
        unknown_fraction,
        predicted,
        probe,
        deviation,
        excess_sigmas,
        consistent: excess_sigmas <= 4.0,
    })
}
