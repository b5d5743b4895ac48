//! Orbits: a double-double critical orbit, and seeded μ-typical orbits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::map::{Branch, TentParams};

/// Unit roundoff of double-double arithmetic (about 2⁻¹⁰⁴).
const DD_EPS: f64 = 4.93e-32;

#[derive(Clone, Copy, Debug)]
struct DoubleDouble(f64, f64);

impl DoubleDouble {
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        Self(s, e)
    }

    fn add(self, o: Self) -> Self {
        let Self(s, e) = Self::two_sum(self.0, o.0);
        let e = e + self.1 + o.1;
        Self::two_sum(s, e)
    }

    fn neg(self) -> Self {
        Self(-self.0, -self.1)
    }

    /// `self · k` for an exact `f64` multiplier.
    fn scale(self, k: f64) -> Self {
        let p = self.0 * k;
        let e = self.0.mul_add(k, -p);
        Self::two_sum(p, e + self.1 * k)
    }

    fn reciprocal(k: f64) -> Self {
        let q = 1.0 / k;
        let r = (-k).mul_add(q, 1.0);
        Self::two_sum(q, r / k)
    }

    fn value(self) -> f64 {
        self.0 + self.1
    }
}

/// Critical orbit `c_n = f^n(c)` of the map with the exact `f64` slope,
/// computed in double-double, for `n = 0..=n_max`.
///
/// Each entry carries a bound on its absolute error; the bound grows like
/// `s^n` times the double-double roundoff.
pub fn precise_critical_orbit(p: &TentParams, n_max: usize) -> Vec<(f64, f64)> {
    let s = p.slope();
    let one = DoubleDouble(1.0, 0.0);
    let c = one.add(DoubleDouble::reciprocal(s).neg());
    let floor = DoubleDouble(2.0 - s, 0.0);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push((c.value(), DD_EPS * 4.0));
    if n_max >= 1 {
        out.push((1.0, 0.0));
    }
    if n_max >= 2 {
        out.push((0.0, 0.0));
    }
    let mut x = DoubleDouble(0.0, 0.0);
    let mut err = 0.0f64;
    while out.len() <= n_max {
        // comparisons against c use the double-double value
        let diff = x.add(c.neg()).value();
        x = if diff < 0.0 { x.scale(s).add(floor) } else { one.add(x.neg()).scale(s) };
        err = s * err + 4.0 * DD_EPS;
        out.push((x.value(), err + f64::EPSILON * x.value().abs() * 0.5));
    }
    out
}

/// Dynamic noise added to floating-point orbits. Without it the orbit of
/// the slope-2 map collapses onto the fixed point 0 after about 55 steps.
pub const ORBIT_NOISE: f64 = 1.0 / (1u64 << 40) as f64;

const BURN_IN: usize = 1000;

/// A seeded forward orbit from a random start away from the critical orbit.
///
/// Each step applies `f` and a uniform perturbation of size [`ORBIT_NOISE`],
/// reflected back into `[0, 1]`.
#[derive(Clone, Debug)]
pub struct TypicalOrbit {
    params: TentParams,
    rng: ChaCha8Rng,
    x: f64,
}

impl TypicalOrbit {
    pub fn new(params: TentParams, seed: u64) -> Self {
        Self::with_stream(params, seed, 0)
    }

    /// Independent sub-orbit `stream` of the same seed, for sharding.
    pub fn with_stream(params: TentParams, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let prefix = params.critical_orbit(64);
        let x = loop {
            let x: f64 = rng.random();
            if x > 0.0 && prefix.iter().all(|&q| (x - q).abs() > 1e-6) {
                break x;
            }
        };
        let mut orbit = Self { params, rng, x };
        for _ in 0..BURN_IN {
            orbit.advance();
        }
        orbit
    }

    pub fn current(&self) -> f64 {
        self.x
    }

    pub fn advance(&mut self) -> f64 {
        let noise = ORBIT_NOISE * (2.0 * self.rng.random::<f64>() - 1.0);
        let mut y = self.params.apply(self.x) + noise;
        if y < 0.0 {
            y = -y;
        }
        if y > 1.0 {
            y = 2.0 - y;
        }
        self.x = y;
        y
    }

    /// Branch label of the current point; points equal to `c` count as
    /// right.
    pub fn current_branch(&self) -> Branch {
        if self.x < self.params.critical_point() {
            Branch::Left
        } else {
            Branch::Right
        }
    }
}

impl Iterator for TypicalOrbit {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        Some(self.advance())
    }
}
