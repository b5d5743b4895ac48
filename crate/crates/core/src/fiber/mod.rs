//! Fiber measures, maximal 0-boxes and the natural-extension sampler.
//!
//! For `x` off the post-critical set the fiber `π₀⁻¹(x)` carries the measure
//! `α_x` with `α_x([x, x₁, …, x_n]) = φ(x_n)/s^n`. A 0-box over `J` is a
//! union of arcs that project homeomorphically onto `J`; the maximal one is
//! `π₀⁻¹(J)` minus the cylinders through pullback components of `J` that
//! contain `c`.

mod boxes;
mod pullback;
mod sampler;

pub use boxes::{
    build_box, build_box_with_budget, holonomy_check, pccomp_box, pccomp_component, ExcludedCylinder,
    HolonomyReport, Membership, MembershipVerdict, PccompReport, ZeroBox, DEFAULT_BOX_BUDGET, DEFAULT_DEPTH,
};
pub use pullback::Component;
pub use sampler::{muhat_box_measure, MuHatSampler, ProductReport};

use serde::{Deserialize, Serialize};

use crate::density::StepDensity;
use crate::error::{Error, Result};
use crate::map::TentParams;
use crate::thread::FiniteThread;

/// A measure value known to lie in `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEnclosure {
    pub lower: f64,
    pub upper: f64,
}

impl MeasureEnclosure {
    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper);
        Self { lower: lower.max(0.0), upper: upper.max(0.0) }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

/// The point cylinder `[x₀, x₁, …, x_n]`: threads whose first `n + 1`
/// coordinates are the given ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCylinder {
    thread: FiniteThread,
}

impl PointCylinder {
    pub fn new(p: &TentParams, coords: Vec<f64>) -> Result<Self> {
        Ok(Self { thread: FiniteThread::new(p, coords)? })
    }

    pub fn from_thread(thread: FiniteThread) -> Self {
        Self { thread }
    }

    pub fn depth(&self) -> usize {
        self.thread.depth()
    }

    pub fn base(&self) -> f64 {
        self.thread.base()
    }

    pub fn last(&self) -> f64 {
        self.thread.coord(self.depth())
    }

    pub fn thread(&self) -> &FiniteThread {
        &self.thread
    }

    /// The depth-`n + 1` cylinders refining this one, one per preimage of
    /// `x_n`.
    pub fn children(&self, p: &TentParams) -> Vec<PointCylinder> {
        let pre = p.preimages(self.last()).expect("cylinder coordinates lie in [0, 1]");
        pre.iter()
            .map(|(y, _)| {
                let mut coords = self.thread.coords().to_vec();
                coords.push(y);
                PointCylinder { thread: FiniteThread::from_coords_unchecked(coords) }
            })
            .collect()
    }
}

/// `α_x([x, x₁, …, x_n]) = φ(x_n)/s^n`. Rejected when `x_n` sits on a
/// breakpoint of `φ` or on the critical orbit up to the cylinder depth.
pub fn alpha_cylinder(p: &TentParams, phi: &StepDensity, cyl: &PointCylinder) -> Result<f64> {
    let xn = cyl.last();
    let guard = p.width();
    if p.critical_orbit(cyl.depth().max(2)).iter().any(|&q| (q - xn).abs() <= guard) {
        return Err(Error::OnCriticalOrbit(xn));
    }
    let v = phi.eval(xn);
    if v.at_breakpoint {
        return Err(Error::AtBreakpoint(xn));
    }
    Ok(v.value / p.slope().powi(cyl.depth() as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{markov_density, reference_density};
    use crate::map::Branch;

    #[test]
    fn alpha_cylinder_examples() {
        let t = TentParams::new(2.0).unwrap();
        let one = reference_density(&t).unwrap();
        let thread = FiniteThread::from_branches(&t, 0.3, &[Branch::Right, Branch::Left, Branch::Right]).unwrap();
        let cyl = PointCylinder::from_thread(thread);
        assert_eq!(alpha_cylinder(&t, &one, &cyl).unwrap(), 0.125);

        let g = TentParams::golden();
        let phi = markov_density(&g, &g.detect_markov(10, 1e-12).unwrap()).unwrap();
        // a base whose third lift lands in (0, c)
        let thread = FiniteThread::from_branches(&g, 0.9, &[Branch::Right, Branch::Right, Branch::Left]).unwrap();
        assert!(thread.coord(3) < g.critical_point());
        let alpha = alpha_cylinder(&g, &phi, &PointCylinder::from_thread(thread)).unwrap();
        assert!((alpha - 0.1708204).abs() < 1e-7);
    }

    #[test]
    fn children_sum_to_parent() {
        let g = TentParams::golden();
        let phi = reference_density(&g).unwrap();
        let cyl = PointCylinder::from_thread(FiniteThread::from_branches(&g, 0.55, &[Branch::Right; 4]).unwrap());
        let parent = alpha_cylinder(&g, &phi, &cyl).unwrap();
        let kids: f64 = cyl.children(&g).iter().map(|k| alpha_cylinder(&g, &phi, k).unwrap()).sum();
        assert!((parent - kids).abs() < 1e-15);
    }

    #[test]
    fn breakpoint_evaluation_is_rejected() {
        let g = TentParams::golden();
        let phi = reference_density(&g).unwrap();
        let cyl = PointCylinder::new(&g, vec![g.critical_point()]).unwrap();
        assert!(alpha_cylinder(&g, &phi, &cyl).is_err());
    }

    #[test]
    fn whole_fiber_is_phi() {
        let p = TentParams::new(1.7).unwrap();
        let phi = reference_density(&p).unwrap();
        let cyl = PointCylinder::new(&p, vec![0.6]).unwrap();
        assert_eq!(alpha_cylinder(&p, &phi, &cyl).unwrap(), phi.value_at(0.6));
    }
}
