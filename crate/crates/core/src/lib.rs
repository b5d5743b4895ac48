//! Computable pieces of tent-map inverse limits.
//!
//! The crate works with the normalized core tent map `f` on `[0, 1]` and its
//! inverse limit, the space of threads `(x₀, x₁, …)` with `f(x_{i+1}) = x_i`.
//! Everything infinite is truncated at a finite depth and the truncation is
//! carried explicitly, either as a depth stamp on a verdict or as a
//! `[lower, upper]` enclosure.
//!
//! * [`map`]: the map itself, preimages, interval images, the critical orbit.
//! * [`density`]: the invariant density `φ` on step-function partitions.
//! * [`thread`]: finite threads, interval threads, flat decompositions and the
//!   arc metric.
//! * [`fiber`]: fiber measures on cylinders, maximal boxes, holonomy and the
//!   natural-extension sampler.
//! * [`regularity`]: periodic leaf-regularity certificates and typicality
//!   statistics.
//!
//! The guide in `book/` walks through the same material; its code blocks are
//! compiled and run as doc-tests of this crate.

pub mod density;
pub mod error;
pub mod fiber;
pub mod map;
pub mod orbit;
pub mod regularity;
pub mod rigor;
pub mod stats;
pub mod thread;

pub use error::{Error, Result};
pub use map::{Branch, Interval, MarkovStructure, Precision, TentParams};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/core-map.md")]
    mod core_map {}
    #[doc = include_str!("../../../book/src/density.md")]
    mod density {}
    #[doc = include_str!("../../../book/src/threads-arcs.md")]
    mod threads_arcs {}
    #[doc = include_str!("../../../book/src/fiber-boxes.md")]
    mod fiber_boxes {}
    #[doc = include_str!("../../../book/src/regularity.md")]
    mod regularity {}
}
