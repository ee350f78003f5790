//! Content-addressable memory with a fixed k-hot memory scaffold and learned
//! heteroassociation, plus Hopfield-family baselines and the information
//! metrics used to compare them.
//!
//! The guide in `book/` walks through each part with runnable snippets.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod metrics;
pub mod numerics;
pub mod patterns;
pub mod scaffold;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scaffold.md")]
    mod scaffold {}
    #[doc = include_str!("../../../book/src/heteroassociation.md")]
    mod heteroassociation {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
