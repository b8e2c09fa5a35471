//! Visual-entropy glyphs for showing a value together with its uncertainty.
//!
//! A glyph is a dark disc, a light layer whose edge is a sinusoid wrapped
//! around a circle, and a colored value disc on top. Higher wave frequency
//! means higher sample entropy of the generating message, and the scale of
//! glyphs ordered this way stands for increasing uncertainty.
//!
//! The numeric core ([`entropy`], [`geometry`], [`scale`]) is generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix it to `f64`.

// Range checks are written `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod color;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod ingest;
pub mod render;
pub mod scalar;
pub mod scale;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Signal = entropy::Signal<f64>;
pub type Signal32 = entropy::Signal<f32>;
pub type SampEnParams = entropy::SampEnParams<f64>;
pub type ProbabilityDistribution = entropy::ProbabilityDistribution<f64>;
pub type PolarOutline = geometry::PolarOutline<f64>;
pub type GlyphProportions = geometry::GlyphProportions<f64>;
pub type GlyphGeometry = geometry::GlyphGeometry<f64>;
pub type DisplayGeometry = geometry::DisplayGeometry<f64>;
pub type GlyphLevel = scale::GlyphLevel<f64>;
pub type GlyphLevel32 = scale::GlyphLevel<f32>;
pub type UncertaintyScale = scale::UncertaintyScale<f64>;
pub type UncertaintyScale32 = scale::UncertaintyScale<f32>;
