//! Stationary field generators.
//!
//! Every generator is a finite moving average of i.i.d. symmetric
//! innovations, so it is strictly stationary, centered and `m`-dependent
//! with `m` the span of its coefficient support. Mixing profiles are
//! declared from that span rather than estimated.

mod mixing;
mod sample;
mod spec;

pub use mixing::MixingProfile;
pub use sample::{
    centering_constant, pop_moments, sample, sample_hilbert, sample_linear, truncate_tail,
    truncation_constant, FieldSample, PopMoments,
};
pub(crate) use sample::sum_components;
pub use spec::{FieldSpec, HilbertFieldSpec, InnovationDist, InnovationKind, LinearFieldSpec};
