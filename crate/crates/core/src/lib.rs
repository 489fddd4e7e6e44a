// Comparisons like `!(x > 0.0)` reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod changepoint;
pub mod clt;
pub mod error;
pub mod model;
pub mod poly;
pub mod quad;
pub mod regress;
pub mod rmt;
pub mod simharness;
pub mod spectral;
pub mod spiketest;

pub use error::{Error, Result};
pub use model::{FisherEigs, MomentProfile, Population, RatioProfile, SigmaSpec, SpectrumH, SpikeConfig};
pub use spectral::SpectralFn;
