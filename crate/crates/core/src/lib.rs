//! Finger-tapping kinematics from hand-landmark time series.
//!
//! The pipeline runs landmark recordings ([`ingest`]) through per-frame signals and
//! cycle detection ([`signal`]) into a 13-feature vector ([`features`]). Feature tables
//! can be explored with PCA and varimax rotation ([`pca`]) and used to train and
//! evaluate multi-class or ordinal severity classifiers under patient-grouped
//! cross-validation ([`classify`], [`metrics`]). [`synth`] generates recordings with
//! known ground truth.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases below
//! are the instantiations used by the command-line tool.

pub mod classify;
pub mod error;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod pca;
pub mod scalar;
pub mod signal;
pub mod synth;
pub mod tables;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Scalar;

pub type TapSignal64 = signal::TapSignal<f64>;
pub type SpeedSignal64 = signal::SpeedSignal<f64>;
pub type CycleSeries64 = signal::CycleSeries<f64>;
pub type FeatureVector64 = features::FeatureVector<f64>;
pub type FeatureTable64 = pca::FeatureTable<f64>;
pub type LoadingMatrix64 = pca::LoadingMatrix<f64>;
pub type TrainingTable64 = classify::TrainingTable<f64>;
pub type Model64 = classify::Model<f64>;
pub type Prediction64 = classify::Prediction<f64>;
pub type MetricSet64 = metrics::MetricSet<f64>;

/// Mixes a base seed with a stream index (splitmix64 finalizer).
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
