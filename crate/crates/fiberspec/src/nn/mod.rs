//! Minimal deterministic neural-network engine.
//!
//! Everything is CPU-only and bit-reproducible for a fixed seed: layer
//! initialization, minibatch shuffling, and dropout masks all derive from
//! per-purpose streams of a counter-based RNG, and reductions run in a
//! fixed order. The engine is generic over the scalar type so the same
//! layer code trains in `f32` and gradient-checks in `f64`.

pub mod adam;
pub mod checkpoint;
pub mod fit;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod network;
pub mod scalar;
pub mod schedule;
pub mod tensor;

pub use adam::AdamState;
pub use checkpoint::{crc64, load_network, save_network};
pub use fit::{fit, DataSet, EpochStats, FitResult, Targets};
pub use gradcheck::gradient_check;
pub use layer::{Layer, LayerSpec, Mode};
pub use loss::LossKind;
pub use network::Network;
pub use scalar::Scalar;
pub use schedule::{PlateauTracker, TrainConfig};
pub use tensor::Tensor;
