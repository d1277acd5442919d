//! The two concrete models: a 1D-CNN pixel classifier over preprocessed
//! spectra and a dense autoencoder whose reconstruction error drives
//! single-class anomaly detection with a quantile threshold.

pub mod autoencoder;
pub mod classifier;
pub mod detector;
pub mod train;

pub use autoencoder::{build_autoencoder, reconstruction_error, AutoencoderSpec};
pub use classifier::{
    build_classifier, load_classifier, predict_pixels, save_classifier, ClassifierSpec,
    PixelPrediction,
};
pub use detector::{
    detect, fit_threshold, object_decision, pixel_decisions, DetectorModel, ObjectDetection,
};
pub use train::{
    autoencoder_train_config, classifier_train_config, reconstruction_dataset, train_autoencoder,
    train_classifier,
};
