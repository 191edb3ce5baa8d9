//! Feature extraction, learners and a topic/sentiment routed ensemble for
//! predicting video ad effectiveness.

pub mod analysis;
pub mod data_model;
pub mod detection_features;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod rng;
pub mod text_features;
pub mod visual_features;

pub use error::{Error, Result};
