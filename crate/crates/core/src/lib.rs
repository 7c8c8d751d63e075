//! Black-box causal explanations for image classifiers.
//!
//! The pipeline: rank pixels by approximate causal responsibility
//! ([`responsibility`]), walk the ranking inserting and deleting pixels over a
//! baseline until one prefix is both sufficient and contrastive
//! ([`explain::sufficient_contrastive`]), then add low-ranked pixels until the
//! original confidence is restored ([`explain::adjustment_discovery`]).
//! [`oracle`] computes the exact answers on tiny grids for validation.

pub mod classifier;
pub mod error;
pub mod exec;
pub mod explain;
pub mod imagery;
pub mod oracle;
pub mod responsibility;
pub mod taxonomy;

pub use classifier::{validate_baseline, BuiltinModel, Classifier, ClassifierOutput, ClassifierSpec};
pub use error::{Error, Result};
pub use exec::Execution;
pub use imagery::{Baseline, ImageTensor, PixelMask, Shape};
