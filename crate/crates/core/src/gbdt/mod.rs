//! Gradient-boosted decision trees with prefix-structured prediction.

mod fit;
mod loss;
mod model;
mod params;
mod tree;

pub use fit::{fit, Targets};
pub use loss::{sigmoid, softmax, Loss};
pub use model::{argmax, virtual_ensemble_prefixes, BoostedModel, MODEL_FORMAT_VERSION};
pub use params::TrainParams;
pub use tree::{Node, Tree};
