//! Symmetric encoder–decoder residual CNN denoiser: model, training and
//! the on-disk format.

mod format;
mod layers;
mod model;
mod tensor;
mod train;

pub use format::{decode_model, encode_model, load_model, save_model, MAGIC, VERSION};
pub use model::{Architecture, CnnModel};
pub use train::{cnn_train, TrainConfig, TrainOutcome};

#[cfg(test)]
mod tests;
