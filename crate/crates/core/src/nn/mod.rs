//! Convolutional autoencoder built from scratch: layer kernels, model,
//! training loop and the TKAE model file format.

pub mod gradcheck;
pub mod io;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

pub use io::{load_model, save_model};
pub use layers::{Activation, LayerSpec};
pub use model::{forward, Gradients, Layer, Mode, Model, Trace};
pub use tensor::{loss_mse, Scalar, Tensor};
pub use train::{train, OptimizerKind, TrainConfig, TrainOutcome};
