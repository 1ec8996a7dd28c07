//! Small batched neural-network toolkit: dense, convolution, pooling, ReLU,
//! dropout and Gaussian RBF layers with hand-written backward passes, Adam,
//! MSE/MAE and k-means.

mod adam;
mod kmeans;
mod layers;
mod loss;
mod network;
mod tensor;

pub use adam::Adam;
pub use kmeans::{kmeans, kmeans_with_limit, Clusters, MAX_ITER};
pub use layers::{
    conv2d_forward, dense_forward, dropout, pool_forward, rbf_activations, rbf_forward, Conv2d, Dense, Dropout, Layer,
    Mode, Pool, PoolMode, Rbf, Reshape, Shape, SIGMA_FLOOR,
};
pub use loss::{mae, mse, mse_grad};
pub use network::{gradcheck, Network};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("layer {layer} ({name}): {reason}")]
    Shape { layer: usize, name: String, reason: String },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("non-finite gradient: {0}")]
    NonFiniteGradient(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
}
