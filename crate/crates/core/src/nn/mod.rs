//! Small tensor engine and the two-block CNN: forward, exact backward,
//! inverted dropout, RMSProp and finite-difference gradient checks.

mod checkpoint;
mod gradcheck;
mod layers;
mod model;
mod optim;
mod tensor;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use gradcheck::{gradient_check, relative_error, GradCheckReport, TensorCheck};
pub use layers::{
    conv2d_forward, cross_entropy_loss, dense_forward, dropout, flatten, maxpool2d_forward, relu, relu_in_place,
    softmax, softmax_in_place, Activation, LayerSpec, Mode, Padding, KERNEL, POOL,
};
pub use model::{build_cnn, build_paper_cnn, softmax_ce_grad, CnnArch, CnnModel, Gradients, LayerSummary, Trace};
pub use optim::{rmsprop_step, RmsProp, RmsPropConfig};
pub use tensor::Tensor;
pub use train::{evaluate, read_history, train, write_history, HistoryRow, Samples, TrainConfig, Trainer};
