//! A small CPU tensor engine: layers with forward and backward passes,
//! the ChArUcoNet and RefineNet definitions, weight files and SGD training.

mod gradcheck;
mod layers;
mod network;
mod tensor;
mod train;
mod weights;

pub use gradcheck::{
    check_layer, check_network, check_smoothed_cross_entropy, check_softmax_cross_entropy, random_problem, relative_error, run_all as run_gradcheck,
    GradCheckReport, GRADCHECK_EPS, GRADCHECK_TOLERANCE,
};
pub use layers::{Layer, LayerKind, LayerSpec};
pub use network::{
    build_charuconet, build_refinenet, softmax, softmax_cross_entropy, Arch, CellTargets, Gradients, GridSmoothing, Head, LayerGrad,
    NetKind, NetworkDef, CELL, ID_CLASSES, ID_DUSTBIN, KEYPOINT_CLASSES, KEYPOINT_DUSTBIN, NUM_CORNER_IDS, REFINE_BINS,
    REFINE_BOTTLENECK, REFINE_PATCH,
};
pub use tensor::{Real, Tensor3};
pub use train::{batch_gradient, train, StepRecord, LrSchedule, TrainConfig, TrainLog, TrainSample};
pub use weights::{
    decode_weights, encode_weights, infer_network, load_into, load_weights, read_weight_file, save_weights, NamedTensor,
};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid target: {0}")]
    Target(String),
    #[error("bad magic: not a CNW1 weight file")]
    BadMagic,
    #[error("unexpected end of payload")]
    UnexpectedEof,
    #[error("checksum mismatch: weight file is corrupted")]
    ChecksumMismatch,
    #[error("unknown layer name {0:?}")]
    UnknownLayer(String),
    #[error("layer shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed weight file: {0}")]
    Format(String),
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
