//! Structural priors: line rendering, gradients, edge thinning and the
//! learned line upsampler.

mod nms;
mod raster;
mod sobel;
mod ssu;

pub use nms::{edge_nms, enms_fuse, DEFAULT_FUSE_THRESHOLD};
pub use raster::{random_segments, rasterize_lines, ridge_agreement, LineSegment};
pub use sobel::{sobel_gradients, GradientPair, SOBEL_X, SOBEL_Y};
pub use ssu::{
    evaluate_f1, ssu_train, ssu_upsample, synthetic_corpus, F1Counts, LinePair, SsuWeights,
    TrainConfig, TrainLog, DEFAULT_WIDTH, INFERENCE_BETA, INFERENCE_GAMMA, TRAIN_SHIFT_RANGE,
};
