//! Network building blocks and the assembled restorer networks.

pub mod attention;
pub mod ffc;
pub mod gated;
pub mod layers;
pub mod lka;
pub mod model;
pub mod transformer;
pub mod zerora;

pub use attention::{axial_attention, standard_attention, AxialParams, Axis, StdAttentionParams};
pub use ffc::{split_channels, FfcBlock, FfcLayer, FourierUnit};
pub use gated::GatedConv;
pub use layers::{BatchNorm, ConvLayer, LayerNorm};
pub use lka::{bench_lka, flop_count, impulse_rf, lka_kernels, lka_support, BoundingBox, FlopCount, LkaBench, LkaBlock};
pub use model::{assemble, Injection, Layer, LayerKind, ModelSpec, Network, Output, Role, Schedule, Stage, TraceRow};
pub use transformer::TransformerBlock;
pub use zerora::{record_zerora, residual_add, sfe_inject, zerora_apply, ZeroRaState, INJECTIONS};
