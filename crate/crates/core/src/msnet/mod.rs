//! The mention-score head: span pooling, per-layer similarity vectors,
//! distance encodings, class scores and their exact gradients.

pub mod checkpoint;
mod config;
mod layers;
mod model;
mod params;

pub use config::{MsnetConfig, SpanMethod, CLASS_ORDER};
pub use layers::{
    distance_enc, similarity_input, similarity_vec, span_attn, span_attn_backward, span_mean, AttentionCache,
    AttentionOutput, DenseVectors, TokenVectors, NORM_FLOOR,
};
pub use model::{BatchForward, ExampleInput, InputGrads, Msnet};
pub use params::MsnetParams;
