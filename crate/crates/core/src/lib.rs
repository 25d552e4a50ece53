pub mod embed_store;
pub mod error;
pub mod gap_data;
pub mod msnet;
pub mod numkit;
pub mod rng;
pub mod synthetic;
pub mod tokenizer;
pub mod train_eval;

pub use error::{Error, ErrorClass, Result};
