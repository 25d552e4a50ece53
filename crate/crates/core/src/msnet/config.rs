use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap_data::Label;
use crate::numkit::{BN_DEFAULT_EPS, BN_DEFAULT_MOMENTUM};

/// Class order of the score layer rows.
pub const CLASS_ORDER: [Label; 3] = [Label::A, Label::B, Label::Neither];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanMethod {
    Meanpool,
    Attention,
}

impl SpanMethod {
    pub fn code(self) -> u8 {
        match self {
            SpanMethod::Meanpool => 0,
            SpanMethod::Attention => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SpanMethod::Meanpool),
            1 => Some(SpanMethod::Attention),
            _ => None,
        }
    }
}

impl fmt::Display for SpanMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpanMethod::Meanpool => "meanpool",
            SpanMethod::Attention => "attention",
        })
    }
}

impl FromStr for SpanMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "meanpool" | "mean" | "meanpooling" => Ok(SpanMethod::Meanpool),
            "attention" | "attn" => Ok(SpanMethod::Attention),
            other => Err(Error::Config(format!("unknown span method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MsnetConfig {
    /// Number of top encoder layers used, counted from the top.
    pub layers: usize,
    /// Similarity vector dimension.
    pub s_dim: usize,
    pub span_method: SpanMethod,
    /// Encoder hidden size.
    pub hidden: usize,
    /// Dropout on the similarity-layer input concatenation.
    pub dropout_sim: f64,
    /// Dropout on the batch-normalized score-layer input.
    pub dropout_score: f64,
    /// Dropout on span token vectors inside attention pooling.
    pub dropout_attn_tokens: f64,
    /// One similarity layer per encoder layer instead of a shared one.
    pub per_layer_sim: bool,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    /// Seed for parameter initialization.
    pub seed: u64,
}

impl Default for MsnetConfig {
    fn default() -> Self {
        MsnetConfig {
            layers: 8,
            s_dim: 16,
            span_method: SpanMethod::Meanpool,
            hidden: 1024,
            dropout_sim: 0.6,
            dropout_score: 0.6,
            dropout_attn_tokens: 0.4,
            per_layer_sim: false,
            bn_momentum: BN_DEFAULT_MOMENTUM,
            bn_eps: BN_DEFAULT_EPS,
            seed: 0,
        }
    }
}

impl MsnetConfig {
    /// Width of the score-layer input `[s_0 .. s_{L-1}, d_a, d_b]`.
    pub fn features(&self) -> usize {
        self.layers * self.s_dim + 2
    }

    pub fn sim_input(&self) -> usize {
        5 * self.hidden
    }

    pub fn without_dropout(mut self) -> Self {
        self.dropout_sim = 0.0;
        self.dropout_score = 0.0;
        self.dropout_attn_tokens = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        if self.s_dim == 0 {
            return Err(Error::Config("s_dim must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden size must be at least 1".into()));
        }
        for (name, r) in [
            ("dropout_sim", self.dropout_sim),
            ("dropout_score", self.dropout_score),
            ("dropout_attn_tokens", self.dropout_attn_tokens),
        ] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Config(format!("{name} = {r} not in [0, 1)")));
            }
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) || self.bn_eps <= 0.0 {
            return Err(Error::Config("batchnorm momentum must be in (0, 1) and eps positive".into()));
        }
        Ok(())
    }
}
