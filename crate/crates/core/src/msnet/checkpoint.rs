//! Model checkpoint file.
//!
//! Little-endian throughout:
//!
//! ```text
//! "MSCK" magic, u16 version = 1
//! u16 layers, u32 s_dim, u32 hidden, u8 span method (0 meanpool, 1 attention)
//! u8 per_layer_sim, u8 layer order (0 = top layer first)
//! 3 x u8 class order (0 = A, 1 = B, 2 = NEITHER)
//! f64 dropout_sim, dropout_score, dropout_attn_tokens, bn_momentum, bn_eps
//! u64 seed
//! u32 tensor count, then per tensor: u32 rank, rank x u32 dims, f64 values
//! ```
//!
//! Tensors appear in the order of `MsnetParams::params` followed by the
//! batchnorm running mean and running variance.

use std::io::{Read, Write};

use byteorder::{LittleEndian, WriteBytesExt};

use super::config::{MsnetConfig, SpanMethod, CLASS_ORDER};
use super::model::Msnet;
use super::params::MsnetParams;
use crate::error::{Error, Result};
use crate::numkit::Tensor;

pub const MAGIC: &[u8; 4] = b"MSCK";
pub const VERSION: u16 = 1;
const TOP_FIRST: u8 = 0;

fn write_tensor<W: Write>(t: &Tensor, out: &mut W) -> Result<()> {
    out.write_u32::<LittleEndian>(t.shape().len() as u32)?;
    for &d in t.shape() {
        out.write_u32::<LittleEndian>(d as u32)?;
    }
    for &v in t.data() {
        out.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn save<W: Write>(model: &Msnet, mut out: W) -> Result<()> {
    let c = &model.config;
    out.write_all(MAGIC)?;
    out.write_u16::<LittleEndian>(VERSION)?;
    out.write_u16::<LittleEndian>(c.layers as u16)?;
    out.write_u32::<LittleEndian>(c.s_dim as u32)?;
    out.write_u32::<LittleEndian>(c.hidden as u32)?;
    out.write_u8(c.span_method.code())?;
    out.write_u8(c.per_layer_sim as u8)?;
    out.write_u8(TOP_FIRST)?;
    for label in CLASS_ORDER {
        out.write_u8(label.index() as u8)?;
    }
    for v in [c.dropout_sim, c.dropout_score, c.dropout_attn_tokens, c.bn_momentum, c.bn_eps] {
        out.write_f64::<LittleEndian>(v)?;
    }
    out.write_u64::<LittleEndian>(c.seed)?;
    let p = &model.params;
    let mut tensors: Vec<&Tensor> = p.params().into_iter().map(|p| &p.value).collect();
    tensors.push(&p.bn.running_mean);
    tensors.push(&p.bn.running_var);
    out.write_u32::<LittleEndian>(tensors.len() as u32)?;
    for t in tensors {
        write_tensor(t, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format {
                offset: self.pos,
                message: format!("truncated checkpoint while reading {what}"),
            },
            _ => Error::Io(e),
        })?;
        self.pos += N as u64;
        Ok(buf)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Format {
            offset: self.pos,
            message: message.into(),
        }
    }
}

/// Read a checkpoint, validating its header, shapes and values.
pub fn load<R: Read>(input: R) -> Result<Msnet> {
    let mut r = Reader { inner: input, pos: 0 };
    if &r.bytes::<4>("magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "not a model checkpoint".into(),
        });
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(r.fail(format!("unsupported checkpoint version {version}")));
    }
    let layers = r.u16("layers")? as usize;
    let s_dim = r.u32("s_dim")? as usize;
    let hidden = r.u32("hidden")? as usize;
    let code = r.u8("span method")?;
    let span_method = SpanMethod::from_code(code).ok_or_else(|| r.fail(format!("unknown span method code {code}")))?;
    let per_layer_sim = match r.u8("per_layer_sim")? {
        0 => false,
        1 => true,
        other => return Err(r.fail(format!("bad per_layer_sim flag {other}"))),
    };
    if r.u8("layer order")? != TOP_FIRST {
        return Err(r.fail("unsupported layer order"));
    }
    for label in CLASS_ORDER {
        if r.u8("class order")? as usize != label.index() {
            return Err(r.fail("unsupported class order"));
        }
    }
    let config = MsnetConfig {
        layers,
        s_dim,
        span_method,
        hidden,
        per_layer_sim,
        dropout_sim: r.f64("dropout_sim")?,
        dropout_score: r.f64("dropout_score")?,
        dropout_attn_tokens: r.f64("dropout_attn_tokens")?,
        bn_momentum: r.f64("bn_momentum")?,
        bn_eps: r.f64("bn_eps")?,
        seed: r.u64("seed")?,
    };
    config.validate()?;

    let mut params = MsnetParams::init(&config)?;
    let expected = params.params().len() + 2;
    let count = r.u32("tensor count")? as usize;
    if count != expected {
        return Err(r.fail(format!("expected {expected} tensors, found {count}")));
    }
    let mut targets: Vec<&mut Tensor> = Vec::with_capacity(expected);
    {
        let MsnetParams {
            sim_weight,
            sim_bias,
            dist_weight,
            dist_bias,
            score_weight,
            score_bias,
            bn,
        } = &mut params;
        targets.extend(sim_weight.iter_mut().map(|p| &mut p.value));
        targets.extend(sim_bias.iter_mut().map(|p| &mut p.value));
        targets.extend([
            &mut dist_weight.value,
            &mut dist_bias.value,
            &mut score_weight.value,
            &mut score_bias.value,
            &mut bn.gamma.value,
            &mut bn.beta.value,
            &mut bn.running_mean,
            &mut bn.running_var,
        ]);
    }
    for (i, t) in targets.into_iter().enumerate() {
        let rank = r.u32("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank.min(8) {
            shape.push(r.u32("tensor shape")? as usize);
        }
        if shape != t.shape() {
            return Err(r.fail(format!("tensor {i}: shape {shape:?}, config implies {:?}", t.shape())));
        }
        for v in t.data_mut() {
            let x = r.f64("tensor values")?;
            if !x.is_finite() {
                return Err(r.fail(format!("tensor {i}: non-finite value")));
            }
            *v = x;
        }
    }
    let mut tail = [0u8; 1];
    if r.inner.read(&mut tail)? != 0 {
        return Err(r.fail("trailing bytes after checkpoint"));
    }
    Msnet::from_parts(config, params)
}

/// Load and require the structural settings to match `expected`.
pub fn load_compatible<R: Read>(input: R, expected: &MsnetConfig) -> Result<Msnet> {
    let model = load(input)?;
    let c = &model.config;
    let same = c.layers == expected.layers
        && c.s_dim == expected.s_dim
        && c.hidden == expected.hidden
        && c.span_method == expected.span_method
        && c.per_layer_sim == expected.per_layer_sim;
    if !same {
        return Err(Error::Config(format!(
            "checkpoint has layers={} s_dim={} hidden={} span={} per_layer_sim={}, expected layers={} s_dim={} hidden={} span={} per_layer_sim={}",
            c.layers,
            c.s_dim,
            c.hidden,
            c.span_method,
            c.per_layer_sim,
            expected.layers,
            expected.s_dim,
            expected.hidden,
            expected.span_method,
            expected.per_layer_sim
        )));
    }
    Ok(model)
}
