//! Precomputed per-token hidden states and the MSEB file format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "MSEB"            4 bytes magic
//! version: u16      = 1
//! repeated until EOF, one block per document:
//!   id_len: u16, id: id_len bytes of UTF-8
//!   layers: u16, tokens: u32, hidden: u32
//!   layers * tokens * hidden f32 values, indexed [layer][token][dim]
//! ```
//!
//! Layer 0 is the top hidden layer; larger indices are deeper.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::rng::{hash_keys, unit_f64};
use crate::tokenizer::TokenizedDoc;

pub const MAGIC: &[u8; 4] = b"MSEB";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: u64 = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    pub doc_id: String,
    pub layers: usize,
    pub tokens: usize,
    pub hidden: usize,
    values: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(doc_id: impl Into<String>, layers: usize, tokens: usize, hidden: usize, values: Vec<f32>) -> Result<Self> {
        let doc_id = doc_id.into();
        if values.len() != layers * tokens * hidden {
            return Err(Error::dim("EmbeddingSet::new", layers * tokens * hidden, values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("doc {doc_id:?}: non-finite embedding at {i}")));
        }
        if layers > u16::MAX as usize || doc_id.len() > u16::MAX as usize {
            return Err(Error::Validation(format!("doc {doc_id:?}: too many layers or id too long")));
        }
        Ok(EmbeddingSet {
            doc_id,
            layers,
            tokens,
            hidden,
            values,
        })
    }

    /// Token vector at `(layer, token)`.
    pub fn vector(&self, layer: usize, token: usize) -> &[f32] {
        let at = (layer * self.tokens + token) * self.hidden;
        &self.values[at..at + self.hidden]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Bytes this block occupies in an MSEB file.
    pub fn encoded_len(&self) -> u64 {
        2 + self.doc_id.len() as u64 + 2 + 4 + 4 + 4 * self.values.len() as u64
    }
}

pub fn write<W: Write>(sets: &[EmbeddingSet], mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_u16::<LittleEndian>(VERSION)?;
    for set in sets {
        write_block(set, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn write_block<W: Write>(set: &EmbeddingSet, out: &mut W) -> Result<()> {
    out.write_u16::<LittleEndian>(set.doc_id.len() as u16)?;
    out.write_all(set.doc_id.as_bytes())?;
    out.write_u16::<LittleEndian>(set.layers as u16)?;
    out.write_u32::<LittleEndian>(set.tokens as u32)?;
    out.write_u32::<LittleEndian>(set.hidden as u32)?;
    for v in &set.values {
        out.write_f32::<LittleEndian>(*v)?;
    }
    Ok(())
}

/// Reader that tracks its byte offset for error reporting.
struct Counted<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Read for Counted<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.pos += n as u64;
        Ok(n)
    }
}

fn format_err(offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

fn truncated<T>(r: io::Result<T>, offset: u64, what: &str) -> Result<T> {
    r.map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => format_err(offset, format!("truncated stream while reading {what}")),
        _ => Error::Io(e),
    })
}

pub fn read<R: Read>(input: R) -> Result<Vec<EmbeddingSet>> {
    let mut r = Counted { inner: input, pos: 0 };
    let mut magic = [0u8; 4];
    truncated(r.read_exact(&mut magic), 0, "magic")?;
    if &magic != MAGIC {
        return Err(format_err(0, format!("bad magic {magic:?}")));
    }
    let version = truncated(r.read_u16::<LittleEndian>(), 4, "version")?;
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let mut sets = Vec::new();
    loop {
        let start = r.pos;
        let mut first = [0u8; 1];
        if r.read(&mut first)? == 0 {
            break;
        }
        let mut second = [0u8; 1];
        truncated(r.read_exact(&mut second), start, "id length")?;
        let id_len = u16::from_le_bytes([first[0], second[0]]) as usize;
        let mut id = vec![0u8; id_len];
        truncated(r.read_exact(&mut id), r.pos, "doc id")?;
        let doc_id = String::from_utf8(id).map_err(|_| format_err(start + 2, "doc id is not UTF-8"))?;
        let layers = truncated(r.read_u16::<LittleEndian>(), r.pos, "layer count")? as usize;
        let tokens = truncated(r.read_u32::<LittleEndian>(), r.pos, "token count")? as usize;
        let hidden = truncated(r.read_u32::<LittleEndian>(), r.pos, "hidden size")? as usize;
        let count = layers
            .checked_mul(tokens)
            .and_then(|v| v.checked_mul(hidden))
            .ok_or_else(|| format_err(start, "block size overflows"))?;
        let values_at = r.pos;
        let mut bytes = Vec::new();
        let got = (&mut r).take(4 * count as u64).read_to_end(&mut bytes)?;
        if got != 4 * count {
            return Err(format_err(
                r.pos,
                format!("truncated stream in doc {doc_id:?}: expected {} value bytes, found {got}", 4 * count),
            ));
        }
        let mut values = Vec::with_capacity(count);
        for (i, chunk) in bytes.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(format_err(values_at + 4 * i as u64, format!("non-finite value in doc {doc_id:?}")));
            }
            values.push(v);
        }
        sets.push(EmbeddingSet {
            doc_id,
            layers,
            tokens,
            hidden,
            values,
        });
    }
    Ok(sets)
}

/// Embedding sets indexed by document id, shared read-only.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingStore {
    sets: HashMap<String, Arc<EmbeddingSet>>,
}

impl EmbeddingStore {
    pub fn from_sets(sets: impl IntoIterator<Item = EmbeddingSet>) -> Result<Self> {
        let mut store = EmbeddingStore::default();
        store.extend(sets)?;
        Ok(store)
    }

    pub fn extend(&mut self, sets: impl IntoIterator<Item = EmbeddingSet>) -> Result<()> {
        for s in sets {
            if self.sets.contains_key(&s.doc_id) {
                return Err(Error::Validation(format!("duplicate embeddings for doc {:?}", s.doc_id)));
            }
            self.sets.insert(s.doc_id.clone(), Arc::new(s));
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Arc<EmbeddingSet>> {
        self.sets.get(id)
    }

    /// All sets, in no particular order.
    pub fn sets(&self) -> impl Iterator<Item = &EmbeddingSet> {
        self.sets.values().map(Arc::as_ref)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Deterministic stand-in for encoder hidden states.
///
/// `value[l][i][k]` is a uniform draw in `[-1, 1]` keyed by
/// `(token id, l, k, seed)`, so equal token ids get equal vectors.
pub fn toy_embed_ids(doc_id: &str, token_ids: &[u32], layers: usize, hidden: usize, seed: u64) -> Result<EmbeddingSet> {
    let mut values = Vec::with_capacity(layers * token_ids.len() * hidden);
    for l in 0..layers {
        for &tok in token_ids {
            for k in 0..hidden {
                let bits = hash_keys(&[tok as u64, l as u64, k as u64, seed]);
                values.push((2.0 * unit_f64(bits) - 1.0) as f32);
            }
        }
    }
    EmbeddingSet::new(doc_id, layers, token_ids.len(), hidden, values)
}

pub fn toy_embed(doc: &TokenizedDoc, layers: usize, hidden: usize, seed: u64) -> Result<EmbeddingSet> {
    toy_embed_ids(&doc.id, &doc.ids, layers, hidden, seed)
}
