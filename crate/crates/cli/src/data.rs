use std::io::{BufRead, Write};
use std::path::Path;

use msnet_core::embed_store::{self, EmbeddingStore};
use msnet_core::gap_data::{parse_tsv_with, GapRecord, InvalidRows, Label};
use msnet_core::tokenizer::{tokenize_record, Casing, TokenizedDoc, Vocab};
use msnet_core::train_eval::Example;
use msnet_core::{Error, Result};

use crate::io_util::{create, in_file, reader, with_path};

pub fn load_records(path: &Path, skip_invalid: bool) -> Result<Vec<GapRecord>> {
    let policy = if skip_invalid { InvalidRows::Skip } else { InvalidRows::Reject };
    let outcome = parse_tsv_with(reader(path)?, policy).map_err(|e| in_file(e, path))?;
    for e in &outcome.skipped {
        eprintln!("warning: {}: skipped {e}", path.display());
    }
    Ok(outcome.records)
}

pub fn load_vocab(path: &Path, casing: Casing) -> Result<Vocab> {
    Vocab::load(reader(path)?, casing).map_err(|e| in_file(e, path))
}

/// Tokenize every record; unprocessable ones fail the run unless skipped.
pub fn tokenize_all(records: &[GapRecord], vocab: &Vocab, max_tokens: usize, skip_invalid: bool) -> Result<Vec<(TokenizedDoc, Label)>> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        match tokenize_record(r, vocab, max_tokens) {
            Ok(doc) => out.push((doc, r.label())),
            Err(e) if skip_invalid => eprintln!("warning: skipped {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn load_store(paths: &[impl AsRef<Path>]) -> Result<EmbeddingStore> {
    let mut store = EmbeddingStore::default();
    for p in paths {
        let p = p.as_ref();
        let sets = embed_store::read(reader(p)?).map_err(|e| in_file(e, p))?;
        store.extend(sets).map_err(|e| in_file(e, p))?;
    }
    Ok(store)
}

/// The hidden size shared by every set in the store.
pub fn store_hidden(store: &EmbeddingStore) -> Result<usize> {
    let mut hidden = None;
    for set in store.sets() {
        match hidden {
            None => hidden = Some(set.hidden),
            Some(h) if h != set.hidden => {
                return Err(Error::Validation(format!(
                    "embedding files mix hidden sizes {h} and {} (doc {:?})",
                    set.hidden, set.doc_id
                )))
            }
            _ => {}
        }
    }
    hidden.ok_or_else(|| Error::Validation("embedding files hold no documents".into()))
}

pub fn examples<'a>(docs: &[(TokenizedDoc, Label)], store: &'a EmbeddingStore) -> Result<Vec<Example<'a>>> {
    docs.iter().map(|(d, l)| Example::from_doc(d, Some(*l), store)).collect()
}

pub fn write_listing(path: &Path, docs: &[TokenizedDoc]) -> Result<()> {
    let mut w = create(path)?;
    for d in docs {
        serde_json::to_writer(&mut w, d).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n").map_err(|e| with_path(e, path))?;
    }
    w.flush().map_err(|e| with_path(e, path))
}

pub fn read_listing(path: &Path) -> Result<Vec<TokenizedDoc>> {
    let mut docs = Vec::new();
    let mut offset = 0u64;
    for (n, line) in reader(path)?.lines().enumerate() {
        let line = line.map_err(|e| with_path(e, path))?;
        let start = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line).map_err(|e| Error::Format {
            offset: start,
            message: format!("{} line {}: {e}", path.display(), n + 1),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}
