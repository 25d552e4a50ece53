use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::vocab::Vocab;
use super::wordpiece::{normalize_surface, wordpiece, Token};
use crate::error::{Error, Result};
use crate::gap_data::GapRecord;

pub const DEFAULT_MAX_TOKENS: usize = 300;

/// Token range covering a character mention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub range: Range<usize>,
    /// False when the mention starts or ends strictly inside a token.
    pub exact: bool,
}

/// Minimal contiguous token range whose spans cover
/// `[char_offset, char_offset + char_len)`.
pub fn align(tokens: &[Token], char_offset: usize, char_len: usize) -> Result<Alignment> {
    let end_char = char_offset + char_len;
    let first = tokens.iter().position(|t| t.end > char_offset && t.start < end_char);
    let Some(first) = first else {
        return Err(Error::Alignment(format!(
            "no token overlaps characters [{char_offset}, {end_char})"
        )));
    };
    let last = tokens
        .iter()
        .rposition(|t| t.start < end_char && t.end > char_offset)
        .expect("first overlap exists");
    let range = first..last + 1;
    let exact = tokens[first].start == char_offset && tokens[last].end == end_char;
    Ok(Alignment { range, exact })
}

/// A document ready for the model: `[CLS] tokens [SEP]` with mention indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub id: String,
    pub ids: Vec<u32>,
    pub pieces: Vec<String>,
    /// Character spans; the special tokens carry empty spans.
    pub char_spans: Vec<(usize, usize)>,
    pub p_index: usize,
    pub a_span: Range<usize>,
    pub b_span: Range<usize>,
    pub truncated: bool,
    pub head_removed: usize,
    pub tail_removed: usize,
    /// Mentions (of "P", "A", "B") whose offsets fall inside a token.
    pub inexact: Vec<String>,
}

impl TokenizedDoc {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Reassemble the surface of a token range: pieces with `##` stripped,
    /// `[UNK]` replaced by the source characters it covers.
    pub fn decode(&self, text: &str, range: Range<usize>, unk_id: u32) -> String {
        let chars: Vec<char> = text.chars().collect();
        let mut s = String::new();
        for i in range {
            if self.ids[i] == unk_id {
                let (a, b) = self.char_spans[i];
                s.extend(&chars[a..b]);
            } else {
                s.push_str(self.pieces[i].strip_prefix("##").unwrap_or(&self.pieces[i]));
            }
        }
        s
    }
}

/// Result of dropping tokens to meet the length limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub keep: Range<usize>,
}

/// Decide which tokens to keep so at most `limit` remain, never dropping
/// any token inside `cluster`. Tokens are removed first from the end that
/// is farther from the cluster, then from the other end. Ties drop the tail.
pub fn truncation_window(n: usize, cluster: Range<usize>, limit: usize) -> std::result::Result<Truncation, String> {
    if cluster.len() > limit {
        return Err(format!(
            "mention cluster spans {} tokens, more than the limit {limit}",
            cluster.len()
        ));
    }
    if n <= limit {
        return Ok(Truncation { keep: 0..n });
    }
    let mut excess = n - limit;
    let head_room = cluster.start;
    let tail_room = n - cluster.end;
    let (head, tail) = if tail_room >= head_room {
        let tail = excess.min(tail_room);
        excess -= tail;
        (excess.min(head_room), tail)
    } else {
        let head = excess.min(head_room);
        excess -= head;
        (head, excess.min(tail_room))
    };
    Ok(Truncation { keep: head..n - tail })
}

/// Truncate to `limit` tokens around the mentions, then add `[CLS]`/`[SEP]`
/// and shift every index by one.
#[allow(clippy::too_many_arguments)]
pub fn truncate_and_finalize(
    id: &str,
    tokens: &[Token],
    p_range: Range<usize>,
    a_span: Range<usize>,
    b_span: Range<usize>,
    limit: usize,
    vocab: &Vocab,
) -> Result<TokenizedDoc> {
    for (name, r) in [("pronoun", &p_range), ("A", &a_span), ("B", &b_span)] {
        if r.is_empty() || r.end > tokens.len() {
            return Err(Error::Alignment(format!("{name} span {r:?} invalid for {} tokens", tokens.len())));
        }
    }
    let cluster = p_range.start.min(a_span.start).min(b_span.start)
        ..p_range.end.max(a_span.end).max(b_span.end);
    let window = truncation_window(tokens.len(), cluster, limit).map_err(|message| Error::Unprocessable {
        id: id.to_string(),
        message,
    })?;
    let keep = window.keep;
    let shift = |i: usize| i - keep.start + 1;
    let kept = &tokens[keep.clone()];

    let mut ids = Vec::with_capacity(kept.len() + 2);
    let mut pieces = Vec::with_capacity(kept.len() + 2);
    let mut char_spans = Vec::with_capacity(kept.len() + 2);
    ids.push(vocab.cls_id());
    pieces.push(vocab.token(vocab.cls_id()).unwrap_or("[CLS]").to_string());
    char_spans.push((0, 0));
    for t in kept {
        ids.push(t.id);
        pieces.push(t.piece.clone());
        char_spans.push((t.start, t.end));
    }
    let end_char = kept.last().map_or(0, |t| t.end);
    ids.push(vocab.sep_id());
    pieces.push(vocab.token(vocab.sep_id()).unwrap_or("[SEP]").to_string());
    char_spans.push((end_char, end_char));

    Ok(TokenizedDoc {
        id: id.to_string(),
        ids,
        pieces,
        char_spans,
        p_index: shift(p_range.start),
        a_span: shift(a_span.start)..shift(a_span.end - 1) + 1,
        b_span: shift(b_span.start)..shift(b_span.end - 1) + 1,
        truncated: keep.len() < tokens.len(),
        head_removed: keep.start,
        tail_removed: tokens.len() - keep.end,
        inexact: Vec::new(),
    })
}

/// Tokenize a GAP record and resolve its pronoun and entity mentions.
pub fn tokenize_record(r: &GapRecord, vocab: &Vocab, limit: usize) -> Result<TokenizedDoc> {
    let tokens = wordpiece(&r.text, vocab);
    let mut inexact = Vec::new();
    let mut locate = |name: &str, off: usize, surface: &str| -> Result<Range<usize>> {
        let al = align(&tokens, off, surface.chars().count()).map_err(|e| Error::Unprocessable {
            id: r.id.clone(),
            message: format!("{name}: {e}"),
        })?;
        if !al.exact {
            inexact.push(name.to_string());
        }
        Ok(al.range)
    };
    let p = locate("P", r.pronoun_offset, &r.pronoun)?;
    let a = locate("A", r.a_offset, &r.a_text)?;
    let b = locate("B", r.b_offset, &r.b_text)?;
    let mut doc = truncate_and_finalize(&r.id, &tokens, p, a, b, limit, vocab)?;
    doc.inexact = inexact;
    Ok(doc)
}

/// Does each mention decode back to its surface string (after the same
/// normalization the tokenizer applies)?
pub fn mentions_round_trip(doc: &TokenizedDoc, r: &GapRecord, vocab: &Vocab) -> bool {
    let lc = vocab.lowercase();
    let unk = vocab.unk_id();
    let p_end = doc.p_index + 1;
    let p_decoded = doc.decode(&r.text, doc.p_index..p_end, unk);
    let p_ok = normalize_surface(&r.pronoun, lc).starts_with(&p_decoded) && !p_decoded.is_empty();
    let a_ok = doc.decode(&r.text, doc.a_span.clone(), unk) == normalize_surface(&r.a_text, lc);
    let b_ok = doc.decode(&r.text, doc.b_span.clone(), unk) == normalize_surface(&r.b_text, lc);
    p_ok && a_ok && b_ok
}
