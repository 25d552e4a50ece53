//! BERT-style basic tokenization followed by greedy longest-match-first
//! WordPiece segmentation. Every token carries the character span it was
//! produced from in the original text.

use unicode_categories::UnicodeCategories;
use unicode_normalization::UnicodeNormalization;

use super::vocab::{Vocab, CONTINUATION};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: u32,
    /// Vocab surface, including the `##` prefix for continuation pieces.
    pub piece: String,
    /// Character span `[start, end)` in the original text.
    pub start: usize,
    pub end: usize,
}

/// A basic-tokenizer word: normalized characters with their source index.
#[derive(Clone, Debug, Default)]
struct Word {
    chars: Vec<char>,
    origin: Vec<usize>,
}

impl Word {
    fn push(&mut self, c: char, at: usize) {
        self.chars.push(c);
        self.origin.push(at);
    }

    fn span(&self, from: usize, to: usize) -> (usize, usize) {
        (self.origin[from], self.origin[to - 1] + 1)
    }
}

pub(crate) fn is_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r') || c.is_separator_space()
}

fn is_control(c: char) -> bool {
    if matches!(c, '\t' | '\n' | '\r') {
        return false;
    }
    c.is_other()
}

fn is_punctuation(c: char) -> bool {
    let cp = c as u32;
    (33..=47).contains(&cp)
        || (58..=64).contains(&cp)
        || (91..=96).contains(&cp)
        || (123..=126).contains(&cp)
        || c.is_punctuation()
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2B73F
        | 0x2B740..=0x2B81F
        | 0x2B820..=0x2CEAF
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}

/// Normalize one source character the way the basic tokenizer does:
/// lowercase, canonical decomposition and removal of nonspacing marks when
/// `lowercase` is set, identity otherwise.
pub(crate) fn normalize_char(c: char, lowercase: bool, out: &mut Vec<char>) {
    if !lowercase {
        out.push(c);
        return;
    }
    for l in c.to_lowercase() {
        out.extend(l.nfd().filter(|d| !d.is_mark_nonspacing()));
    }
}

/// Apply the basic tokenizer's character normalization to a string and drop
/// whitespace and control characters.
pub fn normalize_surface(s: &str, lowercase: bool) -> String {
    let mut buf = Vec::new();
    for c in s.chars() {
        if c == '\0' || c == '\u{FFFD}' || is_control(c) || is_whitespace(c) {
            continue;
        }
        normalize_char(c, lowercase, &mut buf);
    }
    buf.into_iter().filter(|c| !is_whitespace(*c)).collect()
}

fn basic_words(text: &str, lowercase: bool) -> Vec<Word> {
    let mut words = Vec::new();
    let mut cur = Word::default();
    let mut buf = Vec::with_capacity(4);
    let flush = |cur: &mut Word, words: &mut Vec<Word>| {
        if !cur.chars.is_empty() {
            words.push(std::mem::take(cur));
        }
    };
    for (i, c) in text.chars().enumerate() {
        if c == '\0' || c == '\u{FFFD}' || is_control(c) {
            continue;
        }
        if is_whitespace(c) {
            flush(&mut cur, &mut words);
            continue;
        }
        buf.clear();
        normalize_char(c, lowercase, &mut buf);
        for &n in &buf {
            if is_whitespace(n) {
                flush(&mut cur, &mut words);
            } else if is_punctuation(n) || is_cjk(n) {
                flush(&mut cur, &mut words);
                cur.push(n, i);
                flush(&mut cur, &mut words);
            } else {
                cur.push(n, i);
            }
        }
    }
    flush(&mut cur, &mut words);
    words
}

/// Greedy longest-match-first segmentation of one word.
///
/// Returns `(piece, start, end)` in character positions of `word`, or
/// `None` when some remainder has no matching vocab prefix.
pub fn segment_word(word: &[char], vocab: &Vocab) -> Option<Vec<(String, usize, usize)>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut candidate = String::new();
    while start < word.len() {
        let mut end = word.len();
        let mut found = None;
        while end > start {
            candidate.clear();
            if start > 0 {
                candidate.push_str(CONTINUATION);
            }
            candidate.extend(&word[start..end]);
            if vocab.contains(&candidate) {
                found = Some(candidate.clone());
                break;
            }
            end -= 1;
        }
        out.push((found?, start, end));
        start = end;
    }
    Some(out)
}

/// Tokenize `text`. Total: unknown words become one `[UNK]` spanning the word.
pub fn wordpiece(text: &str, vocab: &Vocab) -> Vec<Token> {
    let mut tokens = Vec::new();
    for word in basic_words(text, vocab.lowercase()) {
        let unk = |tokens: &mut Vec<Token>| {
            let (start, end) = word.span(0, word.chars.len());
            tokens.push(Token {
                id: vocab.unk_id(),
                piece: vocab.token(vocab.unk_id()).unwrap_or("[UNK]").to_string(),
                start,
                end,
            });
        };
        if word.chars.len() > vocab.max_chars_per_word() {
            unk(&mut tokens);
            continue;
        }
        match segment_word(&word.chars, vocab) {
            Some(pieces) => {
                let mut prev_end = tokens.last().map_or(0, |t: &Token| t.end);
                for (piece, s, e) in pieces {
                    let (mut start, end) = word.span(s, e);
                    // One source char can expand to several normalized chars;
                    // keep spans ascending when a piece boundary splits one.
                    start = start.max(prev_end).min(end);
                    prev_end = end;
                    tokens.push(Token {
                        id: vocab.id(&piece).expect("segment_word returns vocab pieces"),
                        piece,
                        start,
                        end,
                    });
                }
            }
            None => unk(&mut tokens),
        }
    }
    tokens
}
