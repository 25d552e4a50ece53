//! WordPiece tokenization with character-span tracking, mention alignment
//! and length truncation.

mod align;
mod vocab;
mod wordpiece;

pub use align::{
    align, mentions_round_trip, tokenize_record, truncate_and_finalize, truncation_window, Alignment,
    TokenizedDoc, Truncation, DEFAULT_MAX_TOKENS,
};
pub use vocab::{Casing, Vocab, CLS, CONTINUATION, MAX_CHARS_PER_WORD, SEP, UNK};
pub use wordpiece::{normalize_surface, segment_word, wordpiece, Token};
