use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const UNK: &str = "[UNK]";
pub const CONTINUATION: &str = "##";
pub const MAX_CHARS_PER_WORD: usize = 100;

/// Casing mode for the basic tokenizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Casing {
    /// Lowercase when no regular vocab entry contains an uppercase letter.
    #[default]
    Auto,
    Lower,
    Cased,
}

/// WordPiece vocabulary. Token ids are line numbers of the vocab file.
#[derive(Clone, Debug)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    lowercase: bool,
    max_chars_per_word: usize,
    cls: u32,
    sep: u32,
    unk: u32,
}

impl Vocab {
    pub fn from_tokens<I, S>(tokens: I, casing: Casing) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            ids.entry(t.clone()).or_insert(i as u32);
        }
        let need = |t: &str| {
            ids.get(t)
                .copied()
                .ok_or_else(|| Error::Validation(format!("vocab is missing {t}")))
        };
        let (cls, sep, unk) = (need(CLS)?, need(SEP)?, need(UNK)?);
        let lowercase = match casing {
            Casing::Lower => true,
            Casing::Cased => false,
            Casing::Auto => !tokens
                .iter()
                .filter(|t| !(t.starts_with('[') && t.ends_with(']')))
                .any(|t| t.chars().any(char::is_uppercase)),
        };
        Ok(Vocab {
            tokens,
            ids,
            lowercase,
            max_chars_per_word: MAX_CHARS_PER_WORD,
            cls,
            sep,
            unk,
        })
    }

    /// Read a vocab file: one token per line, line number = id.
    pub fn load<R: BufRead>(input: R, casing: Casing) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in input.lines() {
            let line = line?;
            tokens.push(line.trim_end_matches(['\r', '\n']).to_string());
        }
        Self::from_tokens(tokens, casing)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn max_chars_per_word(&self) -> usize {
        self.max_chars_per_word
    }

    pub fn cls_id(&self) -> u32 {
        self.cls
    }

    pub fn sep_id(&self) -> u32 {
        self.sep
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }
}
