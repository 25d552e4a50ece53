//! A planted pronoun-resolution task over a synthetic vocabulary.
//!
//! Each document is a sequence of words `w000`..`wNNN`. The pronoun is a
//! random word; the coreferent candidate's mention starts with that same
//! word, so under token-keyed toy embeddings its span shares a vector with
//! the pronoun. For NEITHER, no mention contains the pronoun word. The label
//! is therefore a deterministic function of the embeddings.

use crate::gap_data::{GapRecord, Label};
use crate::rng::Rng;
use crate::tokenizer::{CLS, SEP, UNK};

#[derive(Clone, Debug)]
pub struct PlantedTask {
    pub records: Vec<GapRecord>,
    /// Vocabulary file lines; ids are line numbers.
    pub vocab: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub docs: usize,
    pub words: usize,
    pub min_filler: usize,
    pub max_filler: usize,
    pub max_mention: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            docs: 500,
            words: 400,
            min_filler: 2,
            max_filler: 12,
            max_mention: 3,
            seed: 0,
        }
    }
}

fn word(i: usize) -> String {
    format!("w{i:03}")
}

pub fn planted_task(cfg: &PlantedConfig) -> PlantedTask {
    let mut vocab: Vec<String> = ["[PAD]", UNK, CLS, SEP, "."].iter().map(|s| s.to_string()).collect();
    vocab.extend((0..cfg.words).map(word));
    let root = Rng::new(cfg.seed);
    let records = (0..cfg.docs)
        .map(|i| planted_record(i, cfg, &mut root.fork(i as u64)))
        .collect();
    PlantedTask { records, vocab }
}

fn planted_record(i: usize, cfg: &PlantedConfig, rng: &mut Rng) -> GapRecord {
    let pronoun = rng.below(cfg.words);
    let label = Label::from_index(rng.below(3)).expect("index below 3");
    let other = |rng: &mut Rng| loop {
        let w = rng.below(cfg.words);
        if w != pronoun {
            return w;
        }
    };
    let mention = |rng: &mut Rng, coref: bool| -> Vec<usize> {
        let len = 1 + rng.below(cfg.max_mention);
        let mut m: Vec<usize> = (0..len).map(|_| other(rng)).collect();
        if coref {
            m[0] = pronoun;
        }
        m
    };
    let a = mention(rng, label == Label::A);
    let b = mention(rng, label == Label::B);
    let filler = |rng: &mut Rng| -> Vec<usize> {
        let n = cfg.min_filler + rng.below(cfg.max_filler - cfg.min_filler + 1);
        (0..n).map(|_| other(rng)).collect()
    };
    // Pronoun after B, or between A and B.
    let pronoun_between = rng.below(2) == 0;
    let mut segments: Vec<(Option<char>, Vec<usize>)> = vec![(None, filler(rng)), (Some('A'), a.clone())];
    if pronoun_between {
        segments.push((None, filler(rng)));
        segments.push((Some('P'), vec![pronoun]));
    }
    segments.push((None, filler(rng)));
    segments.push((Some('B'), b.clone()));
    if !pronoun_between {
        segments.push((None, filler(rng)));
        segments.push((Some('P'), vec![pronoun]));
    }
    segments.push((None, filler(rng)));

    let mut text = String::new();
    let (mut a_offset, mut b_offset, mut p_offset) = (0, 0, 0);
    for (tag, words) in segments {
        if !text.is_empty() {
            text.push(' ');
        }
        let start = text.chars().count();
        match tag {
            Some('A') => a_offset = start,
            Some('B') => b_offset = start,
            Some('P') => p_offset = start,
            _ => {}
        }
        let joined: Vec<String> = words.iter().map(|&w| word(w)).collect();
        text.push_str(&joined.join(" "));
    }
    text.push_str(" .");
    let surface = |ws: &[usize]| ws.iter().map(|&w| word(w)).collect::<Vec<_>>().join(" ");
    GapRecord {
        id: format!("planted-{i}"),
        text,
        pronoun: word(pronoun),
        pronoun_offset: p_offset,
        a_text: surface(&a),
        a_offset,
        a_coref: label == Label::A,
        b_text: surface(&b),
        b_offset,
        b_coref: label == Label::B,
        url: "synthetic".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap_data::{surface_at, validate};
    use crate::tokenizer::{tokenize_record, Casing, Vocab, DEFAULT_MAX_TOKENS};

    #[test]
    fn records_are_valid_and_labels_planted() {
        let task = planted_task(&PlantedConfig {
            docs: 60,
            ..Default::default()
        });
        let vocab = Vocab::from_tokens(task.vocab.iter(), Casing::Auto).unwrap();
        let mut counts = [0; 3];
        for r in &task.records {
            validate(r).unwrap();
            assert!(surface_at(&r.text, r.pronoun_offset, &r.pronoun));
            let label = r.label();
            counts[label.index()] += 1;
            let doc = tokenize_record(r, &vocab, DEFAULT_MAX_TOKENS).unwrap();
            let p = doc.ids[doc.p_index];
            assert_eq!(doc.ids[doc.a_span.start] == p, label == Label::A);
            assert_eq!(doc.ids[doc.b_span.clone()].contains(&p), label == Label::B);
            assert!(doc.inexact.is_empty());
        }
        assert!(counts.iter().all(|&c| c >= 8), "{counts:?}");
    }

    #[test]
    fn deterministic() {
        let cfg = PlantedConfig {
            docs: 5,
            seed: 7,
            ..Default::default()
        };
        assert_eq!(planted_task(&cfg).records, planted_task(&cfg).records);
    }
}
