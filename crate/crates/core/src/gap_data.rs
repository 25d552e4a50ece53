//! GAP-format TSV records, 3-way labels and stratified k-fold splits.
//!
//! Offsets in GAP files count Unicode scalar values, not bytes.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const COLUMNS: [&str; 11] = [
    "ID",
    "Text",
    "Pronoun",
    "Pronoun-offset",
    "A",
    "A-offset",
    "A-coref",
    "B",
    "B-offset",
    "B-coref",
    "URL",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapRecord {
    pub id: String,
    pub text: String,
    pub pronoun: String,
    pub pronoun_offset: usize,
    pub a_text: String,
    pub a_offset: usize,
    pub a_coref: bool,
    pub b_text: String,
    pub b_offset: usize,
    pub b_coref: bool,
    pub url: String,
}

/// Candidate answer for the pronoun. The class index order is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
    Neither,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::A, Label::B, Label::Neither];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::A => "A",
            Label::B => "B",
            Label::Neither => "NEITHER",
        }
    }
}

pub fn derive_label(r: &GapRecord) -> Label {
    if r.a_coref {
        Label::A
    } else if r.b_coref {
        Label::B
    } else {
        Label::Neither
    }
}

impl GapRecord {
    pub fn label(&self) -> Label {
        derive_label(self)
    }
}

/// Does `surface` occur in `text` starting at character `offset`?
pub fn surface_at(text: &str, offset: usize, surface: &str) -> bool {
    match char_to_byte(text, offset) {
        Some(b) => text[b..].starts_with(surface),
        None => false,
    }
}

/// Byte index of the `offset`-th character; `Some(text.len())` one past the end.
pub fn char_to_byte(text: &str, offset: usize) -> Option<usize> {
    text.char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .nth(offset)
}

/// What to do with rows that fail validation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InvalidRows {
    #[default]
    Reject,
    Skip,
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<GapRecord>,
    /// Row errors that were skipped under [`InvalidRows::Skip`].
    pub skipped: Vec<Error>,
}

/// Parse a GAP TSV stream, failing on the first invalid row.
pub fn parse_tsv<R: BufRead>(input: R) -> Result<Vec<GapRecord>> {
    parse_tsv_with(input, InvalidRows::Reject).map(|o| o.records)
}

pub fn parse_tsv_with<R: BufRead>(input: R, policy: InvalidRows) -> Result<ParseOutcome> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Validation("empty GAP file: header row missing".into())),
        }
    };
    let names: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let mut index = [0usize; 11];
    for (slot, col) in index.iter_mut().zip(COLUMNS) {
        *slot = names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(col))
            .ok_or_else(|| Error::Validation(format!("missing column {col:?} in header")))?;
    }
    let width = names.len();

    let mut out = ParseOutcome::default();
    for (lineno, line) in lines {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        match parse_row(line, lineno + 1, width, &index) {
            Ok(r) => out.records.push(r),
            Err(e) => match policy {
                InvalidRows::Reject => return Err(e),
                InvalidRows::Skip => out.skipped.push(e),
            },
        }
    }
    Ok(out)
}

fn parse_row(line: &str, row: usize, width: usize, index: &[usize; 11]) -> Result<GapRecord> {
    let fields: Vec<&str> = line.split('\t').collect();
    let id = fields.get(index[0]).map_or("", |s| s.trim()).to_string();
    let fail = |message: String| Error::Row {
        row,
        id: id.clone(),
        message,
    };
    if fields.len() != width {
        return Err(fail(format!("expected {width} fields, found {}", fields.len())));
    }
    let get = |i: usize| fields[index[i]];
    let offset = |i: usize| -> Result<usize> {
        get(i)
            .trim()
            .parse::<usize>()
            .map_err(|_| fail(format!("{} {:?} is not a non-negative integer", COLUMNS[i], get(i))))
    };
    let flag = |i: usize| -> Result<bool> {
        match get(i).trim().to_ascii_lowercase().as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(fail(format!("{} {other:?} is not TRUE/FALSE", COLUMNS[i]))),
        }
    };
    let rec = GapRecord {
        id: id.clone(),
        text: get(1).to_string(),
        pronoun: get(2).to_string(),
        pronoun_offset: offset(3)?,
        a_text: get(4).to_string(),
        a_offset: offset(5)?,
        a_coref: flag(6)?,
        b_text: get(7).to_string(),
        b_offset: offset(8)?,
        b_coref: flag(9)?,
        url: get(10).to_string(),
    };
    validate(&rec).map_err(|e| match e {
        Error::Validation(m) => fail(m),
        other => other,
    })?;
    Ok(rec)
}

/// Check the record invariants: surfaces occur at their offsets and at
/// most one coreference flag is set.
pub fn validate(r: &GapRecord) -> Result<()> {
    let checks = [
        ("Pronoun", &r.pronoun, r.pronoun_offset),
        ("A", &r.a_text, r.a_offset),
        ("B", &r.b_text, r.b_offset),
    ];
    for (name, surface, off) in checks {
        if surface.is_empty() {
            return Err(Error::Validation(format!("{name} surface is empty")));
        }
        if !surface_at(&r.text, off, surface) {
            return Err(Error::Validation(format!(
                "{name} {surface:?} does not occur at character offset {off}"
            )));
        }
    }
    if r.a_coref && r.b_coref {
        return Err(Error::Validation("both A-coref and B-coref are TRUE".into()));
    }
    Ok(())
}

/// Write records as GAP TSV with the canonical header.
pub fn write_tsv<W: Write>(records: &[GapRecord], mut out: W) -> Result<()> {
    writeln!(out, "{}", COLUMNS.join("\t"))?;
    let b = |v: bool| if v { "TRUE" } else { "FALSE" };
    for r in records {
        for field in [&r.id, &r.text, &r.pronoun, &r.a_text, &r.b_text, &r.url] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(Error::Validation(format!(
                    "record {:?}: field contains a tab or newline",
                    r.id
                )));
            }
        }
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            r.text,
            r.pronoun,
            r.pronoun_offset,
            r.a_text,
            r.a_offset,
            b(r.a_coref),
            r.b_text,
            r.b_offset,
            b(r.b_coref),
            r.url
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold index per item, parallel to the input order.
    pub folds: Vec<usize>,
    ids: Vec<String>,
    #[serde(skip)]
    by_id: HashMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        if self.by_id.is_empty() {
            return self.ids.iter().position(|x| x == id).map(|i| self.folds[i]);
        }
        self.by_id.get(id).map(|&i| self.folds[i])
    }

    /// Input positions assigned to `fold`.
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    /// Input positions not assigned to `fold`.
    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        self.folds.iter().for_each(|&f| s[f] += 1);
        s
    }
}

pub fn kfold_split(records: &[GapRecord], k: usize, seed: u64) -> Result<FoldAssignment> {
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let labels: Vec<Label> = records.iter().map(GapRecord::label).collect();
    kfold_split_labels(&ids, &labels, k, seed)
}

/// Label-stratified k-fold assignment.
///
/// Items are grouped by label (A, B, NEITHER), each group is shuffled with
/// a seed-derived stream, the groups are concatenated and position `i`
/// goes to fold `i mod k`. Fold sizes and per-class counts each differ by at
/// most one across folds.
pub fn kfold_split_labels(ids: &[&str], labels: &[Label], k: usize, seed: u64) -> Result<FoldAssignment> {
    if ids.len() != labels.len() {
        return Err(Error::dim("kfold_split", ids.len(), labels.len()));
    }
    if k < 2 || k > ids.len() {
        return Err(Error::Config(format!(
            "k = {k} must be in [2, {}] for {} records",
            ids.len(),
            ids.len()
        )));
    }
    let root = Rng::new(seed);
    let mut order = Vec::with_capacity(ids.len());
    for label in Label::ALL {
        let mut group: Vec<usize> = (0..ids.len()).filter(|&i| labels[i] == label).collect();
        root.fork(label.index() as u64).shuffle(&mut group);
        order.extend(group);
    }
    let mut folds = vec![0; ids.len()];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    let ids: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    let by_id = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    Ok(FoldAssignment { k, folds, ids, by_id })
}
