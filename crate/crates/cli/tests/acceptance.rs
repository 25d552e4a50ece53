//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so every line reaches the terminal. Criteria that
//! need external data not present on this machine are reported as FAIL with
//! the reason and do not change the exit status; every other failure does.

use std::collections::BTreeSet;
use std::fs;
use std::ops::Range;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use msnet_core::embed_store::{toy_embed_ids, EmbeddingSet};
use msnet_core::gap_data::{parse_tsv, write_tsv, GapRecord, Label};
use msnet_core::msnet::{span_attn, span_mean, DenseVectors, ExampleInput, Msnet, MsnetConfig, SpanMethod, TokenVectors};
use msnet_core::numkit::softmax;
use msnet_core::rng::Rng;
use msnet_core::synthetic::{planted_task, PlantedConfig};
use msnet_core::tokenizer::{mentions_round_trip, segment_word, tokenize_record, Casing, Vocab, DEFAULT_MAX_TOKENS};
use msnet_core::train_eval::{log_loss, read_submission, write_submission};

struct Verdict {
    pass: bool,
    /// Could not be evaluated here for lack of external data.
    unavailable: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict {
        pass,
        unavailable: false,
        detail,
    }
}

type Check = fn() -> Verdict;

fn msnet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msnet"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn msnet");
    assert!(
        out.status.success(),
        "{cmd:?} exited with {}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn gradient_fidelity() -> Verdict {
    let started = Instant::now();
    let out = msnet()
        .args(["gradcheck", "--hidden", "8", "--layers", "2", "--sdim", "4", "--batch", "4"])
        .output()
        .expect("spawn msnet");
    let seconds = started.elapsed().as_secs_f64();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let worst = stdout
        .lines()
        .filter_map(|l| l.split("max relative error ").nth(1))
        .filter_map(|rest| rest.split_whitespace().next()?.parse::<f64>().ok())
        .fold(0.0f64, f64::max);
    let methods = stdout.lines().filter(|l| l.starts_with("meanpool:") || l.starts_with("attention:")).count();
    verdict(
        out.status.success() && methods == 2 && worst < 1e-4 && seconds < 10.0,
        format!("max relative error {worst:.2e} over both span methods (< 1e-4), {seconds:.2} s (< 10 s)"),
    )
}

/// Straight-line evaluation of the scoring equations from the raw numbers.
fn oracle_forward(m: &Msnet, emb: &EmbeddingSet, p: usize, a: Range<usize>, b: Range<usize>) -> ([f64; 3], [f64; 3]) {
    let cfg = &m.config;
    let d = cfg.hidden;
    let s = cfg.s_dim;
    let x = |l: usize, i: usize| -> Vec<f64> { emb.vector(l, i).iter().map(|&v| v as f64).collect() };
    let pool = |l: usize, span: Range<usize>| -> Vec<f64> {
        let n = span.len() as f64;
        match cfg.span_method {
            SpanMethod::Meanpool => {
                let mut acc = vec![0.0; d];
                for i in span {
                    for (k, v) in x(l, i).iter().enumerate() {
                        acc[k] += v;
                    }
                }
                acc.iter().map(|v| v / n).collect()
            }
            SpanMethod::Attention => {
                let xp = x(l, p);
                let mut raw = Vec::new();
                for i in span.clone() {
                    let xi = x(l, i);
                    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                    let dot: f64 = xi.iter().zip(&xp).map(|(u, w)| u / norm * w).sum();
                    raw.push(dot / (d as f64).sqrt());
                }
                let top = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = raw.iter().map(|r| (r - top).exp()).collect();
                let z: f64 = e.iter().sum();
                let mut acc = vec![0.0; d];
                for (j, i) in span.enumerate() {
                    for (k, v) in x(l, i).iter().enumerate() {
                        acc[k] += e[j] / z * v;
                    }
                }
                acc
            }
        }
    };
    let mut feats = Vec::new();
    for l in 0..cfg.layers {
        let pv = x(l, p);
        let av = pool(l, a.clone());
        let bv = pool(l, b.clone());
        let mut input = Vec::with_capacity(5 * d);
        input.extend(&pv);
        input.extend(&av);
        input.extend(&bv);
        input.extend(av.iter().zip(&pv).map(|(u, w)| u * w));
        input.extend(bv.iter().zip(&pv).map(|(u, w)| u * w));
        let which = if cfg.per_layer_sim { l } else { 0 };
        let w = m.params.sim_weight[which].value.data();
        let bias = m.params.sim_bias[which].value.data();
        for c in 0..s {
            let mut v = bias[c];
            for (r, u) in input.iter().enumerate() {
                v += u * w[r * s + c];
            }
            feats.push(v);
        }
    }
    let wd = m.params.dist_weight.value.data()[0];
    let bd = m.params.dist_bias.value.data()[0];
    feats.push((wd * (a.start as f64 - p as f64) + bd).tanh());
    feats.push((wd * (b.start as f64 - p as f64) + bd).tanh());

    let bn = &m.params.bn;
    let (g, beta) = (bn.gamma.value.data(), bn.beta.value.data());
    let (mean, var) = (bn.running_mean.data(), bn.running_var.data());
    let w = m.params.score_weight.value.data();
    let sb = m.params.score_bias.value.data();
    let mut scores = [sb[0], sb[1], sb[2]];
    for (j, f) in feats.iter().enumerate() {
        let h = g[j] * (f - mean[j]) / (var[j] + cfg.bn_eps).sqrt() + beta[j];
        for (c, sc) in scores.iter_mut().enumerate() {
            *sc += h * w[j * 3 + c];
        }
    }
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = scores.map(|v| (v - top).exp());
    let z: f64 = e.iter().sum();
    (scores, e.map(|v| v / z))
}

fn randomize(m: &mut Msnet, rng: &mut Rng) {
    let p = &mut m.params;
    let mut fill = |t: &mut msnet_core::numkit::Tensor, lo: f64, hi: f64| {
        t.data_mut().iter_mut().for_each(|v| *v = rng.uniform_in(lo, hi));
    };
    for w in p.sim_weight.iter_mut() {
        fill(&mut w.value, -0.5, 0.5);
    }
    for b in p.sim_bias.iter_mut() {
        fill(&mut b.value, -0.5, 0.5);
    }
    fill(&mut p.dist_weight.value, -0.3, 0.3);
    fill(&mut p.dist_bias.value, -0.5, 0.5);
    fill(&mut p.score_weight.value, -1.0, 1.0);
    fill(&mut p.score_bias.value, -0.5, 0.5);
    fill(&mut p.bn.gamma.value, 0.5, 1.5);
    fill(&mut p.bn.beta.value, -0.5, 0.5);
    fill(&mut p.bn.running_mean, -0.5, 0.5);
    fill(&mut p.bn.running_var, 0.5, 2.0);
}

fn random_span(rng: &mut Rng, n: usize) -> Range<usize> {
    let start = rng.below(n);
    let len = 1 + rng.below(6.min(n - start));
    start..start + len
}

fn formula_oracle() -> Verdict {
    let mut rng = Rng::new(2024);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (method, per_layer) in [
        (SpanMethod::Meanpool, false),
        (SpanMethod::Attention, false),
        (SpanMethod::Meanpool, true),
        (SpanMethod::Attention, true),
    ] {
        let cfg = MsnetConfig {
            layers: 2,
            hidden: 4,
            s_dim: 3,
            span_method: method,
            per_layer_sim: per_layer,
            seed: rng.next_u64(),
            ..Default::default()
        };
        let mut m = Msnet::new(cfg).unwrap();
        randomize(&mut m, &mut rng);
        for i in 0..100 {
            let n = 5 + rng.below(36);
            let ids: Vec<u32> = (0..n).map(|_| rng.below(50) as u32).collect();
            let emb = toy_embed_ids(&format!("doc-{i}"), &ids, 3, 4, rng.next_u64()).unwrap();
            let p = rng.below(n);
            let (a, b) = (random_span(&mut rng, n), random_span(&mut rng, n));
            let ex = ExampleInput::new(&emb, p, a.clone(), b.clone());
            let (scores, probs) = m.forward_example(&ex).unwrap();
            let (os, op) = oracle_forward(&m, &emb, p, a, b);
            for c in 0..3 {
                worst = worst.max((scores[c] - os[c]).abs()).max((probs[c] - op[c]).abs());
            }
            worst = worst.max((probs.iter().sum::<f64>() - 1.0).abs());
            checked += 1;
        }
    }
    verdict(
        worst <= 1e-12,
        format!("{checked} examples (100 per span method x shared/per-layer similarity), max deviation {worst:.2e} (<= 1e-12)"),
    )
}

fn attention_invariants() -> Verdict {
    let mut rng = Rng::new(7);
    let (mut sum_dev, mut mean_dev) = (0.0f64, 0.0f64);
    let mut single_exact = true;
    let hidden = 16;
    for _ in 0..1000 {
        let len = 1 + rng.below(20);
        let mut e = DenseVectors::zeros(1, len + 1, hidden);
        e.data.iter_mut().for_each(|v| *v = rng.uniform_in(-3.0, 3.0));
        let out = span_attn(&e, 1..len + 1, 0, 0, None).unwrap();
        sum_dev = sum_dev.max((out.weights.iter().sum::<f64>() - 1.0).abs());
        if out.weights.iter().any(|&w| w <= 0.0) {
            sum_dev = f64::INFINITY;
        }
        if len == 1 {
            single_exact &= out.vector.as_slice() == e.vector(0, 1).as_slice();
        }
        let token: Vec<f64> = (0..hidden).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
        for t in 1..=len {
            e.at_mut(0, t).copy_from_slice(&token);
        }
        let attn = span_attn(&e, 1..len + 1, 0, 0, None).unwrap().vector;
        let mean = span_mean(&e, 1..len + 1, 0).unwrap();
        mean_dev = attn.iter().zip(&mean).map(|(a, b)| (a - b).abs()).fold(mean_dev, f64::max);
    }
    for _ in 0..50 {
        let mut e = DenseVectors::zeros(1, 2, hidden);
        e.data.iter_mut().for_each(|v| *v = rng.uniform_in(-3.0, 3.0));
        let out = span_attn(&e, 1..2, 0, 0, None).unwrap();
        single_exact &= out.vector.as_slice() == e.vector(0, 1).as_slice();
    }
    verdict(
        sum_dev <= 1e-12 && single_exact && mean_dev <= 1e-12,
        format!(
            "1000 fuzzed spans of length 1-20: weight-sum deviation {sum_dev:.2e}, single-token exact {single_exact}, identical-token vs mean {mean_dev:.2e}"
        ),
    )
}

fn write_planted(dir: &Path, cfg: &PlantedConfig, id_prefix: &str) -> (PathBuf, PathBuf, Vec<GapRecord>) {
    let task = planted_task(cfg);
    let records: Vec<GapRecord> = task
        .records
        .into_iter()
        .enumerate()
        .map(|(i, r)| GapRecord {
            id: format!("{id_prefix}-{i}"),
            ..r
        })
        .collect();
    let tsv = dir.join(format!("{id_prefix}.tsv"));
    write_tsv(&records, fs::File::create(&tsv).unwrap()).unwrap();
    let vocab = dir.join("vocab.txt");
    fs::write(&vocab, task.vocab.join("\n") + "\n").unwrap();
    (tsv, vocab, records)
}

fn softmax_log_loss() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let (tsv, _, records) = write_planted(
        dir.path(),
        &PlantedConfig {
            docs: 301,
            ..Default::default()
        },
        "gold",
    );
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let csv = dir.path().join("uniform.csv");
    write_submission(&ids, &vec![[1.0 / 3.0; 3]; ids.len()], fs::File::create(&csv).unwrap()).unwrap();
    let printed: f64 = run_ok(msnet().arg("eval").arg("--predictions").arg(&csv).arg("--gold").arg(&tsv))
        .trim()
        .parse()
        .unwrap();
    let uniform_dev = (printed - 3f64.ln()).abs();

    let mut rng = Rng::new(11);
    let mut row_dev = 0.0f64;
    for _ in 0..10_000 {
        let scores: Vec<f64> = (0..3).map(|_| rng.uniform_in(-40.0, 40.0)).collect();
        row_dev = row_dev.max((softmax(&scores).unwrap().iter().sum::<f64>() - 1.0).abs());
    }
    let m = Msnet::new(MsnetConfig {
        layers: 2,
        hidden: 6,
        s_dim: 3,
        span_method: SpanMethod::Attention,
        ..Default::default()
    })
    .unwrap();
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..200 {
        let ids: Vec<u32> = (0..12).map(|_| rng.below(30) as u32).collect();
        let emb = toy_embed_ids("x", &ids, 2, 6, i).unwrap();
        let ex = ExampleInput::new(&emb, 5, 1..3, 7..10);
        let p = m.forward_example(&ex).unwrap().1;
        row_dev = row_dev.max((p.iter().sum::<f64>() - 1.0).abs());
        probs.push(p);
        labels.push(Label::from_index(i as usize % 3).unwrap());
    }
    let csv = dir.path().join("model.csv");
    let names: Vec<String> = (0..probs.len()).map(|i| format!("r{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    write_submission(&name_refs, &probs, fs::File::create(&csv).unwrap()).unwrap();
    let back: Vec<[f64; 3]> = read_submission(std::io::BufReader::new(fs::File::open(&csv).unwrap()))
        .unwrap()
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let same = back == probs && log_loss(&back, &labels).unwrap() == log_loss(&probs, &labels).unwrap();
    verdict(
        uniform_dev <= 1e-9 && row_dev <= 1e-9 && same,
        format!(
            "`eval` on a uniform CSV prints {printed} (|x - ln 3| = {uniform_dev:.1e}); max row-sum deviation {row_dev:.1e}; CSV round trip exact {same}"
        ),
    )
}

/// All complete segmentations of `word` into vocab pieces.
fn segmentations(word: &[char], at: usize, vocab: &BTreeSet<String>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if at == word.len() {
        out.push(prefix.clone());
        return;
    }
    for end in at + 1..=word.len() {
        let piece: String = word[at..end].iter().collect();
        let key = if at == 0 { piece } else { format!("##{piece}") };
        if vocab.contains(&key) {
            prefix.push(end - at);
            segmentations(word, end, vocab, prefix, out);
            prefix.pop();
        }
    }
}

/// Longest-match segmentation found by exhaustive search: the complete
/// segmentation with the lexicographically largest piece lengths, accepted
/// only if every piece is the longest vocab prefix at its position (a
/// segmentation that needs a shorter piece somewhere is not what longest
/// match produces, so the word becomes unknown).
fn oracle_segment(word: &[char], vocab: &BTreeSet<String>) -> Option<Vec<String>> {
    let mut all = Vec::new();
    segmentations(word, 0, vocab, &mut Vec::new(), &mut all);
    let best = all.into_iter().max()?;
    let mut pieces = Vec::new();
    let mut at = 0;
    for len in best {
        let longest = (at + 1..=word.len())
            .filter(|&end| {
                let piece: String = word[at..end].iter().collect();
                vocab.contains(&if at == 0 { piece } else { format!("##{piece}") })
            })
            .max()
            .expect("a piece exists");
        if longest != at + len {
            return None;
        }
        let piece: String = word[at..at + len].iter().collect();
        pieces.push(if at == 0 { piece } else { format!("##{piece}") });
        at += len;
    }
    Some(pieces)
}

fn gap_alignment() -> Option<(usize, usize, f64)> {
    let tsv = std::env::var_os("MSNET_GAP_TRAIN")?;
    let vocab_path = std::env::var_os("MSNET_VOCAB")?;
    let vocab = Vocab::load(std::io::BufReader::new(fs::File::open(&vocab_path).ok()?), Casing::Auto).ok()?;
    let mut records = Vec::new();
    for path in std::env::split_paths(&tsv) {
        records.extend(parse_tsv(std::io::BufReader::new(fs::File::open(path).ok()?)).ok()?);
    }
    let mut ok = 0;
    for r in &records {
        match tokenize_record(r, &vocab, DEFAULT_MAX_TOKENS) {
            Ok(doc) if mentions_round_trip(&doc, r, &vocab) => ok += 1,
            Ok(_) => eprintln!("diagnostic: {}: mention surfaces do not round-trip", r.id),
            Err(e) => eprintln!("diagnostic: {e}"),
        }
    }
    Some((ok, records.len(), ok as f64 / records.len().max(1) as f64))
}

fn tokenizer_oracle() -> Verdict {
    let mut rng = Rng::new(99);
    let alphabet = ['a', 'b', 'c', 'd'];
    let (mut agree, mut unknown, mut dead_ends) = (0, 0, 0);
    let trials = 1000;
    for _ in 0..trials {
        let mut vocab: BTreeSet<String> = BTreeSet::new();
        for _ in 0..(4 + rng.below(30)) {
            let len = 1 + rng.below(4);
            let piece: String = (0..len).map(|_| alphabet[rng.below(alphabet.len())]).collect();
            if rng.below(2) == 0 {
                vocab.insert(piece);
            } else {
                vocab.insert(format!("##{piece}"));
            }
        }
        // Dense vocabularies make most words segmentable; sparse ones
        // exercise unknown words and greedy dead ends.
        let mode = rng.below(3);
        if mode > 0 {
            vocab.extend(alphabet.iter().map(|c| c.to_string()));
            vocab.extend(alphabet.iter().map(|c| format!("##{c}")));
        }
        if mode == 2 {
            vocab.remove(&format!("##{}", alphabet[rng.below(alphabet.len())]));
        }
        let word: Vec<char> = (0..1 + rng.below(12)).map(|_| alphabet[rng.below(alphabet.len())]).collect();
        let v = Vocab::from_tokens(["[UNK]", "[CLS]", "[SEP]"].iter().map(|s| s.to_string()).chain(vocab.iter().cloned()), Casing::Cased)
            .unwrap();
        let got = segment_word(&word, &v).map(|p| p.into_iter().map(|(s, _, _)| s).collect::<Vec<_>>());
        let want = oracle_segment(&word, &vocab);
        if want.is_none() {
            unknown += 1;
            let mut all = Vec::new();
            segmentations(&word, 0, &vocab, &mut Vec::new(), &mut all);
            if !all.is_empty() {
                dead_ends += 1;
            }
        }
        if got == want {
            agree += 1;
        }
    }
    let oracle_ok = agree == trials;
    let mut detail = format!("brute-force oracle agrees on {agree}/{trials} fuzzed (vocab, word) pairs ({unknown} unknown words, {dead_ends} of them greedy dead ends)");
    match gap_alignment() {
        Some((ok, n, rate)) => {
            detail.push_str(&format!("; GAP alignment round-trips {ok}/{n} records ({:.2}%, need >= 99%)", 100.0 * rate));
            verdict(oracle_ok && rate >= 0.99 && n > 0, detail)
        }
        None => {
            detail.push_str("; GAP alignment not evaluated: set MSNET_GAP_TRAIN (GAP train TSV) and MSNET_VOCAB (WordPiece vocab)");
            Verdict {
                pass: false,
                unavailable: oracle_ok,
                detail,
            }
        }
    }
}

struct Pipeline {
    dir: tempfile::TempDir,
    train_tsv: PathBuf,
    test_tsv: Option<PathBuf>,
    vocab: PathBuf,
    embeddings: PathBuf,
}

fn pipeline(train: &PlantedConfig, test: Option<&PlantedConfig>, hidden: usize) -> Pipeline {
    let dir = tempfile::tempdir().unwrap();
    let (train_tsv, vocab, _) = write_planted(dir.path(), train, "train");
    let test_tsv = test.map(|cfg| write_planted(dir.path(), cfg, "test").0);
    let mut embed = msnet();
    embed.arg("embed-toy");
    for (name, tsv) in [("train", Some(&train_tsv)), ("test", test_tsv.as_ref())] {
        let Some(tsv) = tsv else { continue };
        let listing = dir.path().join(format!("{name}.jsonl"));
        run_ok(msnet().arg("tokenize").arg("--tsv").arg(tsv).arg("--vocab").arg(&vocab).arg("--out").arg(&listing));
        embed.arg("--docs").arg(listing);
    }
    let embeddings = dir.path().join("toy.mseb");
    run_ok(embed.args(["--layers", "2", "--hidden", &hidden.to_string(), "--seed", "5", "--out"]).arg(&embeddings));
    Pipeline {
        dir,
        train_tsv,
        test_tsv,
        vocab,
        embeddings,
    }
}

impl Pipeline {
    fn cv(&self, out: &str, extra: &[&str]) -> PathBuf {
        let out = self.dir.path().join(out);
        let mut cmd = msnet();
        cmd.arg("cv")
            .arg("--train-tsv")
            .arg(&self.train_tsv)
            .arg("--vocab")
            .arg(&self.vocab)
            .arg("--embeddings")
            .arg(&self.embeddings)
            .arg("--out")
            .arg(&out)
            .args(extra);
        if let Some(t) = &self.test_tsv {
            cmd.arg("--test-tsv").arg(t);
        }
        run_ok(&mut cmd);
        out
    }
}

fn learnability() -> Verdict {
    let started = Instant::now();
    let p = pipeline(
        &PlantedConfig {
            docs: 2454,
            max_mention: 1,
            ..Default::default()
        },
        None,
        128,
    );
    let out = p.cv(
        "cv",
        &["--k", "5", "--layers", "2", "--sdim", "8", "--span", "meanpool", "--epochs", "30", "--seed", "0"],
    );
    let seconds = started.elapsed().as_secs_f64();
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("cv_report.json")).unwrap()).unwrap();
    let mean = report["mean"].as_f64().unwrap();
    let folds: Vec<f64> = report["fold_losses"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let worst = folds.iter().cloned().fold(0.0, f64::max);
    verdict(
        mean < 0.05 && folds.len() == 5 && seconds < 300.0,
        format!(
            "planted task, 2454 docs, 5-fold CV log-loss {mean:.4} +/- {:.4} (worst fold {worst:.4}; need < 0.05), pipeline {seconds:.1} s on one core (< 300 s)",
            report["std"].as_f64().unwrap()
        ),
    )
}

fn run_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let p = pipeline(
        &PlantedConfig {
            docs: 400,
            seed: 3,
            ..Default::default()
        },
        Some(&PlantedConfig {
            docs: 60,
            seed: 4,
            ..Default::default()
        }),
        24,
    );
    let flags = ["--k", "5", "--layers", "2", "--sdim", "4", "--span", "attention", "--epochs", "4", "--seed", "17"];
    let a = p.cv("run-a", &flags);
    let mut parallel = flags.to_vec();
    parallel.extend(["--parallel-folds", "5"]);
    let b = p.cv("run-b", &parallel);
    let manifest = a.join("manifest.json");
    let c = p.dir.path().join("run-c");
    run_ok(msnet().arg("cv").arg("--from-manifest").arg(&manifest).arg("--out").arg(&c));
    let (fa, fb, fc) = (run_files(&a), run_files(&b), run_files(&c));
    let checkpoints = fa.iter().filter(|(n, _)| n.ends_with(".msck")).count();
    let has_report = fa.iter().any(|(n, _)| n == "cv_report.json");
    verdict(
        fa == fb && fa == fc && checkpoints == 5 && has_report,
        format!(
            "{} output files ({checkpoints} checkpoints, CvReport JSON, test predictions, manifest) byte-identical across a sequential run, a 5-thread run and a manifest replay",
            fa.len()
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, Check); 7] = [
        ("gradient fidelity", gradient_fidelity),
        ("formula oracle", formula_oracle),
        ("attention invariants", attention_invariants),
        ("softmax and log-loss", softmax_log_loss),
        ("tokenizer oracle and GAP alignment", tokenizer_oracle),
        ("end-to-end learnability", learnability),
        ("determinism", determinism),
    ];
    let (mut passed, mut failed, mut unavailable) = (0, 0, 0);
    for (name, check) in criteria {
        let started = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1} s]", v.detail, started.elapsed().as_secs_f64());
        match (v.pass, v.unavailable) {
            (true, _) => passed += 1,
            (false, true) => unavailable += 1,
            (false, false) => failed += 1,
        }
    }
    println!("acceptance: {passed} passed, {failed} failed, {unavailable} not evaluable without external data");
    if failed > 0 {
        std::process::exit(1);
    }
}
