use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use msnet_core::embed_store::{self, toy_embed};
use msnet_core::gap_data::Label;
use msnet_core::msnet::{checkpoint, DenseVectors, ExampleInput, Msnet, MsnetConfig, SpanMethod};
use msnet_core::numkit::FdScheme;
use msnet_core::rng::Rng;
use msnet_core::tokenizer::mentions_round_trip;
use msnet_core::train_eval::{cross_validate, log_loss, predict_csv, read_submission, train_holdout, Example};
use msnet_core::{Error, Result};
use serde::Serialize;

use crate::data::{examples, load_records, load_store, load_vocab, read_listing, store_hidden, tokenize_all, write_listing};
use crate::io_util::{create, create_dir, in_file, reader, to_json, with_path, write_bytes, write_json};
use crate::manifest::{resolve, Inputs, RunConfig, RunManifest};
use crate::opts::{Command, CvArgs, EmbedToyArgs, EvalArgs, GradcheckArgs, PredictArgs, RunArgs, TokenizeArgs};

/// Exit code when `gradcheck` exceeds its tolerance.
pub const CHECK_FAILED: u8 = 3;

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Tokenize(a) => tokenize(a),
        Command::EmbedToy(a) => embed_toy(a),
        Command::Train(a) => train(a),
        Command::Cv(a) => cv(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Gradcheck(a) => gradcheck(a),
    }
}

fn stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn span(r: &std::ops::Range<usize>) -> String {
    format!("{}:{}", r.start, r.end)
}

fn tokenize(a: TokenizeArgs) -> Result<ExitCode> {
    let vocab_path = a.tok.vocab.as_deref().ok_or_else(|| Error::Usage("--vocab is required".into()))?;
    let vocab = load_vocab(vocab_path, a.tok.casing.unwrap_or_default().into())?;
    let records = load_records(&a.tsv, a.tok.skip_invalid)?;
    let max_tokens = a.tok.max_tokens.unwrap_or(msnet_core::tokenizer::DEFAULT_MAX_TOKENS);
    let docs = tokenize_all(&records, &vocab, max_tokens, a.tok.skip_invalid)?;
    let by_id: HashMap<&str, _> = records.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut table = String::from("id\ttokens\tp_index\ta_span\tb_span\ttruncated\tround_trip\tinexact\n");
    let mut round_trips = 0;
    for (doc, _) in &docs {
        let ok = mentions_round_trip(doc, by_id[doc.id.as_str()], &vocab);
        if ok {
            round_trips += 1;
        } else {
            eprintln!("diagnostic: {}: mention surfaces do not round-trip", doc.id);
        }
        table.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            doc.id,
            doc.len(),
            doc.p_index,
            span(&doc.a_span),
            span(&doc.b_span),
            doc.truncated,
            ok,
            doc.inexact.join(",")
        ));
    }
    let listing: Vec<_> = docs.into_iter().map(|(d, _)| d).collect();
    write_listing(&a.out, &listing)?;
    stdout(&table)?;
    let pct = if listing.is_empty() { 0.0 } else { 100.0 * round_trips as f64 / listing.len() as f64 };
    eprintln!(
        "tokenized {} of {} records; mention surfaces round-trip for {round_trips} ({pct:.2}%)",
        listing.len(),
        records.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn embed_toy(a: EmbedToyArgs) -> Result<ExitCode> {
    if a.docs.is_empty() {
        return Err(Error::Usage("at least one --docs listing is required".into()));
    }
    if a.layers == 0 || a.hidden == 0 {
        return Err(Error::Validation("--layers and --hidden must be positive".into()));
    }
    let mut sets = Vec::new();
    for path in &a.docs {
        for doc in read_listing(path)? {
            sets.push(toy_embed(&doc, a.layers, a.hidden, a.seed)?);
        }
    }
    let mut w = create(&a.out)?;
    embed_store::write(&sets, &mut w).map_err(|e| in_file(e, &a.out))?;
    w.flush().map_err(|e| with_path(e, &a.out))?;
    eprintln!("wrote {} documents to {}", sets.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Tokenized training and test data with embeddings, ready for a run.
struct Prepared {
    train: Vec<(msnet_core::tokenizer::TokenizedDoc, Label)>,
    test: Option<Vec<(msnet_core::tokenizer::TokenizedDoc, Label)>>,
    store: msnet_core::embed_store::EmbeddingStore,
}

fn prepare(cfg: &mut RunConfig, inputs: &Inputs) -> Result<Prepared> {
    let vocab = load_vocab(inputs.vocab.as_deref().expect("resolved"), cfg.casing.into())?;
    let tok = |path: &Path| -> Result<_> {
        let records = load_records(path, cfg.skip_invalid)?;
        tokenize_all(&records, &vocab, cfg.max_tokens, cfg.skip_invalid)
    };
    let train = tok(inputs.train_tsv.as_deref().expect("resolved"))?;
    let test = inputs.test_tsv.as_deref().map(tok).transpose()?;
    let store = load_store(&inputs.embeddings)?;
    cfg.model.hidden = store_hidden(&store)?;
    cfg.model.validate()?;
    cfg.train.validate()?;
    Ok(Prepared { train, test, store })
}

#[derive(Serialize)]
struct TrainSummary {
    best_epoch: usize,
    best_val_loss: f64,
    epochs: usize,
}

fn train(a: RunArgs) -> Result<ExitCode> {
    let (mut cfg, inputs) = resolve("train", &a)?;
    let data = prepare(&mut cfg, &inputs)?;
    let train = examples(&data.train, &data.store)?;
    let started = Instant::now();
    let outcome = train_holdout(&train, &cfg.model, &cfg.train)?;
    let seconds = started.elapsed().as_secs_f64();

    create_dir(&a.out)?;
    write_json(&a.out.join("manifest.json"), &RunManifest::new("train", &cfg, &inputs)?)?;
    save_checkpoint(&a.out.join("model.msck"), &outcome.model)?;
    write_json(&a.out.join("history.json"), &outcome.history)?;
    if let Some(test) = &data.test {
        let test = examples(test, &data.store)?;
        write_predictions(&a.out.join("test_predictions.csv"), std::slice::from_ref(&outcome.model), &test)?;
    }
    stdout(&to_json(&TrainSummary {
        best_epoch: outcome.best_epoch,
        best_val_loss: outcome.best_val_loss,
        epochs: outcome.history.len(),
    }))?;
    eprintln!("wall time {seconds:.2} s");
    Ok(ExitCode::SUCCESS)
}

fn cv(a: CvArgs) -> Result<ExitCode> {
    let (mut cfg, inputs) = resolve("cv", &a.run)?;
    if let Some(k) = a.k {
        cfg.k = k;
    }
    let data = prepare(&mut cfg, &inputs)?;
    let train = examples(&data.train, &data.store)?;
    let test = data.test.as_ref().map(|t| examples(t, &data.store)).transpose()?;
    let outcome = cross_validate(&train, test.as_deref(), &cfg.model, &cfg.train, cfg.k, a.parallel_folds)?;

    let out = &a.run.out;
    create_dir(out)?;
    write_json(&out.join("manifest.json"), &RunManifest::new("cv", &cfg, &inputs)?)?;
    let report = to_json(&outcome.report);
    write_bytes(&out.join("cv_report.json"), report.as_bytes())?;
    write_json(&out.join("history.json"), &outcome.histories)?;
    for (i, m) in outcome.models.iter().enumerate() {
        save_checkpoint(&out.join(format!("fold-{i}.msck")), m)?;
    }
    if let Some(test) = &test {
        write_predictions(&out.join("test_predictions.csv"), &outcome.models, test)?;
    }
    stdout(&report)?;
    eprintln!("wall time {:.2} s", outcome.report.wall_seconds);
    Ok(ExitCode::SUCCESS)
}

fn save_checkpoint(path: &Path, model: &Msnet) -> Result<()> {
    let mut w = create(path)?;
    checkpoint::save(model, &mut w)?;
    w.flush().map_err(|e| with_path(e, path))
}

fn write_predictions(path: &Path, models: &[Msnet], test: &[Example]) -> Result<()> {
    let mut w = create(path)?;
    predict_csv(models, test, &mut w)?;
    w.flush().map_err(|e| with_path(e, path))
}

fn predict(a: PredictArgs) -> Result<ExitCode> {
    let vocab_path = a.tok.vocab.as_deref().ok_or_else(|| Error::Usage("--vocab is required".into()))?;
    let vocab = load_vocab(vocab_path, a.tok.casing.unwrap_or_default().into())?;
    let max_tokens = a.tok.max_tokens.unwrap_or(msnet_core::tokenizer::DEFAULT_MAX_TOKENS);
    let records = load_records(&a.test_tsv, a.tok.skip_invalid)?;
    let docs = tokenize_all(&records, &vocab, max_tokens, a.tok.skip_invalid)?;
    let store = load_store(&a.embeddings)?;
    let models = a
        .models
        .iter()
        .map(|p| checkpoint::load(reader(p)?).map_err(|e| in_file(e, p)))
        .collect::<Result<Vec<_>>>()?;
    let test = examples(&docs, &store)?;
    write_predictions(&a.out, &models, &test)?;
    eprintln!("wrote {} rows averaged over {} models to {}", test.len(), models.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn eval(a: EvalArgs) -> Result<ExitCode> {
    let rows = read_submission(reader(&a.predictions)?).map_err(|e| in_file(e, &a.predictions))?;
    let gold = load_records(&a.gold, false)?;
    let mut by_id = HashMap::with_capacity(rows.len());
    for (id, p) in &rows {
        if by_id.insert(id.as_str(), *p).is_some() {
            return Err(Error::Validation(format!("{}: duplicate id {id:?}", a.predictions.display())));
        }
    }
    let mut probs = Vec::with_capacity(gold.len());
    let mut labels = Vec::with_capacity(gold.len());
    for r in &gold {
        let p = by_id
            .get(r.id.as_str())
            .ok_or_else(|| Error::Validation(format!("no prediction for gold id {:?}", r.id)))?;
        probs.push(*p);
        labels.push(r.label());
    }
    if rows.len() > gold.len() {
        eprintln!("warning: {} predictions have no gold label", rows.len() - gold.len());
    }
    let loss = log_loss(&probs, &labels)?;
    stdout(&format!("{loss}\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn gradcheck(a: GradcheckArgs) -> Result<ExitCode> {
    if a.tokens < 4 || a.batch < 2 {
        return Err(Error::Validation("gradcheck needs --tokens >= 4 and --batch >= 2".into()));
    }
    let methods = match a.span {
        Some(s) => vec![s.into()],
        None => vec![SpanMethod::Meanpool, SpanMethod::Attention],
    };
    let started = Instant::now();
    let mut rng = Rng::new(a.seed);
    let docs: Vec<DenseVectors> = (0..a.batch)
        .map(|_| {
            let mut d = DenseVectors::zeros(a.layers, a.tokens, a.hidden);
            d.data.iter_mut().for_each(|v| *v = rng.uniform_in(-1.0, 1.0));
            d
        })
        .collect();
    let random_span = |rng: &mut Rng| {
        let start = rng.below(a.tokens - 1);
        let len = 1 + rng.below(3.min(a.tokens - start));
        start..start + len
    };
    let inputs: Vec<ExampleInput> = docs
        .iter()
        .map(|d| {
            let a_span = random_span(&mut rng);
            let b_span = random_span(&mut rng);
            let p = rng.below(a.tokens);
            ExampleInput::new(d, p, a_span, b_span)
        })
        .collect();
    let labels: Vec<usize> = (0..a.batch).map(|i| i % 3).collect();

    let mut worst = 0.0f64;
    for method in methods {
        let mut cfg = MsnetConfig {
            layers: a.layers,
            s_dim: a.sdim,
            hidden: a.hidden,
            span_method: method,
            seed: a.seed,
            ..Default::default()
        };
        if !a.dropout {
            cfg = cfg.without_dropout();
        }
        let model = Msnet::new(cfg)?;
        let r = model.grad_check(&inputs, &labels, a.seed, FdScheme::AdaptiveCentral)?;
        println!(
            "{method}: max relative error {:.3e} over {} parameters (worst index {}: analytic {:.6e}, numeric {:.6e})",
            r.max_rel_error, r.checked, r.worst_index, r.analytic, r.numeric
        );
        worst = worst.max(r.max_rel_error);
    }
    let ok = worst < a.tolerance;
    println!(
        "max relative error {worst:.3e} ({} tolerance {:e}) in {:.2} s",
        if ok { "within" } else { "exceeds" },
        a.tolerance,
        started.elapsed().as_secs_f64()
    );
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(CHECK_FAILED) })
}
