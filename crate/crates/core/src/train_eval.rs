//! Training loop with early stopping, k-fold cross-validation, the
//! multi-class log-loss metric and submission files.

use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embed_store::EmbeddingStore;
use crate::error::{Error, Result};
use crate::gap_data::{kfold_split_labels, Label};
use crate::msnet::{ExampleInput, Msnet, MsnetConfig};
use crate::numkit::{adam_step, AdamConfig, AdamState};
use crate::rng::{hash_keys, Rng};
use crate::tokenizer::TokenizedDoc;

/// Probabilities are clipped to `[CLIP, 1 - CLIP]` before the log.
pub const CLIP: f64 = 1e-15;
/// Rows passed to [`log_loss`] must sum to one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;
const EVAL_CHUNK: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// A validation loss counts as an improvement only if it beats the best
    /// so far by more than this.
    pub min_delta: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Share of the training set held out for early stopping when a single
    /// model is trained without cross-validation.
    pub eval_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 3e-4,
            batch_size: 32,
            max_epochs: 30,
            patience: 4,
            min_delta: 0.0,
            weight_decay: 0.0,
            seed: 0,
            eval_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be at least 2".into()));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config("max_epochs and patience must be at least 1".into()));
        }
        if self.min_delta.is_nan() || self.min_delta < 0.0 || self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::Config("min_delta and weight_decay must be non-negative".into()));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::Config("eval_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

/// A model input with its document id and, for training data, its label.
#[derive(Clone)]
pub struct Example<'a> {
    pub id: String,
    pub input: ExampleInput<'a>,
    pub label: Option<Label>,
}

impl<'a> Example<'a> {
    /// Resolve a tokenized document against the embedding store.
    pub fn from_doc(doc: &TokenizedDoc, label: Option<Label>, store: &'a EmbeddingStore) -> Result<Self> {
        let set = store
            .get(&doc.id)
            .ok_or_else(|| Error::Validation(format!("no embeddings for doc {:?}", doc.id)))?;
        Ok(Example {
            id: doc.id.clone(),
            input: ExampleInput::from_doc(doc, set.as_ref())?,
            label,
        })
    }

    fn label_index(&self) -> Result<usize> {
        self.label
            .map(Label::index)
            .ok_or_else(|| Error::Validation(format!("example {:?} has no label", self.id)))
    }
}

fn labels_of(examples: &[Example]) -> Result<Vec<Label>> {
    examples
        .iter()
        .map(|e| e.label.ok_or_else(|| Error::Validation(format!("example {:?} has no label", e.id))))
        .collect()
}

/// Mean of `-ln p[label]` with probabilities clipped to `[1e-15, 1 - 1e-15]`.
pub fn log_loss(probs: &[[f64; 3]], labels: &[Label]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} probability rows for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::Validation("log loss of an empty set".into()));
    }
    let mut total = 0.0;
    for (i, (row, label)) in probs.iter().zip(labels).enumerate() {
        let sum: f64 = row.iter().sum();
        if !row.iter().all(|p| p.is_finite() && *p >= 0.0) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::Validation(format!("row {i}: {row:?} is not a probability distribution")));
        }
        total -= row[label.index()].clamp(CLIP, 1.0 - CLIP).ln();
    }
    Ok(total / probs.len() as f64)
}

/// Eval-mode class probabilities for each example.
pub fn predict_probs(model: &Msnet, examples: &[Example]) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(EVAL_CHUNK) {
        let inputs: Vec<ExampleInput> = chunk.iter().map(|e| e.input.clone()).collect();
        let fwd = model.forward_eval(&inputs)?;
        for i in 0..chunk.len() {
            let r = fwd.probs.row(i);
            out.push([r[0], r[1], r[2]]);
        }
    }
    Ok(out)
}

/// Average probability rows across models and renormalize each row.
pub fn ensemble_average(per_model: &[Vec<[f64; 3]>]) -> Result<Vec<[f64; 3]>> {
    let first = per_model
        .first()
        .ok_or_else(|| Error::Validation("no model predictions to average".into()))?;
    if per_model.iter().any(|p| p.len() != first.len()) {
        return Err(Error::Validation("models predicted different numbers of rows".into()));
    }
    let m = per_model.len() as f64;
    let mut out = vec![[0.0; 3]; first.len()];
    for probs in per_model {
        for (o, p) in out.iter_mut().zip(probs) {
            for j in 0..3 {
                o[j] += p[j];
            }
        }
    }
    for row in out.iter_mut() {
        row.iter_mut().for_each(|v| *v /= m);
        let sum: f64 = row.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::Numeric(format!("averaged row {row:?} has no mass")));
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training-mode loss over the epoch's minibatches.
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters and batchnorm statistics from the best validation epoch.
    pub model: Msnet,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: Vec<EpochRecord>,
}

/// Train one model with minibatch Adam, keeping the parameters of the epoch
/// with the lowest validation log-loss.
pub fn train_fold(train: &[Example], val: &[Example], mcfg: &MsnetConfig, tcfg: &TrainConfig) -> Result<TrainOutcome> {
    tcfg.validate()?;
    if train.len() < 2 {
        return Err(Error::Validation("training needs at least 2 examples".into()));
    }
    if val.is_empty() {
        return Err(Error::Validation("validation set is empty".into()));
    }
    let train_labels: Vec<usize> = train.iter().map(Example::label_index).collect::<Result<_>>()?;
    let val_labels = labels_of(val)?;

    let mut model = Msnet::new(mcfg.clone())?;
    let adam = tcfg.adam();
    let mut states: Vec<AdamState> = model.params.params().into_iter().map(AdamState::for_param).collect();
    let root = Rng::new(tcfg.seed);
    let mut best: Option<(Msnet, usize, f64)> = None;
    let mut history = Vec::new();
    let mut since_best = 0;
    let mut last_finite: Option<f64> = None;

    for epoch in 1..=tcfg.max_epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        root.fork(2 * epoch as u64).shuffle(&mut order);
        let mut dropout_rng = root.fork(2 * epoch as u64 + 1);
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for batch in order.chunks(tcfg.batch_size) {
            if batch.len() < 2 {
                continue;
            }
            let inputs: Vec<ExampleInput> = batch.iter().map(|&i| train[i].input.clone()).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_labels[i]).collect();
            let loss = model.train_step_grads(&inputs, &labels, &mut dropout_rng)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    last_finite_loss: last_finite,
                });
            }
            last_finite = Some(loss);
            for (p, s) in model.params.params_mut().into_iter().zip(states.iter_mut()) {
                adam_step(p, s, &adam)?;
            }
            if !model.params.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    last_finite_loss: last_finite,
                });
            }
            loss_sum += loss;
            batches += 1;
        }
        let val_loss = log_loss(&predict_probs(&model, val)?, &val_labels)?;
        history.push(EpochRecord {
            epoch,
            train_loss: if batches > 0 { loss_sum / batches as f64 } else { f64::NAN },
            val_loss,
        });
        let improved = match &best {
            None => true,
            Some((_, _, b)) => val_loss < b - tcfg.min_delta,
        };
        if improved {
            best = Some((model.clone(), epoch, val_loss));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= tcfg.patience {
                break;
            }
        }
    }
    let (model, best_epoch, best_val_loss) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_val_loss,
        history,
    })
}

/// Indices of a stratified holdout: `round(fraction * n_label)` examples of
/// each label, drawn with `seed`.
pub fn holdout_indices(labels: &[Label], fraction: f64, seed: u64) -> Vec<usize> {
    let root = Rng::new(seed);
    let mut held = Vec::new();
    for label in Label::ALL {
        let mut group: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        root.fork(label.index() as u64).shuffle(&mut group);
        let take = (fraction * group.len() as f64).round() as usize;
        held.extend_from_slice(&group[..take]);
    }
    held.sort_unstable();
    held
}

/// Train a single model, early-stopped on a stratified holdout of
/// `tcfg.eval_fraction` of `train`.
pub fn train_holdout(train: &[Example], mcfg: &MsnetConfig, tcfg: &TrainConfig) -> Result<TrainOutcome> {
    tcfg.validate()?;
    let labels = labels_of(train)?;
    let held = holdout_indices(&labels, tcfg.eval_fraction, hash_keys(&[tcfg.seed, 3]));
    let mut is_held = vec![false; train.len()];
    held.iter().for_each(|&i| is_held[i] = true);
    let (val, fit): (Vec<_>, Vec<_>) = train.iter().cloned().zip(is_held).partition(|(_, h)| *h);
    let val: Vec<Example> = val.into_iter().map(|(e, _)| e).collect();
    let fit: Vec<Example> = fit.into_iter().map(|(e, _)| e).collect();
    train_fold(&fit, &val, mcfg, tcfg)
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    /// Best-epoch validation log-loss of each fold.
    pub fold_losses: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the fold losses.
    pub std: f64,
    pub best_epochs: Vec<usize>,
    /// Log-loss of the averaged fold models on the test set, if supplied.
    pub test_loss: Option<f64>,
    /// Kept out of the serialized report so reruns compare byte for byte.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl CvReport {
    pub fn from_fold_losses(fold_losses: Vec<f64>, best_epochs: Vec<usize>, test_loss: Option<f64>) -> Self {
        let (mean, std) = mean_std(&fold_losses);
        CvReport {
            k: fold_losses.len(),
            fold_losses,
            mean,
            std,
            best_epochs,
            test_loss,
            wall_seconds: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub report: CvReport,
    /// One model per fold, in fold order.
    pub models: Vec<Msnet>,
    pub histories: Vec<Vec<EpochRecord>>,
    /// Fold index of each training example.
    pub folds: Vec<usize>,
    /// Averaged ensemble probabilities on the test set.
    pub test_probs: Option<Vec<[f64; 3]>>,
}

/// Seeds for fold `fold`: `(model init seed, training seed)`.
pub fn fold_seeds(mcfg: &MsnetConfig, tcfg: &TrainConfig, fold: usize) -> (u64, u64) {
    (
        hash_keys(&[mcfg.seed, fold as u64, 1]),
        hash_keys(&[tcfg.seed, fold as u64, 2]),
    )
}

/// Stratified k-fold cross-validation. Each fold's model is early-stopped on
/// its own held-out fold. With a test set, the fold models' probabilities
/// are averaged and scored. Folds run on up to `parallel` threads; results
/// do not depend on the thread count.
pub fn cross_validate(
    train: &[Example],
    test: Option<&[Example]>,
    mcfg: &MsnetConfig,
    tcfg: &TrainConfig,
    k: usize,
    parallel: usize,
) -> Result<CvOutcome> {
    let started = Instant::now();
    tcfg.validate()?;
    mcfg.validate()?;
    let labels = labels_of(train)?;
    let ids: Vec<&str> = train.iter().map(|e| e.id.as_str()).collect();
    let assignment = kfold_split_labels(&ids, &labels, k, tcfg.seed)?;

    let run_fold = |fold: usize| -> Result<TrainOutcome> {
        let (model_seed, train_seed) = fold_seeds(mcfg, tcfg, fold);
        let fold_train: Vec<Example> = assignment.complement(fold).into_iter().map(|i| train[i].clone()).collect();
        let fold_val: Vec<Example> = assignment.members(fold).into_iter().map(|i| train[i].clone()).collect();
        let m = MsnetConfig {
            seed: model_seed,
            ..mcfg.clone()
        };
        let t = TrainConfig {
            seed: train_seed,
            ..tcfg.clone()
        };
        train_fold(&fold_train, &fold_val, &m, &t)
    };
    let threads = parallel.clamp(1, k);
    let outcomes: Vec<TrainOutcome> = if threads == 1 {
        (0..k).map(run_fold).collect::<Result<_>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..k).into_par_iter().map(run_fold).collect::<Result<Vec<_>>>())?
    };

    let (test_probs, test_loss) = match test {
        Some(test) => {
            let per_model = outcomes
                .iter()
                .map(|o| predict_probs(&o.model, test))
                .collect::<Result<Vec<_>>>()?;
            let probs = ensemble_average(&per_model)?;
            let loss = if test.iter().all(|e| e.label.is_some()) {
                Some(log_loss(&probs, &labels_of(test)?)?)
            } else {
                None
            };
            (Some(probs), loss)
        }
        None => (None, None),
    };
    let mut report = CvReport::from_fold_losses(
        outcomes.iter().map(|o| o.best_val_loss).collect(),
        outcomes.iter().map(|o| o.best_epoch).collect(),
        test_loss,
    );
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok(CvOutcome {
        report,
        folds: assignment.folds.clone(),
        histories: outcomes.iter().map(|o| o.history.clone()).collect(),
        models: outcomes.into_iter().map(|o| o.model).collect(),
        test_probs,
    })
}

/// Write a submission file: header `ID,A,B,NEITHER`, one row per example
/// with the renormalized ensemble average of the models' probabilities.
pub fn predict_csv<W: Write>(models: &[Msnet], examples: &[Example], out: W) -> Result<()> {
    let per_model = models
        .iter()
        .map(|m| predict_probs(m, examples))
        .collect::<Result<Vec<_>>>()?;
    let probs = ensemble_average(&per_model)?;
    let ids: Vec<&str> = examples.iter().map(|e| e.id.as_str()).collect();
    write_submission(&ids, &probs, out)
}

pub fn write_submission<W: Write>(ids: &[&str], probs: &[[f64; 3]], mut out: W) -> Result<()> {
    if ids.len() != probs.len() {
        return Err(Error::dim("write_submission", ids.len(), probs.len()));
    }
    writeln!(out, "ID,A,B,NEITHER")?;
    for (id, p) in ids.iter().zip(probs) {
        if id.contains([',', '\n', '"']) {
            return Err(Error::Validation(format!("id {id:?} cannot be written to CSV unquoted")));
        }
        writeln!(out, "{id},{},{},{}", p[0], p[1], p[2])?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a submission file back into `(id, probabilities)` rows.
pub fn read_submission<R: BufRead>(input: R) -> Result<Vec<(String, [f64; 3])>> {
    let mut rows = Vec::new();
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Validation("empty submission file".into()))?;
    let cols: Vec<String> = header.trim_end_matches('\r').split(',').map(|c| c.trim().to_ascii_uppercase()).collect();
    if cols != ["ID", "A", "B", "NEITHER"] {
        return Err(Error::Validation(format!("submission header {header:?} is not ID,A,B,NEITHER")));
    }
    for (n, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row = n + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Row {
                row,
                id: fields[0].to_string(),
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut p = [0.0; 3];
        for j in 0..3 {
            p[j] = fields[j + 1].trim().parse().map_err(|_| Error::Row {
                row,
                id: fields[0].to_string(),
                message: format!("bad probability {:?}", fields[j + 1]),
            })?;
        }
        rows.push((fields[0].to_string(), p));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msnet::{DenseVectors, SpanMethod};

    #[test]
    fn log_loss_examples() {
        let u = [1.0 / 3.0; 3];
        let l = log_loss(&[u, u], &[Label::A, Label::Neither]).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-12);
        let l = log_loss(&[[0.7, 0.2, 0.1]], &[Label::A]).unwrap();
        assert!((l - 0.356_674_943_938_732_4).abs() < 1e-12);
        let l = log_loss(&[[1.0, 0.0, 0.0]], &[Label::A]).unwrap();
        assert!(l.abs() < 1e-12);
        let l = log_loss(&[[0.0, 1.0, 0.0]], &[Label::A]).unwrap();
        assert!((l - (-(1e-15f64).ln())).abs() < 1e-9);
        assert!(log_loss(&[u], &[]).is_err());
        assert!(log_loss(&[[0.5, 0.2, 0.2]], &[Label::A]).is_err());
    }

    #[test]
    fn mean_std_example() {
        let (m, s) = mean_std(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert!((m - 0.3).abs() < 1e-15);
        assert!((s - 0.158_113_883_008_418_97).abs() < 1e-12);
    }

    #[test]
    fn ensemble_examples() {
        let a = vec![[1.0, 0.0, 0.0]];
        let b = vec![[0.0, 1.0, 0.0]];
        assert_eq!(ensemble_average(&[a, b]).unwrap(), vec![[0.5, 0.5, 0.0]]);
        let r = ensemble_average(&[vec![[0.4, 0.4, 0.1]]]).unwrap();
        let s = 0.9;
        assert_eq!(r, vec![[0.4 / s, 0.4 / s, 0.1 / s]]);
    }

    #[test]
    fn submission_round_trip() {
        let mut buf = Vec::new();
        write_submission(&["t-1", "t-2"], &[[1.0 / 3.0; 3], [0.5, 0.25, 0.25]], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ID,A,B,NEITHER\nt-1,0.3333333333333333,"));
        let rows = read_submission(buf.as_slice()).unwrap();
        assert_eq!(rows[1], ("t-2".to_string(), [0.5, 0.25, 0.25]));
        assert_eq!(rows[0].1, [1.0 / 3.0; 3]);
        assert!(read_submission("ID,X\n".as_bytes()).is_err());
        assert!(matches!(
            read_submission("ID,A,B,NEITHER\nx,1,0\n".as_bytes()),
            Err(Error::Row { row: 2, .. })
        ));
    }

    fn toy_set(n: usize) -> Vec<DenseVectors> {
        let mut rng = Rng::new(3);
        (0..n)
            .map(|_| {
                let mut d = DenseVectors::zeros(1, 10, 4);
                d.data.iter_mut().for_each(|v| *v = rng.uniform_in(-1.0, 1.0));
                d
            })
            .collect()
    }

    fn examples(docs: &[DenseVectors]) -> Vec<Example<'_>> {
        docs.iter()
            .enumerate()
            .map(|(i, d)| Example {
                id: format!("d{i}"),
                input: ExampleInput::new(d, 4, 1..3, 6..8),
                label: Label::from_index(i % 3),
            })
            .collect()
    }

    fn tiny() -> MsnetConfig {
        MsnetConfig {
            layers: 1,
            s_dim: 2,
            hidden: 4,
            span_method: SpanMethod::Meanpool,
            ..Default::default()
        }
    }

    #[test]
    fn zero_learning_rate_stops_after_patience() {
        // With lr = 0 only the batchnorm running statistics move; after one
        // epoch of 40 batches they have settled to within noise, which
        // `min_delta` absorbs.
        let docs = toy_set(100);
        let ex = examples(&docs);
        let t = TrainConfig {
            lr: 0.0,
            patience: 1,
            batch_size: 2,
            min_delta: 1e-3,
            ..Default::default()
        };
        let out = train_fold(&ex[..80], &ex[80..], &tiny(), &t).unwrap();
        assert_eq!(out.history.len(), 2);
        let init = Msnet::new(tiny()).unwrap();
        assert_eq!(out.model.params.flat_values(), init.params.flat_values());
    }

    #[test]
    fn training_is_deterministic_and_best_is_minimum() {
        let docs = toy_set(20);
        let ex = examples(&docs);
        let t = TrainConfig {
            lr: 1e-2,
            batch_size: 5,
            max_epochs: 6,
            ..Default::default()
        };
        let a = train_fold(&ex[..15], &ex[15..], &tiny(), &t).unwrap();
        let b = train_fold(&ex[..15], &ex[15..], &tiny(), &t).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
        let min = a.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_val_loss, min);
        assert!(a.best_val_loss <= a.history.last().unwrap().val_loss);
    }

    #[test]
    fn holdout_is_stratified() {
        let labels: Vec<Label> = (0..100).map(|i| Label::from_index(i % 3).unwrap()).collect();
        let held = holdout_indices(&labels, 0.2, 9);
        // 34, 33 and 33 examples per label.
        assert_eq!(held.len(), 7 + 7 + 7);
        for l in Label::ALL {
            assert_eq!(held.iter().filter(|&&i| labels[i] == l).count(), 7);
        }
        assert_eq!(held, holdout_indices(&labels, 0.2, 9));
        let docs = toy_set(20);
        let t = TrainConfig {
            batch_size: 4,
            max_epochs: 2,
            ..Default::default()
        };
        let out = train_holdout(&examples(&docs), &tiny(), &t).unwrap();
        assert_eq!(out.history.len(), 2);
    }

    #[test]
    fn divergence_is_reported() {
        let docs = toy_set(10);
        let ex = examples(&docs);
        let t = TrainConfig {
            lr: f64::MAX,
            batch_size: 4,
            ..Default::default()
        };
        let r = train_fold(&ex[..8], &ex[8..], &tiny(), &t);
        assert!(matches!(r, Err(Error::Divergence { epoch: 1, .. })), "{r:?}");
    }

    #[test]
    fn cross_validation_partitions_and_parallelism_is_invisible() {
        let docs = toy_set(4);
        let ex = examples(&docs);
        let t = TrainConfig {
            batch_size: 2,
            max_epochs: 2,
            ..Default::default()
        };
        let seq = cross_validate(&ex, Some(&ex), &tiny(), &t, 2, 1).unwrap();
        assert_eq!(seq.models.len(), 2);
        assert_eq!(seq.report.k, 2);
        let mut par = cross_validate(&ex, Some(&ex), &tiny(), &t, 2, 2).unwrap();
        par.report.wall_seconds = seq.report.wall_seconds;
        assert_eq!(seq.report, par.report);
        assert_eq!(seq.models, par.models);
        for row in seq.test_probs.unwrap() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
