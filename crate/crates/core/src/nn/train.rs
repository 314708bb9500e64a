use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::cross_entropy_loss;
use super::model::{softmax_ce_grad, CnnModel, Gradients};
use super::optim::{RmsProp, RmsPropConfig};
use crate::error::{Error, Result};
use crate::svm::argmax_lowest;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub optimizer: RmsPropConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: RmsPropConfig::default(),
            batch_size: 32,
            epochs: 500,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

/// Inputs and integer class labels.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub inputs: &'a [Vec<f64>],
    pub labels: &'a [usize],
}

impl<'a> Samples<'a> {
    pub fn new(inputs: &'a [Vec<f64>], labels: &'a [usize]) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::Shape(format!("{} inputs but {} labels", inputs.len(), labels.len())));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Inference-mode mean cross-entropy and top-1 accuracy.
pub fn evaluate(model: &CnnModel, data: Samples<'_>) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty split".into()));
    }
    let probs = data
        .inputs
        .par_iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>>>()?;
    let loss = cross_entropy_loss(&probs, data.labels)?;
    let correct = probs
        .iter()
        .zip(data.labels)
        .filter(|(p, &y)| argmax_lowest(p) == y)
        .count();
    Ok((loss, correct as f64 / data.len() as f64))
}

const DROPOUT_SEED_MIX: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// Epoch-by-epoch RMSProp training. Each epoch shuffles with a seeded RNG,
/// runs mini-batches (per-sample gradients summed in a fixed pairwise tree),
/// then records inference-mode loss/accuracy on the train and validation
/// sets.
pub struct Trainer {
    pub config: TrainConfig,
    pub optimizer: RmsProp,
    shuffle_rng: ChaCha8Rng,
    samples_seen: u64,
    pub history: Vec<HistoryRow>,
}

impl Trainer {
    pub fn new(model: &CnnModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            optimizer: RmsProp::new(model, config.optimizer)?,
            shuffle_rng: ChaCha8Rng::seed_from_u64(config.seed),
            samples_seen: 0,
            history: Vec::new(),
        })
    }

    /// Loss and summed gradient of one mini-batch, gradient scaled to the
    /// batch mean.
    fn batch_gradients(&self, model: &CnnModel, data: Samples<'_>, batch: &[usize]) -> Result<(f64, Gradients)> {
        let base = self.samples_seen;
        let per_sample = batch
            .par_iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ DROPOUT_SEED_MIX);
                rng.set_stream(base + k as u64);
                let trace = model.forward(&data.inputs[i], Some(&mut rng))?;
                let probs = trace.output();
                let y = data.labels[i];
                let loss = -probs
                    .get(y)
                    .ok_or_else(|| Error::Data(format!("label {y} out of range")))?
                    .max(1e-12)
                    .ln();
                let mut g = model.zero_gradients();
                model.backward(&trace, &softmax_ce_grad(probs, y)?, &mut g)?;
                Ok((loss, g))
            })
            .collect::<Result<Vec<_>>>()?;
        let loss = per_sample.iter().map(|(l, _)| l).sum::<f64>() / batch.len() as f64;
        let mut grads = Gradients::tree_sum(per_sample.into_iter().map(|(_, g)| g).collect())
            .ok_or_else(|| Error::Config("empty batch".into()))?;
        grads.scale(1.0 / batch.len() as f64);
        Ok((loss, grads))
    }

    pub fn run_epoch(&mut self, model: &mut CnnModel, train: Samples<'_>, val: Option<Samples<'_>>) -> Result<HistoryRow> {
        if train.is_empty() {
            return Err(Error::Config("training split is empty".into()));
        }
        if val.is_some_and(|v| v.is_empty()) {
            return Err(Error::Config("validation split is empty".into()));
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.shuffle_rng);
        for batch in order.chunks(self.config.batch_size) {
            let (loss, grads) = self.batch_gradients(model, train, batch)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite training loss at epoch {}",
                    self.history.len() + 1
                )));
            }
            self.optimizer.step(model, &grads)?;
            self.samples_seen += batch.len() as u64;
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical("non-finite parameter after update".into()));
        }
        let (train_loss, train_acc) = evaluate(model, train)?;
        let (val_loss, val_acc) = match val {
            Some(v) => {
                let (l, a) = evaluate(model, v)?;
                (Some(l), Some(a))
            }
            None => (None, None),
        };
        let row = HistoryRow {
            epoch: self.history.len() + 1,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        };
        self.history.push(row);
        Ok(row)
    }
}

/// Trains for `config.epochs` epochs and returns the history.
pub fn train(model: &mut CnnModel, train: Samples<'_>, val: Option<Samples<'_>>, config: TrainConfig) -> Result<Vec<HistoryRow>> {
    let mut trainer = Trainer::new(model, config)?;
    for _ in 0..config.epochs {
        let row = trainer.run_epoch(model, train, val)?;
        log::info!(
            "epoch {} train_loss={:.5} train_acc={:.4} val_loss={} val_acc={}",
            row.epoch,
            row.train_loss,
            row.train_acc,
            row.val_loss.map_or("-".into(), |v| format!("{v:.5}")),
            row.val_acc.map_or("-".into(), |v| format!("{v:.4}"))
        );
    }
    Ok(trainer.history)
}

pub fn write_history<W: Write>(out: W, history: &[HistoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])?;
    for r in history {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        w.write_record([
            r.epoch.to_string(),
            format!("{:?}", r.train_loss),
            format!("{:?}", r.train_acc),
            opt(r.val_loss),
            opt(r.val_acc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history<R: Read>(input: R) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
