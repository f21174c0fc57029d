use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, ConditionHull, TrainingMetadata};
use super::model::{derived_seed, gan_losses, REAL_CLASS};
use super::{build_discriminator, build_generator, GanConfig, CONDITION_DIM};
use crate::nn::{adam_step, AdamState, Matrix, MlpNetwork};
use crate::stats::LabeledSignal;
use crate::{Error, Result};

/// Mean losses and discriminator outputs over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    /// Mean "real" probability assigned to real records.
    pub d_real: f64,
    /// Mean "real" probability assigned to generated records.
    pub d_fake: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLoss>,
    pub discriminator_updates: usize,
}

/// Writes the loss log as CSV (`epoch,d_loss,g_loss,d_real,d_fake`).
pub fn write_loss_log<W: Write>(log: &[EpochLoss], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["epoch", "d_loss", "g_loss", "d_real", "d_fake"])
        .map_err(csv_err)?;
    for e in log {
        w.serialize(e).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn write_loss_log_file(log: &[EpochLoss], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_loss_log(log, f)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Training set in network units: envelopes scaled by the global maximum
/// into `[0, 1]` and mapped to `[-1, 1]`, next to condition vectors.
struct TrainingSet {
    envelopes: Matrix,
    conditions: Matrix,
    scale: f64,
    hull: ConditionHull,
}

impl TrainingSet {
    fn new(data: &[LabeledSignal], cfg: &GanConfig) -> Result<Self> {
        let output_dim = cfg.output_dim;
        if data.is_empty() {
            return Err(Error::param("training set is empty"));
        }
        if let Some((i, s)) = data
            .iter()
            .enumerate()
            .find(|(_, s)| s.signal.len() != output_dim)
        {
            return Err(Error::param(format!(
                "record {i} has {} samples, the generator produces {output_dim}",
                s.signal.len()
            )));
        }
        let scale = data
            .iter()
            .flat_map(|s| &s.signal.samples)
            .cloned()
            .fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateData(
                "training envelopes have no positive finite maximum".into(),
            ));
        }
        let mut envelopes = Vec::with_capacity(data.len() * output_dim);
        let mut conditions = Vec::with_capacity(data.len() * CONDITION_DIM);
        for s in data {
            envelopes.extend(s.signal.samples.iter().map(|&a| 2.0 * (a / scale) - 1.0));
            conditions.extend(cfg.network_condition(&s.condition)?);
        }
        Ok(Self {
            envelopes: Matrix::from_vec(data.len(), output_dim, envelopes)?,
            conditions: Matrix::from_vec(data.len(), CONDITION_DIM, conditions)?,
            scale,
            hull: ConditionHull::of(data.iter().map(|s| &s.condition)),
        })
    }

    fn gather(&self, idx: &[usize]) -> (Matrix, Matrix) {
        let pick = |m: &Matrix| {
            let rows: Vec<&[f64]> = idx.iter().map(|&i| m.row(i)).collect();
            Matrix::from_rows(&rows).expect("rows of one matrix share a width")
        };
        (pick(&self.envelopes), pick(&self.conditions))
    }
}

pub(crate) fn noise(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

/// `d(-ln p_class)/dp` for every row, given softmax outputs; zero elsewhere.
/// The raw derivative is used (not the clamped one) so the gradient does not
/// vanish when the discriminator is confident; softmax outputs are never
/// exactly zero.
fn nll_gradient(probs: &Matrix, class: impl Fn(usize) -> usize, weight: f64) -> Matrix {
    let mut g = Matrix::zeros(probs.rows(), probs.cols());
    for i in 0..probs.rows() {
        let c = class(i);
        g.row_mut(i)[c] = -weight / probs.row(i)[c];
    }
    g
}

struct Trainer<'a> {
    cfg: &'a GanConfig,
    generator: MlpNetwork,
    discriminator: MlpNetwork,
    g_opt: AdamState,
    d_opt: AdamState,
    rng: ChaCha8Rng,
}

/// Per-batch statistics: losses and mean "real" probabilities.
struct BatchStats {
    d_loss: f64,
    g_loss: f64,
    d_real: f64,
    d_fake: f64,
}

impl Trainer<'_> {
    fn step(&mut self, real: &Matrix, cond: &Matrix) -> Result<BatchStats> {
        let n = real.rows();
        let nf = n as f64;
        let noise_dim = self.cfg.noise_dim;
        let out_dim = self.cfg.output_dim;

        // discriminator: real rows first, then generated rows
        let z = noise(&mut self.rng, n, noise_dim);
        let fake = self.generator.predict(&z.hstack(cond)?)?;
        let real_in = real.hstack(cond)?;
        let fake_in = fake.hstack(cond)?;
        let mut stacked = real_in.as_slice().to_vec();
        stacked.extend_from_slice(fake_in.as_slice());
        let d_in = Matrix::from_vec(2 * n, out_dim + CONDITION_DIM, stacked)?;
        let d_cache = self.discriminator.forward_batch(&d_in)?;
        let probs = d_cache.output();
        let mut d_loss = 0.0;
        let (mut d_real, mut d_fake) = (0.0, 0.0);
        for i in 0..n {
            let (pr, pf) = (probs.row(i)[REAL_CLASS], probs.row(n + i)[REAL_CLASS]);
            d_loss += gan_losses(pr, pf).0;
            d_real += pr;
            d_fake += pf;
        }
        let grad = nll_gradient(
            probs,
            |i| if i < n { REAL_CLASS } else { 1 - REAL_CLASS },
            1.0 / nf,
        );
        let d_grads = self.discriminator.backward(&d_cache, &grad)?;
        adam_step(&mut self.discriminator, &d_grads, &mut self.d_opt)?;

        // generator: fresh noise, gradient through the updated discriminator
        let z = noise(&mut self.rng, n, noise_dim);
        let g_cache = self.generator.forward_batch(&z.hstack(cond)?)?;
        let d_cache = self
            .discriminator
            .forward_batch(&g_cache.output().hstack(cond)?)?;
        let probs = d_cache.output();
        let g_loss = (0..n)
            .map(|i| gan_losses(0.5, probs.row(i)[REAL_CLASS]).1)
            .sum::<f64>();
        let grad = nll_gradient(probs, |_| REAL_CLASS, 1.0 / nf);
        let through_d = self.discriminator.backward(&d_cache, &grad)?;
        let g_grads = self
            .generator
            .backward(&g_cache, &through_d.input.columns(0..out_dim))?;
        adam_step(&mut self.generator, &g_grads, &mut self.g_opt)?;

        Ok(BatchStats {
            d_loss: d_loss / nf,
            g_loss: g_loss / nf,
            d_real: d_real / nf,
            d_fake: d_fake / nf,
        })
    }
}

/// Trains generator and discriminator on labelled envelopes.
pub fn train(data: &[LabeledSignal], cfg: &GanConfig) -> Result<TrainOutcome> {
    train_with_progress(data, cfg, |_| {})
}

/// [`train`], calling `on_epoch` after every epoch.
///
/// Each epoch shuffles the records and walks them in minibatches of
/// `cfg.batch_size` (the last one may be smaller); every minibatch gets one
/// discriminator update followed by one generator update. The run is fully
/// determined by `cfg.seed` and the data. Final weights are rounded to
/// float32, so a saved checkpoint reloads to exactly the returned networks.
pub fn train_with_progress(
    data: &[LabeledSignal],
    cfg: &GanConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let set = TrainingSet::new(data, cfg)?;
    let generator = build_generator(cfg)?;
    let discriminator = build_discriminator(cfg)?;
    let mut trainer = Trainer {
        cfg,
        g_opt: AdamState::new(&generator, cfg.generator_adam)?,
        d_opt: AdamState::new(&discriminator, cfg.discriminator_adam)?,
        generator,
        discriminator,
        rng: ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, 3)),
    };

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut updates = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut trainer.rng);
        let mut sums = [0.0; 4];
        let mut batches = 0;
        for idx in order.chunks(cfg.batch_size) {
            let (real, cond) = set.gather(idx);
            let s = trainer.step(&real, &cond)?;
            updates += 1;
            batches += 1;
            for (acc, v) in sums.iter_mut().zip([s.d_loss, s.g_loss, s.d_real, s.d_fake]) {
                *acc += v;
            }
        }
        let b = batches as f64;
        let entry = EpochLoss {
            epoch,
            d_loss: sums[0] / b,
            g_loss: sums[1] / b,
            d_real: sums[2] / b,
            d_fake: sums[3] / b,
        };
        if !entry.d_loss.is_finite() || !entry.g_loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                detail: format!("losses d={} g={}", entry.d_loss, entry.g_loss),
            });
        }
        on_epoch(&entry);
        log.push(entry);
    }

    let Trainer {
        mut generator,
        mut discriminator,
        ..
    } = trainer;
    generator.quantize_f32();
    discriminator.quantize_f32();
    let last = log.last().copied();
    let checkpoint = Checkpoint {
        config: cfg.clone(),
        generator,
        discriminator,
        amplitude_scale: f64::from(set.scale as f32),
        metadata: TrainingMetadata {
            epochs_completed: cfg.epochs,
            discriminator_updates: updates,
            final_d_loss: last.map(|e| e.d_loss),
            final_g_loss: last.map(|e| e.g_loss),
            seed: cfg.seed,
            training_hull: set.hull,
        },
    };
    checkpoint.validate()?;
    Ok(TrainOutcome {
        checkpoint,
        log,
        discriminator_updates: updates,
    })
}
