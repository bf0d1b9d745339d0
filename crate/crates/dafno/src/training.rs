//! Loss, optimizer, schedule, training loop, evaluation, and the
//! multi-seed experimental protocol.
//!
//! Training is deterministic end to end: parameter init, batch shuffling,
//! and gradient reduction all derive from the run seed, and per-sample
//! gradients are reduced in index order whether or not the batch runs in
//! parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::container::{Container, NamedArray};
use crate::data::{derive_seed, Dataset};
use crate::error::{Error, Result};
use crate::geometry::smooth_from_chi;
use crate::operator::{forward, ModelConfig, OperatorModel, Variant};
use crate::tape::Tape;
use crate::tensor::{concat_channels, Tensor};

/// Per-channel affine normalization fitted on the training split and
/// stored in checkpoints. Channel statistics are scalars, so they carry
/// across resolutions unchanged.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(channels: usize) -> Self {
        Normalizer {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn fit(fields: &[Tensor]) -> Self {
        let channels = fields[0].shape()[2];
        let mut mean = vec![0.0f64; channels];
        let mut m2 = vec![0.0f64; channels];
        let mut count = 0usize;
        for f in fields {
            let d = f.data();
            for p in 0..f.numel() / channels {
                for c in 0..channels {
                    mean[c] += d[p * channels + c];
                    m2[c] += d[p * channels + c] * d[p * channels + c];
                }
            }
            count += f.numel() / channels;
        }
        let std = mean
            .iter()
            .zip(&m2)
            .map(|(&m, &s)| {
                let mu = m / count as f64;
                ((s / count as f64 - mu * mu).max(0.0)).sqrt().max(1e-12)
            })
            .collect();
        for m in mean.iter_mut() {
            *m /= count as f64;
        }
        Normalizer { mean, std }
    }

    pub fn apply(&self, t: &Tensor) -> Tensor {
        let c = self.mean.len();
        let mut out = t.clone();
        for (p, v) in out.data_mut().iter_mut().enumerate() {
            let ch = p % c;
            *v = (*v - self.mean[ch]) / self.std[ch];
        }
        out
    }

    pub fn invert(&self, t: &Tensor) -> Tensor {
        let c = self.mean.len();
        let mut out = t.clone();
        for (p, v) in out.data_mut().iter_mut().enumerate() {
            let ch = p % c;
            *v = *v * self.std[ch] + self.mean[ch];
        }
        out
    }
}

/// Relative L2 error of one sample over the masked region.
pub fn rel_l2(pred: &Tensor, truth: &Tensor, mask: Option<&Tensor>) -> Result<f64> {
    if pred.shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            left: pred.shape().to_vec(),
            right: truth.shape().to_vec(),
            context: "rel_l2 operands",
        });
    }
    let channels = *pred.shape().last().unwrap_or(&1);
    let points = pred.numel() / channels;
    let mask_at = |p: usize| -> f64 {
        match mask {
            Some(m) => m.data()[p],
            None => 1.0,
        }
    };
    if let Some(m) = mask {
        if m.numel() != points {
            return Err(Error::ShapeMismatch {
                left: m.shape().to_vec(),
                right: pred.shape().to_vec(),
                context: "rel_l2 mask",
            });
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for p in 0..points {
        let w = mask_at(p);
        for c in 0..channels {
            let d = (pred.data()[p * channels + c] - truth.data()[p * channels + c]) * w;
            num += d * d;
            let t = truth.data()[p * channels + c] * w;
            den += t * t;
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroNormTruth);
    }
    Ok((num / den).sqrt())
}

/// Mean relative L2 over a batch of samples.
pub fn rel_l2_batch(
    preds: &[Tensor],
    truths: &[Tensor],
    masks: Option<&[Tensor]>,
) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..preds.len() {
        acc += rel_l2(&preds[i], &truths[i], masks.map(|m| &m[i]))?;
    }
    Ok(acc / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimKind {
    /// bias-corrected moments with decoupled weight decay
    AdamW,
    /// plain gradient descent (kept for the convex descent checks)
    Sgd,
}

pub struct Optimizer {
    pub kind: OptimKind,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: usize,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimKind, model: &OperatorModel) -> Self {
        let shapes: Vec<usize> = model.params().iter().map(|p| p.value.data().len()).collect();
        Optimizer {
            kind,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One update over every parameter. Complex parameters update over
    /// their interleaved real components, matching the gradient
    /// convention. Errors if any parameter is missing its gradient.
    pub fn step(&mut self, model: &mut OperatorModel, lr: f64, weight_decay: f64) -> Result<()> {
        self.step += 1;
        let t = self.step as f64;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let kind = self.kind;
        for (pi, p) in model.params_mut().into_iter().enumerate() {
            let g = p
                .grad
                .as_ref()
                .ok_or_else(|| Error::MissingGrad(p.name.clone()))?
                .data()
                .to_vec();
            let value = p.value.data_mut();
            match kind {
                OptimKind::AdamW => {
                    let m = &mut self.m[pi];
                    let v = &mut self.v[pi];
                    let bc1 = 1.0 - b1.powf(t);
                    let bc2 = 1.0 - b2.powf(t);
                    for e in 0..value.len() {
                        m[e] = b1 * m[e] + (1.0 - b1) * g[e];
                        v[e] = b2 * v[e] + (1.0 - b2) * g[e] * g[e];
                        let mhat = m[e] / bc1;
                        let vhat = v[e] / bc2;
                        value[e] -= lr * (mhat / (vhat.sqrt() + eps) + weight_decay * value[e]);
                    }
                }
                OptimKind::Sgd => {
                    for e in 0..value.len() {
                        value[e] -= lr * (g[e] + weight_decay * value[e]);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Stepped decay: `initial * decay^(epoch / 100)`.
pub fn lr_at(epoch: usize, initial: f64, decay: f64) -> f64 {
    initial * decay.powi((epoch / 100) as i32)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub decay: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seeds: Vec<u64>,
    pub beta: f64,
    #[serde(default)]
    pub optimizer: Option<OptimKind>,
    /// lifts the default 500-epoch cap when set explicitly
    #[serde(default)]
    pub allow_long: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-2,
            decay: 0.5,
            weight_decay: 1e-5,
            epochs: 200,
            batch: 16,
            seeds: vec![0, 1, 2, 3, 4],
            beta: 20.0,
            optimizer: None,
            allow_long: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.epochs > 500 && !self.allow_long {
            problems.push(format!(
                "epochs = {} exceeds the 500-epoch cap (pass allow_long to override)",
                self.epochs
            ));
        }
        if self.lr <= 0.0 {
            problems.push("lr must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.decay) {
            problems.push("decay must lie in (0, 1]".into());
        }
        if self.weight_decay < 0.0 {
            problems.push("weight_decay must be nonnegative".into());
        }
        if self.batch == 0 {
            problems.push("batch must be >= 1".into());
        }
        if self.seeds.is_empty() {
            problems.push("at least one seed".into());
        }
        if self.beta <= 0.0 {
            problems.push("beta must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }
}

/// How geometry reaches the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    /// masked layers consuming the smoothed encoding
    Edafno,
    /// shared-parameter masked layers consuming the smoothed encoding
    Idafno,
    /// plain layers, sharp indicator appended as an input channel
    FnoMask,
    /// plain layers, smoothed encoding appended as an input channel
    FnoSmooth,
}

impl VariantSpec {
    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "edafno" => Ok(VariantSpec::Edafno),
            "idafno" => Ok(VariantSpec::Idafno),
            "fno-mask" => Ok(VariantSpec::FnoMask),
            "fno-smooth" => Ok(VariantSpec::FnoSmooth),
            other => Err(Error::Usage(format!(
                "unknown variant '{other}' (expected edafno|idafno|fno-mask|fno-smooth)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            VariantSpec::Edafno => "edafno",
            VariantSpec::Idafno => "idafno",
            VariantSpec::FnoMask => "fno-mask",
            VariantSpec::FnoSmooth => "fno-smooth",
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            VariantSpec::Edafno => Variant::Edafno,
            VariantSpec::Idafno => Variant::Idafno,
            VariantSpec::FnoMask | VariantSpec::FnoSmooth => Variant::Fno,
        }
    }

    /// Channels appended to the raw input besides the raw `g` channels.
    pub fn extra_channels(&self) -> usize {
        match self {
            VariantSpec::FnoMask | VariantSpec::FnoSmooth => 1,
            _ => 0,
        }
    }
}

/// One sample with everything the model consumes, preassembled.
#[derive(Debug, Clone)]
pub struct SamplePack {
    pub g: Tensor,
    pub chi_layer: Option<Tensor>,
    pub truth: Tensor,
    pub metric_mask: Tensor,
    pub truth_norm: f64,
}

/// Assemble ready-to-feed samples: normalize the raw input channels,
/// append the geometry channel for the plain-layer ablations, and pick the
/// target channel when the dataset is multi-output.
pub fn assemble_packs(
    ds: &Dataset,
    spec: VariantSpec,
    beta: f64,
    norm_in: &Normalizer,
    target_channel: Option<usize>,
) -> Result<Vec<SamplePack>> {
    let mut packs = Vec::with_capacity(ds.len());
    for idx in 0..ds.len() {
        let smooth = if (ds.beta - beta).abs() < 1e-12 {
            ds.chi_smooth[idx].clone()
        } else {
            smooth_from_chi(&ds.chi[idx], beta)?
        };
        let g_norm = norm_in.apply(&ds.g[idx]);
        let g = match spec {
            VariantSpec::FnoMask => concat_channels(&[&g_norm, &ds.chi[idx].as_channel()])?,
            VariantSpec::FnoSmooth => concat_channels(&[&g_norm, &smooth.as_channel()])?,
            _ => g_norm,
        };
        let chi_layer = match spec {
            VariantSpec::Edafno | VariantSpec::Idafno => Some(smooth.as_channel()),
            _ => None,
        };
        let truth = match target_channel {
            Some(c) => {
                let full = &ds.target[idx];
                let (n1, n2, dall) = (full.shape()[0], full.shape()[1], full.shape()[2]);
                let mut data = Vec::with_capacity(n1 * n2);
                for p in 0..n1 * n2 {
                    data.push(full.data()[p * dall + c]);
                }
                Tensor::from_vec(&[n1, n2, 1], data)
            }
            None => ds.target[idx].clone(),
        };
        let metric_mask = ds.chi[idx].as_channel();
        let truth_norm = {
            let channels = *truth.shape().last().unwrap();
            let mut acc = 0.0;
            for p in 0..truth.numel() / channels {
                let w = metric_mask.data()[p];
                for c in 0..channels {
                    let t = truth.data()[p * channels + c] * w;
                    acc += t * t;
                }
            }
            acc.sqrt()
        };
        if truth_norm == 0.0 {
            return Err(Error::ZeroNormTruth);
        }
        packs.push(SamplePack {
            g,
            chi_layer,
            truth,
            metric_mask,
            truth_norm,
        });
    }
    Ok(packs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_rel_l2: f64,
    pub val_rel_l2: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_rel_l2: f64,
    pub test_rel_l2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub runs: Vec<RunReport>,
    pub mean_test_rel_l2: f64,
    /// sample standard deviation over seeds; absent for fewer than 2 seeds
    pub std_test_rel_l2: Option<f64>,
}

pub struct TrainOutcome {
    pub model: OperatorModel,
    pub norm_in: Normalizer,
    pub norm_out: Normalizer,
    pub report: RunReport,
}

/// Single prediction in physical units (inverts the output normalization).
pub fn predict_physical(
    model: &OperatorModel,
    norm_out: &Normalizer,
    coords: &Tensor,
    pack: &SamplePack,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let pass = forward(model, &mut tape, &pack.g, coords, pack.chi_layer.as_ref())?;
    Ok(norm_out.invert(tape.value(pass.prediction)))
}

/// Mean masked relative L2 of the model over a pack list.
pub fn evaluate(
    model: &OperatorModel,
    norm_out: &Normalizer,
    coords: &Tensor,
    packs: &[SamplePack],
) -> Result<f64> {
    if packs.is_empty() {
        return Ok(f64::NAN);
    }
    let errs: Vec<Result<f64>> = packs
        .par_iter()
        .map(|pack| {
            let pred = predict_physical(model, norm_out, coords, pack)?;
            rel_l2(&pred, &pack.truth, Some(&pack.metric_mask))
        })
        .collect();
    let mut acc = 0.0;
    for e in errs {
        acc += e?;
    }
    Ok(acc / packs.len() as f64)
}

/// Loss and gradients for one sample: masked squared relative error
/// against the physical-scale truth (the output normalization is inverted
/// on the tape), scaled by `1/batch` so per-sample gradients sum to the
/// batch mean. The squared form keeps gradients vanishing at the optimum;
/// reported metrics stay plain relative L2.
fn sample_loss_backward(
    model: &OperatorModel,
    norm_out: &Normalizer,
    coords: &Tensor,
    pack: &SamplePack,
    inv_batch: f64,
) -> Result<(f64, crate::tape::Gradients, crate::operator::ParamBindings)> {
    let mut tape = Tape::new();
    let pass = forward(model, &mut tape, &pack.g, coords, pack.chi_layer.as_ref())?;
    let d_u = *pack.truth.shape().last().unwrap();
    let sigma = tape.input(Tensor::from_vec(&[d_u], norm_out.std.clone()));
    let mu = tape.input(Tensor::from_vec(&[d_u], norm_out.mean.clone()));
    let scaled = tape.mul(pass.prediction, sigma)?;
    let phys = tape.add(scaled, mu)?;
    let truth = tape.input(pack.truth.clone());
    let diff = tape.sub(phys, truth)?;
    let unmasked = std::env::var("DAFNO_UNMASKED_LOSS").is_ok();
    let masked = if unmasked {
        diff
    } else {
        let mask = tape.input(pack.metric_mask.clone());
        tape.mul(diff, mask)?
    };
    let sq = tape.mul(masked, masked)?;
    let ssum = tape.sum(sq);
    let loss = tape.scale(ssum, inv_batch / (pack.truth_norm * pack.truth_norm));
    let squared_rel = tape.value(ssum).item() / (pack.truth_norm * pack.truth_norm);
    let grads = tape.backward(loss)?;
    // contribute the unsquared relative error to the epoch curve
    Ok((squared_rel.max(0.0).sqrt() * inv_batch, grads, pass.bindings))
}

/// Train one model on pre-split data. Deterministic given the seed; keeps
/// the best-validation parameters and evaluates them on the test split.
pub fn train(
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    spec: VariantSpec,
    train_ds: &Dataset,
    val_ds: &Dataset,
    test_ds: &Dataset,
    target_channel: Option<usize>,
    seed: u64,
) -> Result<TrainOutcome> {
    let model = OperatorModel::init(*model_cfg, seed)?;
    train_from(model, cfg, spec, train_ds, val_ds, test_ds, target_channel, seed)
}

/// As [`train`], starting from an already-initialized model.
#[allow(clippy::too_many_arguments)]
pub fn train_from(
    model: OperatorModel,
    cfg: &TrainConfig,
    spec: VariantSpec,
    train_ds: &Dataset,
    val_ds: &Dataset,
    test_ds: &Dataset,
    target_channel: Option<usize>,
    seed: u64,
) -> Result<TrainOutcome> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    cfg.validate()?;

    let norm_in = Normalizer::fit(&train_ds.g);
    let targets: Vec<Tensor> = match target_channel {
        Some(_) => {
            // fit on the selected channel only
            let packs = assemble_packs(train_ds, spec, cfg.beta, &Normalizer::identity(train_ds.in_channels()), target_channel)?;
            packs.into_iter().map(|p| p.truth).collect()
        }
        None => train_ds.target.clone(),
    };
    let norm_out = Normalizer::fit(&targets);

    let train_packs = assemble_packs(train_ds, spec, cfg.beta, &norm_in, target_channel)?;
    let val_packs = assemble_packs(val_ds, spec, cfg.beta, &norm_in, target_channel)?;
    let test_packs = assemble_packs(test_ds, spec, cfg.beta, &norm_in, target_channel)?;
    let coords = train_ds.grid.coords();

    let mut model = model;
    let mut opt = Optimizer::new(cfg.optimizer.unwrap_or(OptimKind::AdamW), &model);

    let mut best: Option<(usize, f64, OperatorModel)> = None;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_packs.len()).collect();

    for epoch in 0..cfg.epochs {
        let lr = lr_at(epoch, cfg.lr, cfg.decay);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 10_000 + epoch as u64));
        order.shuffle(&mut rng);

        let mut loss_acc = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let inv_batch = 1.0 / chunk.len() as f64;
            let results: Vec<Result<_>> = chunk
                .par_iter()
                .map(|&idx| sample_loss_backward(&model, &norm_out, &coords, &train_packs[idx], inv_batch))
                .collect();
            model.zero_grads();
            let mut batch_loss = 0.0;
            for r in results {
                let (value, grads, bindings) = r?;
                batch_loss += value;
                model.accumulate_grads(&grads, &bindings);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NumericalAbort {
                    context: format!("training loss became non-finite at epoch {epoch}"),
                    step: epoch,
                });
            }
            opt.step(&mut model, lr, cfg.weight_decay)?;
            loss_acc += batch_loss;
            batches += 1;
        }

        let train_rel = loss_acc / batches.max(1) as f64;
        let val_rel = evaluate(&model, &norm_out, &coords, &val_packs)?;
        if !val_rel.is_nan() {
            let better = best.as_ref().map(|(_, b, _)| val_rel < *b).unwrap_or(true);
            if better {
                best = Some((epoch, val_rel, model.clone()));
            }
        }
        epochs.push(EpochRecord {
            epoch,
            train_rel_l2: train_rel,
            val_rel_l2: val_rel,
            lr,
        });
    }

    let (best_epoch, best_val, best_model) = match best {
        Some((e, v, m)) => (e, v, m),
        None => (cfg.epochs.saturating_sub(1), f64::NAN, model),
    };
    let test_rel = evaluate(&best_model, &norm_out, &coords, &test_packs)?;

    Ok(TrainOutcome {
        model: best_model,
        norm_in,
        norm_out,
        report: RunReport {
            seed,
            epochs,
            best_epoch,
            best_val_rel_l2: best_val,
            test_rel_l2: test_rel,
        },
    })
}

/// Repeat training across the configured seeds and aggregate mean and
/// standard deviation of the test error.
pub fn run_protocol(
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    spec: VariantSpec,
    train_ds: &Dataset,
    val_ds: &Dataset,
    test_ds: &Dataset,
    target_channel: Option<usize>,
) -> Result<(ProtocolReport, Vec<TrainOutcome>)> {
    let mut outcomes = Vec::new();
    for &seed in &cfg.seeds {
        outcomes.push(train(
            model_cfg,
            cfg,
            spec,
            train_ds,
            val_ds,
            test_ds,
            target_channel,
            seed,
        )?);
    }
    let tests: Vec<f64> = outcomes.iter().map(|o| o.report.test_rel_l2).collect();
    let mean = tests.iter().sum::<f64>() / tests.len() as f64;
    let std = if tests.len() >= 2 {
        let var = tests.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
            / (tests.len() - 1) as f64;
        Some(var.sqrt())
    } else {
        None
    };
    let report = ProtocolReport {
        runs: outcomes.iter().map(|o| o.report.clone()).collect(),
        mean_test_rel_l2: mean,
        std_test_rel_l2: std,
    };
    Ok((report, outcomes))
}

/// One row of the smoothing-coefficient sweep table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub lr: f64,
    pub decay: f64,
    pub weight_decay: f64,
    pub train_rel_l2: f64,
    pub test_rel_l2: f64,
}

/// Train once per smoothing coefficient and report final train/test
/// errors, one row per beta.
pub fn sweep_beta(
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    spec: VariantSpec,
    betas: &[f64],
    train_ds: &Dataset,
    val_ds: &Dataset,
    test_ds: &Dataset,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &beta in betas {
        let mut c = cfg.clone();
        c.beta = beta;
        let outcome = train(
            model_cfg,
            &c,
            spec,
            train_ds,
            val_ds,
            test_ds,
            None,
            *c.seeds.first().unwrap_or(&0),
        )?;
        let train_err = outcome
            .report
            .epochs
            .last()
            .map(|e| e.train_rel_l2)
            .unwrap_or(f64::NAN);
        rows.push(SweepRow {
            beta,
            lr: c.lr,
            decay: c.decay,
            weight_decay: c.weight_decay,
            train_rel_l2: train_err,
            test_rel_l2: outcome.report.test_rel_l2,
        });
    }
    Ok(rows)
}

pub fn metrics_csv(report: &RunReport) -> String {
    let mut out = String::from("epoch,train_rel_l2,val_rel_l2,lr\n");
    for e in &report.epochs {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.epoch, e.train_rel_l2, e.val_rel_l2, e.lr
        ));
    }
    out
}

pub fn aggregate_csv(report: &ProtocolReport) -> String {
    let mut out = String::from("seed,test_rel_l2\n");
    for r in &report.runs {
        out.push_str(&format!("{},{}\n", r.seed, r.test_rel_l2));
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("beta,lr,decay,weight_decay,train_rel_l2,test_rel_l2\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.beta, r.lr, r.decay, r.weight_decay, r.train_rel_l2, r.test_rel_l2
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_rel_l2: f64,
    pub beta: f64,
    pub variant: String,
}

/// Checkpoint layout: a `config` JSON blob, one `param/<path>` array per
/// parameter, normalization statistics, and a `meta` JSON blob.
pub fn checkpoint_to_container(
    model: &OperatorModel,
    norm_in: &Normalizer,
    norm_out: &Normalizer,
    meta: &CheckpointMeta,
) -> Result<Container> {
    let mut c = Container::new();
    c.push(NamedArray::from_json("config", &model.config)?);
    c.push(NamedArray::from_json("meta", meta)?);
    for p in model.params() {
        c.push(NamedArray::from_tensor(format!("param/{}", p.name), &p.value));
    }
    for (name, n) in [("in", norm_in), ("out", norm_out)] {
        c.push(NamedArray::from_tensor(
            format!("norm/{name}_mean"),
            &Tensor::from_vec(&[n.mean.len()], n.mean.clone()),
        ));
        c.push(NamedArray::from_tensor(
            format!("norm/{name}_std"),
            &Tensor::from_vec(&[n.std.len()], n.std.clone()),
        ));
    }
    Ok(c)
}

pub fn checkpoint_from_container(
    c: &Container,
) -> Result<(OperatorModel, Normalizer, Normalizer, CheckpointMeta)> {
    let config: ModelConfig = c.require("config")?.parse_json()?;
    let meta: CheckpointMeta = c.require("meta")?.parse_json()?;
    let mut model = OperatorModel::init(config, 0)?;
    for p in model.params_mut() {
        let arr = c.require(&format!("param/{}", p.name))?;
        let t = arr.to_tensor()?;
        if t.shape() != p.value.shape() {
            return Err(Error::ShapeMismatch {
                left: t.shape().to_vec(),
                right: p.value.shape().to_vec(),
                context: "checkpoint parameter",
            });
        }
        p.value = t.with_grad();
        p.grad = None;
    }
    let norm = |tag: &str| -> Result<Normalizer> {
        Ok(Normalizer {
            mean: c.require(&format!("norm/{tag}_mean"))?.to_tensor()?.data().to_vec(),
            std: c.require(&format!("norm/{tag}_std"))?.to_tensor()?.data().to_vec(),
        })
    };
    Ok((model, norm("in")?, norm("out")?, meta))
}
