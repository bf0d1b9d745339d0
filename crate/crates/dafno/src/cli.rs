//! Command implementations behind the `dafno` binary: dataset generation,
//! training with the multi-seed protocol, evaluation (including
//! coarse-to-fine zero-shot evaluation), the coupled crack simulation, and
//! the smoothing-coefficient sweep. Every command resolves its
//! configuration, runs, and writes a manifest next to its outputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::container::{read_container, write_container};
use crate::data::{
    dataset_from_container, dataset_to_container, gen_poisson_dataset, split, Dataset,
};
use crate::error::{Error, Result};
use crate::geometry::BoxGrid;
use crate::operator::ModelConfig;
use crate::peridynamics::{
    gen_pd_dataset, gen_sinusoidal_dataset, run_simulation, snapshots_from_container,
    snapshots_to_container, BondForce, PdConfig, PdSim, SurrogateModel, SurrogatePair,
};
use crate::tape::ActKind;
use crate::tensor::Tensor;
use crate::training::{
    aggregate_csv, assemble_packs, checkpoint_from_container, checkpoint_to_container, evaluate,
    metrics_csv, predict_physical, rel_l2, run_protocol, sweep_beta, sweep_csv, CheckpointMeta,
    Normalizer, TrainConfig, VariantSpec,
};

/// Model hyperparameters as they appear in config files; channel counts
/// are derived from the dataset and variant at train time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    pub layers: usize,
    pub modes: (usize, usize),
    pub width: usize,
    pub activation: ActKind,
    pub proj_hidden: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            layers: 3,
            modes: (6, 6),
            width: 8,
            activation: ActKind::Gelu,
            proj_hidden: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSection {
    #[serde(default)]
    pub paths: Vec<String>,
    pub split: (f64, f64, f64),
    pub split_seed: u64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            paths: Vec::new(),
            split: (0.7, 0.15, 0.15),
            split_seed: 0,
        }
    }
}

/// Top-level JSON config. Every section is optional; flags override
/// fields.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FileConfig {
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub pd: Option<PdConfig>,
    #[serde(default)]
    pub variant: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                let cfg: FileConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Ok(cfg)
            }
            None => Ok(FileConfig::default()),
        }
    }

    /// Field-by-field validation, all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Some(m) = &self.model {
            if m.layers == 0 {
                problems.push("model.layers: must be >= 1".to_string());
            }
            if m.modes.0 == 0 || m.modes.1 == 0 {
                problems.push("model.modes: must be >= 1 per direction".to_string());
            }
            if m.width == 0 {
                problems.push("model.width: must be >= 1".to_string());
            }
            if m.proj_hidden == 0 {
                problems.push("model.proj_hidden: must be >= 1".to_string());
            }
        }
        if let Some(t) = &self.train {
            if let Err(Error::Config(msg)) = t.validate() {
                for line in msg.lines() {
                    problems.push(format!("train.{line}"));
                }
            }
        }
        if let Some(d) = &self.data {
            let sum = d.split.0 + d.split.1 + d.split.2;
            if (sum - 1.0).abs() > 1e-9 {
                problems.push(format!("data.split: fractions sum to {sum}, expected 1"));
            }
        }
        if let Some(p) = &self.pd {
            if let Err(Error::Config(msg)) = p.validate() {
                for line in msg.lines() {
                    problems.push(format!("pd.{line}"));
                }
            }
        }
        if let Some(v) = &self.variant {
            if VariantSpec::parse(v).is_err() {
                problems.push(format!("variant: unknown '{v}'"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    resolved: serde_json::Value,
    input_hash: String,
    started_unix: u64,
    finished_unix: u64,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_ranges: Option<serde_json::Value>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Content hash over the resolved configuration and every input file.
fn input_hash(resolved: &serde_json::Value, files: &[&Path]) -> String {
    let mut h = Sha256::new();
    h.update(resolved.to_string().as_bytes());
    for f in files {
        if let Ok(bytes) = std::fs::read(f) {
            h.update(&bytes);
        }
    }
    format!("{:x}", h.finalize())
}

struct ManifestBuilder {
    command: String,
    resolved: serde_json::Value,
    hash: String,
    started: u64,
    outputs: Vec<String>,
    image_ranges: Option<serde_json::Value>,
}

impl ManifestBuilder {
    fn new(command: &str, resolved: serde_json::Value, inputs: &[&Path]) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            hash: input_hash(&resolved, inputs),
            resolved,
            started: now_unix(),
            outputs: Vec::new(),
            image_ranges: None,
        }
    }

    fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn write(mut self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        self.outputs.push(path.display().to_string());
        let manifest = RunManifest {
            command: self.command,
            resolved: self.resolved,
            input_hash: self.hash,
            started_unix: self.started,
            finished_unix: now_unix(),
            outputs: self.outputs,
            image_ranges: self.image_ranges,
        };
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}

/// 8-bit binary PGM with per-image min/max normalization. Returns the
/// recorded range.
pub fn write_pgm(path: &Path, field: &Tensor) -> Result<(f64, f64)> {
    let (n1, n2) = match field.shape() {
        [n1, n2] => (*n1, *n2),
        [n1, n2, 1] => (*n1, *n2),
        other => {
            return Err(Error::ShapeMismatch {
                left: other.to_vec(),
                right: vec![0, 0],
                context: "pgm expects a scalar field",
            })
        }
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in field.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = Vec::with_capacity(n1 * n2 + 32);
    bytes.extend_from_slice(format!("P5\n{n2} {n1}\n255\n").as_bytes());
    for &v in field.data() {
        bytes.push((255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8);
    }
    std::fs::write(path, bytes)?;
    Ok((lo, hi))
}

fn load_datasets(paths: &[PathBuf]) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(Error::Usage("no dataset path given (--data or config data.paths)".into()));
    }
    let mut ds = dataset_from_container(&read_container(&paths[0])?)?;
    for p in &paths[1..] {
        let more = dataset_from_container(&read_container(p)?)?;
        ds.extend(&more)?;
    }
    Ok(ds)
}

pub struct GenDataArgs {
    pub task: String,
    pub grid: usize,
    pub samples: usize,
    pub seed: u64,
    pub beta: f64,
    pub traction: f64,
    pub snapshot_every: usize,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    file_cfg.validate()?;
    std::fs::create_dir_all(&args.out)?;

    let mut pd = file_cfg.pd.unwrap_or_else(PdConfig::desk);
    pd.resolution = args.grid;
    pd.horizon = 3.0 * pd.box_extent / args.grid as f64;
    pd.traction = args.traction;

    let ds = match args.task.as_str() {
        "poisson" => {
            let grid = BoxGrid::square(1.0, args.grid);
            gen_poisson_dataset(args.samples, grid, args.seed, args.beta)?
        }
        "pd-sine" => {
            // samples is a budget: the family holds 2 m^2 instances
            let m_max = ((args.samples as f64 / 2.0).sqrt().floor() as usize).max(1);
            gen_sinusoidal_dataset(&pd, m_max, args.beta)?
        }
        "pd-crack" => gen_pd_dataset(&pd, args.samples, args.snapshot_every, 0, args.beta)?,
        other => {
            return Err(Error::Usage(format!(
                "unknown task '{other}' (expected poisson|pd-crack|pd-sine)"
            )))
        }
    };

    let resolved = serde_json::json!({
        "task": args.task,
        "grid": args.grid,
        "samples": args.samples,
        "seed": args.seed,
        "beta": args.beta,
        "traction": args.traction,
        "snapshot_every": args.snapshot_every,
        "pd": pd,
    });
    let mut manifest = ManifestBuilder::new("gen-data", resolved, &[]);
    let path = args.out.join(format!("{}.dafn", args.task));
    write_container(&path, &dataset_to_container(&ds)?)?;
    manifest.add_output(&path);
    let mpath = manifest.write(&args.out)?;
    println!(
        "wrote {} samples to {} (manifest {})",
        ds.len(),
        path.display(),
        mpath.display()
    );
    Ok(())
}

pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub data: Vec<PathBuf>,
    pub variant: Option<String>,
    pub beta: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub epochs: Option<usize>,
    pub allow_long: bool,
    pub predict: Option<String>,
    pub out: PathBuf,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    file_cfg.validate()?;
    std::fs::create_dir_all(&args.out)?;

    let model_section = file_cfg.model.clone().unwrap_or_default();
    let data_section = file_cfg.data.clone().unwrap_or_default();
    let mut train_cfg = file_cfg.train.clone().unwrap_or_default();
    if let Some(b) = args.beta {
        train_cfg.beta = b;
    }
    if let Some(s) = &args.seeds {
        train_cfg.seeds = s.clone();
    }
    if let Some(e) = args.epochs {
        train_cfg.epochs = e;
    }
    train_cfg.allow_long = args.allow_long;
    train_cfg.validate()?;

    let label = args
        .variant
        .clone()
        .or(file_cfg.variant.clone())
        .unwrap_or_else(|| "edafno".into());
    let spec = VariantSpec::parse(&label)?;

    let mut paths = args.data.clone();
    if paths.is_empty() {
        paths = data_section.paths.iter().map(PathBuf::from).collect();
    }
    let ds = load_datasets(&paths)?;
    let (train_ds, val_ds, test_ds) = split(&ds, data_section.split, data_section.split_seed)?;

    let target_channel = match args.predict.as_deref() {
        None => None,
        Some("l1") => Some(0),
        Some("l2") => Some(1),
        Some(other) => {
            return Err(Error::Usage(format!(
                "unknown target '{other}' (expected l1|l2)"
            )))
        }
    };
    if target_channel.is_some() && ds.out_channels() < 2 {
        return Err(Error::Usage(
            "--predict needs a two-component target dataset".into(),
        ));
    }

    let model_cfg = ModelConfig {
        variant: spec.variant(),
        layers: model_section.layers,
        modes: model_section.modes,
        width: model_section.width,
        activation: model_section.activation,
        in_channels: ds.in_channels() + spec.extra_channels(),
        out_channels: if target_channel.is_some() { 1 } else { ds.out_channels() },
        proj_hidden: model_section.proj_hidden,
    };
    model_cfg.validate()?;

    let resolved = serde_json::json!({
        "variant": label,
        "model": model_section,
        "train": train_cfg,
        "data": { "paths": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                   "split": data_section.split, "split_seed": data_section.split_seed },
        "predict": args.predict,
    });
    let input_files: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
    let mut manifest = ManifestBuilder::new("train", resolved, &input_files);

    let (report, outcomes) = run_protocol(
        &model_cfg,
        &train_cfg,
        spec,
        &train_ds,
        &val_ds,
        &test_ds,
        target_channel,
    )?;

    for outcome in &outcomes {
        let seed = outcome.report.seed;
        let mpath = args.out.join(format!("metrics_seed{seed}.csv"));
        std::fs::write(&mpath, metrics_csv(&outcome.report))?;
        manifest.add_output(&mpath);
        let meta = CheckpointMeta {
            seed,
            best_epoch: outcome.report.best_epoch,
            best_val_rel_l2: outcome.report.best_val_rel_l2,
            beta: train_cfg.beta,
            variant: label.clone(),
        };
        let cpath = args.out.join(format!("checkpoint_seed{seed}.dafn"));
        write_container(
            &cpath,
            &checkpoint_to_container(&outcome.model, &outcome.norm_in, &outcome.norm_out, &meta)?,
        )?;
        manifest.add_output(&cpath);
        println!(
            "seed {seed}: best val {:.4e} (epoch {}), test {:.4e}",
            outcome.report.best_val_rel_l2, outcome.report.best_epoch, outcome.report.test_rel_l2
        );
    }
    let apath = args.out.join("aggregate.csv");
    std::fs::write(&apath, aggregate_csv(&report))?;
    manifest.add_output(&apath);
    match report.std_test_rel_l2 {
        Some(std) => println!(
            "test rel-L2 over {} seeds: {:.4e} +/- {:.4e}",
            report.runs.len(),
            report.mean_test_rel_l2,
            std
        ),
        None => println!("test rel-L2: {:.4e}", report.mean_test_rel_l2),
    }
    manifest.write(&args.out)?;
    Ok(())
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub data: Vec<PathBuf>,
    pub resolution: Option<usize>,
    pub dump_fields: bool,
    pub no_mask: bool,
    pub out: PathBuf,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let (model, norm_in, norm_out, meta) =
        checkpoint_from_container(&read_container(&args.checkpoint)?)?;
    let spec = VariantSpec::parse(&meta.variant)?;

    let mut ds = load_datasets(&args.data)?;
    if let Some(res) = args.resolution {
        if res != ds.grid.n.0 {
            if ds.task != "poisson" {
                return Err(Error::Usage(format!(
                    "cross-resolution evaluation regenerates the dataset and is only available for the poisson task (dataset task is '{}')",
                    ds.task
                )));
            }
            let grid = BoxGrid::square(ds.grid.extent.0, res);
            ds = gen_poisson_dataset(ds.len(), grid, ds.master_seed, ds.beta)?;
        }
    }

    // channel compatibility between checkpoint and dataset
    let expect = ds.in_channels() + spec.extra_channels();
    if expect != model.config.in_channels {
        return Err(Error::GridMismatch(format!(
            "checkpoint expects {} input channels, dataset provides {expect}",
            model.config.in_channels
        )));
    }

    let packs = assemble_packs(&ds, spec, meta.beta, &norm_in, None)?;
    let coords = ds.grid.coords();

    let resolved = serde_json::json!({
        "checkpoint": args.checkpoint.display().to_string(),
        "data": args.data.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "resolution": args.resolution,
        "variant": meta.variant,
        "beta": meta.beta,
        "masked": !args.no_mask,
    });
    let mut inputs: Vec<&Path> = vec![args.checkpoint.as_path()];
    inputs.extend(args.data.iter().map(|p| p.as_path()));
    let mut manifest = ManifestBuilder::new("eval", resolved, &inputs);

    let mut csv = String::from("sample,rel_l2\n");
    let mut acc = 0.0;
    let mut ranges = serde_json::Map::new();
    for (idx, pack) in packs.iter().enumerate() {
        let pred = predict_physical(&model, &norm_out, &coords, pack)?;
        let mask = if args.no_mask { None } else { Some(&pack.metric_mask) };
        let err = rel_l2(&pred, &pack.truth, mask)?;
        acc += err;
        csv.push_str(&format!("{idx},{err}\n"));
        if args.dump_fields {
            let n = ds.grid.n.0;
            let channel = |t: &Tensor, c: usize| {
                Tensor::from_vec(
                    &[n, n],
                    (0..n * n).map(|p| t.data()[p * t.shape()[2] + c]).collect(),
                )
            };
            let mut err_field = channel(&pred, 0);
            for (v, t) in err_field.data_mut().iter_mut().zip(channel(&pack.truth, 0).data()) {
                *v = (*v - t).abs();
            }
            for (tag, field) in [
                ("pred", channel(&pred, 0)),
                ("truth", channel(&pack.truth, 0)),
                ("error", err_field),
            ] {
                let path = args.out.join(format!("{tag}_{idx:04}.pgm"));
                let (lo, hi) = write_pgm(&path, &field)?;
                ranges.insert(
                    format!("{tag}_{idx:04}.pgm"),
                    serde_json::json!({ "min": lo, "max": hi }),
                );
                manifest.add_output(&path);
            }
        }
    }
    let mean = acc / packs.len().max(1) as f64;
    csv.push_str(&format!("mean,{mean}\n"));
    let cpath = args.out.join("eval.csv");
    std::fs::write(&cpath, &csv)?;
    manifest.add_output(&cpath);
    if args.dump_fields {
        manifest.image_ranges = Some(serde_json::Value::Object(ranges));
    }
    manifest.write(&args.out)?;
    println!("mean rel-L2 over {} samples: {mean:.4e}", packs.len());
    Ok(())
}

pub struct SimulateArgs {
    pub force_source: String,
    pub traction: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    pub resolution: Option<usize>,
    pub model_l1: Option<PathBuf>,
    pub model_l2: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    file_cfg.validate()?;
    std::fs::create_dir_all(&args.out)?;

    let mut pd = file_cfg.pd.unwrap_or_else(PdConfig::desk);
    pd.traction = args.traction;
    if let Some(res) = args.resolution {
        // horizon stays physical: resolution transfer, not rescaling
        let scale = pd.resolution as f64 / res as f64;
        pd.resolution = res;
        pd.dt *= scale;
    }
    pd.validate()?;
    let sim = PdSim::new(pd)?;

    let reference = match &args.reference {
        Some(path) => Some(snapshots_from_container(&read_container(path)?, pd.grid())?),
        None => None,
    };

    let resolved = serde_json::json!({
        "force_source": args.force_source,
        "traction": args.traction,
        "steps": args.steps,
        "snapshot_every": args.snapshot_every,
        "pd": pd,
        "model_l1": args.model_l1.as_ref().map(|p| p.display().to_string()),
        "model_l2": args.model_l2.as_ref().map(|p| p.display().to_string()),
        "reference": args.reference.as_ref().map(|p| p.display().to_string()),
    });
    let mut inputs: Vec<&Path> = Vec::new();
    for p in [&args.model_l1, &args.model_l2, &args.reference].into_iter().flatten() {
        inputs.push(p.as_path());
    }
    let mut manifest = ManifestBuilder::new("simulate", resolved, &inputs);

    let (snaps, errors) = match args.force_source.as_str() {
        "pd" => run_simulation(
            &sim,
            &mut BondForce,
            args.steps,
            args.snapshot_every,
            reference.as_deref(),
        )?,
        "surrogate" => {
            let load = |p: &Option<PathBuf>, which: &str| -> Result<SurrogateModel> {
                let path = p.as_ref().ok_or_else(|| {
                    Error::Usage(format!("--force-source surrogate needs --model-{which}"))
                })?;
                let (model, norm_in, norm_out, meta) =
                    checkpoint_from_container(&read_container(path)?)?;
                Ok(SurrogateModel {
                    model,
                    norm_in,
                    norm_out,
                    spec: VariantSpec::parse(&meta.variant)?,
                    beta: meta.beta,
                })
            };
            let pair = SurrogatePair::new(
                load(&args.model_l1, "l1")?,
                load(&args.model_l2, "l2")?,
                &pd.grid(),
            );
            let mut pair = pair;
            run_simulation(&sim, &mut pair, args.steps, args.snapshot_every, reference.as_deref())?
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown force source '{other}' (expected pd|surrogate)"
            )))
        }
    };

    let spath = args.out.join("trajectory.dafn");
    write_container(&spath, &snapshots_to_container(&snaps, &pd)?)?;
    manifest.add_output(&spath);
    if reference.is_some() {
        let mut csv = String::from("step,chi_rel_l2,u_rel_l2\n");
        for e in &errors {
            csv.push_str(&format!("{},{},{}\n", e.step, e.chi_rel_l2, e.u_rel_l2));
        }
        let epath = args.out.join("errors.csv");
        std::fs::write(&epath, csv)?;
        manifest.add_output(&epath);
    }
    manifest.write(&args.out)?;
    println!(
        "simulated {} steps ({} snapshots) with force source '{}'",
        args.steps,
        snaps.len(),
        args.force_source
    );
    Ok(())
}

pub struct SweepBetaArgs {
    pub betas: Vec<f64>,
    pub config: Option<PathBuf>,
    pub data: Vec<PathBuf>,
    pub variant: Option<String>,
    pub out: PathBuf,
}

pub fn cmd_sweep_beta(args: &SweepBetaArgs) -> Result<()> {
    if args.betas.is_empty() {
        return Err(Error::Usage("at least one --betas value".into()));
    }
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    file_cfg.validate()?;
    std::fs::create_dir_all(&args.out)?;

    let model_section = file_cfg.model.clone().unwrap_or_default();
    let data_section = file_cfg.data.clone().unwrap_or_default();
    let train_cfg = file_cfg.train.clone().unwrap_or_default();
    let label = args
        .variant
        .clone()
        .or(file_cfg.variant.clone())
        .unwrap_or_else(|| "edafno".into());
    let spec = VariantSpec::parse(&label)?;

    let mut paths = args.data.clone();
    if paths.is_empty() {
        paths = data_section.paths.iter().map(PathBuf::from).collect();
    }
    let ds = load_datasets(&paths)?;
    let (train_ds, val_ds, test_ds) = split(&ds, data_section.split, data_section.split_seed)?;

    let model_cfg = ModelConfig {
        variant: spec.variant(),
        layers: model_section.layers,
        modes: model_section.modes,
        width: model_section.width,
        activation: model_section.activation,
        in_channels: ds.in_channels() + spec.extra_channels(),
        out_channels: ds.out_channels(),
        proj_hidden: model_section.proj_hidden,
    };

    let resolved = serde_json::json!({
        "betas": args.betas,
        "variant": label,
        "model": model_section,
        "train": train_cfg,
    });
    let input_files: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
    let mut manifest = ManifestBuilder::new("sweep-beta", resolved, &input_files);

    let rows = sweep_beta(&model_cfg, &train_cfg, spec, &args.betas, &train_ds, &val_ds, &test_ds)?;
    let cpath = args.out.join("sweep.csv");
    std::fs::write(&cpath, sweep_csv(&rows))?;
    manifest.add_output(&cpath);
    manifest.write(&args.out)?;
    for r in &rows {
        println!(
            "beta {:>6}: train {:.4e} test {:.4e}",
            r.beta, r.train_rel_l2, r.test_rel_l2
        );
    }
    Ok(())
}

/// Mean rel-L2 of a checkpoint against a dataset (used by tests and the
/// acceptance harness without spinning up file outputs).
pub fn eval_checkpoint_on(
    checkpoint: &Path,
    ds: &Dataset,
) -> Result<f64> {
    let (model, norm_in, norm_out, meta) = checkpoint_from_container(&read_container(checkpoint)?)?;
    let spec = VariantSpec::parse(&meta.variant)?;
    let packs = assemble_packs(ds, spec, meta.beta, &norm_in, None)?;
    evaluate(&model, &norm_out, &ds.grid.coords(), &packs)
}

/// Identity used by tests: the normalizer stored in a checkpoint.
pub fn checkpoint_normalizers(checkpoint: &Path) -> Result<(Normalizer, Normalizer)> {
    let (_, ni, no, _) = checkpoint_from_container(&read_container(checkpoint)?)?;
    Ok((ni, no))
}
