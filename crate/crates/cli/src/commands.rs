use std::fmt;
use std::path::{Path, PathBuf};

use mlfm::graph::{Arch, Graph, GraphSpec};
use mlfm::harness::{
    ablate_basis, ablate_downsampler, ablate_placements, evaluate, load_image_dir, load_or_generate,
    ssim_depth_profile, train_with, Cell, Dataset, GridSetup, Metrics,
};
use mlfm::tensor::Checkpoint;
use mlfm::wavelet::selftest;
use mlfm::{DType, Scalar};
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig};
use crate::Common;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 1).
    Invalid(String),
    /// Failure while running (exit 2).
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<mlfm::Error> for CliError {
    fn from(e: mlfm::Error) -> Self {
        match e {
            mlfm::Error::Config(_) | mlfm::Error::UnknownBasis(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Loads the config, applies flag overrides and validates it. Returns
/// `None` after printing it when `--dry-run` is set.
fn resolve(common: &Common) -> CliResult<Option<ExperimentConfig>> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.dataset.seed = seed;
        cfg.train.seed = seed;
    }
    if let Some(out) = &common.output {
        cfg.output = out.clone();
    }
    if let Some(dtype) = common.dtype {
        cfg.train.dtype = dtype;
    }
    cfg.validate()?;
    if common.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(None);
    }
    Ok(Some(cfg))
}

fn require_forward(cfg: &ExperimentConfig) -> CliResult {
    if cfg.arch == Arch::Resnet18Structural {
        return Err(CliError::Invalid(
            "arch: resnet18_structural is for counting only".into(),
        ));
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

/// Training set and optional test set.
fn datasets(cfg: &ExperimentConfig) -> CliResult<(Dataset, Option<Dataset>)> {
    let d = &cfg.dataset;
    if let Some(dir) = &d.image_dir {
        let train = load_image_dir(dir)?;
        let test = d.test_dir.as_deref().map(load_image_dir).transpose()?;
        return Ok((train, test));
    }
    let total = d.n + d.n_test;
    let all = match &d.cache_dir {
        Some(c) => load_or_generate(c, d.generator, total, d.size, d.seed)?,
        None => d.generator.generate(total, d.size, d.seed)?,
    };
    let (train, test) = all.split_at(d.n)?;
    Ok((train, (d.n_test > 0).then_some(test)))
}

fn build<T: Scalar>(cfg: &ExperimentConfig, data: &Dataset) -> CliResult<Graph<T>> {
    let spec = cfg.spec(data.classes, data.shape[1]);
    if data.shape[1] != data.shape[2] {
        return Err(CliError::Invalid(format!(
            "dataset: images must be square, got {}×{}",
            data.shape[1], data.shape[2]
        )));
    }
    Ok(Graph::build(&spec, cfg.mlfm().as_ref(), cfg.train.seed)?)
}

fn fmt_metrics(m: &Metrics) -> String {
    match m {
        Metrics::Cls(c) => format!("top1 {:.4} top5 {:.4}", c.top1, c.top5),
        Metrics::Seg(s) => format!(
            "oa {:.4} miou {:.4} precision {:.4} recall {:.4}",
            s.oa, s.miou, s.precision, s.recall
        ),
    }
}

macro_rules! with_dtype {
    ($dtype:expr, $f:ident ( $($arg:expr),* )) => {
        match $dtype {
            DType::F32 => $f::<f32>($($arg),*),
            DType::F64 => $f::<f64>($($arg),*),
        }
    };
}

pub fn train(common: &Common) -> CliResult {
    let Some(cfg) = resolve(common)? else { return Ok(()) };
    require_forward(&cfg)?;
    with_dtype!(cfg.train.dtype, train_as(&cfg))
}

fn train_as<T: Scalar>(cfg: &ExperimentConfig) -> CliResult {
    let (train, test) = datasets(cfg)?;
    let g = build::<T>(cfg, &train)?;
    println!(
        "training {} ({}) on {} samples, {} params",
        cfg.arch,
        g.attachment().map_or("baseline".into(), |a| a.label()),
        train.len(),
        g.count_params()
    );
    let echo = serde_json::to_value(cfg).expect("config serializes");
    let (g, report) = train_with(g, &train, test.as_ref(), &cfg.train, echo, &mut |r| {
        let eval = r.eval.as_ref().map(fmt_metrics).unwrap_or_default();
        println!("epoch {:>3}  loss {:.5}  {eval}", r.epoch, r.train_loss);
    })?;
    println!("train: {}", fmt_metrics(&report.train));
    if let Some(t) = &report.test {
        println!("test:  {}", fmt_metrics(t));
    }
    let out = &cfg.output;
    std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    g.params().to_checkpoint().save(&out.join("checkpoint.mlfm"))?;
    write(&out.join("report.jsonl"), &report.to_jsonl())?;
    write(&out.join("timing.json"), &report.timing_json())?;
    write(&out.join("config.toml"), &cfg.to_toml())?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn eval(common: &Common, checkpoint: Option<PathBuf>) -> CliResult {
    let Some(cfg) = resolve(common)? else { return Ok(()) };
    require_forward(&cfg)?;
    let path = checkpoint.unwrap_or_else(|| cfg.output.join("checkpoint.mlfm"));
    with_dtype!(cfg.train.dtype, eval_as(&cfg, &path))
}

fn load_params<T: Scalar>(g: &mut Graph<T>, path: &Path) -> CliResult {
    let ck = Checkpoint::load(path)?;
    g.params_mut()
        .load_checkpoint(&ck)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn eval_as<T: Scalar>(cfg: &ExperimentConfig, path: &Path) -> CliResult {
    let (train, test) = datasets(cfg)?;
    let mut g = build::<T>(cfg, &train)?;
    load_params(&mut g, path)?;
    let (split, data) = match &test {
        Some(t) => ("test", t),
        None => ("train", &train),
    };
    let m = evaluate(&g, data)?;
    println!("{split}: {}", fmt_metrics(&m));
    let record = serde_json::json!({ "record": "eval", "split": split, "checkpoint": path, "metrics": m });
    write(&cfg.output.join("eval.jsonl"), &(record.to_string() + "\n"))
}

#[derive(Debug, Clone, Copy)]
pub enum Grid {
    Placement,
    Basis,
    Downsampler,
}

pub fn ablate(common: &Common, grid: Grid) -> CliResult {
    let Some(cfg) = resolve(common)? else { return Ok(()) };
    require_forward(&cfg)?;
    with_dtype!(cfg.train.dtype, ablate_as(&cfg, grid))
}

fn ablate_as<T: Scalar>(cfg: &ExperimentConfig, grid: Grid) -> CliResult {
    let (train, test) = datasets(cfg)?;
    let spec = build::<T>(cfg, &train)?.spec().clone();
    let test = test.as_ref().unwrap_or(&train);
    let setup = GridSetup {
        spec: &spec,
        seg_mode: cfg.attachment.seg_mode,
        train: &train,
        test,
        cfg: &cfg.train,
    };
    let span = (cfg.attachment.start, cfg.attachment.end);
    let mut progress = |label: &str, c: &Cell| match (&c.error, &c.test) {
        (Some(e), _) => println!("{label:<24} error: {e}"),
        (None, Some(m)) => println!("{label:<24} {}", fmt_metrics(m)),
        (None, None) => println!("{label:<24} ?"),
    };
    let (name, rendered, body) = match grid {
        Grid::Placement => {
            let t = ablate_placements::<T>(&setup, &cfg.lfmu, &mut progress);
            ("ablate_placement", t.render(), json(&t))
        }
        Grid::Basis => {
            let t = ablate_basis::<T>(&setup, &cfg.lfmu, span, &mut progress);
            ("ablate_basis", t.render(), json(&t))
        }
        Grid::Downsampler => {
            let t = ablate_downsampler::<T>(&setup, &cfg.lfmu, span, &mut progress);
            ("ablate_downsampler", t.render(), json(&t))
        }
    };
    print!("\n{rendered}");
    write(&cfg.output.join(format!("{name}.json")), &body)?;
    write(&cfg.output.join(format!("{name}.txt")), &rendered)
}

pub fn wavelet_selftest() -> CliResult {
    let rows = selftest(0);
    let mut failed = 0;
    for r in &rows {
        let energy = r.energy_error.map_or("n/a".to_string(), |e| format!("{e:.2e}"));
        println!(
            "{} {:<8} taps={:<3} pr_f64={:.2e} pr_f32={:.2e} dc={:.2e} energy={energy}",
            if r.pass { "PASS" } else { "FAIL" },
            r.basis.name(),
            r.taps,
            r.pr_error_f64,
            r.pr_error_f32,
            r.dc_gain_error
        );
        failed += usize::from(!r.pass);
    }
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} bases failed the self-test")));
    }
    Ok(())
}

pub fn ssim_profile(common: &Common, images: usize, size: usize, checkpoint: Option<PathBuf>) -> CliResult {
    let Some(cfg) = resolve(common)? else { return Ok(()) };
    require_forward(&cfg)?;
    if images == 0 {
        return Err(CliError::Invalid("--images must be positive".into()));
    }
    if size < 32 || !size.is_power_of_two() || (size >> 5) < 11 {
        return Err(CliError::Invalid(format!(
            "--size must be a power of two leaving node 5 at least 11 wide (>= 512), got {size}"
        )));
    }
    with_dtype!(cfg.train.dtype, profile_as(&cfg, images, size, checkpoint.as_deref()))
}

fn profile_as<T: Scalar>(cfg: &ExperimentConfig, images: usize, size: usize, checkpoint: Option<&Path>) -> CliResult {
    let data = cfg.dataset.generator.generate(images, size, cfg.dataset.seed)?;
    let mut g = build::<T>(cfg, &data)?;
    if let Some(p) = checkpoint {
        load_params(&mut g, p)?;
    }
    let (x, _) = data.batch::<T>(&(0..images).collect::<Vec<_>>());
    let profile = ssim_depth_profile(&g, &x, cfg.lfmu.basis)?;
    for (k, f) in profile.features.iter().enumerate() {
        let mem = profile.memories[k].map_or(String::new(), |m| format!("  memory {m:.4}"));
        println!("node {k}  feature {f:.4}{mem}");
    }
    write(&cfg.output.join("ssim_profile.json"), &json(&profile))
}

pub fn count(common: &Common, arch: Option<Arch>) -> CliResult {
    let Some(mut cfg) = resolve(common)? else { return Ok(()) };
    if let Some(a) = arch {
        cfg.arch = a;
    }
    let classes = match cfg.arch {
        Arch::Resnet18Structural => 1000,
        _ => cfg.classes(),
    };
    let spec: GraphSpec = cfg.spec(classes, cfg.dataset.size);
    let base = Graph::<f32>::build(&spec, None, 0)?;
    println!("params={}", base.count_params());
    println!("macs={}", base.count_macs(spec.input));
    if common.config.is_some() {
        if let Some(a) = cfg.mlfm() {
            let g = base.attach_mlfm(&a)?;
            println!("params_mlfm={}", g.count_params());
            println!("macs_mlfm={}", g.count_macs(spec.input));
        }
    }
    Ok(())
}
