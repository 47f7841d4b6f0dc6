//! On-disk dataset cache, one checkpoint container per dataset:
//! `images` (f32 `[N,C,H,W]`), `labels` (f32 `[N]` or `[N,H,W]`) and
//! `classes` (f32 `[1]`).

use std::path::{Path, PathBuf};

use super::data::{Dataset, Generator, Labels};
use crate::error::{Error, Result};
use crate::tensor::{Checkpoint, Tensor};

/// `synth_{generator}_{seed}_{n}_{size}`.
pub fn cache_name(generator: Generator, seed: u64, n: usize, size: usize) -> String {
    format!("synth_{}_{seed}_{n}_{size}", generator.name())
}

pub fn cache_path(dir: &Path, generator: Generator, seed: u64, n: usize, size: usize) -> PathBuf {
    dir.join(format!("{}.mlfm", cache_name(generator, seed, n, size)))
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let [c, h, w] = d.shape;
    let n = d.len();
    let mut ck = Checkpoint::new();
    ck.insert("images", &Tensor::new([n, c, h, w], d.images.clone())?);
    let (shape, labels) = match &d.labels {
        Labels::Class(l) => (vec![n], l),
        Labels::Pixel(l) => (vec![n, h, w], l),
    };
    ck.insert(
        "labels",
        &Tensor::new(shape, labels.iter().map(|&v| v as f32).collect())?,
    );
    ck.insert("classes", &Tensor::new([1], vec![d.classes as f32])?);
    ck.save(path)
}

pub fn load_dataset(path: &Path, source: &str, seed: u64) -> Result<Dataset> {
    let ck = Checkpoint::load(path)?;
    let images = ck.get::<f32>("images")?;
    let labels = ck.get::<f32>("labels")?;
    let classes = ck.get::<f32>("classes")?.data()[0] as usize;
    let [_, c, h, w] = images.dims4()?;
    let l: Vec<usize> = labels.data().iter().map(|&v| v as usize).collect();
    let labels = match labels.rank() {
        1 => Labels::Class(l),
        3 => Labels::Pixel(l),
        r => return Err(Error::Checkpoint(format!("dataset labels have rank {r}"))),
    };
    Dataset::new(source, seed, [c, h, w], classes, images.data().to_vec(), labels)
}

/// Reads the cached dataset if present, otherwise generates and stores it.
pub fn load_or_generate(dir: &Path, generator: Generator, n: usize, size: usize, seed: u64) -> Result<Dataset> {
    let path = cache_path(dir, generator, seed, n, size);
    if path.exists() {
        let d = load_dataset(&path, &format!("synth_{}", generator.name()), seed)?;
        if d.len() == n && d.shape[1] == size {
            return Ok(d);
        }
    }
    let d = generator.generate(n, size, seed)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_dataset(&d, &path)?;
    Ok(d)
}
