//! Synthetic datasets.
//!
//! Every image draws from its own ChaCha8 stream: seed `seed`, stream `i`.
//! Pixel coordinates are the cell centres `x = (col + 0.5)/size`,
//! `y = (row + 0.5)/size`. Values are computed in `f64` and stored as `f32`.
//!
//! `synth_lowfreq` (2 classes, class = `i % 2`):
//!
//! ```text
//! θ ~ U[-π/6, π/6] (+ π/2 for class 1)    f ~ U[0.5, 2]    φ ~ U[0, 0.25)
//! then per channel c, per pixel (draws in channel, row, column order):
//! u ~ U[-1, 1]
//! v = 0.5 + 0.25·sin(2π(f·cosθ·x + f·sinθ·y + φ)) + 0.25·u
//! ```
//!
//! `synth_shapes` (3 classes: background, rectangle, disk): `m ~ U{1,2,3}`
//! shapes in `m` distinct quadrants chosen by a partial Fisher-Yates shuffle
//! of `[0, 1, 2, 3]` (quadrant `q` spans columns from `(q % 2)·size/2` and
//! rows from `(q / 2)·size/2`). Each shape is a rectangle with probability
//! 1/2, sides `w, h ~ U[0.25, 0.45]·size`, or a disk of radius
//! `r ~ U[0.125, 0.225]·size`, centred uniformly where it fits its quadrant.
//! A pixel belongs to a shape when its centre (in pixel units) lies inside
//! the closed shape. Intensities are linear ramps, equal on all channels:
//! background `0.25 + g·((x−0.5)cos α + (y−0.5)sin α)`, shapes `0.75 + …`
//! with their own `g ~ U[-0.2, 0.2]`, `α ~ U[0, 2π)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Lowfreq,
    Shapes,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Lowfreq => "lowfreq",
            Generator::Shapes => "shapes",
        }
    }

    pub fn classes(self) -> usize {
        match self {
            Generator::Lowfreq => 2,
            Generator::Shapes => 3,
        }
    }

    pub fn generate(self, n: usize, size: usize, seed: u64) -> Result<Dataset> {
        match self {
            Generator::Lowfreq => gen_synth_lowfreq(n, size, seed),
            Generator::Shapes => gen_synth_shapes(n, size, seed),
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Labels {
    /// One class per image.
    Class(Vec<usize>),
    /// `N×H×W` class maps.
    Pixel(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Generator name or the source directory.
    pub source: String,
    pub seed: u64,
    /// `[C, H, W]`.
    pub shape: [usize; 3],
    pub classes: usize,
    /// `N×C×H×W`, values in `[0, 1]`.
    pub images: Vec<f32>,
    pub labels: Labels,
    pub splits: Vec<Split>,
}

impl Dataset {
    pub fn new(
        source: impl Into<String>,
        seed: u64,
        shape: [usize; 3],
        classes: usize,
        images: Vec<f32>,
        labels: Labels,
    ) -> Result<Self> {
        let per = shape.iter().product::<usize>();
        if per == 0 || !images.len().is_multiple_of(per) {
            return Err(Error::config(format!(
                "dataset: {} values do not form images of shape {shape:?}",
                images.len()
            )));
        }
        let n = images.len() / per;
        let (count, max) = match &labels {
            Labels::Class(v) => (v.len(), v.iter().max()),
            Labels::Pixel(v) => (v.len() / (shape[1] * shape[2]), v.iter().max()),
        };
        if count != n || matches!(&labels, Labels::Pixel(v) if v.len() != n * shape[1] * shape[2]) {
            return Err(Error::config(format!("dataset: {n} images but labels for {count}")));
        }
        if let Some(&m) = max {
            if m >= classes {
                return Err(Error::config(format!(
                    "dataset: label {m} out of range for {classes} classes"
                )));
            }
        }
        Ok(Self {
            source: source.into(),
            seed,
            shape,
            classes,
            images,
            labels,
            splits: vec![Split::Train; n],
        })
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    pub fn is_segmentation(&self) -> bool {
        matches!(self.labels, Labels::Pixel(_))
    }

    fn pixels(&self) -> usize {
        self.shape[1] * self.shape[2]
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let per = self.shape.iter().product::<usize>();
        &self.images[i * per..(i + 1) * per]
    }

    /// Label slice of sample `i`: one class, or `H×W` classes.
    pub fn label(&self, i: usize) -> &[usize] {
        match &self.labels {
            Labels::Class(v) => &v[i..i + 1],
            Labels::Pixel(v) => &v[i * self.pixels()..(i + 1) * self.pixels()],
        }
    }

    /// Images `[B,C,H,W]` and flattened labels of the samples in `idx`.
    pub fn batch<T: Scalar>(&self, idx: &[usize]) -> (Tensor<T>, Vec<usize>) {
        let [c, h, w] = self.shape;
        let mut data = Vec::with_capacity(idx.len() * c * h * w);
        let mut labels = Vec::new();
        for &i in idx {
            data.extend(self.image(i).iter().map(|&v| T::from_f64_lossy(v as f64)));
            labels.extend_from_slice(self.label(i));
        }
        (Tensor::from_parts(vec![idx.len(), c, h, w], data), labels)
    }

    /// Samples `idx` as a new dataset (splits carried over).
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for &i in idx {
            images.extend_from_slice(self.image(i));
            labels.extend_from_slice(self.label(i));
        }
        Self {
            source: self.source.clone(),
            seed: self.seed,
            shape: self.shape,
            classes: self.classes,
            images,
            labels: match self.labels {
                Labels::Class(_) => Labels::Class(labels),
                Labels::Pixel(_) => Labels::Pixel(labels),
            },
            splits: idx.iter().map(|&i| self.splits[i]).collect(),
        }
    }

    /// First `n_train` samples tagged train, the rest test.
    pub fn split_at(&self, n_train: usize) -> Result<(Self, Self)> {
        if n_train > self.len() {
            return Err(Error::config(format!(
                "dataset: cannot take {n_train} training samples from {}",
                self.len()
            )));
        }
        let mut train = self.subset(&(0..n_train).collect::<Vec<_>>());
        let mut test = self.subset(&(n_train..self.len()).collect::<Vec<_>>());
        train.splits.fill(Split::Train);
        test.splits.fill(Split::Test);
        Ok((train, test))
    }
}

fn check_size(size: usize) -> Result<()> {
    if size < 32 || !size.is_power_of_two() {
        return Err(Error::config(format!(
            "dataset: size must be a power of two >= 32, got {size}"
        )));
    }
    Ok(())
}

fn image_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn centre(i: usize, size: usize) -> f64 {
    (i as f64 + 0.5) / size as f64
}

/// Two-class oriented-sinusoid images; see the module docs for the formula.
pub fn gen_synth_lowfreq(n: usize, size: usize, seed: u64) -> Result<Dataset> {
    check_size(size)?;
    let c = 3;
    let mut images = Vec::with_capacity(n * c * size * size);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = image_rng(seed, i);
        let class = i % 2;
        let theta = rng.gen_range(-PI / 6.0..PI / 6.0) + class as f64 * PI / 2.0;
        let f = rng.gen_range(0.5..2.0);
        let phi = rng.gen_range(0.0..0.25);
        let (fx, fy) = (f * theta.cos(), f * theta.sin());
        for _ in 0..c {
            for row in 0..size {
                let y = centre(row, size);
                for col in 0..size {
                    let x = centre(col, size);
                    let u: f64 = rng.gen_range(-1.0..=1.0);
                    let v = 0.5 + 0.25 * (2.0 * PI * (fx * x + fy * y + phi)).sin() + 0.25 * u;
                    images.push(v.clamp(0.0, 1.0) as f32);
                }
            }
        }
        labels.push(class);
    }
    Dataset::new("synth_lowfreq", seed, [c, size, size], 2, images, Labels::Class(labels))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Centre and full side lengths, in pixels.
    Rect {
        cx: f64,
        cy: f64,
        w: f64,
        h: f64,
    },
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
}

impl Shape {
    pub fn class(&self) -> usize {
        match self {
            Shape::Rect { .. } => 1,
            Shape::Disk { .. } => 2,
        }
    }

    /// Whether the pixel-unit point `(px, py)` lies in the closed shape.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        match *self {
            Shape::Rect { cx, cy, w, h } => (px - cx).abs() <= w / 2.0 && (py - cy).abs() <= h / 2.0,
            Shape::Disk { cx, cy, r } => (px - cx).powi(2) + (py - cy).powi(2) <= r * r,
        }
    }
}

struct Ramp {
    base: f64,
    g: f64,
    cos: f64,
    sin: f64,
}

impl Ramp {
    fn draw(base: f64, rng: &mut ChaCha8Rng) -> Self {
        let g = rng.gen_range(-0.2..=0.2);
        let a: f64 = rng.gen_range(0.0..2.0 * PI);
        Self {
            base,
            g,
            cos: a.cos(),
            sin: a.sin(),
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.base + self.g * ((x - 0.5) * self.cos + (y - 0.5) * self.sin)
    }
}

/// Shapes of image `i`, exactly as `gen_synth_shapes` draws them.
pub fn synth_shapes_layout(size: usize, seed: u64, i: usize) -> Vec<Shape> {
    let mut rng = image_rng(seed, i);
    draw_shapes(size, &mut rng)
}

fn draw_shapes(size: usize, rng: &mut ChaCha8Rng) -> Vec<Shape> {
    let s = size as f64;
    let half = s / 2.0;
    let m = rng.gen_range(1..=3usize);
    let mut quads = [0usize, 1, 2, 3];
    let mut shapes = Vec::with_capacity(m);
    for j in 0..m {
        let pick = rng.gen_range(j..4);
        quads.swap(j, pick);
        let q = quads[j];
        let (qx, qy) = ((q % 2) as f64 * half, (q / 2) as f64 * half);
        let shape = if rng.gen_bool(0.5) {
            let w = rng.gen_range(0.25..=0.45) * s;
            let h = rng.gen_range(0.25..=0.45) * s;
            let cx = qx + w / 2.0 + rng.gen_range(0.0..=1.0) * (half - w);
            let cy = qy + h / 2.0 + rng.gen_range(0.0..=1.0) * (half - h);
            Shape::Rect { cx, cy, w, h }
        } else {
            let r = rng.gen_range(0.125..=0.225) * s;
            let cx = qx + r + rng.gen_range(0.0..=1.0) * (half - 2.0 * r);
            let cy = qy + r + rng.gen_range(0.0..=1.0) * (half - 2.0 * r);
            Shape::Disk { cx, cy, r }
        };
        shapes.push(shape);
    }
    shapes
}

/// Three-class segmentation images; see the module docs for the layout.
pub fn gen_synth_shapes(n: usize, size: usize, seed: u64) -> Result<Dataset> {
    check_size(size)?;
    let c = 3;
    let plane = size * size;
    let mut images = Vec::with_capacity(n * c * plane);
    let mut labels = Vec::with_capacity(n * plane);
    for i in 0..n {
        let mut rng = image_rng(seed, i);
        let shapes = draw_shapes(size, &mut rng);
        let bg = Ramp::draw(0.25, &mut rng);
        let ramps: Vec<Ramp> = shapes.iter().map(|_| Ramp::draw(0.75, &mut rng)).collect();
        let mut img = vec![0f32; plane];
        for row in 0..size {
            for col in 0..size {
                let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
                let (x, y) = (centre(col, size), centre(row, size));
                let hit = shapes.iter().position(|s| s.contains(px, py));
                let (label, v) = match hit {
                    Some(j) => (shapes[j].class(), ramps[j].at(x, y)),
                    None => (0, bg.at(x, y)),
                };
                labels.push(label);
                img[row * size + col] = v as f32;
            }
        }
        for _ in 0..c {
            images.extend_from_slice(&img);
        }
    }
    Dataset::new("synth_shapes", seed, [c, size, size], 3, images, Labels::Pixel(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_are_checked() {
        assert!(gen_synth_lowfreq(2, 48, 0).is_err());
        assert!(gen_synth_lowfreq(2, 16, 0).is_err());
        assert!(gen_synth_shapes(2, 100, 0).is_err());
    }

    #[test]
    fn lowfreq_values_and_balance() {
        let d = gen_synth_lowfreq(7, 32, 1).unwrap();
        assert_eq!(d.len(), 7);
        assert!(d.images.iter().all(|v| (0.0..=1.0).contains(v)));
        let Labels::Class(l) = &d.labels else { panic!() };
        assert_eq!(l.iter().filter(|&&c| c == 0).count(), 4);
    }

    #[test]
    fn shape_labels_follow_layout() {
        let size = 32;
        let d = gen_synth_shapes(5, size, 9).unwrap();
        for i in 0..5 {
            let shapes = synth_shapes_layout(size, 9, i);
            for (p, &l) in d.label(i).iter().enumerate() {
                let (px, py) = ((p % size) as f64 + 0.5, (p / size) as f64 + 0.5);
                let inside = shapes.iter().find(|s| s.contains(px, py));
                assert_eq!(l, inside.map_or(0, Shape::class));
            }
        }
    }

    #[test]
    fn split_tags() {
        let d = gen_synth_lowfreq(10, 32, 0).unwrap();
        let (a, b) = d.split_at(8).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        assert!(b.splits.iter().all(|&s| s == Split::Test));
        assert_eq!(b.image(0), d.image(8));
    }
}
