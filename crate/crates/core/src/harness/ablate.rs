//! Ablation grids: placement × supplement, wavelet basis, gate downsampler.
//!
//! Every cell builds its graph from the same seed, trains with the same
//! budget and is scored on the same test split. Cell failures are recorded
//! in the cell rather than aborting the grid.

use std::fmt::Write as _;

use serde::Serialize;

use super::data::Dataset;
use super::metrics::{evaluate, Metrics};
use super::train::{train, TrainConfig};
use crate::error::Result;
use crate::graph::{placements, Graph, GraphSpec, MlfmAttachment, SegMode};
use crate::lfmu::{Downsampler, LfmuConfig};
use crate::scalar::Scalar;
use crate::wavelet::WaveletBasisId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub train: Option<Metrics>,
    pub test: Option<Metrics>,
    pub error: Option<String>,
}

impl Cell {
    /// Test headline metric (top-1 or mIoU), if the cell ran.
    pub fn score(&self) -> Option<f64> {
        self.test.map(|m| m.headline())
    }

    fn render(&self) -> String {
        match (&self.error, self.score()) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(s)) => format!("{:.2}", 100.0 * s),
            (None, None) => "?".into(),
        }
    }
}

/// Everything a cell needs besides its attachment.
#[derive(Debug, Clone, Copy)]
pub struct GridSetup<'a> {
    pub spec: &'a GraphSpec,
    pub seg_mode: SegMode,
    pub train: &'a Dataset,
    pub test: &'a Dataset,
    pub cfg: &'a TrainConfig,
}

impl GridSetup<'_> {
    /// Trains and scores one configuration; `None` is the bare backbone.
    pub fn run<T: Scalar>(&self, lfmu: Option<(usize, usize, &LfmuConfig)>) -> Cell {
        let res = (|| -> Result<(Metrics, Metrics)> {
            let a = lfmu.map(|(s, e, c)| MlfmAttachment {
                seg_mode: self.seg_mode,
                ..MlfmAttachment::new(s, e, *c)
            });
            let g = Graph::<T>::build(self.spec, a.as_ref(), self.cfg.seed)?;
            let (g, report) = train(g, self.train, None, self.cfg)?;
            Ok((report.train, evaluate(&g, self.test)?))
        })();
        match res {
            Ok((tr, te)) => Cell {
                train: Some(tr),
                test: Some(te),
                error: None,
            },
            Err(e) => Cell {
                train: None,
                test: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementRow {
    /// `Baseline` or `L{s}-L{e}`.
    pub label: String,
    pub with_supplement: Option<Cell>,
    /// Absent for the baseline and single-node placements.
    pub without_supplement: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementTable {
    pub rows: Vec<PlacementRow>,
}

impl PlacementTable {
    pub fn render(&self) -> String {
        let mut s = format!("{:<10} {:>14} {:>14}\n", "placement", "supplement", "no supplement");
        let cell = |c: &Option<Cell>| c.as_ref().map_or("-".to_string(), Cell::render);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<10} {:>14} {:>14}",
                r.label,
                cell(&r.with_supplement),
                cell(&r.without_supplement)
            );
        }
        s
    }
}

/// Baseline plus the 15 placements; the supplement-off column is filled only
/// for placements spanning more than one node.
pub fn ablate_placements<T: Scalar>(
    setup: &GridSetup<'_>,
    lfmu: &LfmuConfig,
    on_cell: &mut dyn FnMut(&str, &Cell),
) -> PlacementTable {
    let mut rows = Vec::with_capacity(16);
    let base = setup.run::<T>(None);
    on_cell("Baseline", &base);
    rows.push(PlacementRow {
        label: "Baseline".into(),
        with_supplement: Some(base),
        without_supplement: None,
    });
    let on = LfmuConfig {
        supplement: true,
        ..*lfmu
    };
    let off = LfmuConfig {
        supplement: false,
        ..*lfmu
    };
    for (s, e) in placements() {
        let label = format!("L{s}-L{e}");
        let with = setup.run::<T>(Some((s, e, &on)));
        on_cell(&format!("{label} supplement"), &with);
        let without = (e > s).then(|| {
            let c = setup.run::<T>(Some((s, e, &off)));
            on_cell(&format!("{label} no supplement"), &c);
            c
        });
        rows.push(PlacementRow {
            label,
            with_supplement: Some(with),
            without_supplement: without,
        });
    }
    PlacementTable { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub baseline: Cell,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<10} {:>10}\n{:<10} {:>10}\n",
            "variant",
            "score",
            "Baseline",
            self.baseline.render()
        );
        for r in &self.rows {
            let _ = writeln!(s, "{:<10} {:>10}", r.label, r.cell.render());
        }
        s
    }
}

fn sweep<T: Scalar>(
    setup: &GridSetup<'_>,
    span: (usize, usize),
    variants: Vec<(String, LfmuConfig)>,
    on_cell: &mut dyn FnMut(&str, &Cell),
) -> SweepTable {
    let baseline = setup.run::<T>(None);
    on_cell("Baseline", &baseline);
    let rows = variants
        .into_iter()
        .map(|(label, cfg)| {
            let cell = setup.run::<T>(Some((span.0, span.1, &cfg)));
            on_cell(&label, &cell);
            SweepRow { label, cell }
        })
        .collect();
    SweepTable { baseline, rows }
}

/// All 18 bases at placement `span`, other settings from `lfmu`.
pub fn ablate_basis<T: Scalar>(
    setup: &GridSetup<'_>,
    lfmu: &LfmuConfig,
    span: (usize, usize),
    on_cell: &mut dyn FnMut(&str, &Cell),
) -> SweepTable {
    let variants = WaveletBasisId::ALL
        .iter()
        .map(|&b| (b.name().to_string(), LfmuConfig { basis: b, ..*lfmu }))
        .collect();
    sweep::<T>(setup, span, variants, on_cell)
}

/// The three gate downsamplers at placement `span`.
pub fn ablate_downsampler<T: Scalar>(
    setup: &GridSetup<'_>,
    lfmu: &LfmuConfig,
    span: (usize, usize),
    on_cell: &mut dyn FnMut(&str, &Cell),
) -> SweepTable {
    let variants = Downsampler::ALL
        .iter()
        .map(|&d| {
            (
                d.name().to_string(),
                LfmuConfig {
                    downsampler: d,
                    ..*lfmu
                },
            )
        })
        .collect();
    sweep::<T>(setup, span, variants, on_cell)
}
