//! Datasets, training and evaluation, SSIM profiling and ablation grids.

pub mod ablate;
pub mod cache;
pub mod data;
pub mod images;
pub mod metrics;
pub mod ssim;
pub mod train;

pub use ablate::{ablate_basis, ablate_downsampler, ablate_placements, Cell, GridSetup, PlacementTable, SweepTable};
pub use cache::{cache_name, load_or_generate};
pub use data::{gen_synth_lowfreq, gen_synth_shapes, Dataset, Generator, Labels, Split};
pub use images::load_image_dir;
pub use metrics::{evaluate, evaluate_cls, evaluate_seg, ClsMetrics, Confusion, Metrics, SegMetrics};
pub use ssim::{ssim, ssim_depth_profile, DepthProfile};
pub use train::{train, train_with, EpochRecord, MetricsReport, TrainConfig};
