//! Segmentation overlap and boundary metrics, SSIM and retrieval, label
//! heatmaps and depth/angle subset tables.

mod heatmap;
mod segmentation;
mod ssim;
mod subsets;

pub use heatmap::lv_heatmap;
pub use segmentation::{boundary_pixels, dice, hausdorff_mm, squared_distance_transform};
pub use ssim::{most_similar, ssim, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use subsets::{subset_report, GroupStats, MeanSd, MetricRow, SubsetReport, SubsetThresholds};
