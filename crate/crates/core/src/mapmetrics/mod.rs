//! Quality metrics comparing a candidate map with a reference.
//!
//! The geometric leg compares lengths measured in the map against surveyed
//! ground truth; the remaining legs (ADNN, Hausdorff, ICP residuals, SSIM,
//! Harris corner matching) compare two rasters of the same area directly.

mod geometric;
mod harris;
mod icp;
mod kdtree;
mod nearest;
mod report;
mod ssim;

pub use geometric::{geometric_verification, read_references, write_references, FeaturePick, ReferenceMeasurement};
pub use harris::{corner_match_ratio, harris_corners, harris_response, Corner, CornerSet, HarrisConfig};
pub use icp::{icp_align, icp_align_points, rigid_fit, IcpConfig, IcpInit, IcpResult};
pub use kdtree::KdTree;
pub use nearest::{adnn, hausdorff, AdnnDirection};
pub use report::{map_quality_report, IcpSummary, MapQualityReport, Metric, ReportConfig, REPORT_SCHEMA_VERSION};
pub use ssim::{ssim, ssim_pixels, SsimConfig};
