use serde::{Deserialize, Serialize};

use super::geometric::{geometric_verification, FeaturePick, ReferenceMeasurement};
use super::harris::{corner_match_ratio, harris_corners, HarrisConfig};
use super::icp::{icp_align, IcpConfig};
use super::nearest::{adnn, hausdorff, AdnnDirection};
use super::ssim::{ssim, SsimConfig};
use crate::error::EvalError;
use crate::geometry::Transform2D;
use crate::gridmap::OccupancyGrid;
use crate::stats::DeviationStats;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A sub-metric that is either present or explicitly absent with a reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Metric<T> {
    Computed { value: T },
    NotComputed { reason: String },
}

impl<T> Metric<T> {
    pub fn from_result(r: Result<T, EvalError>) -> Self {
        match r {
            Ok(value) => Metric::Computed { value },
            Err(e) => Metric::NotComputed { reason: e.to_string() },
        }
    }

    pub fn not_computed(reason: impl Into<String>) -> Self {
        Metric::NotComputed { reason: reason.into() }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Metric::Computed { value } => Some(value),
            Metric::NotComputed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpSummary {
    pub transform: Transform2D,
    pub residuals: DeviationStats,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapQualityReport {
    pub schema_version: u32,
    pub geometric: Metric<DeviationStats>,
    pub adnn: Metric<f64>,
    pub hausdorff: Metric<f64>,
    pub icp: Metric<IcpSummary>,
    pub ssim: Metric<f64>,
    pub corner_match_ratio: Metric<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub feature_pick: FeaturePick,
    pub adnn_direction: AdnnDirection,
    pub icp: IcpConfig,
    pub ssim: SsimConfig,
    pub harris: HarrisConfig,
    /// Corner match radius in meters.
    pub match_radius: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            feature_pick: FeaturePick::default(),
            adnn_direction: AdnnDirection::default(),
            icp: IcpConfig::default(),
            ssim: SsimConfig::default(),
            harris: HarrisConfig::default(),
            match_radius: 0.5,
        }
    }
}

/// Runs every map-based metric; failures of individual metrics are
/// recorded in the report rather than returned. `refs = None` marks the
/// geometric leg as not computed.
pub fn map_quality_report(
    candidate: &OccupancyGrid,
    reference: &OccupancyGrid,
    refs: Option<&[ReferenceMeasurement]>,
    config: &ReportConfig,
) -> MapQualityReport {
    let geometric = match refs {
        Some(refs) => Metric::from_result(geometric_verification(candidate, refs, config.feature_pick)),
        None => Metric::not_computed("no reference measurements supplied"),
    };
    let icp = Metric::from_result(icp_align(candidate, reference, &config.icp).map(|r| IcpSummary {
        transform: r.transform,
        residuals: r.residuals,
        iterations: r.iterations,
        converged: r.converged,
    }));
    let corner_match_ratio = {
        let cand = harris_corners(candidate, &config.harris);
        let refc = harris_corners(reference, &config.harris);
        Metric::from_result(corner_match_ratio(&cand, &refc, config.match_radius))
    };
    MapQualityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        geometric,
        adnn: Metric::from_result(adnn(candidate, reference, config.adnn_direction)),
        hausdorff: Metric::from_result(hausdorff(candidate, reference)),
        icp,
        ssim: Metric::from_result(ssim(candidate, reference, &config.ssim)),
        corner_match_ratio,
    }
}

impl MapQualityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "geo_average_m,geo_median_m,geo_max_m,geo_min_m,geo_count,adnn_m,hausdorff_m,icp_theta_rad,icp_tx_m,icp_ty_m,icp_rmse_m,icp_max_m,icp_average_m,icp_min_m,ssim,corner_match_ratio";

    /// One flat row matching [`Self::CSV_HEADER`]; absent values are empty.
    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let geo = self.geometric.value();
        let icp = self.icp.value();
        [
            f(geo.map(|g| g.average)),
            f(geo.map(|g| g.median)),
            f(geo.map(|g| g.max)),
            f(geo.map(|g| g.min)),
            geo.map(|g| g.count.to_string()).unwrap_or_default(),
            f(self.adnn.value().copied()),
            f(self.hausdorff.value().copied()),
            f(icp.map(|i| i.transform.theta)),
            f(icp.map(|i| i.transform.tx)),
            f(icp.map(|i| i.transform.ty)),
            f(icp.map(|i| i.residuals.rmse)),
            f(icp.map(|i| i.residuals.max)),
            f(icp.map(|i| i.residuals.average)),
            f(icp.map(|i| i.residuals.min)),
            f(self.ssim.value().copied()),
            f(self.corner_match_ratio.value().copied()),
        ]
        .join(",")
    }
}
