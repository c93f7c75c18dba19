//! Comparison artifacts: effort ledgers, the three result tables and the
//! effort/deviation scatter plot.

mod scatter;
mod tables;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use scatter::render_scatter;
pub use tables::{emit_tables, parse_table_csv, Table, TableRow, Unit, TABLE_SCHEMA_VERSION};

use crate::error::{EvalError, MapError};
use crate::mapmetrics::{MapQualityReport, Metric};
use crate::stats::DeviationStats;

pub const BENCH_REPORT_SCHEMA_VERSION: u32 = 1;

/// Cost of producing one map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortLedger {
    pub approach: String,
    pub data_volume_gb: f64,
    /// Including one-time setup and parameterization.
    pub gross_time_h: f64,
    pub net_time_h: f64,
    #[serde(default)]
    pub notes: String,
}

impl EffortLedger {
    pub fn new(
        approach: impl Into<String>,
        data_volume_gb: f64,
        gross_time_h: f64,
        net_time_h: f64,
    ) -> Result<Self, EvalError> {
        let l = Self {
            approach: approach.into(),
            data_volume_gb,
            gross_time_h,
            net_time_h,
            notes: String::new(),
        };
        l.validate()?;
        Ok(l)
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, v) in [
            ("data volume", self.data_volume_gb),
            ("gross time", self.gross_time_h),
            ("net time", self.net_time_h),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(EvalError::InvalidInput(format!(
                    "{}: {name} must be finite and >= 0, got {v}",
                    self.approach
                )));
            }
        }
        if self.net_time_h > self.gross_time_h {
            return Err(EvalError::InvalidInput(format!(
                "{}: net time {} h exceeds gross time {} h",
                self.approach, self.net_time_h, self.gross_time_h
            )));
        }
        Ok(())
    }
}

/// Everything measured for one mapping approach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachResult {
    pub approach: String,
    pub map_quality: MapQualityReport,
    /// Checkpoint deviations of the localization replay.
    pub localization: Metric<DeviationStats>,
    /// Start of the first sustained localization failure, seconds.
    pub divergence: Option<f64>,
    pub effort: EffortLedger,
}

impl ApproachResult {
    pub fn map_deviation(&self) -> Option<f64> {
        self.map_quality.geometric.value().map(|s| s.average)
    }

    pub fn localization_deviation(&self) -> Option<f64> {
        self.localization.value().map(|s| s.average)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBasis {
    Gross,
    Net,
}

/// Which effort figure(s) to plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisRequest {
    Gross,
    Net,
    /// Gross and net; approaches whose two figures coincide yield one point.
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityEffortPoint {
    pub approach: String,
    pub label: String,
    pub basis: TimeBasis,
    pub effort_h: f64,
    /// Geometric verification average, meters.
    pub map_deviation: f64,
    /// Checkpoint average, meters.
    pub localization_deviation: f64,
}

pub fn quality_effort_points(
    results: &[ApproachResult],
    basis: BasisRequest,
) -> Result<Vec<QualityEffortPoint>, EvalError> {
    let mut out = Vec::new();
    for r in results {
        r.effort.validate()?;
        let map_deviation = r
            .map_deviation()
            .ok_or_else(|| EvalError::InvalidInput(format!("{}: geometric verification not computed", r.approach)))?;
        let localization_deviation = r
            .localization_deviation()
            .ok_or_else(|| EvalError::InvalidInput(format!("{}: localization not computed", r.approach)))?;
        let (g, n) = (r.effort.gross_time_h, r.effort.net_time_h);
        let wanted: Vec<(TimeBasis, f64, String)> = match basis {
            BasisRequest::Gross => vec![(TimeBasis::Gross, g, r.approach.clone())],
            BasisRequest::Net => vec![(TimeBasis::Net, n, r.approach.clone())],
            BasisRequest::Both if g == n => vec![(TimeBasis::Gross, g, r.approach.clone())],
            BasisRequest::Both => vec![
                (TimeBasis::Gross, g, format!("{} (gross)", r.approach)),
                (TimeBasis::Net, n, format!("{} (net)", r.approach)),
            ],
        };
        for (basis, effort_h, label) in wanted {
            if effort_h <= 0.0 {
                return Err(EvalError::InvalidInput(format!(
                    "{}: zero {basis:?} effort cannot be plotted",
                    r.approach
                )));
            }
            out.push(QualityEffortPoint {
                approach: r.approach.clone(),
                label,
                basis,
                effort_h,
                map_deviation,
                localization_deviation,
            });
        }
    }
    Ok(out)
}

/// `1 / (effort_h · √(map_deviation · localization_deviation))`, deviations
/// in meters. Higher is better.
pub fn quality_effort_ratio(p: &QualityEffortPoint) -> Result<f64, EvalError> {
    for (name, v) in [
        ("effort", p.effort_h),
        ("map deviation", p.map_deviation),
        ("localization deviation", p.localization_deviation),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(EvalError::InvalidInput(format!(
                "{}: {name} must be positive, got {v}",
                p.label
            )));
        }
    }
    Ok(1.0 / (p.effort_h * (p.map_deviation * p.localization_deviation).sqrt()))
}

/// Machine-readable result of a full bench run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub seed: u64,
    pub results: Vec<ApproachResult>,
}

impl BenchReport {
    pub fn new(seed: u64, results: Vec<ApproachResult>) -> Self {
        Self {
            schema_version: BENCH_REPORT_SCHEMA_VERSION,
            seed,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let r: Self = serde_json::from_str(text).map_err(|e| EvalError::InvalidInput(format!("bench report: {e}")))?;
        if r.schema_version != BENCH_REPORT_SCHEMA_VERSION {
            return Err(EvalError::InvalidInput(format!(
                "unsupported report schema version {}",
                r.schema_version
            )));
        }
        for a in &r.results {
            a.effort.validate()?;
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
