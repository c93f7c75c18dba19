use std::path::{Path, PathBuf};

use mapbench::benchreport::{BasisRequest, EffortLedger};
use mapbench::mapmetrics::ReportConfig;
use mapbench::mcl::MclConfig;
use mapbench::simharness::{DegradationProfile, PabcProfile, ScenarioConfig, SlamProfile, TlsProfile, VectorWorld};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Effort figures that software cannot measure (field time, setup).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredEffort {
    pub data_volume_gb: f64,
    pub gross_time_h: f64,
    pub net_time_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffortSource {
    /// The effort table reports the declared figures; measured times go to
    /// `timings.json` only, keeping reports reproducible.
    #[default]
    Declared,
    /// Net time is the measured pipeline wall time of the approach.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachConfig {
    pub name: String,
    pub profile: DegradationProfile,
    pub effort: DeclaredEffort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Legs {
    pub map_eval: bool,
    pub replay: bool,
}

impl Default for Legs {
    fn default() -> Self {
        Self {
            map_eval: true,
            replay: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DivergenceConfig {
    /// Position error that counts as lost, meters.
    pub threshold: f64,
    /// How long the error must persist, seconds.
    pub hold: f64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            threshold: 1.0,
            hold: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Scenario JSON; the built-in campus drive when absent.
    pub scenario: Option<PathBuf>,
    /// World JSON; the seeded campus world when absent.
    pub world: Option<PathBuf>,
    pub approaches: Vec<ApproachConfig>,
    pub mcl: MclConfig,
    pub report: ReportConfig,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub legs: Legs,
    /// Drop checkpoints at or after the earliest divergence of any approach.
    pub until_divergence: bool,
    pub divergence: DivergenceConfig,
    pub effort_source: EffortSource,
    pub scatter_basis: BasisRequest,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let declared = |data_volume_gb, gross_time_h, net_time_h| DeclaredEffort {
            data_volume_gb,
            gross_time_h,
            net_time_h,
        };
        Self {
            scenario: None,
            world: None,
            approaches: vec![
                ApproachConfig {
                    name: "SLAM-like".into(),
                    profile: DegradationProfile::SlamLike(SlamProfile::default()),
                    effort: declared(14.1, 54.32, 2.32),
                },
                ApproachConfig {
                    name: "TLS-like".into(),
                    profile: DegradationProfile::TlsLike(TlsProfile::default()),
                    effort: declared(246.0, 90.5, 90.5),
                },
                ApproachConfig {
                    name: "PABC-like".into(),
                    profile: DegradationProfile::PabcLike(PabcProfile::default()),
                    effort: declared(0.0052, 1.08, 1.08),
                },
            ],
            mcl: MclConfig::default(),
            report: ReportConfig::default(),
            out: None,
            seed: 0,
            legs: Legs::default(),
            until_divergence: true,
            divergence: DivergenceConfig::default(),
            effort_source: EffortSource::default(),
            scatter_basis: BasisRequest::default(),
        }
    }
}

impl BenchConfig {
    /// Reads a config file; relative scenario/world paths resolve against
    /// the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.scenario, &mut cfg.world].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |e: mapbench::EvalError| CliError::Usage(e.to_string());
        self.mcl.validate().map_err(usage)?;
        if self.approaches.is_empty() {
            return Err(CliError::Usage("at least one approach is required".into()));
        }
        for a in &self.approaches {
            a.profile.validate().map_err(usage)?;
            self.ledger(a, None).map_err(usage)?;
            if a.name.is_empty() || a.name.contains(['/', '\\']) || a.name.starts_with('.') {
                return Err(CliError::Usage(format!(
                    "approach name {:?} is not a valid directory name",
                    a.name
                )));
            }
        }
        let mut names: Vec<&str> = self.approaches.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("approach names must be unique".into()));
        }
        if !(self.divergence.threshold > 0.0 && self.divergence.hold >= 0.0) {
            return Err(CliError::Usage("divergence threshold must be > 0 and hold >= 0".into()));
        }
        Ok(())
    }

    /// Effort ledger for `a`; `measured_h` is the approach's pipeline time.
    pub fn ledger(
        &self,
        a: &ApproachConfig,
        measured_h: Option<f64>,
    ) -> std::result::Result<EffortLedger, mapbench::EvalError> {
        let e = a.effort;
        match (self.effort_source, measured_h) {
            (EffortSource::Measured, Some(h)) => EffortLedger::new(&a.name, e.data_volume_gb, e.gross_time_h.max(h), h)
                .map(|l| l.with_notes("net time measured by the pipeline")),
            _ => EffortLedger::new(&a.name, e.data_volume_gb, e.gross_time_h, e.net_time_h)
                .map(|l| l.with_notes("declared")),
        }
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let mut s = match &self.scenario {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("scenario {}: {e}", p.display())))?
            }
            None => ScenarioConfig::default(),
        };
        s.seed = self.seed;
        Ok(s)
    }

    pub fn world(&self) -> Result<VectorWorld> {
        match &self.world {
            Some(p) => {
                if !p.exists() {
                    return Err(CliError::io(p, "world file not found"));
                }
                VectorWorld::load(p).map_err(|e| CliError::io(p, e))
            }
            None => Ok(mapbench::simharness::campus_world(self.seed)),
        }
    }

    /// Copy recorded in outputs: refers to the `scenario.json` and
    /// `world.json` written next to it instead of machine-specific paths.
    pub fn snapshot(&self) -> Self {
        Self {
            out: None,
            scenario: Some("scenario.json".into()),
            world: Some("world.json".into()),
            ..self.clone()
        }
    }
}
