use std::path::{Path, PathBuf};

use phifem::BoundingBox;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    /// Disk of radius √2/4 in the unit square with a manufactured solution.
    Circle,
    /// Tilted rectangle with unit load and no closed-form solution.
    Rectangle,
    /// Affine level set with a planted product solution.
    Planted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Errors,
    Conditioning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<BoxConfig> for BoundingBox {
    fn from(b: BoxConfig) -> Self {
        BoundingBox::new(b.x_min, b.y_min, b.x_max, b.y_max)
    }
}

fn default_case() -> CaseId {
    CaseId::Circle
}
fn default_k() -> usize {
    1
}
fn default_sigma() -> f64 {
    20.0
}
fn default_n() -> usize {
    10
}
fn default_levels() -> usize {
    4
}
fn default_tasks() -> Vec<Task> {
    vec![Task::Errors]
}
fn default_sigmas() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}

/// One experiment. Omitted keys take their defaults; `l` defaults to `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_case")]
    pub case: CaseId,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Cells per side on the coarsest mesh.
    #[serde(default = "default_n")]
    pub n_start: usize,
    /// Number of meshes; level `i` has `n_start · 2^i` cells per side.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Background box; each case has its own default.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoxConfig>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    /// Values used by the sigma sweep.
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn l(&self) -> usize {
        self.l.unwrap_or(self.k)
    }

    pub fn has_task(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    /// Cells per side of every level, coarse to fine.
    pub fn level_sizes(&self) -> Vec<usize> {
        (0..self.levels).map(|i| self.n_start << i).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(1..=3).contains(&self.k) {
            return bad(format!("k must be in 1..=3, got {}", self.k));
        }
        if !(1..=3).contains(&self.l()) {
            return bad(format!("l must be in 1..=3, got {}", self.l()));
        }
        for s in std::iter::once(&self.sigma).chain(&self.sigmas) {
            if !(s.is_finite() && *s >= 0.0) {
                return bad(format!("sigma must be finite and >= 0, got {s}"));
            }
        }
        if self.sigmas.is_empty() {
            return bad("sigmas must not be empty".into());
        }
        if self.n_start == 0 || self.levels == 0 {
            return bad("n_start and levels must be positive".into());
        }
        if self.levels > 12 {
            return bad(format!("levels {} is too many", self.levels));
        }
        if self.tasks.is_empty() {
            return bad("tasks must not be empty".into());
        }
        if let Some(b) = self.bbox {
            if !(b.x_max > b.x_min && b.y_max > b.y_min) || ![b.x_min, b.x_max, b.y_min, b.y_max].iter().all(|v| v.is_finite()) {
                return bad(format!("degenerate box {b:?}"));
            }
        }
        Ok(())
    }
}
