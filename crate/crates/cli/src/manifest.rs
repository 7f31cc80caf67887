//! Reproducibility record written next to every run's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use kinwave::{Error, Result};

use crate::scenario_file::ParsedScenario;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRecord {
    pub gamma: f64,
    pub s: f64,
    pub theta_min: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationRecord {
    pub geometry: String,
    pub x1_min: f64,
    pub x1_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub velocity_points_per_axis: usize,
    pub velocity_half_width: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub kernel: KernelRecord,
    pub discretization: DiscretizationRecord,
    /// Every effective scenario setting, defaults included.
    pub scenario: Vec<(String, String)>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub steps: usize,
    pub conv_metric_slope: Option<f64>,
    pub ek_slope: Option<f64>,
}

impl RunManifest {
    pub fn new(parsed: &ParsedScenario, dt: f64) -> Self {
        let sc = &parsed.scenario;
        let (x1_min, x1_max) = sc.mesh.extent();
        Self {
            scenario_hash: parsed.hash(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: sc.seed,
            kernel: KernelRecord {
                gamma: sc.kernel.gamma,
                s: sc.kernel.s,
                theta_min: sc.kernel.theta_min,
                n_theta: sc.kernel.n_theta,
                n_phi: sc.kernel.n_phi,
            },
            discretization: DiscretizationRecord {
                geometry: if sc.mesh.is_duct() { "duct" } else { "line" }.to_string(),
                x1_min,
                x1_max,
                nx: sc.mesh.nx(),
                ny: sc.mesh.ny(),
                velocity_points_per_axis: sc.grid.points_per_axis(),
                velocity_half_width: sc.grid.half_width(),
                dt,
            },
            scenario: parsed.resolved.clone(),
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
            steps: 0,
            conv_metric_slope: None,
            ek_slope: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Input(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }
}
