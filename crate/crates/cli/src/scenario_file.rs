//! Sectioned `key = value` scenario files.
//!
//! ```text
//! # comment
//! [wave]
//! rho_minus = 1.0
//! strength = 0.2
//! ```
//!
//! Every key has a default, so a file may be empty. The resolved key set is
//! echoed back in canonical order and hashed to identify the run.

use std::collections::HashMap;
use std::path::Path;

use kinwave::collision::KernelConfig;
use kinwave::euler_waves::{EndStates, EulerState};
use kinwave::field::PoissonBoundary;
use kinwave::mesh::Mesh;
use kinwave::solver::{
    CollisionMode, Envelope, Perturbation, PerturbationKind, Reconstruction, Scenario, SpeciesMode, ViscosityLaw,
};
use kinwave::velocity::VelocityGrid;
use kinwave::{Error, Result};
use sha2::{Digest, Sha256};

/// `(section, key, default)`; an empty default marks a key that is only used when present.
const SCHEMA: &[(&str, &str, &str)] = &[
    ("mesh", "geometry", "line"),
    ("mesh", "x1_min", "-60"),
    ("mesh", "x1_max", "340"),
    ("mesh", "nx", "200"),
    ("mesh", "half_width", "1"),
    ("mesh", "ny", "8"),
    ("grid", "n", "16"),
    ("grid", "half_width", "7"),
    ("grid", "center_v1", "0"),
    ("grid", "center_v2", "0"),
    ("grid", "center_v3", "0"),
    ("kernel", "gamma", ""),
    ("kernel", "s", "0.5"),
    ("kernel", "theta_min", "0.04908738521234052"),
    ("kernel", "n_theta", "8"),
    ("kernel", "n_phi", "8"),
    ("kernel", "budget", "5e10"),
    ("wave", "rho_minus", "1"),
    ("wave", "u1_minus", "0"),
    ("wave", "theta_minus", "1.5"),
    ("wave", "strength", ""),
    ("wave", "w_plus", ""),
    ("wave", "rho_plus", ""),
    ("wave", "u1_plus", ""),
    ("wave", "theta_plus", ""),
    ("run", "collision", "bgk"),
    ("run", "species", "single"),
    ("run", "t_end", "200"),
    ("run", "cfl", "0.8"),
    ("run", "output_every", "10"),
    ("run", "reconstruction", "minmod"),
    ("run", "poisson", "neumann"),
    ("run", "seed", "0"),
    ("run", "viscosity_coefficient", "0.0365"),
    ("run", "viscosity_exponent", "0.5"),
    ("perturbation", "kind", "none"),
    ("perturbation", "amplitude", "0.01"),
    ("perturbation", "envelope", "gaussian"),
    ("perturbation", "center", "0"),
    ("perturbation", "width", "10"),
    ("perturbation", "mode", "1"),
    ("diagnostics", "k", "1"),
    ("diagnostics", "m", "1"),
    ("output", "snapshot_every", "50"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Snapshot CSV cadence in time units (rounded to diagnostics output times).
    pub snapshot_every: f64,
}

#[derive(Debug, Clone)]
pub struct ParsedScenario {
    pub scenario: Scenario<f64>,
    pub output: OutputConfig,
    /// `section.key = value` for every effective setting, in schema order.
    pub resolved: Vec<(String, String)>,
}

impl ParsedScenario {
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (k, v) in &self.resolved {
            let (section, key) = k.split_once('.').unwrap_or(("", k));
            if section != current {
                out.push_str(&format!("[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{key} = {v}\n"));
        }
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Raw {
    entries: HashMap<(String, String), Entry>,
    sections: HashMap<String, usize>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut sections = HashMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| parse_error(line, format!("malformed section header `{content}`")))?
                    .trim()
                    .to_string();
                if !SCHEMA.iter().any(|(s, _, _)| *s == name) {
                    return Err(parse_error(line, format!("unknown section [{name}]")));
                }
                if sections.insert(name.clone(), line).is_some() {
                    return Err(parse_error(line, format!("section [{name}] appears twice")));
                }
                current = Some(name);
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_error(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let section = current
                .as_ref()
                .ok_or_else(|| parse_error(line, format!("key `{key}` appears before any section header")))?;
            if !SCHEMA.iter().any(|(s, k, _)| s == section && *k == key) {
                let known: Vec<&str> = SCHEMA.iter().filter(|(s, _, _)| s == section).map(|(_, k, _)| *k).collect();
                return Err(parse_error(
                    line,
                    format!("unknown key `{key}` in [{section}]; known keys: {}", known.join(", ")),
                ));
            }
            if value.is_empty() {
                return Err(parse_error(line, format!("empty value for `{key}`")));
            }
            let slot = (section.clone(), key.to_string());
            if let Some(prev) = entries.get(&slot) {
                let prev: &Entry = prev;
                return Err(parse_error(line, format!("`{key}` already set on line {}", prev.line)));
            }
            entries.insert(
                slot,
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(Self { entries, sections })
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    /// Line of a key, or of its section header, or 0 when neither is present.
    fn line(&self, section: &str, key: &str) -> usize {
        self.entry(section, key)
            .map(|e| e.line)
            .or_else(|| self.sections.get(section).copied())
            .unwrap_or(0)
    }

    fn text(&self, section: &str, key: &str) -> Option<String> {
        self.entry(section, key).map(|e| e.value.clone()).or_else(|| {
            SCHEMA
                .iter()
                .find(|(s, k, _)| *s == section && *k == key)
                .and_then(|(_, _, d)| (!d.is_empty()).then(|| d.to_string()))
        })
    }

    fn f64(&self, section: &str, key: &str) -> Result<f64> {
        let text = self.text(section, key).expect("keys with a default");
        let v: f64 = text
            .parse()
            .map_err(|_| parse_error(self.line(section, key), format!("`{key}` expects a number, got `{text}`")))?;
        if !v.is_finite() {
            return Err(parse_error(self.line(section, key), format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn opt_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(_) => self.f64(section, key).map(Some),
        }
    }

    fn usize(&self, section: &str, key: &str) -> Result<usize> {
        let text = self.text(section, key).expect("keys with a default");
        text.parse().map_err(|_| {
            parse_error(
                self.line(section, key),
                format!("`{key}` expects a nonnegative integer, got `{text}`"),
            )
        })
    }

    fn choice<'a>(&self, section: &str, key: &str, options: &[&'a str]) -> Result<&'a str> {
        let text = self.text(section, key).expect("keys with a default");
        options.iter().copied().find(|o| *o == text).ok_or_else(|| {
            parse_error(
                self.line(section, key),
                format!("`{key}` must be one of {}, got `{text}`", options.join(" | ")),
            )
        })
    }

    fn positive(&self, section: &str, key: &str) -> Result<f64> {
        let v = self.f64(section, key)?;
        if v <= 0.0 {
            return Err(parse_error(self.line(section, key), format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }
}

fn at_line(line: usize, err: Error) -> Error {
    match err {
        Error::Parse { .. } => err,
        other => parse_error(line, other.to_string()),
    }
}

pub fn parse_scenario_file(path: &Path) -> Result<ParsedScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read scenario file {}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<ParsedScenario> {
    let raw = Raw::parse(text)?;

    let geometry = raw.choice("mesh", "geometry", &["line", "duct"])?;
    let (x1_min, x1_max) = (raw.f64("mesh", "x1_min")?, raw.f64("mesh", "x1_max")?);
    let nx = raw.usize("mesh", "nx")?;
    let mesh = match geometry {
        "line" => Mesh::line(x1_min, x1_max, nx),
        _ => Mesh::duct(x1_min, x1_max, nx, raw.positive("mesh", "half_width")?, raw.usize("mesh", "ny")?),
    }
    .map_err(|e| at_line(raw.line("mesh", "nx"), e))?;

    let center = [
        raw.f64("grid", "center_v1")?,
        raw.f64("grid", "center_v2")?,
        raw.f64("grid", "center_v3")?,
    ];
    let grid = VelocityGrid::with_center(raw.positive("grid", "half_width")?, raw.usize("grid", "n")?, center)
        .map_err(|e| at_line(raw.line("grid", "n"), e))?;
    if mesh.is_duct() && !grid.is_symmetric(1) {
        return Err(parse_error(
            raw.line("grid", "center_v2"),
            "duct geometry needs a velocity grid symmetric under v₂ ↦ −v₂ (set center_v2 = 0)",
        ));
    }

    let species = match raw.choice("run", "species", &["single", "two"])? {
        "single" => SpeciesMode::Single,
        _ => SpeciesMode::TwoSpecies,
    };
    let mut kernel = match species {
        SpeciesMode::Single => KernelConfig::boltzmann_default(),
        SpeciesMode::TwoSpecies => KernelConfig::vpb_default(),
    };
    if let Some(g) = raw.opt_f64("kernel", "gamma")? {
        kernel.gamma = g;
    }
    kernel.s = raw.f64("kernel", "s")?;
    kernel.theta_min = raw.positive("kernel", "theta_min")?;
    kernel.n_theta = raw.usize("kernel", "n_theta")?;
    kernel.n_phi = raw.usize("kernel", "n_phi")?;
    kernel.budget = raw.positive("kernel", "budget")?;

    let minus = EulerState::new(
        raw.f64("wave", "rho_minus")?,
        raw.f64("wave", "u1_minus")?,
        raw.f64("wave", "theta_minus")?,
    )
    .map_err(|e| at_line(raw.line("wave", "rho_minus"), e))?;
    let strength = raw.opt_f64("wave", "strength")?;
    let w_plus = raw.opt_f64("wave", "w_plus")?;
    let plus_keys = ["rho_plus", "u1_plus", "theta_plus"];
    let plus_given = plus_keys.iter().filter(|k| raw.entry("wave", k).is_some()).count();
    let modes = [strength.is_some(), w_plus.is_some(), plus_given > 0].iter().filter(|b| **b).count();
    if modes > 1 {
        return Err(parse_error(
            raw.line("wave", "strength").max(raw.line("wave", "w_plus")),
            "give at most one of `strength`, `w_plus` or the full plus state",
        ));
    }
    let ends = if let Some(delta) = strength {
        EndStates::with_strength(minus, delta).map_err(|e| at_line(raw.line("wave", "strength"), e))?
    } else if let Some(w) = w_plus {
        EndStates::build_3_rarefaction(minus, w).map_err(|e| at_line(raw.line("wave", "w_plus"), e))?
    } else if plus_given > 0 {
        let line = plus_keys.iter().map(|k| raw.line("wave", k)).min().unwrap_or(0);
        if plus_given < 3 {
            return Err(parse_error(line, "the plus state needs rho_plus, u1_plus and theta_plus"));
        }
        let plus = EulerState::new(
            raw.f64("wave", "rho_plus")?,
            raw.f64("wave", "u1_plus")?,
            raw.f64("wave", "theta_plus")?,
        )
        .map_err(|e| at_line(line, e))?;
        let ends = EndStates::new(minus, plus).map_err(|e| at_line(line, e))?;
        if !ends.is_constant() {
            ends.check_rarefaction(1e-8).map_err(|e| at_line(line, e))?;
        }
        ends
    } else {
        EndStates::constant(minus)?
    };

    let mut sc = Scenario::new(mesh, grid, ends);
    sc.species = species;
    sc.kernel = kernel;
    sc.collision = match raw.choice("run", "collision", &["bgk", "quadrature", "off"])? {
        "bgk" => CollisionMode::Bgk,
        "quadrature" => CollisionMode::Quadrature,
        _ => CollisionMode::Off,
    };
    sc.t_end = raw.f64("run", "t_end")?;
    sc.cfl = raw.positive("run", "cfl")?;
    sc.output_every = raw.positive("run", "output_every")?;
    sc.reconstruction = match raw.choice("run", "reconstruction", &["upwind", "minmod"])? {
        "upwind" => Reconstruction::Upwind,
        _ => Reconstruction::Minmod,
    };
    sc.poisson = match raw.choice("run", "poisson", &["neumann", "periodic"])? {
        "neumann" => PoissonBoundary::Neumann,
        _ => PoissonBoundary::Periodic,
    };
    sc.seed = raw.usize("run", "seed")? as u64;
    sc.viscosity = ViscosityLaw {
        coefficient: raw.positive("run", "viscosity_coefficient")?,
        exponent: raw.f64("run", "viscosity_exponent")?,
    };
    let kind = match raw.choice("perturbation", "kind", &["none", "microscopic", "macroscopic", "charge"])? {
        "none" => PerturbationKind::None,
        "microscopic" => PerturbationKind::Microscopic,
        "macroscopic" => PerturbationKind::Macroscopic,
        _ => PerturbationKind::Charge,
    };
    let envelope = match raw.choice("perturbation", "envelope", &["gaussian", "cosine", "uniform"])? {
        "gaussian" => Envelope::Gaussian {
            center: raw.f64("perturbation", "center")?,
            width: raw.positive("perturbation", "width")?,
        },
        "cosine" => Envelope::Cosine {
            mode: raw.usize("perturbation", "mode")?,
        },
        _ => Envelope::Uniform,
    };
    sc.perturbation = Perturbation {
        kind,
        amplitude: raw.f64("perturbation", "amplitude")?,
        envelope,
    };
    sc.weight_k = raw.f64("diagnostics", "k")?;
    sc.derivative_cap = raw.usize("diagnostics", "m")?;
    let output = OutputConfig {
        snapshot_every: raw.positive("output", "snapshot_every")?,
    };
    sc.validate()?;

    let mut resolved = Vec::new();
    for (section, key, _) in SCHEMA {
        let value = match (*section, *key) {
            ("kernel", "gamma") => Some(format!("{}", sc.kernel.gamma)),
            ("wave", "rho_plus") => Some(format!("{}", sc.ends.plus.rho)),
            ("wave", "u1_plus") => Some(format!("{}", sc.ends.plus.u1)),
            ("wave", "theta_plus") => Some(format!("{}", sc.ends.plus.theta)),
            ("wave", "strength") | ("wave", "w_plus") => None,
            _ => raw.text(section, key),
        };
        if let Some(v) = value {
            resolved.push((format!("{section}.{key}"), v));
        }
    }
    Ok(ParsedScenario {
        scenario: sc,
        output,
        resolved,
    })
}
