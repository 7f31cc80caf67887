//! Subcommand implementations behind the `kinwave` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use kinwave::collision::{transport_coefficients, BurnettSet, CollisionOperator, KernelConfig, LinearizedOperator};
use kinwave::diagnostics::{fitted_slopes, DiagnosticsRow};
use kinwave::euler_waves::{
    burgers_decay_report, decay_report, lambda3, riemann_invariants_3, EndStates, SmoothedBurgers, WaveProfile,
};
use kinwave::field::manufactured_poisson_error;
use kinwave::num::loglog_slope;
use kinwave::solver::{wall_density_gradient, SolutionSnapshot, Solver};
use kinwave::velocity::{MacroState, VelocityGrid};
use kinwave::{Error, Result};

use crate::csv_io::{fmt17, read_csv, write_csv};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::scenario_file::{parse_scenario, parse_scenario_file, ParsedScenario};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const WALL_FILE: &str = "wall.csv";

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Input(format!("{}: {e}", dir.display())))
}

fn load(scenario: Option<&Path>) -> Result<ParsedScenario> {
    match scenario {
        Some(p) => parse_scenario_file(p),
        None => parse_scenario(""),
    }
}

/// `n` points geometrically spaced on `[a, b]`.
pub fn geometric_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n.max(2) - 1) as f64).exp())
        .collect()
}

pub struct WaveOptions {
    /// Scenario whose `[wave]` and `[mesh]` sections give end states and sample points.
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario's wave strength.
    pub strength: Option<f64>,
    pub out: PathBuf,
    /// Times of the decay table.
    pub times: Vec<f64>,
    /// Times of the profile samples.
    pub profile_times: Vec<f64>,
    /// Exponents of the decay table; `inf` is allowed.
    pub qs: Vec<f64>,
    /// Decay of the unit Burgers jump `w₋ = 0, w₊ = 1` instead of the Euler wave.
    pub unit_jump: bool,
}

impl Default for WaveOptions {
    fn default() -> Self {
        Self {
            scenario: None,
            strength: None,
            out: PathBuf::from("wave_out"),
            times: geometric_times(10.0, 1e4, 25),
            profile_times: vec![0.0, 10.0, 50.0, 200.0],
            qs: vec![1.0, 2.0, 4.0, f64::INFINITY],
            unit_jump: false,
        }
    }
}

/// Reference decay exponent of `‖∂ₓw̄‖_{L^q}`.
pub fn reference_slope(q: f64) -> f64 {
    if q.is_infinite() {
        -1.0
    } else {
        -1.0 + 1.0 / q
    }
}

/// Profile samples, decay table and fitted slopes; returns printable slope lines.
pub fn wave(opts: &WaveOptions) -> Result<Vec<String>> {
    let mut parsed = load(opts.scenario.as_deref())?;
    if let Some(delta) = opts.strength {
        parsed.scenario.ends = EndStates::with_strength(parsed.scenario.ends.minus, delta)?;
    }
    ensure_dir(&opts.out)?;
    let hash = parsed.hash();
    let ends = parsed.scenario.ends;
    let report = if opts.unit_jump {
        burgers_decay_report(&SmoothedBurgers::new(0.0, 1.0)?, &opts.times, &opts.qs)?
    } else if ends.is_constant() {
        return Err(Error::Config(
            "the end states are equal; give a wave strength or use --unit-jump".into(),
        ));
    } else {
        let profile = WaveProfile::smoothed(ends)?;
        let mesh = &parsed.scenario.mesh;
        let mut rows = Vec::new();
        for &t in &opts.profile_times {
            for i in 0..mesh.nx() {
                let x = mesh.x1(i);
                let s = profile.evaluate(t, x)?;
                let (r1, entropy) = riemann_invariants_3(&s)?;
                let r = profile.fan_state(t, x)?;
                rows.push(vec![t, x, s.rho, s.u1, s.theta, lambda3(&s)?, r1, entropy, r.rho, r.u1, r.theta]);
            }
        }
        write_csv(
            &opts.out.join("wave_profile.csv"),
            Some(&hash),
            &["t", "x1", "rho", "u1", "theta", "lambda3", "R1", "S", "rho_r", "u1_r", "theta_r"],
            rows,
        )?;
        decay_report(&profile, &opts.times, &opts.qs)?
    };
    let rows = report.rows.iter().map(|r| {
        let s = report.slopes_for(r.q).copied();
        let slope = |f: fn(&kinwave::euler_waves::DecaySlopes) -> f64| s.as_ref().map_or(f64::NAN, f);
        vec![
            r.t,
            r.q,
            r.derivative,
            slope(|s| s.derivative),
            r.second_derivative,
            slope(|s| s.second_derivative),
            r.distance,
            slope(|s| s.distance),
            reference_slope(r.q),
        ]
    });
    write_csv(
        &opts.out.join("decay.csv"),
        Some(&hash),
        &[
            "t",
            "q",
            "norm",
            "fitted_slope",
            "second_derivative",
            "second_derivative_slope",
            "distance",
            "distance_slope",
            "reference_slope",
        ],
        rows,
    )?;
    Ok(report
        .slopes
        .iter()
        .map(|s| {
            format!(
                "q = {:>4}: |w_x| slope {:+.4} (reference {:+.4}), |w_xx| slope {:+.4}, distance slope {:+.4}",
                s.q,
                s.derivative,
                reference_slope(s.q),
                s.second_derivative,
                s.distance
            )
        })
        .collect())
}

pub struct CollisionOptions {
    pub out: PathBuf,
    pub points: usize,
    pub half_width: f64,
    pub kernel: KernelConfig<f64>,
    pub thetas: Vec<f64>,
}

/// Burnett inner-product tables and transport coefficients at each temperature.
pub fn collision(opts: &CollisionOptions) -> Result<Vec<String>> {
    ensure_dir(&opts.out)?;
    let grid = VelocityGrid::new(opts.half_width, opts.points)?;
    let op = CollisionOperator::new(&grid, opts.kernel)?;
    let mut table = String::from("theta,label,value\n");
    let mut coeffs = Vec::new();
    let mut lines = Vec::new();
    for &theta in &opts.thetas {
        let state = MacroState::new(1.0, [0.0; 3], theta)?;
        let lin = LinearizedOperator::new(&op, state)?;
        let set = BurnettSet::build(&lin)?;
        for (label, value) in set.table() {
            table.push_str(&format!("{},{label},{}\n", fmt17(theta), fmt17(value)));
        }
        let tc = transport_coefficients(&set)?;
        coeffs.push(vec![theta, tc.viscosity, tc.conductivity]);
        lines.push(format!(
            "theta = {theta}: viscosity {:.6e}, heat conductivity {:.6e}",
            tc.viscosity, tc.conductivity
        ));
    }
    std::fs::write(opts.out.join("burnett_table.csv"), table).map_err(|e| Error::Input(e.to_string()))?;
    write_csv(
        &opts.out.join("transport.csv"),
        None,
        &["theta", "viscosity", "conductivity"],
        coeffs,
    )?;
    Ok(lines)
}

/// Manufactured Poisson errors under mesh refinement.
pub fn field_test(out: &Path, sizes: &[usize]) -> Result<Vec<String>> {
    ensure_dir(out)?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut prev: Option<f64> = None;
    for &n in sizes {
        let err = manufactured_poisson_error(n, 3.0)?;
        let order = prev.map_or(f64::NAN, |p| (p / err).log2());
        rows.push(vec![n as f64, 6.0 / n as f64, err, order]);
        lines.push(format!("nx = {n:>5}: L2 error {err:.6e}, observed order {order:.3}"));
        prev = Some(err);
    }
    write_csv(&out.join("poisson_convergence.csv"), None, &["nx", "h", "l2_error", "order"], rows)?;
    Ok(lines)
}

fn snapshot_rows(snap: &SolutionSnapshot<f64>, solver: &Solver<f64>) -> Vec<Vec<f64>> {
    let mesh = &solver.scenario().mesh;
    (0..mesh.cells())
        .map(|c| {
            let (x1, x2) = mesh.center(c);
            let m = &snap.macros[c];
            let phi = snap.field.as_ref().map_or(0.0, |f| f.phi[c]);
            vec![snap.time, x1, x2, m.rho, m.u[0], m.u[1], m.theta, phi]
        })
        .collect()
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub rows: Vec<DiagnosticsRow>,
}

/// Runs a scenario file and writes snapshots, diagnostics and the manifest into `out`.
pub fn run(scenario: &Path, out: &Path) -> Result<RunOutcome> {
    let parsed = parse_scenario_file(scenario)?;
    run_parsed(&parsed, out)
}

pub fn run_parsed(parsed: &ParsedScenario, out: &Path) -> Result<RunOutcome> {
    ensure_dir(out)?;
    let start = Instant::now();
    let solver = Solver::new(parsed.scenario.clone())?;
    let mut manifest = RunManifest::new(parsed, solver.dt());
    let hash = parsed.hash();
    let snapshot_every = parsed.output.snapshot_every;
    let mut next_snapshot = 0.0;
    let mut outputs = Vec::new();
    let mut wall = Vec::new();
    let eps = 1e-9 * solver.dt();
    let summary = solver.run(|snap, _| {
        if snap.time >= next_snapshot - eps || snap.time >= solver.scenario().t_end - eps {
            let name = format!("snapshot_{:04}.csv", outputs.len());
            write_csv(
                &out.join(&name),
                Some(&hash),
                &["t", "x1", "x2", "rho", "u1", "u2", "theta", "phi"],
                snapshot_rows(snap, &solver),
            )?;
            outputs.push(name);
            while next_snapshot <= snap.time + eps {
                next_snapshot += snapshot_every;
            }
        }
        if solver.scenario().mesh.is_duct() {
            wall.push(vec![
                snap.time,
                solver.wall_u2(snap),
                wall_density_gradient(snap, &solver.scenario().mesh),
            ]);
        }
        Ok(())
    });
    let summary = match summary {
        Ok(s) => s,
        Err(e) => {
            manifest.outputs = outputs;
            manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
            manifest.write(out)?;
            return Err(e);
        }
    };
    write_csv(
        &out.join(DIAGNOSTICS_FILE),
        Some(&hash),
        &DiagnosticsRow::HEADER,
        summary.rows.iter().map(|r| r.values().to_vec()),
    )?;
    outputs.push(DIAGNOSTICS_FILE.to_string());
    if !wall.is_empty() {
        write_csv(&out.join(WALL_FILE), Some(&hash), &["t", "wall_u2", "wall_drho_dx2"], wall)?;
        outputs.push(WALL_FILE.to_string());
    }
    manifest.outputs = outputs;
    manifest.steps = summary.steps;
    manifest.conv_metric_slope = summary.conv_metric_slope.is_finite().then_some(summary.conv_metric_slope);
    manifest.ek_slope = summary.ek_slope.is_finite().then_some(summary.ek_slope);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(out)?;
    Ok(RunOutcome {
        manifest,
        rows: summary.rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportLine {
    pub dir: PathBuf,
    pub manifest_hash: Option<String>,
    pub conv_metric_slope: f64,
    pub ek_slope: f64,
    pub final_conv_metric: f64,
    pub final_ek: f64,
}

/// Collects every directory under `root` (itself included) that holds a diagnostics CSV.
fn diagnostics_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::Input(format!("{} is not a directory", root.display())));
    }
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join(DIAGNOSTICS_FILE).is_file() {
            found.push(dir.clone());
        }
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::Input(format!("{}: {e}", dir.display())))?;
        for entry in entries.flatten() {
            if entry.path().is_dir() {
                stack.push(entry.path());
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Fitted-slope summary of every run below `root`; writes `report.csv` into `root`.
pub fn report(root: &Path) -> Result<Vec<ReportLine>> {
    let dirs = diagnostics_dirs(root)?;
    if dirs.is_empty() {
        return Err(Error::Input(format!(
            "no {DIAGNOSTICS_FILE} found under {}: nothing to report",
            root.display()
        )));
    }
    let mut lines = Vec::new();
    for dir in dirs {
        let table = read_csv(&dir.join(DIAGNOSTICS_FILE))?;
        if dir.join(MANIFEST_FILE).is_file() {
            let manifest = RunManifest::read(&dir)?;
            if table.manifest_hash.as_deref() != Some(manifest.scenario_hash.as_str()) {
                return Err(Error::Input(format!(
                    "{}: diagnostics were written under a different manifest",
                    dir.display()
                )));
            }
        }
        let col = |name: &str| {
            table
                .column(name)
                .ok_or_else(|| Error::Input(format!("{}: missing column `{name}`", dir.display())))
        };
        let (t, conv, ek) = (col("t")?, col("conv_metric")?, col("Ek")?);
        let rows: Vec<DiagnosticsRow> = t
            .iter()
            .zip(conv.iter().zip(&ek))
            .map(|(t, (c, e))| DiagnosticsRow {
                t: *t,
                conv_metric: *c,
                ek: *e,
                ..blank_row()
            })
            .collect();
        let (cs, es) = fitted_slopes(&rows);
        lines.push(ReportLine {
            dir: dir.clone(),
            manifest_hash: table.manifest_hash.clone(),
            conv_metric_slope: cs,
            ek_slope: es,
            final_conv_metric: conv.last().copied().unwrap_or(f64::NAN),
            final_ek: ek.last().copied().unwrap_or(f64::NAN),
        });
    }
    let body: String = std::iter::once("run,manifest,conv_metric_slope,ek_slope,final_conv_metric,final_ek".to_string())
        .chain(lines.iter().map(|l| {
            format!(
                "{},{},{},{},{},{}",
                l.dir.display(),
                l.manifest_hash.as_deref().unwrap_or(""),
                fmt17(l.conv_metric_slope),
                fmt17(l.ek_slope),
                fmt17(l.final_conv_metric),
                fmt17(l.final_ek)
            )
        }))
        .map(|l| l + "\n")
        .collect();
    std::fs::write(root.join("report.csv"), body).map_err(|e| Error::Input(e.to_string()))?;
    Ok(lines)
}

fn blank_row() -> DiagnosticsRow {
    DiagnosticsRow {
        t: 0.0,
        mass: f64::NAN,
        h: f64::NAN,
        eta_integral: f64::NAN,
        macro_sq: f64::NAN,
        ek: f64::NAN,
        ek_macro: f64::NAN,
        ek_g: f64::NAN,
        ek_f: f64::NAN,
        ek_field: f64::NAN,
        dk: f64::NAN,
        conv_metric: f64::NAN,
        grad_phi: f64::NAN,
        charge_norm: f64::NAN,
        clipped: 0,
        t_stencil: 0,
    }
}

/// Log-log slope of a column against `1 + t` (used by tests and scripts).
pub fn column_slope(t: &[f64], y: &[f64]) -> f64 {
    let xs: Vec<f64> = t.iter().map(|t| 1.0 + t).collect();
    loglog_slope(&xs, y)
}
