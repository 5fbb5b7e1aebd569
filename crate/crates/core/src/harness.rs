//! Scenario configuration, presets, and the drivers behind the command-line
//! tool: single runs, refinement sweeps, and their on-disk artifacts.
//!
//! A run directory holds `signals.csv`, optionally `forcing.csv` and
//! `certificate.json`, and a `manifest.json` that lists every file with its
//! SHA-256 checksum together with a hash of the configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::averaging::SectionAverager;
use crate::certifier::{
    CertificateReport, Certifier, Constant, ConstantSet, DeviationHistory, LhsNorms,
};
use crate::error::{CertifierError, Error, SolverError};
use crate::forcing::ForcingRecord;
use crate::geometry::{Profile, TubeGeometry, TubeSpec, ValidationReport};
use crate::pipeline::{CoupledModel, CoupledRun, CouplingOptions};
use crate::signals::{InletDrive, Signal};
use crate::wave3d::{WaveDiscretization, WaveField, WaveGrid};
use crate::webster1d::{WebsterDiscretization, WebsterState};

/// Environment variable naming the directory that receives run folders.
pub const OUTPUT_ROOT_VAR: &str = "TUBEWAVE_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "runs";
/// Minimum number of intervals for the geometry coefficient table.
const MIN_TABLE: usize = 64;

pub const PRESETS: [&str; 3] = ["straight-cylinder", "cosine-horn", "curved-bump"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeometryConfig {
    StraightCylinder { radius: f64 },
    CosineHorn { r0: f64, r1: f64 },
    CurvedBump { radius: f64, kappa_max: f64 },
    Custom { curvature: Profile, radius: Profile },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    WebsterOnly,
    WaveOnly,
    CoupledLeftPanel,
    CoupledRightPanel,
    Certify,
}

impl Mode {
    pub fn is_coupled(self) -> bool {
        matches!(
            self,
            Mode::CoupledLeftPanel | Mode::CoupledRightPanel | Mode::Certify
        )
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// A complete, self-describing run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Also the name of the run directory.
    pub name: String,
    pub geometry: GeometryConfig,
    #[serde(default = "one")]
    pub sound_speed: f64,
    #[serde(default = "one")]
    pub density: f64,
    #[serde(default)]
    pub wall_dissipation: f64,
    pub input: InletDrive,
    #[serde(default)]
    pub grid: WaveGrid,
    pub t_end: f64,
    /// Defaults to `h / (2c)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Certificate snapshots are taken every `snapshot_stride` steps.
    #[serde(default = "one_usize")]
    pub snapshot_stride: usize,
    pub mode: Mode,
    /// Only meaningful for the right-panel mode, where it must stay on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject_forcing: Option<bool>,
}

impl Scenario {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        scenario.check()?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("scenario serializes")))
    }

    /// Built-in scenarios by name (see [`PRESETS`]).
    pub fn preset(name: &str) -> Option<Self> {
        let pulse = Signal::gaussian(1.0, 0.3, 0.1);
        let nonplanar = InletDrive {
            signal: pulse.clone(),
            tilt: 0.3,
            radial: 0.2,
        };
        let base = |geometry, input, grid, mode| Scenario {
            name: name.to_string(),
            geometry,
            sound_speed: 1.0,
            density: 1.0,
            wall_dissipation: 0.0,
            input,
            grid,
            t_end: 3.0,
            dt: None,
            snapshot_stride: 1,
            mode,
            inject_forcing: None,
        };
        let s = match name {
            "straight-cylinder" => base(
                GeometryConfig::StraightCylinder { radius: 0.1 },
                InletDrive::planar(pulse),
                WaveGrid {
                    n_s: 16,
                    n_r: 4,
                    n_theta: 8,
                },
                Mode::Certify,
            ),
            "cosine-horn" => Scenario {
                wall_dissipation: 0.1,
                ..base(
                    GeometryConfig::CosineHorn { r0: 0.1, r1: 0.15 },
                    nonplanar,
                    WaveGrid::default(),
                    Mode::Certify,
                )
            },
            "curved-bump" => Scenario {
                wall_dissipation: 0.1,
                ..base(
                    GeometryConfig::CurvedBump {
                        radius: 0.12,
                        kappa_max: 4.0,
                    },
                    nonplanar,
                    WaveGrid {
                        n_s: 32,
                        n_r: 6,
                        n_theta: 12,
                    },
                    Mode::CoupledRightPanel,
                )
            },
            _ => return None,
        };
        Some(s)
    }

    fn check(&self) -> Result<(), Error> {
        let positive = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(path, format!("must be positive and finite, got {v}")))
            }
        };
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            || self.name.starts_with('.')
        {
            return Err(Error::config(
                "name",
                "must be non-empty and use only letters, digits, '-', '_' or '.'",
            ));
        }
        positive("sound_speed", self.sound_speed)?;
        positive("density", self.density)?;
        if !(self.wall_dissipation.is_finite() && self.wall_dissipation >= 0.0) {
            return Err(Error::config("wall_dissipation", "must be nonnegative and finite"));
        }
        match self.geometry {
            GeometryConfig::StraightCylinder { radius } => positive("geometry.radius", radius)?,
            GeometryConfig::CosineHorn { r0, r1 } => {
                positive("geometry.r0", r0)?;
                positive("geometry.r1", r1)?;
            }
            GeometryConfig::CurvedBump { radius, kappa_max } => {
                positive("geometry.radius", radius)?;
                if !kappa_max.is_finite() {
                    return Err(Error::config("geometry.kappa_max", "must be finite"));
                }
            }
            GeometryConfig::Custom { .. } => {}
        }
        self.grid
            .check()
            .map_err(|e| Error::config("grid", e.to_string()))?;
        positive("t_end", self.t_end)?;
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if self.snapshot_stride == 0 {
            return Err(Error::config("snapshot_stride", "must be at least 1"));
        }
        match (self.mode, self.inject_forcing) {
            (Mode::CoupledRightPanel, Some(false)) => {
                return Err(Error::config(
                    "inject_forcing",
                    "the right-panel mode requires forcing injection",
                ))
            }
            (Mode::CoupledRightPanel, _) | (_, None | Some(false)) => {}
            (_, Some(true)) => {
                return Err(Error::config(
                    "inject_forcing",
                    "forcing injection is only available in the right-panel mode",
                ))
            }
        }
        let amp = signal_scale(&self.input.signal);
        for (path, v) in [
            ("input.signal", amp),
            ("input.tilt", self.input.tilt),
            ("input.radial", self.input.radial),
        ] {
            if !v.is_finite() {
                return Err(Error::config(path, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn tube_spec(&self) -> TubeSpec {
        let shape = match &self.geometry {
            GeometryConfig::StraightCylinder { radius } => TubeSpec::straight_cylinder(*radius),
            GeometryConfig::CosineHorn { r0, r1 } => TubeSpec::cosine_horn(*r0, *r1),
            GeometryConfig::CurvedBump { radius, kappa_max } => {
                TubeSpec::curved_bump(*radius, *kappa_max)
            }
            GeometryConfig::Custom { curvature, radius } => TubeSpec {
                curvature: curvature.clone(),
                radius: radius.clone(),
                ..TubeSpec::straight_cylinder(1.0)
            },
        };
        shape.with_medium(self.sound_speed, self.density, self.wall_dissipation)
    }

    /// Builds the geometry and checks the standing assumptions on it.
    pub fn geometry(&self) -> Result<(TubeGeometry, ValidationReport), Error> {
        let geom = TubeGeometry::unchecked(self.tube_spec(), self.grid.n_s.max(MIN_TABLE))
            .map_err(|e| Error::config("geometry", e.to_string()))?;
        let report = geom.validate();
        if report.all_passed() {
            Ok((geom, report))
        } else {
            // Rebuild through the checked path to get the typed error.
            let err = TubeGeometry::build(self.tube_spec(), self.grid.n_s.max(MIN_TABLE))
                .expect_err("validation failed above");
            Err(Error::Assumption(err))
        }
    }

    pub fn time_step(&self) -> f64 {
        self.dt
            .unwrap_or(0.5 / (self.grid.n_s as f64 * self.sound_speed))
    }

    fn solver_err(&self, source: SolverError) -> Error {
        Error::Solver {
            scenario: self.name.clone(),
            source,
        }
    }

    fn certifier_err(&self, source: CertifierError) -> Error {
        Error::Certifier {
            scenario: self.name.clone(),
            source,
        }
    }
}

fn signal_scale(signal: &Signal) -> f64 {
    match *signal {
        Signal::GaussianPulse {
            amplitude,
            center,
            width,
            ..
        }
        | Signal::ToneBurst {
            amplitude,
            center,
            width,
            ..
        } => amplitude + center + width,
        Signal::Sin4Bump {
            amplitude,
            start,
            duration,
        } => amplitude + start + duration,
        Signal::Zero => 0.0,
    }
}

/// Named columns of equal length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.flush()
    }
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.17e}")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ForcingPeaks {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

/// Scalar results of a run, stored in the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_energy_webster: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_energy_wave: Option<f64>,
    /// Largest per-step energy balance residual over both solvers.
    pub max_balance_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracking: Option<LhsNorms>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracking_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing_peaks: Option<ForcingPeaks>,
    /// `‖f‖_{L²((0,T)×(0,1))}` of the Webster load.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load_norm: Option<f64>,
}

/// Everything a run produces before it is written to disk.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub signals: Table,
    pub forcing: Option<ForcingRecord>,
    pub certificate: Option<CertificateReport>,
    pub summary: Summary,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs a validated scenario in memory.
pub fn execute(scenario: &Scenario) -> Result<RunOutcome, Error> {
    let (geom, _) = scenario.geometry()?;
    match scenario.mode {
        Mode::WebsterOnly => run_webster(scenario, &geom),
        Mode::WaveOnly => run_wave(scenario, &geom),
        _ => run_coupled(scenario, &geom),
    }
}

fn run_webster(sc: &Scenario, geom: &TubeGeometry) -> Result<RunOutcome, Error> {
    let disc = WebsterDiscretization::assemble(geom, sc.grid.n_s).map_err(|e| sc.solver_err(e))?;
    // The inlet shape terms have zero mean, so the averaged input is the
    // signal itself.
    let signal = &sc.input.signal;
    let run = disc
        .solve(
            &WebsterState::zeros(disc.n_free()),
            sc.t_end,
            sc.time_step(),
            &|t| signal.eval(t),
            None,
            0,
        )
        .map_err(|e| sc.solver_err(e))?;
    let rows = (0..run.output.len())
        .map(|k| {
            vec![
                0.5 * (run.times[k] + run.times[k + 1]),
                run.input[k],
                run.output[k],
                run.energy[k + 1],
            ]
        })
        .collect();
    Ok(RunOutcome {
        scenario: sc.clone(),
        signals: Table {
            header: vec!["t", "u_bar", "y_webster", "energy_webster"],
            rows,
        },
        forcing: None,
        certificate: None,
        summary: Summary {
            steps: run.output.len(),
            dt: run.dt,
            final_energy_webster: run.energy.last().copied(),
            max_balance_residual: max_abs(&run.balance_residual),
            ..Default::default()
        },
    })
}

fn run_wave(sc: &Scenario, geom: &TubeGeometry) -> Result<RunOutcome, Error> {
    let disc = WaveDiscretization::assemble(geom, sc.grid).map_err(|e| sc.solver_err(e))?;
    let avg = SectionAverager::new(&disc);
    let n_steps = (sc.t_end / sc.time_step()).round().max(1.0) as usize;
    let dt = sc.t_end / n_steps as f64;
    let stepper = disc.stepper(dt).map_err(|e| sc.solver_err(e))?;
    let mut field = WaveField::zeros(&sc.grid);
    let mut rows = Vec::with_capacity(n_steps);
    let mut residual: f64 = 0.0;
    let mut energy = 0.0;
    for k in 0..n_steps {
        let t_mid = (k as f64 + 0.5) * dt;
        let u = disc.inlet_values(&sc.input, t_mid);
        let rep = stepper.step(&mut field, &u).map_err(|e| sc.solver_err(e))?;
        residual = residual.max(rep.balance_residual.abs());
        energy = rep.energy_after;
        rows.push(vec![
            t_mid,
            avg.avg_input(&u),
            avg.avg_input(&rep.output),
            energy,
        ]);
    }
    Ok(RunOutcome {
        scenario: sc.clone(),
        signals: Table {
            header: vec!["t", "u_bar", "y_wave", "energy_wave"],
            rows,
        },
        forcing: None,
        certificate: None,
        summary: Summary {
            steps: n_steps,
            dt,
            final_energy_wave: Some(energy),
            max_balance_residual: residual,
            ..Default::default()
        },
    })
}

fn coupled_signals(run: &CoupledRun) -> Table {
    let rows = (0..run.webster_output.len())
        .map(|k| {
            vec![
                (k as f64 + 0.5) * run.dt,
                run.input[k],
                run.webster_output[k],
                run.wave_output[k],
                run.error_h1[k + 1],
                run.error_rate_l2[k + 1],
            ]
        })
        .collect();
    Table {
        header: vec!["t", "u_bar", "y_webster", "y_wave", "error_h1", "error_rate_l2"],
        rows,
    }
}

fn run_coupled(sc: &Scenario, geom: &TubeGeometry) -> Result<RunOutcome, Error> {
    let model = CoupledModel::new(geom, sc.grid).map_err(|e| sc.solver_err(e))?;
    let opts = CouplingOptions {
        t_end: sc.t_end,
        dt: sc.time_step(),
        inject_forcing: sc.mode == Mode::CoupledRightPanel,
    };
    let (run, certificate) = if sc.mode == Mode::Certify {
        let cert = Certifier::new(geom, &model.wave).map_err(|e| sc.certifier_err(e))?;
        let mut history = DeviationHistory::default();
        let mut failure = None;
        let n_steps = (sc.t_end / opts.dt).round().max(1.0) as usize;
        let run = model
            .run(&sc.input, opts, |level| {
                let take = level.index % sc.snapshot_stride == 0 || level.index == n_steps;
                if take && failure.is_none() {
                    match cert.snapshot(level) {
                        Ok(s) => history.push(s),
                        Err(e) => failure = Some(e),
                    }
                }
            })
            .map_err(|e| sc.solver_err(e))?;
        if let Some(e) = failure {
            return Err(sc.certifier_err(e));
        }
        let report = CertificateReport::new(
            &sc.name,
            sc.grid,
            sc.t_end,
            &cert.constants,
            lhs_of(&run),
            run.forcing.load_norm(),
            Some(&history),
        )
        .map_err(|e| sc.certifier_err(e))?;
        (run, Some(report))
    } else {
        let run = model
            .run(&sc.input, opts, |_| {})
            .map_err(|e| sc.solver_err(e))?;
        (run, None)
    };
    let (f, g, h) = run.forcing.max_norms();
    let residual = max_abs(&run.wave_balance_residual).max(max_abs(&run.webster_balance_residual));
    let summary = Summary {
        steps: run.webster_output.len(),
        dt: run.dt,
        final_energy_webster: run.webster_energy.last().copied(),
        final_energy_wave: run.wave_energy.last().copied(),
        max_balance_residual: residual,
        tracking: Some(lhs_of(&run)),
        tracking_error: Some(run.tracking_error()),
        forcing_peaks: Some(ForcingPeaks { f, g, h }),
        load_norm: Some(run.forcing.load_norm()),
    };
    Ok(RunOutcome {
        scenario: sc.clone(),
        signals: coupled_signals(&run),
        forcing: Some(run.forcing),
        certificate,
        summary,
    })
}

fn lhs_of(run: &CoupledRun) -> LhsNorms {
    let (displacement_h1, rate_l2, output_gap) = run.tracking_pieces();
    LhsNorms {
        displacement_h1,
        rate_l2,
        output_gap,
    }
}

/// Geometry constants, plus the estimated ones on the scenario grid.
pub fn constants(scenario: &Scenario) -> Result<Vec<Constant>, Error> {
    let (geom, _) = scenario.geometry()?;
    let disc = WaveDiscretization::assemble(&geom, scenario.grid)
        .map_err(|e| scenario.solver_err(e))?;
    let cert = Certifier::new(&geom, &disc).map_err(|e| scenario.certifier_err(e))?;
    Ok(cert.constants.list())
}

/// Geometry constants only; no discretization is built.
pub fn exact_constants(scenario: &Scenario) -> Result<Vec<Constant>, Error> {
    let (geom, _) = scenario.geometry()?;
    Ok(ConstantSet::exact_only(&geom).list())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub mode: Mode,
    pub config_hash: String,
    pub version: &'static str,
    pub summary: serde_json::Value,
    pub files: Vec<ManifestEntry>,
}

/// The output root from the environment, or `runs` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn finish_manifest(
    dir: &Path,
    scenario: &Scenario,
    files: &[&str],
    summary: serde_json::Value,
) -> Result<Manifest, Error> {
    let mut entries = Vec::with_capacity(files.len());
    for name in files {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        scenario: scenario.name.clone(),
        mode: scenario.mode,
        config_hash: scenario.config_hash(),
        version: env!("CARGO_PKG_VERSION"),
        summary,
        files: entries,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Writes a finished run into `dir` and returns its manifest.
pub fn write_outcome(outcome: &RunOutcome, dir: &Path) -> Result<Manifest, Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec!["config.json", "signals.csv"];
    write_json(&dir.join("config.json"), &outcome.scenario)?;
    let path = dir.join("signals.csv");
    outcome.signals.write_csv(&path).map_err(io_err(&path))?;
    if let Some(forcing) = &outcome.forcing {
        let path = dir.join("forcing.csv");
        forcing
            .write_csv(&path)
            .map_err(|e| io_err(&path)(std::io::Error::other(e)))?;
        files.push("forcing.csv");
    }
    if let Some(cert) = &outcome.certificate {
        write_json(&dir.join("certificate.json"), cert)?;
        files.push("certificate.json");
    }
    let summary = serde_json::to_value(&outcome.summary).expect("summary serializes");
    finish_manifest(dir, &outcome.scenario, &files, summary)
}

/// Runs a scenario and writes it under `root/<name>`.
pub fn run_to_dir(scenario: &Scenario, root: &Path) -> Result<(PathBuf, RunOutcome), Error> {
    let outcome = execute(scenario)?;
    let dir = root.join(&scenario.name);
    write_outcome(&outcome, &dir)?;
    Ok((dir, outcome))
}

/// One refinement level of a sweep. Undefined entries are NaN.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub grid: WaveGrid,
    pub dt: f64,
    /// Error of the model output: against the travelling-wave solution for
    /// Webster runs on uniform straight tubes, otherwise against the next
    /// finer level.
    pub output_error: f64,
    pub output_order: f64,
    pub tracking_error: f64,
    pub tracking_order: f64,
    pub effectivity: f64,
}

/// Returns whether the output error is measured against an exact solution.
fn has_exact_output(sc: &Scenario) -> bool {
    sc.mode == Mode::WebsterOnly
        && matches!(sc.geometry, GeometryConfig::StraightCylinder { .. })
        && sc.wall_dissipation == 0.0
}

fn output_column(sc: &Scenario) -> &'static str {
    match sc.mode {
        Mode::WebsterOnly => "y_webster",
        Mode::WaveOnly => "y_wave",
        _ => "y_webster",
    }
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Halves every spacing and the time step per level, starting from the
/// scenario as given.
pub fn sweep(scenario: &Scenario, levels: usize) -> Result<Vec<ConvergenceRow>, Error> {
    if levels < 2 {
        return Err(Error::config("levels", "a sweep needs at least 2 levels"));
    }
    let mut outcomes = Vec::with_capacity(levels);
    let mut sc = scenario.clone();
    sc.dt = Some(scenario.time_step());
    for _ in 0..levels {
        outcomes.push(execute(&sc)?);
        sc.grid = sc.grid.refined();
        sc.dt = sc.dt.map(|dt| 0.5 * dt);
    }
    let col = output_column(scenario);
    let outputs: Vec<(Vec<f64>, Vec<f64>)> = outcomes
        .iter()
        .map(|o| {
            (
                o.signals.column("t").unwrap_or_default(),
                o.signals.column(col).unwrap_or_default(),
            )
        })
        .collect();
    let mut errors = vec![f64::NAN; levels];
    for k in 0..levels {
        let (t, y) = &outputs[k];
        if has_exact_output(scenario) {
            let delay = 2.0 / scenario.sound_speed;
            let reference: Vec<f64> = t.iter().map(|&t| scenario.input.signal.eval(t - delay)).collect();
            errors[k] = relative_l2(y, &reference);
        } else if k + 1 < levels {
            // Each coarse midpoint is the centre of two consecutive fine ones.
            let fine = &outputs[k + 1].1;
            let paired: Vec<f64> = fine.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
            errors[k] = relative_l2(y, &paired);
        }
    }
    let order = |v: &[f64], k: usize| {
        if k + 1 < v.len() && v[k] > 0.0 && v[k + 1] > 0.0 {
            (v[k] / v[k + 1]).log2()
        } else {
            f64::NAN
        }
    };
    let tracking: Vec<f64> = outcomes
        .iter()
        .map(|o| o.summary.tracking_error.unwrap_or(f64::NAN))
        .collect();
    Ok(outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| ConvergenceRow {
            level: k,
            grid: o.scenario.grid,
            dt: o.summary.dt,
            output_error: errors[k],
            output_order: order(&errors, k),
            tracking_error: tracking[k],
            tracking_order: order(&tracking, k),
            effectivity: o
                .certificate
                .as_ref()
                .map_or(f64::NAN, |c| c.effectivity.thm2),
        })
        .collect())
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    Table {
        header: vec![
            "level",
            "n_s",
            "n_r",
            "n_theta",
            "dt",
            "output_error",
            "output_order",
            "tracking_error",
            "tracking_order",
            "effectivity",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.level as f64,
                    r.grid.n_s as f64,
                    r.grid.n_r as f64,
                    r.grid.n_theta as f64,
                    r.dt,
                    r.output_error,
                    r.output_order,
                    r.tracking_error,
                    r.tracking_order,
                    r.effectivity,
                ]
            })
            .collect(),
    }
}

/// Runs a sweep and writes `convergence.csv` under `root/<name>-sweep`.
pub fn sweep_to_dir(
    scenario: &Scenario,
    levels: usize,
    root: &Path,
) -> Result<(PathBuf, Vec<ConvergenceRow>), Error> {
    let rows = sweep(scenario, levels)?;
    let dir = root.join(format!("{}-sweep", scenario.name));
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_json(&dir.join("config.json"), scenario)?;
    let path = dir.join("convergence.csv");
    convergence_table(&rows).write_csv(&path).map_err(io_err(&path))?;
    let summary = serde_json::json!({ "levels": levels });
    finish_manifest(&dir, scenario, &["config.json", "convergence.csv"], summary)?;
    Ok((dir, rows))
}
