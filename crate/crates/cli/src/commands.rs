//! Implementations behind the `molphase` subcommands.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use molphase_core::berry::{self, Branch};
use molphase_core::circuit::{self, MeasureBasis};
use molphase_core::engine::{self, normalize_angle, ProtocolConfig, Readout, DEFAULT_SHOTS};
use molphase_core::{PhaseRecord, ProtocolOutcome, ShotResult, VibronicSystem};

use crate::CliError;

/// Column order of the sweep CSV.
pub const CSV_HEADER: &str = "phi_rad,overlap_re,overlap_im,sigma_x,sigma_y,phase_arg_rad,phase_unwrapped_rad,shots";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub phi_total: f64,
    pub n_steps: usize,
    /// `None` means exact expectation values.
    pub shots: Option<u64>,
    pub seed: u64,
    pub noise_p: Option<f64>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            phi_total: TAU,
            n_steps: 1,
            shots: Some(DEFAULT_SHOTS),
            seed: 0,
            noise_p: None,
            format: OutputFormat::Csv,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn exact(phi_total: f64) -> Self {
        Self {
            phi_total,
            shots: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        validate_phi(self.phi_total)?;
        if self.n_steps == 0 {
            return Err(CliError::Usage("--steps must be at least 1".into()));
        }
        if self.shots == Some(0) {
            return Err(CliError::Usage("--shots must be at least 1".into()));
        }
        if let Some(p) = self.noise_p {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Usage(format!("--noise-p {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn protocol(&self, phi_total: f64, seed: u64) -> ProtocolConfig {
        ProtocolConfig {
            phi_total,
            n_steps: self.n_steps,
            readout: match self.shots {
                None => Readout::Exact,
                Some(shots) => Readout::Shots { shots, seed },
            },
            noise_p: self.noise_p,
        }
    }
}

fn validate_phi(phi: f64) -> Result<(), CliError> {
    if !(phi.is_finite() && phi > 0.0 && phi <= TAU * (1.0 + 4.0 * f64::EPSILON)) {
        return Err(CliError::Usage(format!("phi = {phi} is outside (0, 2π]")));
    }
    Ok(())
}

/// Runs the σx and σy protocols at `cfg.phi_total`.
pub fn cmd_run(cfg: &RunConfig) -> Result<ProtocolOutcome, CliError> {
    cfg.validate()?;
    Ok(engine::measure_phase(&cfg.protocol(cfg.phi_total, cfg.seed))?)
}

/// `{kπ/6 : k = 1..12}`
pub fn default_grid() -> Vec<f64> {
    (1..=12).map(|k| k as f64 * PI / 6.0).collect()
}

/// One record per grid point, ordered by φ. After sorting, point `i` in shot
/// mode uses seed `cfg.seed + 2i` (and `+1` for its σy circuit).
pub fn cmd_sweep(cfg: &RunConfig, grid: &[f64]) -> Result<Vec<PhaseRecord>, CliError> {
    if grid.is_empty() {
        return Err(CliError::Usage("sweep grid is empty".into()));
    }
    cfg.validate()?;
    for &phi in grid {
        validate_phi(phi)?;
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let seed = cfg.seed.wrapping_add(2 * i as u64);
            Ok(engine::measure_phase(&cfg.protocol(phi, seed))?.record)
        })
        .collect()
}

pub fn records_to_csv(records: &[PhaseRecord]) -> Result<String, CliError> {
    let mut writer = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in records {
        writer.serialize(r)?;
    }
    if records.is_empty() {
        return Ok(format!("{CSV_HEADER}\n"));
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn records_to_json(records: &[PhaseRecord]) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(records)? + "\n")
}

#[derive(Serialize)]
struct RunJson<'a> {
    #[serde(flatten)]
    record: &'a PhaseRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_counts: Option<&'a ShotResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_counts: Option<&'a ShotResult>,
}

pub fn render_run(outcome: &ProtocolOutcome, format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => records_to_csv(std::slice::from_ref(&outcome.record)),
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&RunJson {
            record: &outcome.record,
            x_counts: outcome.x_counts.as_ref(),
            y_counts: outcome.y_counts.as_ref(),
        })? + "\n"),
    }
}

pub fn render_records(records: &[PhaseRecord], format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => records_to_csv(records),
        OutputFormat::Json => records_to_json(records),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeChoice {
    /// The literal half-angle branch.
    None,
    /// Branch multiplied by e^{iφ/2}, single-valued around the loop.
    HalfAngle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub phi_total: f64,
    pub loop_points: usize,
    pub gauge: GaugeChoice,
    pub h: f64,
    pub samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            phi_total: TAU,
            loop_points: 12,
            gauge: GaugeChoice::None,
            h: 1e-5,
            samples: 64,
        }
    }
}

pub const ORACLE_AGREEMENT: f64 = 1e-6;
pub const TRANSPORT_BOUND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub phi_total: f64,
    pub closed: bool,
    pub gauge: GaugeChoice,
    pub protocol_phase: f64,
    pub oracle_phase: Option<f64>,
    pub loop_points: usize,
    pub connection_samples: Vec<(f64, f64)>,
    pub max_abs_connection: f64,
    /// max |A(φ) − f′(φ)| where f is the applied gauge.
    pub transport_deviation: f64,
}

impl OracleReport {
    pub fn transport_ok(&self) -> bool {
        self.transport_deviation < TRANSPORT_BOUND
    }

    pub fn agrees(&self) -> bool {
        match self.oracle_phase {
            Some(oracle) => normalize_angle(self.protocol_phase - oracle).abs() <= ORACLE_AGREEMENT,
            None => true,
        }
    }

    pub fn passed(&self) -> bool {
        self.agrees() && self.transport_ok()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "phi_total          {}", self.phi_total);
        let gauge = match self.gauge {
            GaugeChoice::None => "none",
            GaugeChoice::HalfAngle => "phi/2",
        };
        let _ = writeln!(s, "gauge              {gauge}");
        let _ = writeln!(s, "protocol phase     {}", self.protocol_phase);
        match self.oracle_phase {
            Some(p) => {
                let _ = writeln!(s, "loop phase (N={})  {p}", self.loop_points);
            }
            None => {
                let _ = writeln!(s, "loop phase         open path, no holonomy claim");
            }
        }
        let _ = writeln!(s, "max |A(phi)|       {:e}", self.max_abs_connection);
        let _ = writeln!(s, "max |A - f'|       {:e}", self.transport_deviation);
        let _ = writeln!(s, "connection samples");
        for (phi, a) in &self.connection_samples {
            let _ = writeln!(s, "  {phi:.6}  {a:+.3e}");
        }
        let verdict = if !self.closed {
            "report only"
        } else if self.passed() {
            "agree"
        } else {
            "DISAGREE"
        };
        let _ = writeln!(s, "result             {verdict}");
        s
    }
}

/// Compares the exact protocol phase with the discrete loop phase and checks
/// the connection along the path.
pub fn cmd_oracle(cfg: &OracleConfig) -> Result<OracleReport, CliError> {
    validate_phi(cfg.phi_total)?;
    if cfg.loop_points < 3 {
        return Err(CliError::Usage("--loop-points must be at least 3".into()));
    }
    if cfg.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let closed = (cfg.phi_total - TAU).abs() <= 1e-12;
    let protocol_phase = engine::measure_phase(&ProtocolConfig::exact(cfg.phi_total, 1))?
        .record
        .phase_arg;

    let (branch, gauge_slope) = match cfg.gauge {
        GaugeChoice::None => (Branch::model_upper(), 0.0),
        GaugeChoice::HalfAngle => (berry::gauge_transform(&Branch::model_upper(), |phi| 0.5 * phi), 0.5),
    };
    let oracle_phase = if closed {
        Some(berry::pancharatnam_phase(&branch, cfg.loop_points)?)
    } else {
        None
    };
    let connection_samples = (0..cfg.samples)
        .map(|k| {
            let phi = cfg.phi_total * k as f64 / cfg.samples as f64;
            berry::connection(&branch, phi, cfg.h).map(|a| (phi, a))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_abs_connection = connection_samples.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
    let transport_deviation = connection_samples
        .iter()
        .map(|(_, a)| (a - gauge_slope).abs())
        .fold(0.0, f64::max);

    Ok(OracleReport {
        phi_total: cfg.phi_total,
        closed,
        gauge: cfg.gauge,
        protocol_phase,
        oracle_phase,
        loop_points: cfg.loop_points,
        connection_samples,
        max_abs_connection,
        transport_deviation,
    })
}

/// Transpiled σx and σy protocol circuits as OpenQASM 2.0 text.
pub fn qasm_pair(phi_total: f64, n_steps: usize) -> Result<(String, String), CliError> {
    validate_phi(phi_total)?;
    if n_steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let steps = circuit::uniform_steps(phi_total, n_steps);
    let emit = |basis| -> Result<String, CliError> {
        let c = circuit::build_protocol(&steps, basis)?;
        Ok(circuit::to_qasm(&circuit::transpile(&c)?)?)
    };
    Ok((emit(MeasureBasis::X)?, emit(MeasureBasis::Y)?))
}

/// Writes `<stem>_x.qasm` and `<stem>_y.qasm` and returns their paths.
pub fn cmd_qasm(phi_total: f64, n_steps: usize, stem: &Path) -> Result<[PathBuf; 2], CliError> {
    let (x, y) = qasm_pair(phi_total, n_steps)?;
    let path = |suffix: &str| {
        let mut name = stem.file_name().map(|s| s.to_os_string()).unwrap_or_else(|| "protocol".into());
        name.push(suffix);
        stem.with_file_name(name)
    };
    let paths = [path("_x.qasm"), path("_y.qasm")];
    write_file(&paths[0], &x)?;
    write_file(&paths[1], &y)?;
    Ok(paths)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub order: usize,
    pub modes: Vec<String>,
    pub q: Vec<f64>,
    pub levels: Vec<f64>,
}

impl LevelReport {
    pub fn render(&self, format: OutputFormat) -> Result<String, CliError> {
        match format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            OutputFormat::Csv => {
                let mut s = String::from("index,level\n");
                for (i, e) in self.levels.iter().enumerate() {
                    let _ = writeln!(s, "{i},{e}");
                }
                Ok(s)
            }
        }
    }
}

/// Split levels of the vibronic model in `model_file` at coordinates `q`.
pub fn cmd_vibronic(model_file: &Path, q: &[f64]) -> Result<LevelReport, CliError> {
    let text = std::fs::read_to_string(model_file)?;
    let system: VibronicSystem = text.parse()?;
    vibronic_levels(&system, q)
}

pub fn vibronic_levels(system: &VibronicSystem, q: &[f64]) -> Result<LevelReport, CliError> {
    if q.len() != system.couplings().len() {
        return Err(CliError::Usage(format!(
            "--q has {} values but the model has {} modes",
            q.len(),
            system.couplings().len()
        )));
    }
    Ok(LevelReport {
        order: system.order(),
        modes: system.mode_labels().to_vec(),
        q: q.to_vec(),
        levels: system.split_levels(q)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(RunConfig::exact(TAU).validate().is_ok());
        assert!(RunConfig::exact(0.0).validate().is_err());
        assert!(RunConfig::exact(7.0).validate().is_err());
        let mut cfg = RunConfig::exact(1.0);
        cfg.n_steps = 0;
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        let cfg = RunConfig {
            shots: Some(0),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            noise_p: Some(1.5),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_header_matches_schema() {
        let records = cmd_sweep(&RunConfig::exact(TAU), &[PI, TAU]).unwrap();
        let csv = records_to_csv(&records).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().ends_with(",exact"));
        assert_eq!(records_to_csv(&[]).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn sweep_output_is_ordered_by_phi() {
        let records = cmd_sweep(&RunConfig::exact(TAU), &[TAU, PI / 3.0, PI]).unwrap();
        let phis: Vec<f64> = records.iter().map(|r| r.phi).collect();
        assert_eq!(phis, vec![PI / 3.0, PI, TAU]);
    }

    #[test]
    fn open_path_is_report_only() {
        let report = cmd_oracle(&OracleConfig {
            phi_total: PI,
            ..OracleConfig::default()
        })
        .unwrap();
        assert!(!report.closed);
        assert!(report.oracle_phase.is_none());
        assert!(report.passed());
        assert!(report.render().contains("open path, no holonomy claim"));
    }

    #[test]
    fn qasm_rejects_zero_steps() {
        assert!(matches!(qasm_pair(TAU, 0), Err(CliError::Usage(_))));
    }
}
