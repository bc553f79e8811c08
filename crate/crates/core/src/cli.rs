//! Command-line front end: presets, key=value scenario files, CSV and
//! summary emission.
//!
//! Exit codes: 0 when every check passes, 1 when a scenario fails its
//! checks, 2 for usage, configuration and i/o errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::entanglement::{
    egalitarian_check, entanglement_of_formation, entanglement_summary, fidelity, find_row,
    reference_for_row, table_row, TableRow, TABLE,
};
use crate::error::{DsapError, Result};
use crate::hamiltonian::{pulses, HamiltonianTerms};
use crate::network::{initial_state, NetworkConfig, StateVector};
use crate::oracle::{check_block_vs_full, check_counts, check_naive_partial_trace, OracleReport};
use crate::propagator::{evolve, Trajectory, DEFAULT_SAMPLES, NORM_DRIFT_LIMIT};
use crate::spectral::{track_dark_state, DarkStateTrack};
use crate::spin::SpinMagnitude;

pub const FIDELITY_THRESHOLD: f64 = 0.99;
pub const MIDDLE_POPULATION_LIMIT: f64 = 1e-3;
pub const ENTANGLEMENT_TOL: f64 = 1e-3;

/// Single-excitation entanglement for 2, 3, 4 leaves.
pub const W_ENTANGLEMENT: [f64; 3] = [1.0, 0.9183, 0.8113];

/// Preset names: `figXY` for figure panels, `table-<row>` for every row.
pub fn preset_names() -> Vec<String> {
    let figures = TABLE
        .iter()
        .filter(|r| !r.id.starts_with("spin"))
        .map(|r| format!("fig{}", r.id));
    let rows = TABLE.iter().map(|r| format!("table-{}", r.id));
    figures.chain(rows).collect()
}

pub fn preset_row(name: &str) -> Result<&'static TableRow> {
    let id = name
        .strip_prefix("table-")
        .or_else(|| name.strip_prefix("fig").filter(|id| !id.starts_with("spin")));
    id.and_then(table_row)
        .ok_or_else(|| DsapError::UnknownPreset(name.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub spin: SpinMagnitude,
    pub leaves: usize,
    /// `2m` of L in the initial state.
    pub left_projection: i32,
    pub field: f64,
    pub alpha: f64,
    pub omega_max: f64,
    pub tmax_product: f64,
    pub samples: usize,
    pub out: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            preset: None,
            spin: SpinMagnitude::HALF,
            leaves: 2,
            left_projection: 1,
            field: NetworkConfig::DEFAULT_FIELD,
            alpha: NetworkConfig::DEFAULT_ALPHA,
            omega_max: NetworkConfig::DEFAULT_OMEGA_MAX,
            tmax_product: NetworkConfig::DEFAULT_TMAX_PRODUCT,
            samples: DEFAULT_SAMPLES,
            out: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 10] = [
    "preset",
    "spin",
    "leaves",
    "left_projection",
    "field",
    "alpha",
    "omega_max",
    "tmax_product",
    "samples",
    "out",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| DsapError::Config(format!("bad value {value:?} for {key}")))
}

impl ScenarioConfig {
    pub fn from_preset(name: &str) -> Result<Self> {
        let row = preset_row(name)?;
        Ok(ScenarioConfig {
            preset: Some(name.to_string()),
            spin: row.spin(),
            leaves: row.leaves,
            left_projection: row.left_projection,
            ..Default::default()
        })
    }

    /// Flat `key = value` lines; `#` starts a comment. A `preset` key is
    /// applied first, other keys override it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DsapError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(DsapError::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(DsapError::Config(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
            pairs.push((key, value.trim().to_string()));
        }
        let mut config = match pairs.iter().find(|(k, _)| k == "preset") {
            Some((_, name)) => ScenarioConfig::from_preset(name)?,
            None => ScenarioConfig::default(),
        };
        for (key, value) in pairs.iter().filter(|(k, _)| k != "preset") {
            config.set(key, value)?;
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DsapError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        ScenarioConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "preset" => *self = ScenarioConfig::from_preset(value.trim())?,
            "spin" => self.spin = parse_value(key, value)?,
            "leaves" => self.leaves = parse_value(key, value)?,
            "left_projection" => self.left_projection = parse_value(key, value)?,
            "field" => self.field = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "omega_max" => self.omega_max = parse_value(key, value)?,
            "tmax_product" => self.tmax_product = parse_value(key, value)?,
            "samples" => self.samples = parse_value(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            _ => return Err(DsapError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        if self.omega_max.is_nan() || self.omega_max <= 0.0 || self.tmax_product.is_nan() || self.tmax_product <= 0.0 {
            return Err(DsapError::Config("omega_max and tmax_product must be > 0".into()));
        }
        let mut config = NetworkConfig::new(self.spin, self.leaves);
        config.field = self.field;
        config.alpha = self.alpha;
        config.omega_max = self.omega_max;
        let config = config.with_tmax_product(self.tmax_product);
        config.validate()?;
        if self.samples < 2 {
            return Err(DsapError::Config("samples must be >= 2".into()));
        }
        Ok(config)
    }

    pub fn excitations(&self) -> Result<usize> {
        self.spin.level(self.left_projection)?;
        Ok(self.spin.quanta(self.left_projection))
    }

    /// Tabulated final state for this spin, leaf count and excitation number.
    pub fn reference_row(&self) -> Option<&'static TableRow> {
        let n = self.excitations().ok()?;
        find_row(self.spin, self.leaves, n)
    }

    pub fn name(&self) -> String {
        self.preset.clone().unwrap_or_else(|| {
            format!(
                "s{}-n{}-m{}",
                self.spin.twice_s(),
                self.leaves,
                self.left_projection
            )
        })
    }
}

/// Entanglement target for a row: the W value for single-excitation and
/// spin-1/2 rows, otherwise the entropy of its closed-form state.
pub fn expected_entanglement(row: &'static TableRow) -> Result<f64> {
    if row.excitations() == 1 {
        return Ok(W_ENTANGLEMENT[row.leaves - 2]);
    }
    entanglement_of_formation(&reference_for_row(row)?.state, 0)
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub name: String,
    pub trajectory: Trajectory,
    pub track: DarkStateTrack,
    pub fidelity: Option<f64>,
    pub entanglement: f64,
    pub oracle: Vec<OracleReport>,
    pub failures: Vec<String>,
    pub summary: String,
    pub csv: String,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn final_state(&self) -> &StateVector {
        &self.trajectory.final_state
    }
}

pub fn trajectory_csv(trajectory: &Trajectory, track: &DarkStateTrack, t_max: f64) -> String {
    let block = trajectory.block();
    let spin = block.spin();
    let mut out = String::from("t,t_over_tmax,min_gap,adiabaticity_ratio,norm");
    for state in block.states() {
        out.push(',');
        out.push_str(&state.ket(spin));
    }
    out.push('\n');
    for k in 0..trajectory.times.len() {
        let t = trajectory.times[k];
        let _ = write!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            t,
            t / t_max,
            track.min_gaps[k],
            track.ratios[k],
            trajectory.norms[k]
        );
        for p in &trajectory.populations[k] {
            let _ = write!(out, ",{p:e}");
        }
        out.push('\n');
    }
    out
}

fn oracle_reports(config: &NetworkConfig, sc: &ScenarioConfig, final_state: &StateVector) -> Vec<OracleReport> {
    let mut reports = Vec::new();
    let mut push = |r: Result<OracleReport>, what: &str| match r {
        Ok(r) => reports.push(r),
        Err(e) => reports.push(OracleReport {
            scenario: format!("{what} skipped: {e}"),
            checks: Vec::new(),
            seed: None,
        }),
    };
    push(check_block_vs_full(config, sc.left_projection), "block_vs_full");
    push(check_counts(config), "counts");
    push(check_naive_partial_trace(final_state, &[2]), "partial_trace");
    reports
}

pub fn run(sc: &ScenarioConfig, with_oracle: bool) -> Result<RunReport> {
    let config = sc.network()?;
    let psi = initial_state(&config, sc.left_projection)?;
    let spin = config.spin;
    let trajectory = evolve(&config, &psi, sc.samples)?;
    let track = track_dark_state(&config, &psi, sc.samples)?;
    let final_state = &trajectory.final_state;
    let mut failures = Vec::new();
    let mut s = String::new();

    let _ = writeln!(s, "scenario: {}", sc.name());
    let _ = writeln!(s, "spin: {spin}");
    let _ = writeln!(s, "leaves: {}", config.leaves);
    if let Some(k) = psi.amplitudes().iter().position(|a| a.norm_sqr() > 0.5) {
        let _ = writeln!(s, "initial: {}", psi.block().state(k).ket(spin));
    }
    let _ = writeln!(s, "excitations: {}", sc.excitations()?);
    let _ = writeln!(s, "block_dim: {}", psi.len());
    let _ = writeln!(s, "field: {}", config.field);
    let _ = writeln!(s, "alpha: {}", config.alpha);
    let _ = writeln!(s, "omega_max: {}", config.omega_max);
    let _ = writeln!(s, "tmax_product: {}", config.tmax_product());
    let _ = writeln!(s, "samples: {}", sc.samples);
    let _ = writeln!(s, "steps: {}", trajectory.steps);
    let _ = writeln!(s, "final_state:");
    for (state, amp) in final_state.block().states().iter().zip(final_state.amplitudes().iter()) {
        if amp.norm_sqr() > 1e-8 {
            let _ = writeln!(
                s,
                "  {}  {:+.8} {:+.8}i  |a|^2={:.8}",
                state.ket(spin),
                amp.re,
                amp.im,
                amp.norm_sqr()
            );
        }
    }

    let ent = entanglement_summary(final_state)?;
    let mut fid = None;
    match sc.reference_row() {
        Some(row) => {
            let reference = reference_for_row(row)?;
            let f = fidelity(&reference.state, final_state)?;
            fid = Some(f);
            let target = expected_entanglement(row)?;
            let _ = writeln!(s, "reference: {}", row.id);
            let _ = writeln!(s, "fidelity: {f:.10}");
            let _ = writeln!(s, "reference_entanglement: {target:.6}");
            let _ = writeln!(s, "table_entanglement_annotation: {}", row.printed_entanglement);
            if f < FIDELITY_THRESHOLD {
                failures.push(format!("fidelity {f:.6} < {FIDELITY_THRESHOLD}"));
            }
            if (ent.raw - target).abs() > ENTANGLEMENT_TOL {
                failures.push(format!("entanglement {:.6} differs from {target:.6}", ent.raw));
            }
        }
        None => {
            let _ = writeln!(s, "reference: none");
        }
    }
    let _ = writeln!(s, "entanglement_bits: {:.6}", ent.raw);
    let _ = writeln!(s, "entanglement_per_log2_local_dim: {:.6}", ent.per_local_dim);
    let _ = writeln!(s, "entanglement_per_log2_rank: {:.6}", ent.per_rank);
    let eig: Vec<String> = ent
        .eigenvalues
        .iter()
        .filter(|v| **v > 1e-12)
        .map(|v| format!("{v:.8}"))
        .collect();
    let _ = writeln!(s, "reduced_eigenvalues: [{}]", eig.join(", "));

    match egalitarian_check(final_state) {
        Ok(rep) => {
            let _ = writeln!(s, "egalitarian:");
            for p in &rep.patterns {
                let pattern: Vec<String> = p.pattern.iter().map(|q| q.to_string()).collect();
                let _ = writeln!(
                    s,
                    "  ({})  states={}  mean_amplitude={:.8}",
                    pattern.join(","),
                    p.states,
                    p.mean_amplitude
                );
            }
            let _ = writeln!(s, "egalitarian_passes: {}", rep.passes());
            if !rep.passes() {
                failures.push("egalitarian ordering violated".into());
            }
        }
        Err(e) => {
            let _ = writeln!(s, "egalitarian: {e}");
        }
    }

    let middle = trajectory.max_middle_population();
    let drift = trajectory.max_norm_drift();
    let tracked = fidelity(track.final_vector(), final_state)?;
    let _ = writeln!(s, "max_middle_population: {middle:e}");
    let _ = writeln!(s, "max_norm_drift: {drift:e}");
    let _ = writeln!(s, "min_gap: {:e}", track.min_gap());
    let _ = writeln!(s, "max_adiabaticity_ratio: {:e}", track.max_ratio());
    let _ = writeln!(s, "tracked_final_fidelity: {tracked:.10}");
    let _ = writeln!(s, "track_broken: {}", track.broken);
    if middle >= MIDDLE_POPULATION_LIMIT {
        failures.push(format!("middle population {middle:e}"));
    }
    if drift >= NORM_DRIFT_LIMIT {
        failures.push(format!("norm drift {drift:e}"));
    }

    let oracle = if with_oracle {
        oracle_reports(&config, sc, final_state)
    } else {
        Vec::new()
    };
    for r in &oracle {
        s.push_str(&r.to_string());
        if !r.passed() {
            failures.push(format!("oracle {}", r.scenario));
        }
    }
    if failures.is_empty() {
        let _ = writeln!(s, "status: PASS");
    } else {
        let _ = writeln!(s, "status: FAIL ({})", failures.join("; "));
    }

    let csv = trajectory_csv(&trajectory, &track, config.t_max);
    Ok(RunReport {
        name: sc.name(),
        fidelity: fid,
        entanglement: ent.raw,
        trajectory,
        track,
        oracle,
        failures,
        summary: s,
        csv,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub tmax_product: f64,
    pub infidelity: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub monotone: bool,
    pub csv: String,
}

/// Final infidelity against the tabulated state for each `Ω_max t_max`.
pub fn sweep(sc: &ScenarioConfig, products: &[f64]) -> Result<SweepReport> {
    if products.len() < 2 {
        return Err(DsapError::SweepPoints);
    }
    let row = sc
        .reference_row()
        .ok_or_else(|| DsapError::Config("sweep needs a tabulated scenario".into()))?;
    let reference = reference_for_row(row)?;
    let points = products
        .par_iter()
        .map(|&p| {
            let point = ScenarioConfig {
                tmax_product: p,
                ..sc.clone()
            };
            let config = point.network()?;
            let psi = initial_state(&config, sc.left_projection)?;
            let traj = evolve(&config, &psi, sc.samples)?;
            let track = track_dark_state(&config, &psi, sc.samples)?;
            Ok(SweepPoint {
                tmax_product: p,
                infidelity: (1.0 - fidelity(&reference.state, &traj.final_state)?).max(0.0),
                max_ratio: track.max_ratio(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = points.windows(2).all(|w| w[1].infidelity <= w[0].infidelity);
    let mut csv = String::from("tmax_product,infidelity,max_adiabaticity_ratio\n");
    for p in &points {
        let _ = writeln!(csv, "{:e},{:e},{:e}", p.tmax_product, p.infidelity, p.max_ratio);
    }
    Ok(SweepReport {
        points,
        monotone,
        csv,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableLine {
    pub id: &'static str,
    pub preset: String,
    pub twice_s: u32,
    pub leaves: usize,
    pub excitations: usize,
    pub fidelity: f64,
    pub entanglement: f64,
    pub reference_entanglement: f64,
    pub printed_entanglement: f64,
    pub max_middle_population: f64,
    pub oracle_passed: Option<bool>,
    pub passed: bool,
}

pub fn table_line(row: &'static TableRow, samples: usize, with_oracle: bool) -> Result<TableLine> {
    let config = row.config();
    let psi = initial_state(&config, row.left_projection)?;
    let traj = evolve(&config, &psi, samples)?;
    let reference = reference_for_row(row)?;
    let fid = fidelity(&reference.state, &traj.final_state)?;
    let entanglement = entanglement_of_formation(&traj.final_state, 0)?;
    let target = expected_entanglement(row)?;
    let middle = traj.max_middle_population();
    let oracle_passed = if with_oracle {
        Some(check_block_vs_full(&config, row.left_projection)?.passed())
    } else {
        None
    };
    let passed = fid >= FIDELITY_THRESHOLD
        && (entanglement - target).abs() <= ENTANGLEMENT_TOL
        && middle < MIDDLE_POPULATION_LIMIT
        && oracle_passed != Some(false);
    Ok(TableLine {
        id: row.id,
        preset: format!("table-{}", row.id),
        twice_s: row.twice_s,
        leaves: row.leaves,
        excitations: row.excitations(),
        fidelity: fid,
        entanglement,
        reference_entanglement: target,
        printed_entanglement: row.printed_entanglement,
        max_middle_population: middle,
        oracle_passed,
        passed,
    })
}

/// Every tabulated scenario, run concurrently; lines follow table order.
pub fn table(samples: usize, with_oracle: bool) -> Vec<Result<TableLine>> {
    TABLE
        .par_iter()
        .map(|row| table_line(row, samples, with_oracle))
        .collect()
}

pub fn format_table(lines: &[Result<TableLine>]) -> String {
    let mut out = String::from(
        "preset               spin leaves N  fidelity      entanglement  reference     table(annotation)  max_M      status\n",
    );
    for (row, line) in TABLE.iter().zip(lines) {
        match line {
            Ok(l) => {
                let spin = SpinMagnitude::new(l.twice_s).expect("tabulated spin");
                let _ = writeln!(
                    out,
                    "{:<20} {:<4} {:<6} {:<2} {:<13.10} {:<13.6} {:<13.6} {:<18} {:<10.3e} {}",
                    l.preset,
                    spin.to_string(),
                    l.leaves,
                    l.excitations,
                    l.fidelity,
                    l.entanglement,
                    l.reference_entanglement,
                    l.printed_entanglement,
                    l.max_middle_population,
                    if l.passed { "PASS" } else { "FAIL" }
                );
            }
            Err(e) => {
                let _ = writeln!(out, "table-{:<14} error: {e}", row.id);
            }
        }
    }
    out
}

#[derive(Parser, Debug)]
#[command(name = "dsap", version, about = "Dark-state adiabatic passage on branched spin networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one scenario and write its trajectory CSV and summary.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also run the brute-force oracle checks.
        #[arg(long)]
        oracle: bool,
        /// Write H(t_max/2) of the scenario block as row,col,re,im CSV.
        #[arg(long)]
        dump_hamiltonian: Option<PathBuf>,
    },
    /// Final infidelity versus Ω_max·t_max.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated Ω_max·t_max values.
        #[arg(long, value_delimiter = ',', required = true)]
        sweep: Vec<f64>,
    },
    /// Reproduce every tabulated final state.
    Table {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long)]
        oracle: bool,
    },
    /// List preset names.
    Presets,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long)]
    preset: Option<String>,
    /// key = value scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (run) or CSV file (sweep).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tmax_product: Option<f64>,
    /// 1/2, 1, 3/2, ...
    #[arg(long)]
    spin: Option<String>,
    #[arg(long)]
    leaves: Option<usize>,
    /// 2m of L in the initial state.
    #[arg(long, allow_negative_numbers = true)]
    left_projection: Option<i32>,
    #[arg(long)]
    field: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut sc = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(p) = &self.preset {
            let out = sc.out.take();
            sc = ScenarioConfig::from_preset(p)?;
            sc.out = out;
        }
        if let Some(v) = &self.spin {
            sc.set("spin", v)?;
        }
        if let Some(v) = self.leaves {
            sc.leaves = v;
        }
        if let Some(v) = self.left_projection {
            sc.left_projection = v;
        }
        if let Some(v) = self.samples {
            sc.samples = v;
        }
        if let Some(v) = self.tmax_product {
            sc.tmax_product = v;
        }
        if let Some(v) = self.field {
            sc.field = v;
        }
        if let Some(v) = self.alpha {
            sc.alpha = v;
        }
        if let Some(v) = self.omega_max {
            sc.omega_max = v;
        }
        if let Some(v) = &self.out {
            sc.out = Some(v.clone());
        }
        sc.network()?;
        sc.excitations()?;
        Ok(sc)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| DsapError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> DsapError {
    DsapError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn dump_block_hamiltonian(sc: &ScenarioConfig, path: &Path) -> Result<()> {
    let config = sc.network()?;
    let psi = initial_state(&config, sc.left_projection)?;
    let terms = HamiltonianTerms::new(&config, psi.block().clone())?;
    let h = terms.at(pulses(&config, 0.5 * config.t_max)?);
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    h.write_csv(std::io::BufWriter::new(file)).map_err(|e| io_err(path, e))
}

enum Outcome {
    Pass,
    Fail,
}

fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(Outcome::Pass)
        }
        Command::Run {
            scenario,
            oracle,
            dump_hamiltonian,
        } => {
            let sc = scenario.resolve()?;
            if let Some(path) = &dump_hamiltonian {
                dump_block_hamiltonian(&sc, path)?;
            }
            let report = run(&sc, oracle)?;
            print!("{}", report.summary);
            if let Some(dir) = &sc.out {
                std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                write_file(&dir.join(format!("{}_trajectory.csv", report.name)), &report.csv)?;
                write_file(&dir.join(format!("{}_summary.txt", report.name)), &report.summary)?;
            }
            Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Sweep { scenario, sweep: products } => {
            let sc = scenario.resolve()?;
            let report = sweep(&sc, &products)?;
            print!("{}", report.csv);
            println!("monotone_nonincreasing: {}", report.monotone);
            if let Some(path) = &sc.out {
                write_file(path, &report.csv)?;
            }
            Ok(if report.monotone { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Table { out, samples, oracle } => {
            if samples < 2 {
                return Err(DsapError::Config("samples must be >= 2".into()));
            }
            let lines = table(samples, oracle);
            let text = format_table(&lines);
            print!("{text}");
            if let Some(path) = &out {
                write_file(path, &text)?;
            }
            let ok = lines.iter().all(|l| matches!(l, Ok(l) if l.passed));
            Ok(if ok { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Err(e @ (DsapError::Propagation { .. } | DsapError::Eigensolver(_))) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
