//! Command-line front end.
//!
//! Every command produces one table. Tables are written as CSV with a
//! single `#` comment line holding the resolved configuration as JSON, a
//! header row, and values printed to 12 significant digits. Output goes to
//! `--out` (written only once the whole table is ready) or to stdout.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::Value;

use crate::dynamics::{
    analyze_oscillation, evolve_lindblad, evolve_pure, rabi_experiment, time_grid, DensityMatrix, PureState,
    DEFAULT_DT,
};
use crate::model::{build_cavity, build_dimer, effective_hamiltonian, CavityConfig, LossScope};
use crate::nonhermitian::{
    anti_pt_check, block_decompose, build_hc, coupling_factor_from_r0, coupling_vs_position, decay_rates_closed,
    find_exceptional_points, h1_matrix, h2_matrix, probe_couplings, reflection_threshold, supermodes,
};
use crate::numerics::{eigenvalues, CMatrix};
use crate::polaritons::{build_three_level, linewidth_vs_gamma, polariton_spectrum};
use crate::scattering::{dimer_reflection_closed, invert_r0, r0_closed, scatter, sweep, Branch, SweepGrid};
use crate::Error;

pub const COMMANDS: [&str; 12] = [
    "mirror-spectrum",
    "r0-curve",
    "phase-diagram",
    "supermodes-vs-r0",
    "coupling-map",
    "coupling-vs-w",
    "eta-curve",
    "transmission",
    "polaritons",
    "linewidth-scan",
    "dynamics",
    "validate",
];

const NUMERIC_KEYS: [&str; 9] = ["omega", "gamma", "delta_omega", "gamma_prime", "x_p", "grid_min", "grid_max", "t_max", "dt"];

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments or configuration; exit status 1.
    Usage(String),
    /// The computation itself failed; exit status 2.
    Physics(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Physics(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Physics(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug, Default)]
#[command(
    name = "antipt-cavity",
    about = "Waveguide QED simulations of atom-dimer mirrors, the four-atom cavity and a probe atom",
    after_help = "Commands: mirror-spectrum, r0-curve, phase-diagram, supermodes-vs-r0 (alias supermodes), \
coupling-map, coupling-vs-w, eta-curve, transmission, polaritons, linewidth-scan, dynamics, validate.\n\
Defaults: omega 0, gamma 0.1, delta_omega 0, gamma_prime 0, x_p 0.25, t_max 40, dt 0.05, loss_scope all.\n\
Grid defaults depend on the command. Flags override values from --config."
)]
struct Args {
    /// Experiment to run
    #[arg(value_name = "COMMAND")]
    positional: Option<String>,
    #[arg(long = "command")]
    command: Option<String>,
    /// Intra-mirror coupling Ω
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// Probe waveguide decay γ
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Probe detuning δω
    #[arg(long = "delta_omega", allow_negative_numbers = true)]
    delta_omega: Option<f64>,
    /// Free-space loss γ′
    #[arg(long = "gamma_prime", allow_negative_numbers = true)]
    gamma_prime: Option<f64>,
    /// Probe position in wavelengths
    #[arg(long = "x_p", allow_negative_numbers = true)]
    x_p: Option<f64>,
    #[arg(long = "grid_min", allow_negative_numbers = true)]
    grid_min: Option<f64>,
    #[arg(long = "grid_max", allow_negative_numbers = true)]
    grid_max: Option<f64>,
    #[arg(long = "grid_count")]
    grid_count: Option<usize>,
    #[arg(long = "t_max", allow_negative_numbers = true)]
    t_max: Option<f64>,
    /// Sample spacing of dynamics output
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// all | probe-only
    #[arg(long = "loss_scope")]
    loss_scope: Option<String>,
    /// Flat JSON object with any of the keys above
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub omega: f64,
    pub gamma: f64,
    pub delta_omega: f64,
    pub gamma_prime: f64,
    pub x_p: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_count: usize,
    pub t_max: f64,
    pub dt: f64,
    pub loss_scope: LossScope,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn grid(&self) -> Result<SweepGrid, CliError> {
        SweepGrid::new(self.grid_min, self.grid_max, self.grid_count).map_err(|e| usage(e.to_string()))
    }

    fn cavity(&self) -> CavityConfig {
        CavityConfig::new(self.omega)
            .with_probe(self.gamma, self.delta_omega)
            .at_position(self.x_p)
            .with_loss(self.gamma_prime, self.loss_scope)
    }
}

fn canonical_command(name: &str) -> Result<String, CliError> {
    let name = if name == "supermodes" { "supermodes-vs-r0" } else { name };
    if COMMANDS.contains(&name) {
        Ok(name.to_string())
    } else {
        Err(usage(format!("unknown command '{name}'")))
    }
}

fn default_grid(command: &str) -> (f64, f64, usize) {
    match command {
        "mirror-spectrum" => (-5.0, 5.0, 1001),
        "r0-curve" => (0.0, 8.0, 801),
        "phase-diagram" => (-4.8, 4.8, 961),
        "supermodes-vs-r0" | "eta-curve" => (0.01, 1.0, 100),
        "coupling-map" => (0.005, 0.995, 199),
        "coupling-vs-w" => (0.02, 3.98, 199),
        "transmission" => (-3.0, 3.0, 2001),
        "polaritons" => (-3.0, 3.0, 601),
        "linewidth-scan" => (0.005, 0.5, 100),
        _ => (0.0, 1.0, 2),
    }
}

fn parse_loss_scope(s: &str) -> Result<LossScope, CliError> {
    match s {
        "all" => Ok(LossScope::All),
        "probe-only" => Ok(LossScope::ProbeOnly),
        other => Err(usage(format!("key 'loss_scope' must be 'all' or 'probe-only', got '{other}'"))),
    }
}

/// File values first; flags then override them.
fn merge_file(args: &mut Args, path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config '{}': {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("config '{}' is not valid JSON: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(usage("config file must be a flat JSON object"));
    };
    for (key, v) in &map {
        let as_str = || v.as_str().map(str::to_string).ok_or_else(|| usage(format!("key '{key}' must be a string")));
        let as_num = || v.as_f64().ok_or_else(|| usage(format!("key '{key}' must be numeric")));
        match key.as_str() {
            "command" => {
                args.command.get_or_insert(as_str()?);
            }
            "loss_scope" => {
                args.loss_scope.get_or_insert(as_str()?);
            }
            "out" => {
                args.out.get_or_insert(PathBuf::from(as_str()?));
            }
            "grid_count" => {
                let n = v.as_u64().ok_or_else(|| usage("key 'grid_count' must be a non-negative integer"))?;
                args.grid_count.get_or_insert(n as usize);
            }
            k if NUMERIC_KEYS.contains(&k) => {
                let x = as_num()?;
                let slot = match k {
                    "omega" => &mut args.omega,
                    "gamma" => &mut args.gamma,
                    "delta_omega" => &mut args.delta_omega,
                    "gamma_prime" => &mut args.gamma_prime,
                    "x_p" => &mut args.x_p,
                    "grid_min" => &mut args.grid_min,
                    "grid_max" => &mut args.grid_max,
                    "t_max" => &mut args.t_max,
                    _ => &mut args.dt,
                };
                slot.get_or_insert(x);
            }
            _ => return Err(usage(format!("unknown key '{key}'"))),
        }
    }
    Ok(())
}

fn resolve(mut args: Args) -> Result<RunConfig, CliError> {
    if let Some(path) = args.config.clone() {
        // the positional command counts as a flag and must win over the file
        if args.command.is_none() {
            args.command = args.positional.take();
        }
        merge_file(&mut args, &path)?;
    }
    let command = match (args.positional.as_deref(), args.command.as_deref()) {
        (Some(a), Some(b)) if canonical_command(a)? != canonical_command(b)? => {
            return Err(usage(format!("conflicting commands '{a}' and '{b}'")))
        }
        (Some(c), _) | (None, Some(c)) => canonical_command(c)?,
        (None, None) => return Err(usage("missing required parameter 'command'")),
    };
    let (gmin, gmax, gcount) = default_grid(&command);
    let cfg = RunConfig {
        omega: args.omega.unwrap_or(0.0),
        gamma: args.gamma.unwrap_or(0.1),
        delta_omega: args.delta_omega.unwrap_or(0.0),
        gamma_prime: args.gamma_prime.unwrap_or(0.0),
        x_p: args.x_p.unwrap_or(0.25),
        grid_min: args.grid_min.unwrap_or(gmin),
        grid_max: args.grid_max.unwrap_or(gmax),
        grid_count: args.grid_count.unwrap_or(gcount),
        t_max: args.t_max.unwrap_or(40.0),
        dt: args.dt.unwrap_or(0.05),
        loss_scope: args.loss_scope.as_deref().map(parse_loss_scope).transpose()?.unwrap_or_default(),
        out: args.out,
        command,
    };
    for (key, v) in [
        ("omega", cfg.omega),
        ("gamma", cfg.gamma),
        ("delta_omega", cfg.delta_omega),
        ("gamma_prime", cfg.gamma_prime),
        ("x_p", cfg.x_p),
        ("grid_min", cfg.grid_min),
        ("grid_max", cfg.grid_max),
        ("t_max", cfg.t_max),
        ("dt", cfg.dt),
    ] {
        if !v.is_finite() {
            return Err(usage(format!("key '{key}' must be finite")));
        }
    }
    for (key, v) in [("gamma", cfg.gamma), ("gamma_prime", cfg.gamma_prime)] {
        if v < 0.0 {
            return Err(usage(format!("key '{key}' must be >= 0")));
        }
    }
    for (key, v) in [("t_max", cfg.t_max), ("dt", cfg.dt)] {
        if v <= 0.0 {
            return Err(usage(format!("key '{key}' must be > 0")));
        }
    }
    Ok(cfg)
}

/// Parses process-style arguments (without the program name) into a config.
pub fn parse_config<I, S>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv = std::iter::once("antipt-cavity".to_string()).chain(args.into_iter().map(Into::into));
    let parsed = Args::try_parse_from(argv).map_err(|e| usage(e.to_string().trim_end().to_string()))?;
    resolve(parsed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: String,
}

impl ResultTable {
    fn new(config: &RunConfig, header: &[&str]) -> Self {
        let metadata = serde_json::to_string(config).expect("config serializes");
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), metadata }
    }

    fn push(&mut self, row: Vec<f64>) -> Result<(), CliError> {
        debug_assert_eq!(row.len(), self.header.len());
        if row.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Physics(format!("non-finite value in row {}", self.rows.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# {}\n{}\n", self.metadata, self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_sig12(v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Scientific notation with 12 significant digits and trailing zeros trimmed.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let mantissa = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
    if exp == "0" {
        mantissa.to_string()
    } else {
        format!("{mantissa}e{exp}")
    }
}

fn physics(command: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Physics(format!("{command}: {e}"))
}

fn omega_of_w(w: f64) -> f64 {
    0.5 * w - 1.0
}

/// Runs a table-producing command.
pub fn run(config: &RunConfig) -> Result<ResultTable, CliError> {
    let ph = physics(&config.command);
    let cmd = config.command.as_str();
    if cmd == "dynamics" {
        return run_dynamics(config);
    }
    let grid = config.grid()?;
    let mut table;
    match cmd {
        "mirror-spectrum" => {
            table = ResultTable::new(config, &["delta", "R", "T", "arg_r"]);
            let chain = build_dimer(config.omega).map_err(&ph)?;
            for p in sweep(&chain, &grid).map_err(&ph)? {
                table.push(vec![p.delta, p.reflectance(), p.transmittance(), p.phase_r()])?;
            }
        }
        "r0-curve" => {
            table = ResultTable::new(config, &["W", "omega", "R0", "R0_scattering"]);
            for w in grid.values() {
                let p = scatter(&build_dimer(omega_of_w(w)).map_err(&ph)?, 0.0).map_err(&ph)?;
                table.push(vec![w, omega_of_w(w), r0_closed(w), p.reflectance()])?;
            }
        }
        "phase-diagram" => {
            table = ResultTable::new(
                config,
                &["W", "reE1", "reE2", "reE3", "reE4", "imE1", "imE2", "imE3", "imE4"],
            );
            for w in grid.values() {
                let e = eigenvalues(&build_hc(omega_of_w(w))).map_err(&ph)?;
                let mut row = vec![w];
                row.extend(e.iter().map(|z| z.re));
                row.extend(e.iter().map(|z| z.im));
                table.push(row)?;
            }
        }
        "supermodes-vs-r0" => {
            table = ResultTable::new(
                config,
                &[
                    "R0", "W", "omega", "re_psi_minus", "im_psi_minus", "re_psi_plus", "im_psi_plus", "re_h2_a",
                    "im_h2_a", "re_h2_b", "im_h2_b",
                ],
            );
            for r0 in grid.values() {
                let w = invert_r0(r0, Branch::TwoPeak).map_err(&ph)?;
                let set = supermodes(omega_of_w(w)).map_err(&ph)?;
                let mut row = vec![r0, w, omega_of_w(w)];
                for m in set.all() {
                    row.extend([m.energy.re, m.energy.im]);
                }
                table.push(row)?;
            }
        }
        "coupling-map" => {
            table = ResultTable::new(config, &["x_p", "abs_g_r", "arg_g_r", "re_g_r", "im_g_r"]);
            for (x, g) in coupling_vs_position(config.omega, config.gamma, &grid).map_err(&ph)? {
                table.push(vec![x, g.norm(), g.arg(), g.re, g.im])?;
            }
        }
        "coupling-vs-w" => {
            table = ResultTable::new(
                config,
                &["W", "re_g_r", "im_g_r", "re_v_r", "im_v_r", "re_g_l", "im_g_l", "re_v_l", "im_v_l", "sqrt_gamma_w"],
            );
            for w in grid.values() {
                let cfg = CavityConfig { omega: omega_of_w(w), ..config.cavity() };
                let c = probe_couplings(&cfg).map_err(&ph)?;
                let mut row = vec![w];
                for z in [c.g_r, c.v_r, c.g_l, c.v_l] {
                    row.extend([z.re, z.im]);
                }
                row.push((config.gamma * w).max(0.0).sqrt());
                table.push(row)?;
            }
        }
        "eta-curve" => {
            table = ResultTable::new(config, &["R0", "eta_single_peak", "eta_two_peak"]);
            for r0 in grid.values() {
                let a = coupling_factor_from_r0(r0, Branch::SinglePeak).map_err(&ph)?;
                let b = coupling_factor_from_r0(r0, Branch::TwoPeak).map_err(&ph)?;
                table.push(vec![r0, a, b])?;
            }
        }
        "transmission" => {
            table = ResultTable::new(config, &["delta", "T", "R", "arg_t", "loss"]);
            let chain = build_cavity(&config.cavity()).map_err(&ph)?;
            for p in sweep(&chain, &grid).map_err(&ph)? {
                table.push(vec![p.delta, p.transmittance(), p.reflectance(), p.t.arg(), p.loss()])?;
            }
        }
        "polaritons" => {
            table = ResultTable::new(
                config,
                &["delta_omega", "reE1", "reE2", "reE3", "imE1", "imE2", "imE3", "dark_count"],
            );
            for d in grid.values() {
                let cfg = CavityConfig { probe_detuning: d, ..config.cavity() };
                let s = polariton_spectrum(&cfg).map_err(&ph)?;
                let mut row = vec![d];
                row.extend(s.energies.iter().map(|z| z.re));
                row.extend(s.energies.iter().map(|z| z.im));
                row.push(s.dark_count() as f64);
                table.push(row)?;
            }
        }
        "linewidth-scan" => {
            table = ResultTable::new(config, &["gamma", "linewidth"]);
            let scan = linewidth_vs_gamma(config.omega, &grid).map_err(&ph)?;
            for (g, w) in scan.points {
                table.push(vec![g, w])?;
            }
        }
        other => return Err(usage(format!("command '{other}' does not produce a table"))),
    }
    Ok(table)
}

fn run_dynamics(config: &RunConfig) -> Result<ResultTable, CliError> {
    let ph = physics(&config.command);
    let mut table = ResultTable::new(config, &["t", "probe", "total", "mirror_a", "mirror_b", "mirror_c", "mirror_d"]);
    let points = rabi_experiment(&config.cavity(), config.gamma_prime, config.t_max, config.dt).map_err(&ph)?;
    for p in points {
        let mut row = vec![p.time, p.populations[4], p.total_excitation];
        row.extend(&p.populations[..4]);
        table.push(row)?;
    }
    Ok(table)
}

/// One analytic self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.measured.is_finite() && self.measured <= self.tolerance
    }
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.max_abs_diff(b)
}

/// Largest distance after pairing each value in `a` with its nearest unused partner in `b`.
fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("same length");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn sample(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    // interior points, avoiding the end points
    (0..n).map(move |k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64)
}

/// The analytic self-check suite run by `validate`.
pub fn self_checks() -> Result<Vec<Check>, Error> {
    let mut checks = Vec::new();
    let mut add = |name, measured, tolerance| checks.push(Check { name, measured, tolerance });

    let p = scatter(&build_dimer(0.0)?, 0.0)?;
    add("unit_reflection", (r0_closed(2.0) - 1.0).abs().max((p.reflectance() - 1.0).abs()), 1e-12);
    add("reflection_threshold", (reflection_threshold() - 0.64).abs(), 1e-12);

    let mut worst = 0.0f64;
    for omega in sample(20, -3.0, 2.0) {
        let chain = build_dimer(omega)?;
        for delta in sample(20, -4.0, 4.0) {
            worst = worst.max((scatter(&chain, delta)?.r - dimer_reflection_closed(delta, omega)).norm());
        }
    }
    add("closed_form_reflection", worst, 1e-12);

    let mut geom = 0.0f64;
    let mut blocks = 0.0f64;
    let mut anti_pt = 0.0f64;
    for omega in sample(20, -2.0, 2.0) {
        geom = geom.max(max_diff(&effective_hamiltonian(&build_cavity(&CavityConfig::new(omega))?), &build_hc(omega)));
        let d = block_decompose(omega);
        blocks = blocks.max(max_diff(&d.h1, &h1_matrix(omega))).max(max_diff(&d.h2, &h2_matrix(omega))).max(d.off_block);
        if !(anti_pt_check(&d.h1) && anti_pt_check(&d.h2)) {
            anti_pt = 1.0;
        }
    }
    add("cavity_geometry", geom, 1e-12);
    add("block_decomposition", blocks, 1e-12);
    add("anti_pt_symmetry", anti_pt, 0.0);

    let mut decay = 0.0f64;
    for omega in sample(40, -0.99, 0.99) {
        let set = supermodes(omega)?;
        let (gm, gp) = decay_rates_closed(omega);
        decay = decay.max((set.psi_minus.decay() - gm).abs()).max((set.psi_plus.decay() - gp).abs());
    }
    add("supermode_decay_rates", decay, 1e-9);

    let eps = find_exceptional_points(&SweepGrid::new(-5.0, 5.0, 1001)?)?;
    let ep_err = if eps.locations.len() == 3 {
        eps.locations.iter().zip([-4.0, 0.0, 4.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    add("exceptional_points", ep_err, 1e-6);

    let gamma = 0.1;
    let mut coupling = 0.0f64;
    for w in sample(40, 0.0, 4.0) {
        let c = probe_couplings(&CavityConfig::new(omega_of_w(w)).with_probe(gamma, 0.0))?;
        coupling = coupling
            .max((c.g_r.re - (gamma * w).sqrt()).abs())
            .max(c.g_r.im.abs())
            .max((c.v_r - C64::new(0.0, 1.0) * c.g_r).norm());
    }
    add("probe_coupling_law", coupling, 1e-8);

    let mut embed = 0.0f64;
    for dw in [0.0, 1.0, 2.0, 3.0] {
        let cfg = CavityConfig::new(0.2).with_probe(0.2, dw);
        let mut small = eigenvalues(&build_three_level(&cfg)?.matrix)?;
        small.extend(eigenvalues(&h2_matrix(0.2))?);
        let full = eigenvalues(&effective_hamiltonian(&build_cavity(&cfg)?))?;
        embed = embed.max(spectrum_distance(&small, &full));
    }
    add("spectrum_embedding", embed, 1e-8);

    let mut dark = 0.0f64;
    for g in [0.05, 0.1, 0.3] {
        let s = polariton_spectrum(&CavityConfig::new(g).with_probe(g, 0.0))?;
        let e = (g * g + 2.0 * g).sqrt();
        let want = [C64::new(-e, 0.0), C64::new(e, 0.0), C64::new(0.0, -(2.0 + g))];
        dark = dark.max(spectrum_distance(&s.energies, &want));
    }
    add("dark_polaritons", dark, 1e-10);

    let mut flux = 0.0f64;
    for (k, omega) in sample(10, -0.9, 0.9).enumerate() {
        let cfg = CavityConfig::new(omega).with_probe(0.05 + 0.02 * k as f64, 0.3 * k as f64 - 1.0);
        let chain = build_cavity(&cfg)?;
        for delta in sample(10, -3.0, 3.0) {
            flux = flux.max(scatter(&chain, delta)?.loss().abs());
        }
    }
    add("flux_conservation", flux, 1e-10);

    let cfg = CavityConfig::new(0.1).with_probe(0.1, 0.0).with_loss(0.02, LossScope::All);
    let chain = build_cavity(&cfg)?;
    let times = time_grid(4.0, 0.5);
    let initial = PureState::excited(5, 4);
    let pure = evolve_pure(&chain, &initial, &times)?;
    let full = evolve_lindblad(&chain, &DensityMatrix::from_pure(&initial), &times, DEFAULT_DT)?;
    let mut dyn_err = 0.0f64;
    for (a, b) in pure.iter().zip(&full) {
        for (x, y) in a.populations.iter().zip(&b.populations) {
            dyn_err = dyn_err.max((x - y).abs());
        }
    }
    add("dynamics_equivalence", dyn_err, 1e-6);

    let trace = rabi_experiment(&CavityConfig::new(0.1).with_probe(0.1, 0.0), 0.0, 60.0, 0.01)?;
    let times: Vec<f64> = trace.iter().map(|p| p.time).collect();
    let probe: Vec<f64> = trace.iter().map(|p| p.populations[4]).collect();
    let a = analyze_oscillation(&times, &probe)?;
    let want = 2.0 * 0.21f64.sqrt();
    add("rabi_frequency", (a.angular_frequency - want).abs() / want, 0.01);

    Ok(checks)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let file_name = path.file_name().ok_or_else(|| usage(format!("invalid output path '{}'", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.partial", file_name.to_string_lossy()));
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Physics(format!("cannot write '{}': {e}", path.display())));
    }
    Ok(())
}

/// Runs the whole program; returns the exit status.
pub fn main_with_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") {
        let _ = writeln!(stdout, "{}", <Args as clap::CommandFactory>::command().render_help());
        return 0;
    }
    match execute(args, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

fn execute(args: Vec<String>, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let config = parse_config(args)?;
    if config.command == "validate" {
        let checks = self_checks().map_err(physics("validate"))?;
        let mut csv = format!("# {}\ncheck,measured,tolerance,pass\n", serde_json::to_string(&config).expect("serializes"));
        for c in &checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(stdout, "{status} {} {:e} {:e}", c.name, c.measured, c.tolerance);
            csv.push_str(&format!(
                "{},{},{},{}\n",
                c.name,
                format_sig12(c.measured),
                format_sig12(c.tolerance),
                u8::from(c.passed())
            ));
        }
        if let Some(path) = &config.out {
            write_atomic(path, &csv)?;
        }
        return Ok(if checks.iter().all(Check::passed) { 0 } else { 2 });
    }
    let csv = run(&config)?.to_csv();
    match &config.out {
        Some(path) => write_atomic(path, &csv)?,
        None => {
            stdout.write_all(csv.as_bytes()).map_err(|e| CliError::Physics(format!("cannot write output: {e}")))?;
        }
    }
    Ok(0)
}
