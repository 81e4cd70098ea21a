//! Command-line front end.
//!
//! Subcommands: `basis`, `spectrum`, `evolve`, `otoc`, `holevo`, `arrivals`.
//! All of them share one flag set; values resolve as defaults < config file
//! (`--config`, `key = value` lines, `#` comments, keys named like the long
//! flags) < explicit flags. Every run writes its outputs plus `manifest.json`
//! and `resolved.config` into the output directory; re-running the same
//! subcommand with `--config resolved.config` reproduces the CSV and SVG
//! outputs byte for byte.
//!
//! Exit codes: 0 on success, 2 for argument errors, 3 for resource guards
//! and runtime failures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::disorder::DisorderSchedule;
use crate::ensemble::{self, EnsembleConfig, ObservableKind, ProbeSet};
use crate::hamiltonian::HamiltonianMatrix;
use crate::observables::SeriesKind;
use crate::propagator::eig;
use crate::report::{
    render_arrivals_csv, render_basis_csv, render_occupation_csv, render_series_csv,
    render_spectrum_csv, write_text, Heatmap, Palette, RunManifest,
};
use crate::spectrum::{spacing_ratios, SpectrumResult};
use crate::{basis::ReducedBasis, Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dynode",
    version,
    about = "Exact dynamics of an avalanche qubit-tree photodetector model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate the conserved sector and write index/bitstring/charge rows.
    Basis(RunArgs),
    /// Eigenvalue spacing-ratio statistics pooled over realizations.
    Spectrum(RunArgs),
    /// Per-layer mean occupation series plus a space-time heatmap.
    Evolve(RunArgs),
    /// Out-of-time-order correlator series (heatmap for left-edge probes).
    Otoc(RunArgs),
    /// Holevo information series.
    Holevo(RunArgs),
    /// OTOC arrival-time scatter across realizations.
    Arrivals(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Basis(_) => "basis",
            Command::Spectrum(_) => "spectrum",
            Command::Evolve(_) => "evolve",
            Command::Otoc(_) => "otoc",
            Command::Holevo(_) => "holevo",
            Command::Arrivals(_) => "arrivals",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Basis(a)
            | Command::Spectrum(a)
            | Command::Evolve(a)
            | Command::Otoc(a)
            | Command::Holevo(a)
            | Command::Arrivals(a) => a,
        }
    }
}

/// The shared flag set. Anything left unset falls back to the config file,
/// then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Tree depth (1..=6).
    #[arg(long)]
    pub layers: Option<u32>,
    /// Disorder mode: ideal | static | dynamic.
    #[arg(long)]
    pub mode: Option<String>,
    /// Disorder strength in units of g.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Resampling interval for dynamic disorder, units of 1/g.
    #[arg(long = "resample-dt")]
    pub resample_dt: Option<f64>,
    /// Global kernel coupling (default 1.0; sets the unit system).
    #[arg(long)]
    pub g: Option<f64>,
    /// Relative half-width for per-kernel coupling randomization.
    #[arg(long = "g-jitter")]
    pub g_jitter: Option<f64>,
    /// Evolution horizon, units of 1/g.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Number of output grid points on [0, tmax].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Master seed of the realization streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of disorder realizations.
    #[arg(long)]
    pub realizations: Option<u32>,
    /// Probe qubits: left-edge | all | qubit:<k>.
    #[arg(long)]
    pub probe: Option<String>,
    /// Keep a vacuum amplitude slot (implied by `holevo`).
    #[arg(long)]
    pub vacuum: bool,
    /// Early-stage window for arrival scans, units of 1/g (default: auto).
    #[arg(long)]
    pub twindow: Option<f64>,
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Entry point used by `main`; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("error: invalid argument: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    }
}

/// Parse, resolve, and run one subcommand.
pub fn execute(command: &Command) -> Result<()> {
    let started = Instant::now();
    let resolved = resolve(command.args())?;
    let out_dir = resolved.out_dir.clone();
    std::fs::create_dir_all(&out_dir)?;

    let mut outputs: Vec<String> = Vec::new();
    let mut notes: BTreeMap<String, String> = BTreeMap::new();
    match command {
        Command::Basis(_) => {
            let basis = if resolved.ensemble.vacuum {
                ReducedBasis::enumerate_with_vacuum(resolved.ensemble.layers)?
            } else {
                ReducedBasis::enumerate(resolved.ensemble.layers)?
            };
            emit(&out_dir, "basis.csv", &render_basis_csv(&basis), &mut outputs)?;
        }
        Command::Spectrum(_) => {
            let results = spectrum_over_realizations(&resolved.ensemble)?;
            emit(
                &out_dir,
                "spectrum.csv",
                &render_spectrum_csv(&results),
                &mut outputs,
            )?;
        }
        Command::Evolve(_) => {
            let config = EnsembleConfig {
                observable: ObservableKind::Occupation,
                ..resolved.ensemble.clone()
            };
            let outcome = ensemble::run(&config)?;
            emit(
                &out_dir,
                "occupation.csv",
                &render_occupation_csv(&outcome.averaged),
                &mut outputs,
            )?;
            let map = Heatmap::from_layer_series(
                "mean occupation per layer",
                &outcome.averaged,
                (0.0, 1.0),
                Palette::Sequential,
            );
            emit(
                &out_dir,
                "occupation_heatmap.svg",
                &map.render_svg(),
                &mut outputs,
            )?;
            notes.insert(
                "occupation_heatmap".into(),
                format!("{}; value range pinned to [0, 1]", Palette::Sequential.describe()),
            );
        }
        Command::Otoc(_) => {
            let config = EnsembleConfig {
                observable: ObservableKind::Otoc,
                ..resolved.ensemble.clone()
            };
            let outcome = ensemble::run(&config)?;
            emit(
                &out_dir,
                "otoc.csv",
                &render_series_csv(&outcome.averaged),
                &mut outputs,
            )?;
            if config.probes == ProbeSet::LeftEdge {
                let map = Heatmap::from_layer_series(
                    "OTOC between layer probes and the root",
                    &outcome.averaged,
                    (-1.0, 1.0),
                    Palette::Diverging,
                );
                emit(&out_dir, "otoc_heatmap.svg", &map.render_svg(), &mut outputs)?;
                notes.insert(
                    "otoc_heatmap".into(),
                    format!("{}; value range pinned to [-1, 1]", Palette::Diverging.describe()),
                );
            }
        }
        Command::Holevo(_) => {
            let config = EnsembleConfig {
                observable: ObservableKind::Holevo,
                ..resolved.ensemble.clone()
            };
            let outcome = ensemble::run(&config)?;
            debug_assert!(outcome.averaged.iter().all(|s| s.kind == SeriesKind::Holevo));
            emit(
                &out_dir,
                "holevo.csv",
                &render_series_csv(&outcome.averaged),
                &mut outputs,
            )?;
        }
        Command::Arrivals(_) => {
            let config = EnsembleConfig {
                observable: ObservableKind::Otoc,
                ..resolved.ensemble.clone()
            };
            let arrivals = ensemble::arrival_scatter(&config)?;
            emit(
                &out_dir,
                "arrivals.csv",
                &render_arrivals_csv(&arrivals),
                &mut outputs,
            )?;
        }
    }

    // the resolved config is itself an input file for reproduction runs
    let resolved_text = render_config_file(&resolved.config_map);
    emit(&out_dir, "resolved.config", &resolved_text, &mut outputs)?;
    notes.insert(
        "reproduce".into(),
        format!(
            "dynode {} --config {}",
            command.name(),
            out_dir.join("resolved.config").display()
        ),
    );

    let manifest = RunManifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: resolved.config_map.clone(),
        seed: resolved.ensemble.master_seed,
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs,
        notes,
    };
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(())
}

fn emit(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> Result<()> {
    write_text(&dir.join(name), contents)?;
    outputs.push(name.to_string());
    Ok(())
}

/// Spacing ratios per realization. Dynamic schedules contribute their first
/// interval's Hamiltonian; the statistics describe one instantaneous
/// operator, not the time average.
fn spectrum_over_realizations(config: &EnsembleConfig) -> Result<Vec<(u32, SpectrumResult)>> {
    let network = config.build_network()?;
    let basis = ReducedBasis::enumerate(config.layers)?;
    (0..config.realizations)
        .into_par_iter()
        .map(|i| -> Result<(u32, SpectrumResult)> {
            let schedule = DisorderSchedule::build(
                &network,
                config.mode,
                config.sigma,
                config.resample_dt,
                config.t_max,
                config.master_seed,
                i,
            )?;
            let h = HamiltonianMatrix::assemble(&basis, &network, schedule.interval_detunings(0));
            let decomp = eig(&h)?;
            let result = spacing_ratios(decomp.values().as_slice())?;
            Ok((i, result))
        })
        .collect()
}

/* Config resolution ***********************************************************/

struct ResolvedRun {
    ensemble: EnsembleConfig,
    out_dir: PathBuf,
    config_map: BTreeMap<String, String>,
}

/// Parse a `key = value` config file (`#` starts a comment).
fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(idx) => &raw[..idx],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{}:{}: expected `key = value`, got {raw:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_key<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::InvalidArgument(format!("config key {key}: cannot parse value {value:?}"))
    })
}

const CONFIG_KEYS: &[&str] = &[
    "layers",
    "mode",
    "sigma",
    "resample-dt",
    "g",
    "g-jitter",
    "tmax",
    "steps",
    "seed",
    "realizations",
    "probe",
    "vacuum",
    "twindow",
    "out",
];

/// Merge defaults, config file, and flags into one run description.
fn resolve(args: &RunArgs) -> Result<ResolvedRun> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    for key in file.keys() {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "unknown config key {key:?}"
            )));
        }
    }
    let lookup = |key: &str| file.get(key).map(String::as_str);

    let mut config = EnsembleConfig::default();
    if let Some(v) = lookup("layers") {
        config.layers = parse_key("layers", v)?;
    }
    if let Some(v) = args.layers {
        config.layers = v;
    }
    if let Some(v) = lookup("mode") {
        config.mode = v.parse()?;
    }
    if let Some(v) = &args.mode {
        config.mode = v.parse()?;
    }
    if let Some(v) = lookup("sigma") {
        config.sigma = parse_key("sigma", v)?;
    }
    if let Some(v) = args.sigma {
        config.sigma = v;
    }
    if let Some(v) = lookup("resample-dt") {
        config.resample_dt = parse_key("resample-dt", v)?;
    }
    if let Some(v) = args.resample_dt {
        config.resample_dt = v;
    }
    if let Some(v) = lookup("g") {
        config.g = parse_key("g", v)?;
    }
    if let Some(v) = args.g {
        config.g = v;
    }
    if let Some(v) = lookup("g-jitter") {
        config.g_jitter = parse_key("g-jitter", v)?;
    }
    if let Some(v) = args.g_jitter {
        config.g_jitter = v;
    }
    if let Some(v) = lookup("tmax") {
        config.t_max = parse_key("tmax", v)?;
    }
    if let Some(v) = args.tmax {
        config.t_max = v;
    }
    if let Some(v) = lookup("steps") {
        config.n_steps = parse_key("steps", v)?;
    }
    if let Some(v) = args.steps {
        config.n_steps = v;
    }
    if let Some(v) = lookup("seed") {
        config.master_seed = parse_key("seed", v)?;
    }
    if let Some(v) = args.seed {
        config.master_seed = v;
    }
    if let Some(v) = lookup("realizations") {
        config.realizations = parse_key("realizations", v)?;
    }
    if let Some(v) = args.realizations {
        config.realizations = v;
    }
    if let Some(v) = lookup("probe") {
        config.probes = v.parse()?;
    }
    if let Some(v) = &args.probe {
        config.probes = v.parse()?;
    }
    if let Some(v) = lookup("vacuum") {
        config.vacuum = parse_key("vacuum", v)?;
    }
    if args.vacuum {
        config.vacuum = true;
    }
    if let Some(v) = lookup("twindow") {
        config.t_window = if v == "auto" {
            None
        } else {
            Some(parse_key("twindow", v)?)
        };
    }
    if let Some(v) = args.twindow {
        config.t_window = Some(v);
    }

    let mut out_dir = PathBuf::from("out");
    if let Some(v) = lookup("out") {
        out_dir = PathBuf::from(v);
    }
    if let Some(v) = &args.out {
        out_dir = v.clone();
    }

    let mut config_map = BTreeMap::new();
    config_map.insert("layers".into(), config.layers.to_string());
    config_map.insert("mode".into(), config.mode.to_string());
    config_map.insert("sigma".into(), crate::report::fmt_f64(config.sigma));
    config_map.insert(
        "resample-dt".into(),
        crate::report::fmt_f64(config.resample_dt),
    );
    config_map.insert("g".into(), crate::report::fmt_f64(config.g));
    config_map.insert("g-jitter".into(), crate::report::fmt_f64(config.g_jitter));
    config_map.insert("tmax".into(), crate::report::fmt_f64(config.t_max));
    config_map.insert("steps".into(), config.n_steps.to_string());
    config_map.insert("seed".into(), config.master_seed.to_string());
    config_map.insert("realizations".into(), config.realizations.to_string());
    config_map.insert("probe".into(), config.probes.to_string());
    config_map.insert("vacuum".into(), config.vacuum.to_string());
    config_map.insert(
        "twindow".into(),
        config
            .t_window
            .map_or("auto".to_string(), crate::report::fmt_f64),
    );
    config_map.insert("out".into(), out_dir.display().to_string());

    Ok(ResolvedRun {
        ensemble: config,
        out_dir,
        config_map,
    })
}

fn render_config_file(map: &BTreeMap<String, String>) -> String {
    let mut out = String::from("# resolved run configuration\n");
    for (k, v) in map {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}
