//! The `misi` command line: `synth`, `invert`, `convert-measured`, `mie-check`.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 numeric failure, 3 I/O.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::forward::{add_noise, mie_check, synthesize_measurements, MeasurementSet, MieCheck, SynthOptions};
use crate::io::{config, container, export, measured, read_text, write_new};
use crate::loss::Problem;
use crate::metrics::TruthProfile;
use crate::net::NetConfig;
use crate::scalar::Real;
use crate::train::{monte_carlo, Mode, Strategy, TrainConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "misi", version, about = "Microwave inverse scattering with a neural contrast model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a dataset from a scene and phantom config.
    Synth(SynthArgs),
    /// Reconstruct material maps from a dataset.
    Invert(InvertArgs),
    /// Convert a measured scattered-field table into a dataset.
    ConvertMeasured(ConvertArgs),
    /// Compare the forward solver against the analytic cylinder series.
    MieCheck(MieArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Noise level in dB; repeat for several files sharing the clean signal.
    #[arg(long = "snr", allow_negative_numbers = true)]
    pub snr: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Forward-model grid size (default: twice the inversion grid).
    #[arg(long)]
    pub forward_grid: Option<usize>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "alt-cc", value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long, default_value = "hop", value_parser = parse_strategy)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 25000)]
    pub epochs: usize,
    /// Stage percentages for frequency hopping, e.g. 20,20,60.
    #[arg(long, value_delimiter = ',')]
    pub stage_split: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of Monte Carlo runs with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Scene/phantom config whose phantom is the ground truth (enables PSNR).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub net_cfg: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub psnr_every: usize,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Text table: freq_hz tx_index rx_angle_deg re im.
    #[arg(long)]
    pub table: PathBuf,
    /// TOML with radius, doi_half, n_grid and optional tx_angles_deg.
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct MieArgs {
    #[arg(long, default_value_t = 2.0)]
    pub eps_r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.25)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.3e9)]
    pub freq: f64,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        Error::NotConverged { .. }
        | Error::NonFinite(_)
        | Error::ZeroNorm(_)
        | Error::StaleCache
        | Error::DimensionMismatch { .. } => EXIT_NUMERIC,
        Error::InvalidScene(_)
        | Error::InvalidPhantom(_)
        | Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::MeasuredTable(_) => EXIT_USAGE,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_from<I, A>(args: I) -> u8
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Synth(a) => synth(&a),
        Command::Invert(a) => match a.precision {
            Precision::F32 => invert::<f32>(&a),
            Precision::F64 => invert::<f64>(&a),
        },
        Command::ConvertMeasured(a) => convert(&a),
        Command::MieCheck(a) => mie(&a),
    }
}

/// Output path for one of several noise levels: `data.misi` -> `data_snr20.misi`.
pub fn snr_path(out: &Path, snr: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_snr{snr}.{}", ext.to_string_lossy()),
        None => format!("{stem}_snr{snr}"),
    };
    out.with_file_name(name)
}

fn synth(a: &SynthArgs) -> Result<u8> {
    let (scene, phantom) = config::load_experiment(&a.config)?.build()?;
    let opts = SynthOptions::new(a.forward_grid.unwrap_or(2 * scene.n_grid));
    let clean = synthesize_measurements::<f64>(&scene, &phantom, opts)?;
    let outputs: Vec<(PathBuf, MeasurementSet<f64>)> = match a.snr.as_slice() {
        [] => vec![(a.out.clone(), clean)],
        [snr] => vec![(a.out.clone(), add_noise(&clean, *snr, a.seed)?)],
        many => many
            .iter()
            .map(|&snr| Ok((snr_path(&a.out, snr), add_noise(&clean, snr, a.seed)?)))
            .collect::<Result<_>>()?,
    };
    for (path, m) in &outputs {
        container::write(m, path, a.force)?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn invert<T: Real>(a: &InvertArgs) -> Result<u8> {
    let mset = container::read::<T>(&a.data)?;
    let n_freq = mset.scene.n_freq();
    let mut stage_split = a.stage_split.clone();
    if a.strategy == Strategy::Simul && stage_split.is_some() {
        eprintln!("warning: --stage-split is ignored with --strategy simul");
        stage_split = None;
    }
    if let Some(split) = &stage_split {
        if split.len() != n_freq {
            return Err(Error::InvalidArgument(format!(
                "--stage-split has {} entries but the dataset has {n_freq} frequencies",
                split.len()
            )));
        }
    }
    if a.runs == 0 {
        return Err(Error::InvalidArgument("--runs must be at least 1".into()));
    }
    let net = match &a.net_cfg {
        Some(p) => config::load_net_config(p)?,
        None => NetConfig::default(),
    };
    let cfg = TrainConfig {
        mode: a.mode,
        strategy: a.strategy,
        epochs: a.epochs,
        seed: a.seed,
        stage_split,
        net,
        psnr_every: a.psnr_every,
        ..TrainConfig::default()
    };
    cfg.plan(n_freq)?;
    let truth = match &a.truth {
        Some(p) => Some(TruthProfile::from_phantom(&config::load_experiment(p)?.phantom.build()?, &mset.scene)?),
        None => None,
    };
    let problem = Problem::build(&mset, cfg.pad_factor)?;
    let mc = monte_carlo(&problem, &cfg, truth.as_ref(), a.runs, a.seed)?;

    create_dir(&a.out)?;
    let n = mset.scene.n_grid;
    for run in &mc.runs {
        let dir = a.out.join(format!("run_{}", run.seed));
        create_dir(&dir)?;
        write_new(&dir.join("epochs.csv"), export::epoch_csv(&run.logs, &mset.scene.frequencies).as_bytes(), a.force)?;
        export::write_map(&dir, "eps_r", &run.final_eps_r, n, a.force)?;
        export::write_map(&dir, "sigma", &run.final_sigma, n, a.force)?;
        write_new(&dir.join("summary.json"), export::run_summary(run, &cfg).as_bytes(), a.force)?;
        crate::io::checkpoint::write(&run.net, &dir.join("network.mnet"), a.force)?;
        let psnr = run.final_psnr().map(|p| format!(", PSNR(eps_r) {p:.2} dB")).unwrap_or_default();
        println!("run {}: {} epochs{psnr}", run.seed, run.logs.len());
    }
    if let Some(stats) = &mc.stats {
        write_new(&a.out.join("psnr_curves.csv"), export::curves_csv(stats).as_bytes(), a.force)?;
        write_new(&a.out.join("final_psnr.csv"), export::finals_csv(&mc).as_bytes(), a.force)?;
    }
    write_new(&a.out.join("summary.json"), export::monte_carlo_summary(&mc).as_bytes(), a.force)?;
    for (seed, why) in &mc.failures {
        eprintln!("run {seed} failed: {why}");
    }
    Ok(if mc.runs.is_empty() { EXIT_NUMERIC } else { EXIT_OK })
}

fn convert(a: &ConvertArgs) -> Result<u8> {
    let rows = measured::parse_table(&read_text(&a.table)?)?;
    let geom: measured::MeasuredGeometry = config::load_toml(&a.geometry)?;
    let m = measured::convert::<f64>(&rows, &geom, a.stride)?;
    container::write(&m, &a.out, a.force)?;
    println!(
        "wrote {} ({} frequencies, {} transmitters, {} receivers each)",
        a.out.display(),
        m.scene.n_freq(),
        m.scene.n_tx(),
        m.scene.n_rx()
    );
    Ok(EXIT_OK)
}

fn mie(a: &MieArgs) -> Result<u8> {
    let cfg = MieCheck { eps_r: a.eps_r, sigma: a.sigma, radius: a.radius, freq: a.freq, n_grid: a.grid, ..MieCheck::default() };
    let err = mie_check(cfg)?;
    let pass = err <= a.tol;
    println!("relative L2 error {err:.4e} (tolerance {:.1e}): {}", a.tol, if pass { "pass" } else { "FAIL" });
    Ok(if pass { EXIT_OK } else { EXIT_NUMERIC })
}
