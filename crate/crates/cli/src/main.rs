//! `eim`: command-line front end for eim-core.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data errors.

mod kernels;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eim_core::dct::{build_basis, project};
use eim_core::export::{
    sig9, write_basis_csv, write_coeffs_csv, write_frames_csv, write_pgm, write_spectrum_csv, write_sweep_csv,
    write_sweep_gnuplot, write_trace_csv,
};
use eim_core::kernelspace::decompose;
use eim_core::propagate::{self, MeasureMode, Pattern, RunOptions, Schedule};
use eim_core::relativity::{
    beta_sq_grid, energy_ratio, gamma_sq_from_split, lorentz_compare, sweep, ScheduleKind, SweepConfig,
    VelocityEstimator, DEFAULT_GRID_POINTS, DEFAULT_SWEEP_STEPS,
};
use eim_core::spectra::{load_tensor, save_tensor, truncate_tensor, SpectrumReport, Weighting};
use eim_core::{EimError, Kernel2D};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl From<EimError> for CliError {
    fn from(e: EimError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "eim",
    version,
    about = "Even/odd kernel mechanics: decomposition, DCT spectra, propagation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a kernel into even and odd parts and report beta^2 and gamma.
    Decompose(DecomposeArgs),
    /// Print the ordered DCT basis, or project a kernel onto it.
    Dct(DctArgs),
    /// Run repeated convolution + activation and write the trace.
    Propagate(PropagateArgs),
    /// Measure propagation speed over a grid of beta^2 values.
    Sweep(SweepArgs),
    /// DCT energy distribution of weight tensors.
    Spectra(SpectraArgs),
    /// Keep only the lowest DCT components of every kernel in a tensor.
    Truncate(TruncateArgs),
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Built-in name or kernel file.
    #[arg(long, conflicts_with = "random_size", required_unless_present = "random_size")]
    kernel: Option<String>,
    /// Draw a random normal kernel of this size instead.
    #[arg(long)]
    random_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DctArgs {
    /// Basis size; taken from the kernel when one is given.
    #[arg(long, required_unless_present = "kernel")]
    size: Option<usize>,
    #[arg(long)]
    kernel: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PatternArg {
    Impulse,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Constant,
    Alternating,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ActivationArg {
    Identity,
    Relu,
    Modulus,
}

impl From<ActivationArg> for propagate::Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Identity => propagate::Activation::Identity,
            ActivationArg::Relu => propagate::Activation::Relu,
            ActivationArg::Modulus => propagate::Activation::Modulus,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Full2d,
    CentralRow,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EstimatorArg {
    Total,
    HalfFit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightingArg {
    Uniform,
    Energy,
}

#[derive(Args, Debug)]
struct PropagateArgs {
    #[arg(long, value_enum, default_value_t = PatternArg::Impulse)]
    pattern: PatternArg,
    /// Circle radius in pixels.
    #[arg(long, default_value_t = 19)]
    radius: usize,
    /// Built-in name or kernel file.
    #[arg(long, conflicts_with = "beta_sq", required_unless_present = "beta_sq")]
    kernel: Option<String>,
    /// Mix unit DC and GradX kernels at this odd-energy share.
    #[arg(long)]
    beta_sq: Option<f64>,
    /// Kernel size for --beta-sq.
    #[arg(long, default_value_t = 3)]
    size: usize,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Constant)]
    schedule: ScheduleArg,
    #[arg(long, value_enum, default_value_t = ActivationArg::Relu)]
    activation: ActivationArg,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Full2d)]
    mode: ModeArg,
    /// Trace CSV; stdout when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for one PGM image per step.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// CSV of the non-zero pixels of every step.
    #[arg(long)]
    frames_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Kernel sizes; repeat for several. Size 2 runs as an embedding.
    #[arg(long = "size", default_values_t = [3usize])]
    sizes: Vec<usize>,
    /// Activations; repeat for several.
    #[arg(long = "activation", value_enum, default_values_t = [ActivationArg::Relu])]
    activations: Vec<ActivationArg>,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Constant)]
    schedule: ScheduleArg,
    /// Number of evenly spaced beta^2 values in [0, 1].
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_SWEEP_STEPS)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Total)]
    estimator: EstimatorArg,
    /// Sweep CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot data file, one block per table.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectraArgs {
    /// EIM tensor files, one layer each.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
    weighting: WeightingArg,
}

#[derive(Args, Debug)]
struct TruncateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Number of DCT components to keep, lowest first.
    #[arg(long)]
    keep: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write the binary encoding instead of JSON.
    #[arg(long)]
    binary: bool,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Data(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_kernel(out: &mut dyn Write, title: &str, k: &Kernel2D) -> io::Result<()> {
    writeln!(out, "{title}:")?;
    for row in k.values().chunks(k.size()) {
        let cells: Vec<String> = row.iter().map(|&v| format!("{:>14}", sig9(v))).collect();
        writeln!(out, "{}", cells.join(""))?;
    }
    Ok(())
}

fn cmd_decompose(a: DecomposeArgs) -> Result<(), CliError> {
    let kernel = match (&a.kernel, a.random_size) {
        (Some(spec), _) => kernels::resolve(spec)?,
        (None, Some(k)) => {
            if !(1..=64).contains(&k) {
                return Err(CliError::Usage(format!("--random-size must be in 1..=64, got {k}")));
            }
            kernels::random(k, a.seed)?
        }
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let s = decompose(&kernel);
    let mut out = sink(None)?;
    print_kernel(&mut out, "kernel", &kernel)?;
    print_kernel(&mut out, "even", &s.even)?;
    print_kernel(&mut out, "odd", &s.odd)?;
    let diverges = |r: eim_core::Result<f64>| r.map_or("inf".to_string(), sig9);
    writeln!(out, "energy={}", sig9(s.energy()))?;
    writeln!(out, "energy_even={}", sig9(s.energy_even))?;
    writeln!(out, "energy_odd={}", sig9(s.energy_odd))?;
    writeln!(out, "beta_sq={}", sig9(s.beta_sq))?;
    writeln!(out, "beta={}", sig9(s.beta()))?;
    writeln!(out, "gamma={}", diverges(gamma_sq_from_split(&s).map(f64::sqrt)))?;
    writeln!(out, "energy_ratio={}", diverges(energy_ratio(&s)))?;
    out.flush()?;
    Ok(())
}

fn cmd_dct(a: DctArgs) -> Result<(), CliError> {
    let kernel = a.kernel.as_deref().map(kernels::resolve).transpose()?;
    let k = match (&kernel, a.size) {
        (Some(kern), Some(s)) if s != kern.size() => {
            return Err(CliError::Usage(format!(
                "--size {s} does not match the {0}x{0} kernel",
                kern.size()
            )))
        }
        (Some(kern), _) => kern.size(),
        (None, Some(s)) => s,
        (None, None) => unreachable!("clap requires --size without --kernel"),
    };
    let basis = build_basis(k)?;
    let out = sink(a.out.as_deref())?;
    match kernel {
        Some(kern) => write_coeffs_csv(&project(&kern, &basis)?, &basis, out)?,
        None => write_basis_csv(&basis, out)?,
    }
    Ok(())
}

fn cmd_propagate(a: PropagateArgs) -> Result<(), CliError> {
    let kernel = match (&a.kernel, a.beta_sq) {
        (Some(spec), _) => kernels::resolve(spec)?,
        (None, Some(b)) => kernels::mixed(a.size, b)?,
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let schedule = if kernel.size() == 2 {
        Schedule::alternating_embedding(&kernel)?
    } else if a.schedule == ScheduleArg::Alternating {
        Schedule::alternating_odd(&kernel)
    } else {
        Schedule::Constant(kernel)
    };
    let pattern = match a.pattern {
        PatternArg::Impulse => Pattern::Impulse,
        PatternArg::Circle => Pattern::Circle { radius: a.radius },
    };
    let mode = match a.mode {
        ModeArg::Full2d => MeasureMode::Full2D,
        ModeArg::CentralRow => MeasureMode::CentralRow,
    };
    let mut opts = RunOptions::new(a.steps, a.activation.into()).with_mode(mode);
    if a.frames.is_some() || a.frames_csv.is_some() {
        opts = opts.with_frames();
    }
    let trace = propagate::run(pattern, &schedule, opts)?;
    write_trace_csv(&trace, sink(a.trace.as_deref())?)?;
    let frames = trace.frames.as_deref().unwrap_or_default();
    if let Some(dir) = &a.frames {
        std::fs::create_dir_all(dir)?;
        for (t, f) in frames.iter().enumerate() {
            write_pgm(f, sink(Some(&dir.join(format!("frame_{t:04}.pgm"))))?)?;
        }
    }
    if let Some(path) = &a.frames_csv {
        write_frames_csv(frames, sink(Some(path))?)?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let grid = beta_sq_grid(a.grid)?;
    let estimator = match a.estimator {
        EstimatorArg::Total => VelocityEstimator::TotalDistance,
        EstimatorArg::HalfFit => VelocityEstimator::FinalHalfFit,
    };
    let mut configs = Vec::new();
    for &size in &a.sizes {
        for &act in &a.activations {
            let mut cfg = SweepConfig::new(size, act.into())
                .with_steps(a.steps)
                .with_estimator(estimator);
            if size != 2 && a.schedule == ScheduleArg::Alternating {
                cfg = cfg.with_schedule(ScheduleKind::AlternatingOdd);
            }
            configs.push(cfg);
        }
    }
    let run_all = || {
        configs
            .iter()
            .map(|c| sweep(c, &grid))
            .collect::<eim_core::Result<Vec<_>>>()
    };
    let tables = match std::env::var("EIM_THREADS") {
        Ok(v) => {
            let n: usize = v
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("EIM_THREADS must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Data(e.to_string()))?;
            pool.install(run_all)?
        }
        Err(_) => run_all()?,
    };
    write_sweep_csv(&tables, sink(a.out.as_deref())?)?;
    if let Some(path) = &a.gnuplot {
        let mut w = sink(Some(path))?;
        write_sweep_gnuplot(&tables, &mut w)?;
        w.flush()?;
    }
    for t in &tables {
        let r = lorentz_compare(t)?;
        eprintln!(
            "size {} {} {}: max |measured - beta^2| = {}, monotone = {}, peak at beta^2 = {}",
            t.config.size,
            t.config.activation.name(),
            t.config.schedule.name(),
            sig9(r.max_abs_dev_from_identity),
            r.is_monotone,
            sig9(r.argmax_beta_sq)
        );
    }
    Ok(())
}

fn cmd_spectra(a: SpectraArgs) -> Result<(), CliError> {
    let tensors = a
        .input
        .iter()
        .map(|p| load_tensor(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    let weighting = match a.weighting {
        WeightingArg::Uniform => Weighting::Uniform,
        WeightingArg::Energy => Weighting::Energy,
    };
    let report = SpectrumReport::from_tensors(&tensors, weighting)?;
    write_spectrum_csv(&report, sink(a.out.as_deref())?)?;
    Ok(())
}

fn cmd_truncate(a: TruncateArgs) -> Result<(), CliError> {
    let tensor = load_tensor(&a.input).map_err(|e| CliError::Data(format!("{}: {e}", a.input.display())))?;
    let k = tensor.kernel_size();
    if !(1..=k * k).contains(&a.keep) {
        return Err(CliError::Usage(format!(
            "--keep must be in 1..={} for {k}x{k} kernels",
            k * k
        )));
    }
    save_tensor(&truncate_tensor(&tensor, a.keep)?, &a.out, a.binary)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Dct(a) => cmd_dct(a),
        Command::Propagate(a) => cmd_propagate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Spectra(a) => cmd_spectra(a),
        Command::Truncate(a) => cmd_truncate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {}", msg.lines().next().unwrap_or_default());
            ExitCode::from(2)
        }
    }
}
