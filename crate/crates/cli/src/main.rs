use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deconv_core::grid_signal::Taps;
use deconv_core::polynomial::{parse_polynomial, AnyPolynomial};
use deconv_core::{
    convolve_signal, dft, discretize_kernel, inverse_operator, make_sinc_filter, recover_with_filter, ConvOperator,
    DeconvConfig, GridSignal, Kernel, KernelFamily, Parity, SeparableConv,
};
use deconv_tool::config::{build_kernel, FilterKind};
use deconv_tool::{run_and_write, AppError, ExperimentId, ExperimentSpec};

#[derive(Parser)]
#[command(
    name = "deconv",
    version,
    about = "Convolution and deconvolution of polynomials and sampled signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel moments, transforms and admissibility.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Polynomial convolution and its inverse.
    #[command(subcommand)]
    Poly(PolyCmd),
    /// Sampled-signal convolution and spectra.
    #[command(subcommand)]
    Signal(SignalCmd),
    /// Truncated-series deconvolution of a sampled signal.
    #[command(subcommand)]
    Deconv(DeconvCmd),
    /// Reference experiments.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Bump,
    Tabulated,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Even,
    General,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    family: FamilyArg,
    /// CSV of `x,value` samples for a tabulated kernel.
    #[arg(long)]
    kernel_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "even")]
    parity: ParityArg,
}

impl KernelArgs {
    fn build(&self) -> Result<Kernel, AppError> {
        let family = match self.family {
            FamilyArg::Gaussian => KernelFamily::Gaussian,
            FamilyArg::Bump => KernelFamily::Bump,
            FamilyArg::Tabulated => KernelFamily::Tabulated,
        };
        let parity = match self.parity {
            ParityArg::Even => Parity::Even,
            ParityArg::General => Parity::General,
        };
        build_kernel(family, self.kernel_file.as_deref(), parity)
    }
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Moments c_0 .. c_max as `m,moment` CSV.
    Moments {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        max_m: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fourier transform of the scaled kernel on `[0, xi_max]`.
    Fourier {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 2.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Checks `0 < phi_eps^ < 2` on `[-xi_max, xi_max]` and prints a JSON report.
    Check {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 2.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PolyArgs {
    /// Polynomial JSON: a coefficient array or `{"dim": d, "terms": [...]}`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PolyCmd {
    /// `p * phi_eps`.
    Conv(PolyArgs),
    /// The exact inverse of `conv`.
    Deconv(PolyArgs),
    /// `T_eps^k(p)`.
    Iterate {
        #[command(flatten)]
        args: PolyArgs,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Args)]
struct SignalArgs {
    /// Signal CSV with `t,value` rows on a uniform grid.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SignalCmd {
    /// Zero-padded convolution with the scaled kernel, cropped to the input grid.
    Conv {
        #[command(flatten)]
        io: SignalArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        epsilon: f64,
    },
    /// DFT bins as `freq,re,im,abs`.
    Dft {
        #[command(flatten)]
        io: SignalArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    None,
    Sinc,
    Allpass,
}

#[derive(Subcommand)]
enum DeconvCmd {
    /// Deconvolves a signal CSV and writes the reconstruction, spectra and a JSON report.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        order: usize,
        /// Clean signal to measure the interior error against.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "none")]
        filter: FilterArg,
        #[arg(long, default_value_t = 1.0)]
        bandwidth: f64,
        #[arg(long, default_value_t = deconv_core::deconvolution::DEFAULT_SINC_HALF_WIDTH)]
        half_width: f64,
        #[arg(long, default_value_t = deconv_core::deconvolution::DEFAULT_EDGE_MARGIN)]
        edge_margin: f64,
        #[arg(long)]
        auto_stop: bool,
        #[arg(long)]
        no_admissibility_check: bool,
        #[arg(long, default_value = "out/deconv")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_parser = ["fig1", "fig2", "fig3", "custom"])]
    id: String,
    /// TOML file overriding any of the experiment's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variance: Option<f64>,
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    /// Print the resolved configuration as TOML instead of running.
    #[arg(long)]
    print_config: bool,
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), AppError> {
    match output {
        Some(path) => fs::write(path, text).map_err(deconv_core::Error::from)?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(deconv_core::Error::from)?,
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, AppError> {
    Ok(fs::read_to_string(path).map_err(deconv_core::Error::from)?)
}

fn kernel_cmd(cmd: KernelCmd) -> Result<(), AppError> {
    match cmd {
        KernelCmd::Moments { kernel, max_m, output } => {
            let k = kernel.build()?;
            let mut text = String::from("m,moment\n");
            for (m, c) in k.moments(max_m)?.iter().enumerate() {
                text.push_str(&format!("{m},{c:?}\n"));
            }
            emit(output.as_deref(), &text)
        }
        KernelCmd::Fourier {
            kernel,
            epsilon,
            xi_max,
            points,
            output,
        } => {
            if points < 2 {
                return Err(AppError::Usage("--points must be at least 2".into()));
            }
            let k = kernel.build()?;
            let mut text = String::from("xi,re,im\n");
            for i in 0..points {
                let xi = xi_max * i as f64 / (points - 1) as f64;
                let z = k.fourier_complex(epsilon, xi)?;
                text.push_str(&format!("{xi:?},{:?},{:?}\n", z.re, z.im));
            }
            emit(output.as_deref(), &text)
        }
        KernelCmd::Check {
            kernel,
            epsilon,
            xi_max,
            points,
            output,
        } => {
            let report = kernel.build()?.check_admissible(epsilon, xi_max, points)?;
            let text = serde_json::to_string_pretty(&report).map_err(deconv_core::Error::from)? + "\n";
            emit(output.as_deref(), &text)
        }
    }
}

enum PolyOp {
    Conv,
    Deconv,
    Iterate(usize),
}

fn poly_cmd(args: &PolyArgs, op: PolyOp) -> Result<(), AppError> {
    let kernel = args.kernel.build()?;
    let text = match parse_polynomial(&read_text(&args.input)?)? {
        AnyPolynomial::Univariate(p) => {
            let t = ConvOperator::new(&kernel, args.epsilon, p.degree())?;
            let out = match op {
                PolyOp::Conv => t.convolve(&p)?,
                PolyOp::Deconv => t.invert(&p)?,
                PolyOp::Iterate(k) => t.iterate(&p, k)?,
            };
            out.to_json()
        }
        AnyPolynomial::Multivariate(p) => {
            let t = SeparableConv::new(&kernel, args.epsilon, p.total_degree())?;
            let out = match op {
                PolyOp::Conv => t.convolve(&p)?,
                PolyOp::Deconv => t.invert(&p)?,
                PolyOp::Iterate(k) => {
                    let mut q = p;
                    for _ in 0..k {
                        q = t.convolve(&q)?;
                    }
                    q
                }
            };
            out.to_json()
        }
    };
    emit(args.output.as_deref(), &(text + "\n"))
}

fn csv_text(write: impl FnOnce(&mut Vec<u8>) -> deconv_core::Result<()>) -> Result<String, AppError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn signal_cmd(cmd: SignalCmd) -> Result<(), AppError> {
    match cmd {
        SignalCmd::Conv { io, kernel, epsilon } => {
            let s = GridSignal::load_csv(&io.input)?;
            let taps = discretize_kernel(&kernel.build()?, epsilon, s.dt())?;
            let out = convolve_signal(&s, &taps)?;
            emit(io.output.as_deref(), &csv_text(|b| out.write_csv(b))?)
        }
        SignalCmd::Dft { io } => {
            let s = GridSignal::load_csv(&io.input)?;
            let sp = dft(&s);
            emit(io.output.as_deref(), &csv_text(|b| sp.write_csv(b))?)
        }
    }
}

fn deconv_cmd(cmd: DeconvCmd) -> Result<(), AppError> {
    let DeconvCmd::Run {
        input,
        kernel,
        epsilon,
        order,
        reference,
        filter,
        bandwidth,
        half_width,
        edge_margin,
        auto_stop,
        no_admissibility_check,
        out_dir,
    } = cmd;
    let g = GridSignal::load_csv(&input)?;
    let mut cfg = DeconvConfig::new(&kernel.build()?, epsilon, order)?;
    cfg.edge_margin = edge_margin;
    cfg.auto_stop = auto_stop;
    cfg.admissibility_check = !no_admissibility_check;
    cfg.validate()?;
    let taps = match filter {
        FilterArg::None => None,
        FilterArg::Sinc => Some(make_sinc_filter(bandwidth, g.dt(), half_width)?),
        FilterArg::Allpass => Some(Taps::identity(g.dt())),
    };
    let mut report = match &taps {
        Some(t) => recover_with_filter(&cfg, &g, t)?,
        None => inverse_operator(&cfg, &g)?,
    };
    if let Some(path) = reference {
        report = report.with_reference(&GridSignal::load_csv(path)?)?;
    }
    fs::create_dir_all(&out_dir).map_err(deconv_core::Error::from)?;
    report.reconstructed.save_csv(out_dir.join("reconstructed.csv"))?;
    match &report.filter {
        Some(stage) => {
            stage.filtered.save_csv(out_dir.join("filtered.csv"))?;
            stage.spectrum_before.save_csv(out_dir.join("spectrum_before.csv"))?;
            stage.spectrum_after.save_csv(out_dir.join("spectrum_after.csv"))?;
        }
        None => dft(&report.reconstructed).save_csv(out_dir.join("spectrum.csv"))?,
    }
    let text = serde_json::to_string_pretty(&report).map_err(deconv_core::Error::from)? + "\n";
    fs::write(out_dir.join("report.json"), text).map_err(deconv_core::Error::from)?;
    Ok(())
}

fn experiment_cmd(args: ExperimentArgs) -> Result<(), AppError> {
    let id: ExperimentId = args.id.parse()?;
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(Some(id), path)?,
        None => ExperimentSpec::defaults(id),
    };
    if let Some(v) = args.epsilon {
        spec.epsilon = v;
    }
    if let Some(v) = args.order {
        spec.order = v;
    }
    if let Some(v) = args.seed {
        spec.noise.seed = v;
    }
    if let Some(v) = args.variance {
        spec.noise.variance = v;
    }
    match args.filter {
        Some(FilterArg::Sinc) => spec.filter.kind = FilterKind::Sinc,
        Some(FilterArg::Allpass | FilterArg::None) => spec.filter.kind = FilterKind::Allpass,
        None => {}
    }
    if let Some(dir) = args.out_dir {
        spec.output_dir = dir;
    }
    if args.print_config {
        return emit(None, &spec.to_toml());
    }
    let files = run_and_write(&spec, &spec.output_dir)?;
    let mut text = String::new();
    for f in files {
        text.push_str(&format!("{}\n", f.display()));
    }
    emit(None, &text)
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Kernel(cmd) => kernel_cmd(cmd),
        Command::Poly(PolyCmd::Conv(args)) => poly_cmd(&args, PolyOp::Conv),
        Command::Poly(PolyCmd::Deconv(args)) => poly_cmd(&args, PolyOp::Deconv),
        Command::Poly(PolyCmd::Iterate { args, k }) => poly_cmd(&args, PolyOp::Iterate(k)),
        Command::Signal(cmd) => signal_cmd(cmd),
        Command::Deconv(cmd) => deconv_cmd(cmd),
        Command::Experiment(args) => experiment_cmd(args),
    }
}

fn usage_error(e: &clap::Error) -> AppError {
    AppError::Usage(e.render().to_string().trim().to_string())
}

fn fail(e: &AppError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&usage_error(&e)),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
