use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use stbc_core::analysis::{min_determinant_sampled, min_determinant_with, CodeAnalysisReport, SearchOptions};
use stbc_core::constellation::{angle_sweep, ciod_angle, degree_grid, square_qam};
use stbc_core::decoder::DecoderKind;
use stbc_core::sim::{emit, parse_snr_list, run_cer, SimConfig};
use stbc_core::stbc::{default_theta, LinearDispersionCode};
use stbc_core::{verify, Error};

#[derive(Parser)]
#[command(name = "stbc", version, about = "Rate-two 4x2 space-time block code: analysis and error-rate simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo codeword error rate over an SNR grid
    Simulate(SimulateArgs),
    /// Minimum determinant and diversity of the code
    Analyze(AnalyzeArgs),
    /// Sweep an angle and report the one maximizing the minimum determinant
    Sweep(SweepArgs),
    /// Structural self-tests
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// start:stop:step in dB, or a comma-separated list
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    decoder: Option<String>,
    /// Maximum frames per SNR point
    #[arg(long)]
    frames: Option<u64>,
    /// Stop a point after this many codeword errors
    #[arg(long)]
    errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "theta-deg")]
    theta_deg: Option<f64>,
    #[arg(long = "theta-g-deg")]
    theta_g_deg: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Write zero in the seconds column so repeated runs produce identical files
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long = "M", default_value_t = 4)]
    m: usize,
    #[arg(long = "theta-deg")]
    theta_deg: Option<f64>,
    #[arg(long = "theta-g-deg")]
    theta_g_deg: Option<f64>,
    /// Analyse only the four-symbol CIOD layer
    #[arg(long)]
    ciod_only: bool,
    /// Replace the exhaustive search by low-weight plus this many random differences
    #[arg(long)]
    sampled: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Determinant evaluations allowed for the exhaustive search
    #[arg(long, default_value_t = 100_000_000)]
    budget: u128,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    /// Second-layer phase, full code
    Theta,
    /// Constellation rotation, CIOD layer only
    ThetaG,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepParam::Theta)]
    param: SweepParam,
    /// First angle in degrees
    #[arg(long)]
    start: Option<f64>,
    /// Last angle in degrees
    #[arg(long)]
    stop: Option<f64>,
    /// Step in degrees
    #[arg(long)]
    step: Option<f64>,
    /// Use low-weight plus this many random differences per angle
    #[arg(long)]
    sampled: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write angle,min_det rows to this CSV file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random frames per SNR for the decoder comparison
    #[arg(long, default_value_t = 20)]
    frames: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => run_verify(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn simulate_config(a: &SimulateArgs) -> anyhow::Result<SimConfig> {
    let mut cfg = match &a.config {
        Some(path) => SimConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => SimConfig::new(4, Vec::new(), DecoderKind::Sphere),
    };
    if let Some(m) = a.m {
        cfg.m = m;
    }
    if let Some(s) = &a.snr {
        cfg.snr_db = parse_snr_list(s)?;
    }
    if let Some(d) = &a.decoder {
        cfg.decoder = d.parse()?;
    }
    if let Some(f) = a.frames {
        cfg.max_frames = f;
    }
    if let Some(e) = a.errors {
        cfg.target_errors = e;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.theta_deg.is_some() {
        cfg.theta_deg = a.theta_deg;
    }
    if a.theta_g_deg.is_some() {
        cfg.theta_g_deg = a.theta_g_deg;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    if let Some(f) = &a.format {
        cfg.format = f.parse()?;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    if a.no_timing {
        cfg.timing = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: SimulateArgs) -> anyhow::Result<ExitCode> {
    let cfg = simulate_config(&a)?;
    let table = run_cer(&cfg)?;
    print!("{table}");
    if let Some(path) = &cfg.out {
        emit(&table, &cfg, cfg.format, path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn angle_or(deg: Option<f64>, default: f64) -> f64 {
    deg.map_or(default, f64::to_radians)
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let constellation = square_qam::<f64>(a.m)?;
    let theta_g = angle_or(a.theta_g_deg, ciod_angle());
    let code = if a.ciod_only {
        LinearDispersionCode::ciod_only(theta_g)
    } else {
        LinearDispersionCode::new(theta_g, angle_or(a.theta_deg, default_theta()))
    };
    let report = match a.sampled {
        Some(n) => min_determinant_sampled(&code, &constellation, n, a.seed)?,
        None => match min_determinant_with(&code, &constellation, SearchOptions { budget: a.budget }) {
            Err(Error::SearchSpaceTooLarge { required, budget }) => {
                bail!("exhaustive search needs {required} evaluations (budget {budget}); raise --budget or use --sampled")
            }
            other => other?,
        },
    };
    match a.format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        ReportFormat::Text => print_report(&report, constellation.label()),
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(r: &CodeAnalysisReport, label: &str) {
    let mode = match r.mode {
        stbc_core::analysis::SearchMode::Exhaustive => "exhaustive",
        stbc_core::analysis::SearchMode::Sampled => "sampled (upper bound)",
    };
    println!("constellation     {label}");
    println!("search            {mode}, {} difference vectors", r.pairs_evaluated);
    println!("min_det = {:.4}", r.min_det);
    println!("min_det (full)    {:e}", r.min_det);
    println!("min_rank          {} of {}", r.min_rank, r.n_t);
    println!("full diversity    {}", if r.min_rank == r.n_t { "yes" } else { "no" });
    println!("coding_gain       {:.6}", r.coding_gain);
    let dx: Vec<String> = r.argmin_dx.iter().map(|d| format!("{:+.4}{:+.4}j", d[0], d[1])).collect();
    println!("argmin_dx         [{}]", dx.join(", "));
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let (start, stop, step) = match a.param {
        SweepParam::Theta => (a.start.unwrap_or(0.0), a.stop.unwrap_or(45.0), a.step.unwrap_or(1.0)),
        SweepParam::ThetaG => (a.start.unwrap_or(25.0), a.stop.unwrap_or(40.0), a.step.unwrap_or(0.25)),
    };
    if !(step > 0.0) || stop < start {
        return Err(Error::Config("sweep needs a positive step and stop >= start".into()).into());
    }
    let grid = degree_grid::<f64>(start, stop, step);
    let qam = square_qam::<f64>(4)?;
    let code_at = |angle: f64| match a.param {
        SweepParam::Theta => LinearDispersionCode::new(ciod_angle(), angle),
        SweepParam::ThetaG => LinearDispersionCode::ciod_only(angle),
    };
    let evaluate = |angle: f64| {
        let code = code_at(angle);
        let report = match a.sampled {
            Some(n) => min_determinant_sampled(&code, &qam, n, a.seed),
            None => min_determinant_with(&code, &qam, SearchOptions::default()),
        };
        report.map(|r| r.min_det).unwrap_or(f64::NAN)
    };
    let result = angle_sweep(&grid, evaluate)?;
    let mut csv = String::from("angle_deg,min_det\n");
    for (angle, v) in &result.values {
        println!("{:>9.4}  {:.6}", angle.to_degrees(), v);
        csv.push_str(&format!("{},{}\n", angle.to_degrees(), v));
    }
    println!("best angle {:.4} deg, min_det {:.6}", result.best_angle.to_degrees(), result.best_value);
    if let Some(path) = &a.out {
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let results = verify::run_battery(a.frames, a.seed);
    let passed = results.iter().filter(|r| r.passed).count();
    for r in &results {
        println!("[{}] {:<30} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    println!("{passed}/{} checks passed", results.len());
    Ok(if passed == results.len() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
