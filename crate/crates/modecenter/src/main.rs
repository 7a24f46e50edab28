//! Command-line interface: center-of-symmetry estimation, variance
//! curves, the Monte Carlo study, and the embedded speed-of-light case
//! study.

use clap::{Args, Parser, Subcommand, ValueEnum};
use modecenter::error::Error;
use modecenter::estimators::{
    self, IrwConfig, TrimConfig, TrimFlavor,
};
use modecenter::kernels::{self, KernelShape};
use modecenter::newcomb;
use modecenter::pilot::PilotConfig;
use modecenter::sim::{self, EmitFormat, EstimatorSpec, SimConfig};
use modecenter::testbeds::Testbed;
use modecenter::tuner::TunerConfig;
use modecenter::variance;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "modecenter", version, about = "Kernel mode estimation of the center of symmetry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the center of symmetry of a data file
    Estimate(EstimateArgs),
    /// Tabulate the asymptotic variance V(h) for a test-bed density
    VarianceCurve(CurveArgs),
    /// Run the Monte Carlo comparison study
    Simulate(SimulateArgs),
    /// Full pipeline on the embedded Newcomb speed-of-light data
    CaseStudy(CaseStudyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorName {
    Kme,
    Mean,
    Median,
    Trimmed,
    Winsorized,
    Tukey,
    Andrews,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input file: newline-delimited floats, or CSV with --column
    #[arg(long)]
    input: PathBuf,
    /// CSV column name to read instead of bare floats
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_enum, default_value = "kme")]
    estimator: EstimatorName,
    /// Trimming level for trimmed/winsorized
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Choose the trimming level by bootstrap variance minimization
    #[arg(long)]
    adaptive_alpha: bool,
    /// Seed for the adaptive-alpha bootstrap
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the full iteration trace
    #[arg(long)]
    trace: bool,
    /// Tuner starting shape parameter
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    /// Tuner starting bandwidth (default: MADN)
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tuner_tol: f64,
    #[arg(long, default_value_t = 400)]
    tuner_max_evals: usize,
    /// Restart the tuner from three shape-parameter guesses
    #[arg(long)]
    tuner_multistart: bool,
    /// Override the pilot KDE bandwidth
    #[arg(long)]
    pilot_bandwidth: Option<f64>,
    #[arg(long, default_value_t = 4096)]
    pilot_grid: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelName {
    Bump,
    Epanechnikov,
    Triweight,
    RaisedCosine,
    Gaussian,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    testbed: String,
    #[arg(long, value_enum, default_value = "bump")]
    kernel: KernelName,
    /// Shape parameter for the bump kernel
    #[arg(long, default_value_t = 8.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    h_min: f64,
    #[arg(long, default_value_t = 1e3)]
    h_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Use linear instead of logarithmic bandwidth spacing
    #[arg(long)]
    linear: bool,
    /// Output CSV path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatName {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    /// Comma-separated test-bed ids (default: all)
    #[arg(long, value_delimiter = ',')]
    testbeds: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Comma-separated estimators; trimmed/winsorized are adaptive unless
    /// given as e.g. trimmed=0.1
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = ["kme".to_string(), "mean".to_string(), "median".to_string()]
    )]
    estimators: Vec<String>,
    /// Bootstrap resamples for adaptive trimming levels
    #[arg(long, default_value_t = 100)]
    bootstrap_b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatName,
    /// Worker threads (0: all cores; capped by MODECENTER_THREADS)
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Long protocol: 1000 replications, n up to 10^4
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct CaseStudyArgs {
    /// Output JSON path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are exit 1 regardless of clap's default.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::VarianceCurve(args) => cmd_variance_curve(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::CaseStudy(args) => cmd_case_study(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 1,
                Error::Data(_) | Error::Io { .. } => 2,
                Error::Domain(_) | Error::Numeric(_) => 3,
            })
        }
    }
}

/// Newline-delimited floats, or one CSV column; '#' lines are comments.
fn read_input(path: &PathBuf, column: Option<&str>) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut data = Vec::new();
    if let Some(name) = column {
        let (_, header) = lines
            .first()
            .ok_or_else(|| Error::Data(format!("{}: no header row", path.display())))?;
        let idx = header
            .split(',')
            .map(str::trim)
            .position(|c| c == name)
            .ok_or_else(|| {
                Error::Data(format!("{}: no column named '{name}'", path.display()))
            })?;
        for (lineno, line) in &lines[1..] {
            let field = line.split(',').nth(idx).map(str::trim).ok_or_else(|| {
                Error::Data(format!("{}:{lineno}: missing column {idx}", path.display()))
            })?;
            data.push(parse_float(field, path, *lineno)?);
        }
    } else {
        for (lineno, line) in &lines {
            data.push(parse_float(line, path, *lineno)?);
        }
    }
    if data.is_empty() {
        return Err(Error::Data(format!("{}: no data values", path.display())));
    }
    Ok(data)
}

fn parse_float(field: &str, path: &PathBuf, lineno: usize) -> Result<f64, Error> {
    field.parse::<f64>().map_err(|_| {
        Error::Data(format!(
            "{}:{lineno}: not a number: '{field}'",
            path.display()
        ))
    })
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Error> {
    let data = read_input(&args.input, args.column.as_deref())?;
    let irw_cfg = IrwConfig::default();
    let mut beta = None;
    let mut h = None;
    let mut iterations = None;
    let mut converged = None;
    let mut trace_json = None;
    let (estimate, name) = match args.estimator {
        EstimatorName::Kme => {
            let pilot_cfg = PilotConfig {
                bandwidth_override: args.pilot_bandwidth,
                grid_size: args.pilot_grid,
            };
            let tuner_cfg = TunerConfig {
                beta0: args.beta0,
                h0: args.h0,
                tol: args.tuner_tol,
                max_evals: args.tuner_max_evals,
                multistart: args.tuner_multistart,
                ..TunerConfig::default()
            };
            let (est, tuned, trace) =
                estimators::kme_tuned(&data, &pilot_cfg, &tuner_cfg, &irw_cfg)?;
            beta = Some(tuned.beta);
            h = Some(tuned.h);
            iterations = Some(trace.iterations);
            converged = Some(trace.converged);
            if args.trace {
                trace_json = Some(serde_json::to_value(&trace).unwrap());
            }
            (est, "kme")
        }
        EstimatorName::Mean => (estimators::sample_mean(&data)?, "mean"),
        EstimatorName::Median => (estimators::sample_median(&data)?, "median"),
        EstimatorName::Trimmed | EstimatorName::Winsorized => {
            let flavor = if args.estimator == EstimatorName::Trimmed {
                TrimFlavor::Trimmed
            } else {
                TrimFlavor::Winsorized
            };
            let cfg = if args.adaptive_alpha {
                estimators::bootstrap_alpha(
                    &data,
                    flavor,
                    &estimators::default_alpha_grid(),
                    200,
                    args.seed,
                )?
            } else {
                TrimConfig {
                    alpha: args.alpha,
                    flavor,
                }
            };
            let est = estimators::trimmed_mean(&data, &cfg)?;
            (
                est,
                match flavor {
                    TrimFlavor::Trimmed => "trimmed",
                    TrimFlavor::Winsorized => "winsorized",
                },
            )
        }
        EstimatorName::Tukey => (estimators::tukey_biweight(&data, &irw_cfg)?, "tukey"),
        EstimatorName::Andrews => (estimators::andrews_sine(&data, &irw_cfg)?, "andrews"),
    };
    let mut out = json!({
        "estimate": estimate,
        "estimator": name,
        "beta": beta,
        "h": h,
        "iterations": iterations,
        "converged": converged,
    });
    if let Some(t) = trace_json {
        out["trace"] = t;
    }
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}

fn cmd_variance_curve(args: CurveArgs) -> Result<(), Error> {
    let tb = Testbed::from_id(&args.testbed)?;
    let shape = match args.kernel {
        KernelName::Bump => KernelShape::BumpFamily { beta: args.beta },
        KernelName::Epanechnikov => KernelShape::Epanechnikov,
        KernelName::Triweight => KernelShape::Triweight,
        KernelName::RaisedCosine => KernelShape::RaisedCosine,
        KernelName::Gaussian => KernelShape::Gaussian,
    };
    let curve = variance::variance_curve(
        tb,
        shape,
        args.h_min,
        args.h_max,
        args.points,
        !args.linear,
    )?;
    let mut text = String::from("h,V,sigma2_ref,median_ref\n");
    let sigma2 = if curve.sigma2_ref.is_finite() {
        format!("{}", curve.sigma2_ref)
    } else {
        String::new()
    };
    for (h, v) in curve.h_grid.iter().zip(&curve.values) {
        let v = v.map(|v| format!("{v}")).unwrap_or_default();
        text.push_str(&format!("{h},{v},{sigma2},{}\n", curve.median_ref));
    }
    write_output(args.out.as_ref(), &text)
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.display().to_string(),
            source: e,
        }),
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn thread_cap(requested: usize) -> usize {
    match std::env::var("MODECENTER_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => {
            if requested == 0 {
                cap
            } else {
                requested.min(cap)
            }
        }
        _ => requested,
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let testbeds = if args.testbeds.is_empty() {
        Testbed::ALL.to_vec()
    } else {
        args.testbeds
            .iter()
            .map(|id| Testbed::from_id(id))
            .collect::<Result<Vec<_>, _>>()?
    };
    let estimators = args
        .estimators
        .iter()
        .map(|t| EstimatorSpec::parse(t, args.bootstrap_b))
        .collect::<Result<Vec<_>, _>>()?;
    let (reps, sizes) = if args.full_scale {
        (1000, vec![100, 1000, 10_000])
    } else {
        (args.reps, args.sizes.clone())
    };
    let config = SimConfig {
        testbeds,
        sample_sizes: sizes,
        replications: reps,
        estimators,
        master_seed: args.seed,
        parallelism: thread_cap(args.parallelism),
    };
    let table = sim::run(&config)?;
    let format = match args.format {
        FormatName::Csv => EmitFormat::Csv,
        FormatName::Json => EmitFormat::Json,
    };
    sim::emit(&table, format, &args.out)
}

fn cmd_case_study(args: CaseStudyArgs) -> Result<(), Error> {
    let data = newcomb::expanded();
    let (estimate, tuned, trace) = estimators::kme_tuned(
        &data,
        &PilotConfig::default(),
        &TunerConfig::default(),
        &IrwConfig::default(),
    )?;
    let profile = kernels::normalize(KernelShape::BumpFamily { beta: tuned.beta }, 4096)?;
    let n = data.len() as f64;
    let rows: Vec<serde_json::Value> = newcomb::DATA
        .iter()
        .map(|&(value, count)| {
            // All observations of one unique value share one unit weight.
            let idx = data.iter().position(|&x| x == value as f64).unwrap();
            let unit = trace.weights_final[idx];
            let density = data
                .iter()
                .map(|&x| profile.eval((value as f64 - x) / tuned.h))
                .sum::<f64>()
                / (n * tuned.h);
            json!({
                "value": value,
                "count": count,
                "unit_weight": unit,
                "total_weight": unit * count as f64,
                "density": density,
            })
        })
        .collect();
    let trim_cfg = TrimConfig {
        alpha: 2.0 / 66.0,
        flavor: TrimFlavor::Trimmed,
    };
    let report = json!({
        "estimate": estimate,
        "beta": tuned.beta,
        "h": tuned.h,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "mean": estimators::sample_mean(&data)?,
        "median": estimators::sample_median(&data)?,
        "trimmed_mean_alpha_2_66": estimators::trimmed_mean(&data, &trim_cfg)?,
        "rows": rows,
    });
    write_output(
        args.out.as_ref(),
        &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
    )
}
