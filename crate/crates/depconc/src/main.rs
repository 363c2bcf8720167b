use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use depconc::cli::{
    run_analyze, run_selftest, run_validate, write_output, AnalyzeOptions, CliFailure,
    OutputFormat, SelftestOptions, ValidateOptions,
};

/// Concentration tail bounds for dependent finite-state models, certified
/// against exact enumeration.
#[derive(Parser)]
#[command(name = "depconc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate tail bounds and Gamma diagnostics for a model and function.
    Analyze(AnalyzeArgs),
    /// Evaluate bounds alongside exact (or Monte Carlo) tails; exits 4 when
    /// an applicable bound is violated.
    Validate(ValidateArgs),
    /// Run the soundness harness and the module invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Model document (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Function document (JSON).
    #[arg(long)]
    function: PathBuf,
    /// Comma-separated method list (default: all standard methods).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Grid of thresholds: comma-separated reals, or "auto".
    #[arg(long, default_value = "auto")]
    t: String,
    /// Output format: json or csv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Seed recorded in the report and used by randomized diagnostics.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Contiguous 1-based block partition, e.g. "1-2,3".
    #[arg(long)]
    blocks: Option<String>,
    /// Output path (atomic write); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Ground truth: exact enumeration or Monte Carlo estimates.
    #[arg(long, default_value = "exact")]
    mode: String,
    /// Sample count for mc mode (default 100000).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
    /// Write the per-instance soundness reports here as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn analyze_options(args: &CommonArgs) -> Result<AnalyzeOptions, CliFailure> {
    Ok(AnalyzeOptions {
        model_path: args.model.clone(),
        function_path: args.function.clone(),
        methods: args.methods.clone(),
        t_spec: args.t.clone(),
        format: OutputFormat::parse(&args.format)?,
        seed: args.seed,
        blocks: args.blocks.clone(),
        out: args.out.clone(),
    })
}

fn fail(e: CliFailure) -> ExitCode {
    eprintln!("error: {}", e.message());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze(args) => {
            let opts = match analyze_options(&args.common) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            match run_analyze(&opts) {
                Ok(content) => match write_output(&opts.out, &content) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(e),
                },
                Err(e) => fail(e),
            }
        }
        Command::Validate(args) => {
            let opts = match analyze_options(&args.common) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            let out = opts.out.clone();
            let vopts = ValidateOptions { common: opts, mode: args.mode, samples: args.samples };
            match run_validate(&vopts) {
                Ok((content, soundness)) => {
                    if let Err(e) = write_output(&out, &content) {
                        return fail(e);
                    }
                    match soundness {
                        None => ExitCode::SUCCESS,
                        Some(e) => fail(e),
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Selftest(args) => {
            let opts = SelftestOptions {
                seed: args.seed,
                instances: args.instances,
                inject_fault: args.inject_fault,
                out: args.out,
            };
            match run_selftest(&opts) {
                Ok((summary, code)) => {
                    print!("{summary}");
                    ExitCode::from(code as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
