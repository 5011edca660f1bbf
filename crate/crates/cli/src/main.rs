use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iterint_cli::{load, resolve, run, CliError, Command, ConfigOverrides, Report};

/// Holonomies of flat graded superconnections on simplicial sets.
///
/// Exit codes: 0 all checks pass, 2 schema or usage error, 3 accuracy
/// failure, 4 invariant violation.
#[derive(Parser)]
#[command(name = "iterint", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Cmd {
    /// Holonomy matrices per simplex, with oracle and gauge checks.
    Holonomy { scenario: PathBuf },
    /// Structure equations and unitality of the integrated representation.
    CheckRep { scenario: PathBuf },
    /// Betti numbers of the twisted cochain complex.
    Cohomology { scenario: PathBuf },
    /// Built-in octahedral sphere with a volume-form superconnection.
    SphereDemo,
    /// Seeded random suite of A∞ and iterated-integral identities.
    VerifyAinfty,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Opts {
    /// Truncation order of the holonomy series.
    #[arg(long, global = true)]
    max_n: Option<usize>,
    /// Series tail tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Gauss order per axis.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Disable subdivision of the time axes at breakpoints.
    #[arg(long, global = true)]
    no_subdivide: bool,
    /// Seed for quadrature jitter and random suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Highest simplex dimension integrated.
    #[arg(long, global = true)]
    dim_cap: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Opts {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            max_n: self.max_n,
            tol: self.tol,
            quad_order: self.quad_order,
            subdivide_t: self.no_subdivide.then_some(false),
            dim_cap: self.dim_cap,
            seed: self.seed,
        }
    }
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    let (cmd, path) = match &cli.command {
        Cmd::Holonomy { scenario } => (Command::Holonomy, Some(scenario)),
        Cmd::CheckRep { scenario } => (Command::CheckRep, Some(scenario)),
        Cmd::Cohomology { scenario } => (Command::Cohomology, Some(scenario)),
        Cmd::SphereDemo => (Command::SphereDemo, None),
        Cmd::VerifyAinfty => (Command::VerifyAinfty, None),
    };
    let scene = path.map(|p| load(p)).transpose()?;
    let settings = resolve(cmd, scene.as_ref(), &cli.opts.overrides())?;
    run(cmd, scene.as_ref(), &settings)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            let text = match cli.opts.format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            let code = report.exit_code();
            if let Some(path) = &cli.opts.out {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{text}");
            }
            if code != 0 {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                eprintln!("failed checks: {}", failed.join(", "));
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
