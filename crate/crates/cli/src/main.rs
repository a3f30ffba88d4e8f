use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use locc_cert_cli::format::FileMode;
use locc_cert_cli::{
    cmd_check, cmd_density, cmd_generate, cmd_tree_audit, deliver, CheckOptions, DensityOptions,
    GenerateKind, OutputFormat, EXIT_ERROR,
};

#[derive(Parser)]
#[command(name = "locc-cert", version, about = "Finite-round LOCC extreme-ray certifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Text => OutputFormat::Text,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify a measurement file against the extreme-ray bounds.
    /// Exit code 10 means the necessary condition is violated.
    Check {
        file: PathBuf,
        /// Defaults to the file's own mode.
        #[arg(long, value_enum, env = "LOCC_CERT_BACKEND")]
        backend: Option<Backend>,
        /// One tolerance for every float comparison.
        #[arg(long)]
        tol: Option<f64>,
        /// Merge duplicated elements instead of rejecting them.
        #[arg(long)]
        dedupe: bool,
        /// Only list extreme rays for this party (0-based).
        #[arg(long)]
        party: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit a protocol tree against the measurement it realizes.
    TreeAudit {
        tree: PathBuf,
        measurement: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated measurement (and tree) file.
    Generate {
        #[command(subcommand)]
        kind: Kind,
        /// Measurement file; stdout when omitted.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
        #[arg(long, global = true)]
        tree_out: Option<PathBuf>,
    },
    /// Extreme-ray density along the file's element order.
    Density {
        file: PathBuf,
        /// Comma-separated, strictly increasing prefix sizes.
        #[arg(long, value_delimiter = ',')]
        prefixes: Option<Vec<usize>>,
        /// Comma-separated element indices to move to the front.
        #[arg(long, value_delimiter = ',')]
        pin: Vec<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Kind {
    Domino,
    RotatedDomino {
        /// Four angles in (0, pi/2), comma-separated.
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        angles: Vec<f64>,
    },
    Tight {
        #[arg(long)]
        parties: usize,
        #[arg(long)]
        n: usize,
    },
    TightOmit {
        #[arg(long)]
        parties: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    Density {
        #[arg(long)]
        parties: usize,
        #[arg(long)]
        subtrees: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { file, backend, tol, dedupe, party, format, out } => {
            let opts = CheckOptions {
                backend: backend.map(|b| match b {
                    Backend::Exact => FileMode::Exact,
                    Backend::Float => FileMode::Float,
                }),
                tol,
                dedupe,
                party,
                format: format.into(),
            };
            deliver(cmd_check(&file, &opts), out.as_ref())
        }
        Command::TreeAudit { tree, measurement, tol, format, out } => {
            deliver(cmd_tree_audit(&tree, &measurement, tol, format.into()), out.as_ref())
        }
        Command::Generate { kind, out, tree_out } => {
            let kind = match kind {
                Kind::Domino => Ok(GenerateKind::Domino),
                Kind::RotatedDomino { angles } => <[f64; 4]>::try_from(angles)
                    .map(|angles| GenerateKind::RotatedDomino { angles })
                    .map_err(|a| locc_cert_cli::CliError::new(format!("--angles needs 4 values, got {}", a.len()))),
                Kind::Tight { parties, n } => Ok(GenerateKind::Tight { parties, n }),
                Kind::TightOmit { parties, n, k } => Ok(GenerateKind::TightOmit { parties, n, k }),
                Kind::Density { parties, subtrees } => Ok(GenerateKind::Density { parties, subtrees }),
            };
            kind.and_then(|k| cmd_generate(&k, out.as_deref(), tree_out.as_deref()))
        }
        Command::Density { file, prefixes, pin, tol, format, out } => {
            let opts = DensityOptions { prefixes, pin, tol, format: format.into() };
            deliver(cmd_density(&file, &opts), out.as_ref())
        }
    };
    match result {
        Ok(o) => {
            print!("{}", o.text);
            ExitCode::from(o.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
