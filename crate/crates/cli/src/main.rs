use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fockstate::density::Tolerances;
use fockstate_cli::{
    cmd_check, cmd_decompose, cmd_eval, cmd_extend, cmd_vacuum, format_complex, write_file, CheckKind, CliError, Input,
    Verdict,
};

/// Density matrices of states on Toeplitz-Cuntz algebras.
///
/// Exit codes: 0 pass, 1 check failed, 2 input error, 3 horizon exceeded,
/// 4 undetermined at this depth.
#[derive(Debug, Parser)]
#[command(name = "fockstate", version)]
struct Cli {
    /// Worker threads for per-corner eigenvalue work (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Relative PSD tolerance per corner, replacing the default 1e-9.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print ρ(x) as "re im".
    Eval {
        state: PathBuf,
        expression: String,
    },

    /// Check a state and print a certificate.
    Check {
        state: PathBuf,

        #[arg(long, value_enum)]
        what: CheckKind,
    },

    /// Build the extension of a periodic product state for a circle measure.
    Extend {
        sequence: PathBuf,
        measure: PathBuf,

        #[arg(long)]
        depth: usize,

        #[arg(long)]
        out: PathBuf,
    },

    /// Split a state into singular and essential parts.
    ///
    /// Writes PREFIX.singular.json, PREFIX.essential.json and PREFIX.profile.csv.
    Decompose {
        state: PathBuf,

        #[arg(long)]
        out_prefix: PathBuf,
    },

    /// Write the vacuum state.
    Vacuum {
        #[arg(long)]
        n: usize,

        #[arg(long)]
        depth: usize,

        #[arg(long)]
        out: PathBuf,
    },
}

fn with_suffix(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn print(text: &str) {
    // a closed stdout is not worth a panic
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tolerance {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Invalid(format!("--tolerance must be a non-negative number, got {t}")));
        }
        tol.psd_factor = t;
    }
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--threads: {e}")))?;
    }

    match cli.command {
        Command::Eval { state, expression } => {
            let (value, _) = cmd_eval(&Input::read("state", &state)?, &expression)?;
            print(&format!("{}\n", format_complex(value)));
            Ok(Verdict::Pass)
        }
        Command::Check { state, what } => {
            let (verdict, report) = cmd_check(&Input::read("state", &state)?, what, &tol)?;
            print(&report.to_json());
            Ok(verdict)
        }
        Command::Extend { sequence, measure, depth, out } => {
            let seq = Input::read("sequence", &sequence)?;
            let sigma = Input::read("measure", &measure)?;
            let (state, report) = cmd_extend(&seq, &sigma, depth, &tol)?;
            write_file(&out, &state)?;
            print(&report.to_json());
            Ok(Verdict::Pass)
        }
        Command::Decompose { state, out_prefix } => {
            let parts = cmd_decompose(&Input::read("state", &state)?, &tol)?;
            write_file(&with_suffix(&out_prefix, ".singular.json"), &parts.singular)?;
            write_file(&with_suffix(&out_prefix, ".essential.json"), &parts.essential)?;
            write_file(&with_suffix(&out_prefix, ".profile.csv"), &parts.profile_csv)?;
            print(&parts.report.to_json());
            Ok(Verdict::Pass)
        }
        Command::Vacuum { n, depth, out } => {
            write_file(&out, &cmd_vacuum(n, depth)?)?;
            Ok(Verdict::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(verdict) => ExitCode::from(verdict.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
