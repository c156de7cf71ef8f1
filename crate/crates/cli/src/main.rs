use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gecone::linalg::vector;
use gecone::report::{analyze, gderiv, render_text, selftest, ProblemFile};
use gecone::{Error, Settings};

#[derive(Parser)]
#[command(name = "gecone", version, about = "Graphical derivatives and isolated calmness for conic generalized equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline on a problem file.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Add per-stage wall-clock times (makes the report non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Print the pieces of DS(x̄, ȳ)(u).
    Gderiv {
        file: PathBuf,
        /// Comma-separated direction in R^n; defaults to zero.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u: Option<Vec<f64>>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Finite-difference, duality, homogeneity and worked-example checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_kkt: Option<f64>,
    /// Comma-separated probe radii.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long)]
    face_cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

impl Opts {
    fn apply(&self, mut s: Settings) -> Settings {
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.tol_kkt {
            s.tol_kkt = v;
        }
        if let Some(v) = &self.radii {
            s.radii = v.clone();
        }
        if let Some(v) = self.face_cap {
            s.face_cap = v;
        }
        s
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::InvalidInput(_) | Error::DimensionMismatch { .. } => 2,
        Error::Infeasible | Error::OutsideChart | Error::NotMember => 3,
        _ => 4,
    }
}

fn emit(json: String, format: Format) {
    match format {
        Format::Json => print!("{json}"),
        Format::Text => {
            let v: serde_json::Value = serde_json::from_str(&json).expect("own output is valid JSON");
            print!("{}", render_text(&v));
        }
    }
}

fn load(path: &PathBuf, opts: &Opts) -> Result<(ProblemFile, Vec<u8>, Settings), Error> {
    let raw = std::fs::read(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| Error::Parse { path: ".".into(), message: "file is not UTF-8".into() })?;
    let file = ProblemFile::parse(&text)?;
    let settings = opts.apply(file.options.clone());
    settings.validate().map_err(|e| Error::InvalidInput(format!("flags: {e}")))?;
    Ok((file, raw, settings))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze { file, opts, timings } => {
            let (pf, raw, settings) = load(&file, &opts)?;
            emit(analyze(&pf, &raw, &settings, timings)?.to_json(), opts.format);
            Ok(0)
        }
        Command::Gderiv { file, u, opts } => {
            let (pf, raw, settings) = load(&file, &opts)?;
            let u = vector(&u.unwrap_or_else(|| vec![0.0; pf.dims.n]));
            emit(gderiv(&pf, &raw, &u, &settings)?.to_json(), opts.format);
            Ok(0)
        }
        Command::Selftest { seed, format } => {
            let report = selftest(seed);
            emit(serde_json::to_string_pretty(&report).expect("serializes") + "\n", format);
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAILED {}: max error {:e} ({})", c.name, c.max_error, c.detail);
            }
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
