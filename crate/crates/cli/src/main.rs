//! Command-line driver: band structure, trace samples, zero tables, invariant
//! suites and small-coupling sweeps for a fourth-order periodic operator.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use floquet4::CoefficientSet;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "floquet4", version, about = "Spectral analysis of y'''' + (p y')' + q y = λ y with 1-periodic p, q")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bands, gaps and multiplicity-4 intervals up to --lambda-max.
    Spectrum,
    /// Discriminant samples on a uniform grid in s = sign(λ)|λ|^{1/4}.
    Trace {
        #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
        s_min: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        s_max: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Labeled periodic and antiperiodic eigenvalues up to index --n-max.
    Eigs,
    /// Labeled resonances (zeros of ρ) up to index --n-max.
    Resonances,
    /// Identity, bound, count and pairing suites on the given and random coefficients.
    Verify {
        #[arg(long, default_value_t = 0x5eed_f10c)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        random_sets: usize,
        #[arg(long, default_value_t = 10)]
        lambdas: usize,
    },
    /// Bottom-of-spectrum gap for ε·coefficients over the --eps list.
    Perturb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// JSON coefficient file {"p": {"const", "cos", "sin"}, "q": {...}}.
    #[arg(long, global = true, conflicts_with = "preset")]
    coeffs: Option<PathBuf>,
    /// Named coefficient set: zero | cos1.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Multiply both coefficients by this factor.
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    scale: f64,
    #[arg(long, global = true, default_value_t = 2)]
    n_max: usize,
    #[arg(long, global = true, default_value_t = 1e4)]
    lambda_max: f64,
    #[arg(long, global = true, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
    eps: Vec<f64>,
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_ode: f64,
    #[arg(long, global = true, default_value_t = 1e-14)]
    tol_root: f64,
    /// Write here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Defaults to csv for trace and json otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

/// Failure classes mapped to the process exit code.
#[derive(Debug)]
enum Failure {
    Verification(String),
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<floquet4::Error> for Failure {
    fn from(e: floquet4::Error) -> Self {
        use floquet4::Error as E;
        match e {
            E::Input(_) | E::Precondition(_) | E::Clamp { .. } => Failure::Input(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl Common {
    fn validate(&self) -> Result<(), Failure> {
        for (name, v) in [("--tol-ode", self.tol_ode), ("--tol-root", self.tol_root)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Input(format!("{name} must be positive")));
            }
        }
        if !self.scale.is_finite() {
            return Err(Failure::Input("--scale must be finite".into()));
        }
        if self.eps.iter().any(|e| !e.is_finite()) {
            return Err(Failure::Input("--eps values must be finite".into()));
        }
        Ok(())
    }

    fn coefficients(&self) -> Result<CoefficientSet, Failure> {
        let base = match (&self.coeffs, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
                CoefficientSet::from_json(&text)?
            }
            (None, Some(name)) => CoefficientSet::preset(name)?,
            (None, None) => return Err(Failure::Input("one of --coeffs or --preset is required".into())),
        };
        if self.scale == 1.0 {
            Ok(base)
        } else {
            Ok(base.scaled(self.scale)?)
        }
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    cli.common.validate()?;
    let c = cli.common.coefficients()?;
    let common = &cli.common;
    let text = match cli.command {
        Command::Spectrum => commands::spectrum(common, &c)?,
        Command::Trace { s_min, s_max, samples } => commands::trace(common, &c, s_min, s_max, samples)?,
        Command::Eigs => commands::eigs(common, &c)?,
        Command::Resonances => commands::resonances(common, &c)?,
        Command::Verify { seed, random_sets, lambdas } => {
            let (text, failed) = commands::verify(common, &c, seed, random_sets, lambdas)?;
            common.emit(&text)?;
            return match failed.is_empty() {
                true => Ok(()),
                false => Err(Failure::Verification(format!("violated: {}", failed.join("; ")))),
            };
        }
        Command::Perturb => commands::perturb(common, &c)?,
    };
    common.emit(&text)
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
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
