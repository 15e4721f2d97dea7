use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use tilelab::boundary::{sigma_til12, til13_rule, til2_rule, Letter, Word, TIL12, TIL13, TIL2};
use tilelab::classify::{classify, verify_orientation_count, verify_size_count};
use tilelab::render::{render_svg, ColorMode, RenderOptions};
use tilelab::report::{boundary_csv, fmt_csv, to_json, BoundarySystem};
use tilelab::spectral::{eigen, irrational_char, orientation_spectrum_check, IrrationalSpectrum};
use tilelab::stats::{compare, SizeBin};
use tilelab::substitution::TilingRecord;
use tilelab::{build_tn, Error, Tiling, TriangleShape};

#[derive(Parser)]
#[command(name = "tilelab", version, about = "Generalized pinwheel substitution tilings")]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ShapeArgs {
    /// Rational shape `Til(p/q)`, e.g. `1/2`.
    #[arg(long, value_name = "P/Q")]
    pq: Option<String>,
    /// Small angle in radians, with hypotenuse 1.
    #[arg(long, value_name = "RAD", allow_negative_numbers = true)]
    theta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Til12,
    Til2,
    Til13,
}

#[derive(Clone, Copy, ValueEnum)]
enum Color {
    Size,
    Phi,
}

#[derive(Subcommand)]
enum Command {
    /// Build `T_n` and write it as JSON.
    Generate {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predicted size and orientation counts, optionally checked on `T_n`.
    Classify {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Assert whether θ/π is rational.
        #[arg(long)]
        theta_pi_rational: Option<bool>,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Population spectrum, or the transcendental spectrum for raw angles.
    Spectral {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Also check the orientation transfer matrix of this Fourier mode.
        #[arg(long, allow_negative_numbers = true)]
        mode: Option<i64>,
    },
    /// Boundary profiles as CSV, or the word `σⁿ(H⁺)`.
    Boundary {
        #[arg(long, value_enum)]
        system: System,
        #[arg(long)]
        n: u32,
        /// Print the boundary word instead of the profile table.
        #[arg(long)]
        word: bool,
    },
    /// Empirical against limiting size distributions of a tiling file.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// Emit the comparison table as CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Render a tiling file as SVG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "size")]
        color: Color,
        #[arg(long)]
        faults: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn shape_of(a: &ShapeArgs) -> CliResult<TriangleShape> {
    match (&a.pq, a.theta) {
        (Some(pq), None) => {
            let (p, q) = pq
                .split_once('/')
                .ok_or_else(|| Failure::Usage(format!("--pq expects P/Q, got {pq:?}")))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<u32>()
                    .map_err(|_| Failure::Usage(format!("--pq expects positive integers, got {pq:?}")))
            };
            Ok(TriangleShape::from_pq(parse(p)?, parse(q)?)?)
        }
        (None, Some(theta)) => Ok(TriangleShape::from_theta(theta, 1.0)?),
        _ => Err(Failure::Usage("give exactly one of --pq or --theta".into())),
    }
}

fn load_tiling(path: &Path) -> CliResult<Tiling> {
    let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
    let rec: TilingRecord = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Failure::Usage(format!("{} is not a tiling file: {e}", path.display())))?;
    Ok(Tiling::from_record(&rec)?)
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Lib(Error::Internal(format!("stdout: {e}"))))
        }
    }
}

fn json_value<T: serde::Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| Failure::Lib(Error::Internal(e.to_string())))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Lib(Error::Internal(e.to_string())))?;
    }
    match cli.command {
        Command::Generate { shape, n, out } => {
            let t = build_tn(&shape_of(&shape)?, n)?;
            emit(&to_json(&t.to_record())?, out.as_deref())
        }
        Command::Classify { shape, theta_pi_rational, n } => {
            let s = shape_of(&shape)?;
            let mut v = json_value(&classify(&s, theta_pi_rational))?;
            if let Some(n) = n {
                let t = build_tn(&s, n)?;
                v["empirical"] = json!({
                    "n": n,
                    "tiles": t.len(),
                    "size_count": verify_size_count(&t),
                    "orientation_count": verify_orientation_count(&t),
                });
            }
            emit(&to_json(&v)?, None)
        }
        Command::Spectral { shape, mode } => {
            let s = shape_of(&shape)?;
            let mut v = match s.pq() {
                Some((p, q)) => json_value(&eigen(p, q)?)?,
                None => {
                    let mut v = json_value(&IrrationalSpectrum::new(&s))?;
                    v["char_at_2"] = json!(irrational_char(&s, Complex64::new(2.0, 0.0)).norm());
                    v
                }
            };
            if let Some(m) = mode {
                v["orientation_mode"] = json_value(&orientation_spectrum_check(&s, m)?)?;
            }
            emit(&to_json(&v)?, None)
        }
        Command::Boundary { system, n, word } => {
            if word {
                let (rule, seed) = match system {
                    System::Til12 => (sigma_til12(), Word::new(&TIL12, vec![Letter::plus(0)])?),
                    System::Til2 => (til2_rule(), Word::new(&TIL2, vec![Letter::plus(0)])?),
                    System::Til13 => (til13_rule(), Word::new(&TIL13, vec![Letter::plus(0)])?),
                };
                let w = rule.iterate(&seed, n)?;
                return emit(&format!("{w}\n"), None);
            }
            let sys = match system {
                System::Til12 => BoundarySystem::Til12,
                System::Til2 => BoundarySystem::Til2,
                System::Til13 => BoundarySystem::Til13,
            };
            emit(&boundary_csv(sys, n, tilelab::boundary::DEFAULT_MAX_LETTERS)?, None)
        }
        Command::Stats { input, csv } => {
            let report = compare(&load_tiling(&input)?)?;
            if !csv {
                return emit(&to_json(&report)?, None);
            }
            let mut text = String::from("bin,analytic_count,empirical_count,analytic_area,empirical_area\n");
            for r in &report.rows {
                let bin = match r.bin {
                    SizeBin::Class { k } => k.to_string(),
                    SizeBin::Interval { lo, hi } => format!("[{} {})", fmt_csv(lo), fmt_csv(hi)),
                };
                text.push_str(&format!(
                    "{bin},{},{},{},{}\n",
                    r.analytic_count.map(fmt_csv).unwrap_or_default(),
                    fmt_csv(r.empirical_count),
                    fmt_csv(r.analytic_area),
                    fmt_csv(r.empirical_area)
                ));
            }
            emit(&text, None)
        }
        Command::Render { input, color, faults, out } => {
            let t = load_tiling(&input)?;
            let options = RenderOptions {
                color: match color {
                    Color::Size => ColorMode::Size,
                    Color::Phi => ColorMode::Phi,
                },
                faults,
                ..RenderOptions::default()
            };
            emit(&render_svg(&t, &options), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("tilelab: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("tilelab: {e}");
            ExitCode::from(match e {
                Error::Argument(_) | Error::Domain(_) | Error::Geometry(_) => 2,
                Error::Resource { .. } => 3,
                Error::Numeric { .. } => 4,
                Error::Internal(_) => 1,
            })
        }
    }
}
