use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use warpspec::cli_io::{load_config, run, Command, Formats, Overrides, RunConfig};
use warpspec::profiles::Band;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Pgm,
    Both,
}

#[derive(Parser, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = parse_band, allow_hyphen_values = true)]
    band: Option<Band>,
    #[arg(long, value_enum)]
    warping: Option<OnOff>,
    #[arg(long)]
    harmonics: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    grid: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Range `A:B` swept by `spectrum`.
    #[arg(long)]
    nu1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu2: Option<String>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

fn parse_band(s: &str) -> Result<Band, String> {
    Band::parse(s).ok_or_else(|| format!("band must be + or -, got {s:?}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match parse_args() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(n) = std::env::var("WARPSPEC_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: WARPSPEC_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(1);
            }
        }
    }
    match execute(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct Args {
    command: Command,
    common: Common,
}

/// Every subcommand but `selftest` takes the same flags.
fn parse_args() -> Result<Args, clap::Error> {
    use clap::{CommandFactory, FromArgMatches};
    let subcommand = |name: &'static str, about: &'static str| Common::command().name(name).about(about);
    let app = clap::Command::new("warpspec")
        .version(warpspec::VERSION)
        .about("Semiclassical spectra and spinor fields of warped graphene")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(subcommand("torus", "Quantize one torus and report its classical data"))
        .subcommand(subcommand("spectrum", "Sweep quantum numbers and write spectrum.csv"))
        .subcommand(subcommand("field", "Write the spinor grids and the density image"))
        .subcommand(subcommand("verify", "Run the invariant suite; exits 4 on failure"))
        .subcommand(clap::Command::new("selftest").about("Built-in checks with the default configuration"));
    let matches = app.try_get_matches()?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = match name {
        "torus" => Command::Torus,
        "spectrum" => Command::Spectrum,
        "field" => Command::Field,
        "verify" => Command::Verify,
        _ => Command::Selftest,
    };
    let common = if command == Command::Selftest {
        Common::try_parse_from(["selftest"])?
    } else {
        Common::from_arg_matches(sub)?
    };
    Ok(Args { command, common })
}

fn execute(args: Args) -> warpspec::Result<i32> {
    let c = args.common;
    let mut cfg = match &c.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        output: c.output,
        band: c.band,
        warping: c.warping.map(|w| w == OnOff::On),
        harmonics: c.harmonics,
        grid: c.grid.map(|g| (g[0], g[1])),
        formats: c.format.map(|f| match f {
            FormatArg::Csv => Formats::Csv,
            FormatArg::Pgm => Formats::Pgm,
            FormatArg::Both => Formats::Both,
        }),
        nu1: c.nu1,
        nu2: c.nu2,
        force: c.force,
    };
    overrides.apply(&mut cfg)?;
    let outcome = run(args.command, &cfg)?;
    print!("{}", outcome.report);
    for f in &outcome.files {
        log::info!("wrote {}", f.display());
    }
    Ok(outcome.exit_code())
}
