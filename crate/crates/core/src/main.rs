use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gmis::imageio::{Image, ImageError};
use gmis::lab::{run_ordering_experiment, run_uniformity_test, LabConfig};
use gmis::mis::SelectionStrategy;
use gmis::renderer::{render_progressive, IntegratorConfig, IntegratorKind, RenderError, StopCondition};
use gmis::scene::{fixtures, parse_scene};

const EXIT_USAGE: u8 = 2;
const EXIT_SCENE: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_VERDICT: u8 = 5;

/// Chi-square threshold below which a selection strategy fails uniformity.
const UNIFORMITY_ALPHA: f64 = 0.001;

#[derive(Debug, Parser)]
#[command(name = "gmis", version, about = "GMIS estimators and a progressive VCM/GMIS renderer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a scene progressively.
    Render(RenderArgs),
    /// Print the RMSE between two PFM images.
    Rmse(RmseArgs),
    /// Run the variance-ordering experiment on a lab config.
    Lab(LabArgs),
    /// Tabulate index selection frequencies of a strategy.
    Uniformity(UniformityArgs),
    /// Write the bundled scenes as .scn files.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("stop").required(true).args(["iterations", "seconds"]))]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    integrator: IntegratorKind,
    /// Output image; PFM always, plus PNG when the name ends in `.png`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    seconds: Option<f64>,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    /// PFM reference for the RMSE column of the log.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Convergence log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    max_samples: usize,
    #[arg(long, default_value_t = 4)]
    branch: usize,
    #[arg(long, default_value_t = 12)]
    max_depth: usize,
}

#[derive(Debug, Args)]
struct RmseArgs {
    a: PathBuf,
    b: PathBuf,
    /// Accepted for uniformity; the comparison is deterministic.
    #[arg(long, default_value_t = 0)]
    #[allow(dead_code)]
    seed: u64,
}

#[derive(Debug, Args)]
struct LabArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report CSV; defaults to the config's `output` line.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct UniformityArgs {
    #[arg(long, default_value = "S2")]
    strategy: SelectionStrategy,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    cycles: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FixturesArgs {
    #[arg(long, default_value = "fixtures")]
    out: PathBuf,
    /// Accepted for uniformity; fixtures are fixed.
    #[arg(long, default_value_t = 0)]
    #[allow(dead_code)]
    seed: u64,
}

/// A failed command: exit code plus one diagnostic line.
struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl ToString) -> Self {
        Self(EXIT_USAGE, msg.to_string())
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self(EXIT_IO, format!("{}: {e}", path.display()))
    }
}

fn image_failure(path: &Path, e: ImageError) -> Failure {
    match e {
        ImageError::SizeMismatch(..) => Failure::usage(e),
        other => Failure::io(path, other),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("GMIS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::usage(format!("GMIS_THREADS must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_render(args: RenderArgs) -> Result<(), Failure> {
    let threads = threads_from_env()?;
    let text = read_text(&args.scene)?;
    let scene = parse_scene(&text)
        .map_err(|e| Failure(EXIT_SCENE, format!("{}: {e}", args.scene.display())))?;
    let reference = match &args.reference {
        Some(p) => Some(Image::read_pfm(p).map_err(|e| Failure::io(p, e))?),
        None => None,
    };
    let stop = match (args.iterations, args.seconds) {
        (Some(n), _) => StopCondition::Iterations(n),
        (None, Some(s)) if s > 0.0 && s.is_finite() => StopCondition::Seconds(s),
        _ => return Err(Failure::usage("--seconds must be positive")),
    };
    let config = IntegratorConfig {
        max_samples: args.max_samples,
        branch: args.branch,
        max_depth: args.max_depth,
        threads,
        ..IntegratorConfig::new(args.integrator).with_seed(args.seed)
    };
    let out = render_progressive(&scene, args.width, args.height, config, stop, reference.as_ref())
        .map_err(|e| match e {
            RenderError::Config(m) => Failure::usage(m),
            RenderError::Threads(m) => Failure(EXIT_IO, m),
        })?;

    let image = out.film.to_image();
    let is_png = args
        .out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let pfm = if is_png {
        image
            .write_png(&args.out)
            .map_err(|e| Failure::io(&args.out, e))?;
        args.out.with_extension("pfm")
    } else {
        args.out.clone()
    };
    image.write_pfm(&pfm).map_err(|e| Failure::io(&pfm, e))?;
    write_text(&args.out.with_extension("stats.txt"), &out.stats.to_text())?;
    if let Some(log) = &args.log {
        write_text(log, &out.log.to_csv())?;
    }
    eprintln!(
        "{}: {} iterations, {} rejected samples",
        args.integrator,
        out.stats.iterations,
        out.stats.rejected_samples()
    );
    Ok(())
}

/// Six significant digits, never fewer than six decimals.
fn format_rmse(v: f64) -> String {
    let decimals = if v > 0.0 && v.is_finite() {
        (5 - v.log10().floor() as i64).max(6) as usize
    } else {
        6
    };
    format!("{v:.decimals$}")
}

fn cmd_rmse(args: RmseArgs) -> Result<(), Failure> {
    let a = Image::read_pfm(&args.a).map_err(|e| Failure::io(&args.a, e))?;
    let b = Image::read_pfm(&args.b).map_err(|e| Failure::io(&args.b, e))?;
    let v = a.rmse(&b).map_err(|e| image_failure(&args.b, e))?;
    println!("{}", format_rmse(v));
    Ok(())
}

fn cmd_lab(args: LabArgs) -> Result<(), Failure> {
    let text = read_text(&args.config)?;
    let mut config = LabConfig::parse(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .or_else(|| config.output.clone())
        .ok_or_else(|| Failure::usage("no --out given and the config has no output line"))?;
    let report = run_ordering_experiment(&config).map_err(Failure::usage)?;
    write_text(&out, &report.to_csv())?;
    print!("{}", report.summary());
    if report.ordering_a.pass() && report.ordering_b.pass() {
        Ok(())
    } else {
        Err(Failure(EXIT_VERDICT, "variance ordering verdict failed".into()))
    }
}

fn cmd_uniformity(args: UniformityArgs) -> Result<(), Failure> {
    let table = run_uniformity_test(args.strategy, args.n, args.cycles, args.seed)
        .map_err(Failure::usage)?;
    if let Some(out) = &args.out {
        write_text(out, &table.to_csv())?;
    }
    println!(
        "{} N={} cycles={} chi2={:.4} dof={} p={:.6}",
        table.strategy,
        table.n,
        table.cycles,
        table.chi_square,
        table.degrees_of_freedom,
        table.p_value
    );
    let pass = match args.strategy {
        SelectionStrategy::S3 => table
            .frequencies
            .iter()
            .all(|&f| f == 1.0 / args.n as f64),
        _ => table.p_value > UNIFORMITY_ALPHA,
    };
    if pass {
        Ok(())
    } else {
        Err(Failure(EXIT_VERDICT, "selection frequencies are not uniform".into()))
    }
}

fn cmd_fixtures(args: FixturesArgs) -> Result<(), Failure> {
    fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    for (name, text) in fixtures::FIXTURES {
        let path = args.out.join(format!("{name}.scn"));
        write_text(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Rmse(a) => cmd_rmse(a),
        Command::Lab(a) => cmd_lab(a),
        Command::Uniformity(a) => cmd_uniformity(a),
        Command::Fixtures(a) => cmd_fixtures(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("gmis: {msg}");
            ExitCode::from(code)
        }
    }
}
