use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use dslice::bowditch::BowditchParams;
use dslice::expr::{parse_complex, Expr};
use dslice::farey::Rational;
use dslice::pleating::{rays_batch, trace_polynomial, RayOptions, RaySlice};
use dslice::raster::{self, CustomSlice, GridSpec, Manifest, Plane, SliceKind};
use dslice::representations::{build, verify_identities};

#[derive(Parser)]
#[command(name = "dslice", version, about = "Bowditch sets and pleating rays of the diagonal slice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a window for Bowditch membership and render it.
    Bowditch(BowditchArgs),
    /// Trace pleating rays and export them as CSV.
    Rays(RaysArgs),
    /// Print the trace polynomial of a curve.
    Poly {
        #[arg(long, value_parser = parse_rational)]
        pq: Rational,
    },
    /// Check the matrix identities of the group at a parameter.
    Verify {
        #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
        zeta: Complex64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SliceArg {
    Diagonal,
    TorusZeta,
    Riley,
    Custom,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlaneArg {
    X,
    Zeta,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ImageFormat {
    Ppm,
    Png,
}

#[derive(Args)]
struct BowditchArgs {
    #[arg(long, value_enum, default_value = "diagonal")]
    slice: SliceArg,
    /// Defaults to the zeta-plane for torus-zeta, otherwise x.
    #[arg(long, value_enum)]
    plane: Option<PlaneArg>,
    #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
    center: Option<Complex64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long, value_parser = parse_res, default_value = "256x256")]
    res: (usize, usize),
    #[arg(long, default_value_t = BowditchParams::default().max_descent_steps)]
    max_descent: usize,
    #[arg(long, default_value_t = BowditchParams::default().max_sink_edges)]
    max_sink: usize,
    #[arg(long, value_enum, default_value = "on")]
    mu0_heuristic: Switch,
    /// Custom slice components, expressions in x and z.
    #[arg(long, allow_hyphen_values = true)]
    custom_a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    custom_b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    custom_c: Option<String>,
    #[arg(long, default_value = "bowditch.ppm")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "ppm")]
    format: ImageFormat,
    /// Run manifest (JSON).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Draw diagonal-slice rays on top of the raster.
    #[arg(long)]
    overlay: bool,
    #[arg(long, default_value_t = 8)]
    rays_max_q: i64,
}

#[derive(Args)]
struct RaysArgs {
    #[arg(long, value_enum, default_value = "diagonal")]
    slice: SliceArg,
    #[arg(long, default_value_t = 12)]
    rays_max_q: i64,
    #[arg(long, default_value_t = RayOptions::default().t_samples)]
    samples: usize,
    /// Ray samples (CSV).
    #[arg(long, default_value = "rays.csv")]
    data: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Raster(#[from] raster::RasterError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

fn parse_complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

fn parse_res(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let nx: usize = a.parse().map_err(|_| format!("bad width in {s:?}"))?;
    let ny: usize = b.parse().map_err(|_| format!("bad height in {s:?}"))?;
    if nx == 0 || ny == 0 {
        return Err("resolution must be at least 1x1".into());
    }
    Ok((nx, ny))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn slice_of(args: &BowditchArgs) -> Result<SliceKind, CliError> {
    Ok(match args.slice {
        SliceArg::Diagonal => SliceKind::Diagonal,
        SliceArg::TorusZeta => SliceKind::TorusZeta,
        SliceArg::Riley => SliceKind::Riley,
        SliceArg::Custom => {
            let parse = |flag: &str, s: &Option<String>| -> Result<Expr, CliError> {
                let s = s
                    .as_deref()
                    .ok_or_else(|| CliError::Usage(format!("--slice custom needs {flag}")))?;
                s.parse().map_err(|e| CliError::Usage(format!("{flag}: {e}")))
            };
            SliceKind::Custom(CustomSlice {
                a: parse("--custom-a", &args.custom_a)?,
                b: parse("--custom-b", &args.custom_b)?,
                c: parse("--custom-c", &args.custom_c)?,
            })
        }
    })
}

fn run_bowditch(args: BowditchArgs) -> Result<(), CliError> {
    let slice = slice_of(&args)?;
    let plane = match args.plane {
        Some(PlaneArg::X) => Plane::X,
        Some(PlaneArg::Zeta) => Plane::Zeta,
        None if args.slice == SliceArg::TorusZeta => Plane::Zeta,
        None => Plane::X,
    };
    let (nx, ny) = args.res;
    let mut grid = GridSpec::default_for(plane, nx, ny);
    grid.center = args.center.unwrap_or(grid.center);
    grid.width = args.width.unwrap_or(grid.width);
    grid.height = args.height.unwrap_or(grid.height);
    grid.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let params = BowditchParams {
        max_descent_steps: args.max_descent,
        max_sink_edges: args.max_sink,
        enable_mu0_heuristic: args.mu0_heuristic == Switch::On,
        ..BowditchParams::default()
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let start = Instant::now();
    let verdicts = raster::scan(&grid, &slice, &params)?;
    let wall_ms = start.elapsed().as_millis();
    let mut image = raster::render(&verdicts);
    if args.overlay {
        let batch = rays_batch(args.rays_max_q, RaySlice::Diagonal, &RayOptions::default());
        image = raster::overlay_rays(&image, &batch.rays, &grid)?;
    }
    let mut out = create(&args.out)?;
    match args.format {
        ImageFormat::Ppm => out.write_all(&image.to_ppm())?,
        ImageFormat::Png => image.write_png(&mut out)?,
    }
    out.flush()?;

    let manifest = Manifest::new(&verdicts, &slice, &params, wall_ms);
    if let Some(path) = &args.data {
        let mut f = create(path)?;
        f.write_all(manifest.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        f.flush()?;
    }
    let c = manifest.counts;
    println!(
        "{}x{} {} pixels: {} in set, {} indecisive, {} not in set, {} not applicable ({} ms)",
        nx,
        ny,
        slice.name(),
        c.in_set,
        c.indecisive,
        c.not_in_set,
        c.not_applicable,
        wall_ms
    );
    Ok(())
}

fn run_rays(args: RaysArgs) -> Result<(), CliError> {
    let slice = match args.slice {
        SliceArg::Diagonal => RaySlice::Diagonal,
        SliceArg::Riley => RaySlice::Riley,
        _ => return Err(CliError::Usage("rays support --slice diagonal or riley".into())),
    };
    if args.rays_max_q < 1 || args.samples < 2 {
        return Err(CliError::Usage("--rays-max-q must be >= 1 and --samples >= 2".into()));
    }
    let opts = RayOptions {
        t_samples: args.samples,
        ..RayOptions::default()
    };
    let batch = rays_batch(args.rays_max_q, slice, &opts);
    let mut out = create(&args.data)?;
    raster::write_rays_csv(&mut out, &batch.rays)?;
    out.flush()?;
    for ray in batch.stalled() {
        if let Some(e) = &ray.stall {
            eprintln!("warning: {} {}: {e}", ray.pq, ray.branch.as_str());
        }
    }
    println!("{} rays, {} cusps", batch.rays.len(), batch.cusps.len());
    Ok(())
}

fn run_verify(zeta: Complex64, tol: f64) -> Result<(), CliError> {
    let model = build(zeta).map_err(|e| CliError::Failed(e.to_string()))?;
    let report = verify_identities(&model, tol);
    println!("{report}");
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Failed("some identities failed".into()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bowditch(args) => run_bowditch(args),
        Command::Rays(args) => run_rays(args),
        Command::Poly { pq } => {
            println!("{}", trace_polynomial(pq));
            Ok(())
        }
        Command::Verify { zeta, tol } => run_verify(zeta, tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
