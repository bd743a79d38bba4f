//! `mi`: experiment driver for the Morse-Ingard truncation solver.
//!
//! Every subcommand writes CSV (or a plain report for `params`) whose first
//! line is a `#` comment recording the configuration and the tool version.

use std::fmt;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mi_core::geometry::{Mesh, PointLocator, TuningForkOptions};
use mi_core::manufactured::{sample_grid, BoundingBox, PointSourceSolution};
use mi_core::params::{Model, PhysicalParams};
use mi_core::solver::{solve_morse_ingard, BoundaryCondition, Form, Geometry, SigmaChoice, SolveConfig};
use mi_core::{Error, Result, Vec2};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "mi", version, about = "Morse-Ingard FEM experiments with exact or local truncation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the physical constants and the derived mode data.
    Params,
    /// One row per refinement level: level, vertices, dofs, error, iterations, seconds.
    Convergence,
    /// Ad hoc, transmission and nonlocal conditions side by side.
    BcCompare,
    /// Sample exact or computed fields on a regular grid.
    Fields(FieldsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Coupled,
    Decoupled,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BcArg {
    NeumannBoth,
    Adhoc,
    Transmission,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmaArg {
    Zero,
    Wavenumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldKind {
    /// `(V_t, V_p)` of the point source.
    ExactModes,
    /// `(T, P)` of the point source.
    ExactFields,
    /// `(T, P)` computed on the finest level.
    Solved,
}

#[derive(Debug, Clone, PartialEq)]
enum GeometryArg {
    SquareHole,
    TuningFork,
    Msh(PathBuf),
}

impl FromStr for GeometryArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "square-hole" => Ok(Self::SquareHole),
            "tuning-fork" => Ok(Self::TuningFork),
            _ => match s.strip_prefix("msh:") {
                Some(p) if !p.is_empty() => Ok(Self::Msh(PathBuf::from(p))),
                _ => Err(format!("unknown geometry '{s}' (square-hole, tuning-fork or msh:<path>)")),
            },
        }
    }
}

impl fmt::Display for GeometryArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SquareHole => write!(f, "square-hole"),
            Self::TuningFork => write!(f, "tuning-fork"),
            Self::Msh(p) => write!(f, "msh:{}", p.display()),
        }
    }
}

#[derive(Debug, Args)]
struct Options {
    #[arg(long, global = true, default_value = "square-hole")]
    geometry: GeometryArg,
    #[arg(long, global = true, default_value_t = 2)]
    degree: usize,
    #[arg(long, global = true, value_enum, default_value_t = FormArg::Coupled)]
    form: FormArg,
    /// Defaults to neumann-both on the square and nonlocal elsewhere.
    #[arg(long, global = true, value_enum)]
    bc: Option<BcArg>,
    #[arg(long, global = true, value_enum, default_value_t = SigmaArg::Wavenumber)]
    sigma: SigmaArg,
    #[arg(long, global = true, default_value_t = 3)]
    levels: usize,
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 200)]
    maxit: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file with `gamma`, `M`, `Lambda`.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long = "M", global = true)]
    m: Option<f64>,
    #[arg(long = "Lambda", global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Mesh size of the coarsest level (0.5 on the square, 0.02 on the fork).
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Spacing at the fork walls (default h / 10).
    #[arg(long, global = true)]
    h_wall: Option<f64>,
    /// Gauss points per facet for the layer potentials.
    #[arg(long, global = true)]
    gamma_order: Option<usize>,
    /// Point source location `x,y`; defaults to the geometry's choice.
    #[arg(long, global = true, value_parser = parse_point)]
    source: Option<Vec2>,
}

#[derive(Debug, Args)]
struct FieldsArgs {
    #[arg(long, value_enum, default_value_t = FieldKind::ExactFields)]
    what: FieldKind,
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    /// `xmin,ymin,xmax,ymax`; defaults to the mesh bounding box.
    #[arg(long, value_parser = parse_bbox)]
    bbox: Option<[f64; 4]>,
}

fn parse_numbers<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected {N} comma-separated numbers"))
}

fn parse_point(s: &str) -> std::result::Result<Vec2, String> {
    parse_numbers::<2>(s).map(|[x, y]| Vec2::new(x, y))
}

fn parse_bbox(s: &str) -> std::result::Result<[f64; 4], String> {
    parse_numbers::<4>(s)
}

/// Fully resolved run settings.
struct RunConfig {
    geometry: Geometry,
    geometry_arg: GeometryArg,
    solve: SolveConfig,
    levels: usize,
}

impl RunConfig {
    fn from_options(o: &Options) -> Result<Self> {
        let mut params = match &o.params {
            Some(p) => PhysicalParams::load(p)?,
            None => PhysicalParams::default(),
        };
        params.gamma = o.gamma.unwrap_or(params.gamma);
        params.m = o.m.unwrap_or(params.m);
        params.lambda = o.lambda.unwrap_or(params.lambda);
        params.validate()?;

        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        let geometry = match &o.geometry {
            GeometryArg::SquareHole => {
                Geometry::SquareHole { half_width: 1.5, radius: 2.0 / 3.0, h: positive(o.h.unwrap_or(0.5), "h")? }
            }
            GeometryArg::TuningFork => {
                let h = positive(o.h.unwrap_or(0.02), "h")?;
                let h_wall = positive(o.h_wall.unwrap_or(h / 10.0), "h-wall")?;
                Geometry::TuningFork(TuningForkOptions { h_wall, ..TuningForkOptions::uniform(h) })
            }
            GeometryArg::Msh(p) => Geometry::Msh(p.clone()),
        };
        let form = match o.form {
            FormArg::Coupled => Form::Coupled,
            FormArg::Decoupled => Form::Decoupled,
            FormArg::Single => Form::Single,
        };
        let bc = match o.bc {
            Some(BcArg::NeumannBoth) => BoundaryCondition::NeumannBoth,
            Some(BcArg::Adhoc) => BoundaryCondition::AdHoc,
            Some(BcArg::Transmission) => BoundaryCondition::Transmission,
            Some(BcArg::Nonlocal) => BoundaryCondition::Nonlocal,
            None if geometry.is_square_hole() => BoundaryCondition::NeumannBoth,
            None => BoundaryCondition::Nonlocal,
        };
        let mut solve = SolveConfig::new(o.degree, form, bc);
        solve.params = params;
        solve.sigma = match o.sigma {
            SigmaArg::Zero => SigmaChoice::Zero,
            SigmaArg::Wavenumber => SigmaChoice::Wavenumber,
        };
        solve.tol = o.tol;
        solve.maxit = o.maxit;
        solve.gamma_order = o.gamma_order;
        solve.source = o.source.unwrap_or_else(|| geometry.default_source());
        if o.levels == 0 {
            return Err(Error::Config("at least one level is required".into()));
        }
        Ok(Self { geometry, geometry_arg: o.geometry.clone(), solve, levels: o.levels })
    }

    fn header(&self, command: &str) -> String {
        let s = &self.solve;
        let size = match &self.geometry {
            Geometry::SquareHole { h, .. } => format!(" h={h}"),
            Geometry::TuningFork(t) => format!(" h={} h_wall={}", t.h, t.h_wall),
            Geometry::Msh(_) => String::new(),
        };
        let form = match s.form {
            Form::Coupled => FormArg::Coupled,
            Form::Decoupled => FormArg::Decoupled,
            Form::Single => FormArg::Single,
        };
        let bc = match s.bc {
            BoundaryCondition::NeumannBoth => BcArg::NeumannBoth,
            BoundaryCondition::AdHoc => BcArg::Adhoc,
            BoundaryCondition::Transmission => BcArg::Transmission,
            BoundaryCondition::Nonlocal => BcArg::Nonlocal,
        };
        let sigma = match s.sigma {
            SigmaChoice::Zero => SigmaArg::Zero,
            SigmaChoice::Wavenumber => SigmaArg::Wavenumber,
        };
        format!(
            "# mi {VERSION} command={command} geometry={}{size} degree={} form={} bc={} sigma={} \
             levels={} tol={:e} maxit={} gamma={} M={} Lambda={} source=({},{}) gamma_order={}",
            self.geometry_arg,
            s.degree,
            value_name(form),
            value_name(bc),
            value_name(sigma),
            self.levels,
            s.tol,
            s.maxit,
            s.params.gamma,
            s.params.m,
            s.params.lambda,
            s.source.x,
            s.source.y,
            s.gamma_order.map_or("default".to_string(), |o| o.to_string()),
        )
    }
}

fn value_name(v: impl ValueEnum) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

/// Whether every linear solve converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Done,
    NotConverged,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_params(run: &RunConfig, mut w: impl Write) -> Result<Status> {
    let model = Model::new(run.solve.params)?;
    let (p, d) = (model.phys, model.modes);
    writeln!(w, "{}", run.header("params"))?;
    writeln!(w, "gamma = {}", p.gamma)?;
    writeln!(w, "M = {}", p.m)?;
    writeln!(w, "Lambda = {}", p.lambda)?;
    writeln!(w, "Q = {}", d.q)?;
    writeln!(w, "t_plus = {}", d.t_plus)?;
    writeln!(w, "t_minus = {}", d.t_minus)?;
    writeln!(w, "k_t = {}", d.k_t)?;
    writeln!(w, "k_p = {}", d.k_p)?;
    writeln!(w, "similarity_residual = {:e}", model.similarity_residual()?)?;
    w.flush()?;
    Ok(Status::Done)
}

fn solve_level(run: &RunConfig, mesh: Arc<Mesh>, config: &SolveConfig) -> Result<mi_core::solver::SolveOutcome> {
    config.validate(&run.geometry)?;
    solve_morse_ingard(mesh, config)
}

fn cmd_convergence(run: &RunConfig, mut w: impl Write) -> Result<Status> {
    if run.levels < 2 {
        return Err(Error::Config("convergence needs at least two levels".into()));
    }
    run.solve.validate(&run.geometry)?;
    writeln!(w, "{}", run.header("convergence"))?;
    writeln!(w, "level,n_vertices,dofs,rel_l2,gmres_iters,seconds")?;
    let mut status = Status::Done;
    for level in 0..run.levels {
        let start = Instant::now();
        let mesh = Arc::new(run.geometry.mesh(level)?);
        let nv = mesh.vertex_count;
        let out = solve_level(run, mesh, &run.solve)?;
        if !out.converged() {
            status = Status::NotConverged;
        }
        writeln!(
            w,
            "{level},{nv},{},{:e},{},{:.3}",
            out.space.ndofs(),
            out.rel_l2,
            out.gmres_iterations(),
            start.elapsed().as_secs_f64()
        )?;
        w.flush()?;
    }
    Ok(status)
}

fn cmd_bc_compare(run: &RunConfig, mut w: impl Write) -> Result<Status> {
    if run.geometry.is_square_hole() {
        return Err(Error::Config("bc-compare runs on the tuning fork or an msh mesh".into()));
    }
    let bcs = [
        ("adhoc", BoundaryCondition::AdHoc),
        ("transmission", BoundaryCondition::Transmission),
        ("nonlocal", BoundaryCondition::Nonlocal),
    ];
    for (_, bc) in bcs {
        SolveConfig { bc, ..run.solve }.validate(&run.geometry)?;
    }
    writeln!(w, "{}", run.header("bc-compare"))?;
    writeln!(w, "bc,level,rel_l2")?;
    let mut status = Status::Done;
    for level in 0..run.levels {
        let mesh = Arc::new(run.geometry.mesh(level)?);
        for (name, bc) in bcs {
            let out = solve_level(run, mesh.clone(), &SolveConfig { bc, ..run.solve })?;
            if !out.converged() {
                status = Status::NotConverged;
            }
            writeln!(w, "{name},{level},{:e}", out.rel_l2)?;
        }
        w.flush()?;
    }
    Ok(status)
}

fn mesh_bbox(mesh: &Mesh) -> Result<BoundingBox> {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &mesh.nodes {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    BoundingBox::new(lo, hi)
}

fn cmd_fields(run: &RunConfig, args: &FieldsArgs, mut w: impl Write) -> Result<Status> {
    let level = run.levels - 1;
    let mesh = Arc::new(run.geometry.mesh(level)?);
    let bbox = match args.bbox {
        Some([x0, y0, x1, y1]) => BoundingBox::new(Vec2::new(x0, y0), Vec2::new(x1, y1))?,
        None => mesh_bbox(&mesh)?,
    };
    if args.resolution == 0 {
        return Err(Error::Config("grid resolution must be at least 1".into()));
    }
    let model = Model::new(run.solve.params)?;
    let exact = PointSourceSolution::new(model, run.solve.source);
    let locator = PointLocator::new(&mesh);
    let mut status = Status::Done;
    let (names, grid) = match args.what {
        FieldKind::ExactModes => {
            (["V_t", "V_p"], sample_grid(bbox, args.resolution, |p| locator.locate(p).and(exact.exact_modes(p).ok()))?)
        }
        FieldKind::ExactFields => {
            (["T", "P"], sample_grid(bbox, args.resolution, |p| locator.locate(p).and(exact.exact_fields(p).ok()))?)
        }
        FieldKind::Solved => {
            let out = solve_level(run, mesh.clone(), &run.solve)?;
            if !out.converged() {
                status = Status::NotConverged;
            }
            let grid = sample_grid(bbox, args.resolution, |p| {
                locator.locate(p).map(|(c, xi)| out.space.evaluate_in(&out.fields, c, xi))
            })?;
            (["T", "P"], grid)
        }
    };
    writeln!(w, "{} what={} resolution={} level={level}", run.header("fields"), value_name(args.what), args.resolution)?;
    grid.write_csv(names, &mut w)?;
    w.flush()?;
    Ok(status)
}

fn run(cli: &Cli) -> Result<Status> {
    if let Some(n) = cli.opts.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let config = RunConfig::from_options(&cli.opts)?;
    let w = output(&cli.opts.out)?;
    match &cli.command {
        Command::Params => cmd_params(&config, w),
        Command::Convergence => cmd_convergence(&config, w),
        Command::BcCompare => cmd_bc_compare(&config, w),
        Command::Fields(args) => cmd_fields(&config, args, w),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => {
            eprintln!("warning: GMRES did not reach the requested tolerance");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
