use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use levex::extrapolation::{ExtrapolationOptions, ExtrapolationOrder};
use levex::io::{read_field, read_index_list, write_field};
use levex::levelset::estimated_orders;
use levex::problems::{self, annulus_split, BoxBc, Problem, SineInterface};
use levex::runs::{solve_problem, Approach, Outcome};
use levex::stefan::{self, StefanParams};
use levex::{extend, Bc, BcSpec, Error, Mask, Method, NodeSet, SolveOptions};

/// Biharmonic extension of fields across level set interfaces.
#[derive(Parser, Debug)]
#[command(name = "levex", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a benchmark over a grid ladder and write exampleN_table.csv.
    ///
    /// 1: two discs in 2D. 2: two balls in 3D, periodic. 3: annulus.
    /// 4: random sine interface in a periodic strip or channel.
    /// 5: Stefan problem.
    Example(ExampleArgs),
    /// Extend a field file given a level set file or a list of known nodes.
    Extend(ExtendArgs),
    /// Compare biharmonic extension with PDE extrapolation on a benchmark.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Boundary conditions: dirichlet, neumann, periodic or mixed.
    #[arg(long)]
    bc: Option<String>,
    /// Comma-separated grid sizes, e.g. 128,256 or 384x128.
    #[arg(long, value_delimiter = ',')]
    grids: Vec<String>,
    /// Relative residual tolerance of the iterative solver.
    #[arg(long, default_value_t = levex::solver::DEFAULT_TOL)]
    tol: f64,
    /// Iteration cap; defaults to the largest grid dimension.
    #[arg(long)]
    maxit: Option<usize>,
    /// Linear solver.
    #[arg(long, value_enum, default_value_t = SolverArg::Pcg)]
    method: SolverArg,
    /// Seed of the random interface of example 4.
    #[arg(long, default_value_t = problems::DEFAULT_SEED)]
    seed: u64,
    /// Also write the known field and level set of each grid.
    #[arg(long)]
    emit_inputs: bool,
    /// Directory for tables and field dumps.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Width of the error band in cells (default 4; 1 for example 2).
    #[arg(long)]
    band_cells: Option<f64>,
}

#[derive(Args, Debug)]
struct ExampleArgs {
    /// Example number, 1 to 5.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
    n: u8,
    #[command(flatten)]
    common: Common,
    /// Surface tension (example 5).
    #[arg(long, default_value_t = 0.001)]
    sigma: f64,
    /// Final time (example 5).
    #[arg(long, default_value_t = 0.4)]
    t_end: f64,
    /// Snapshot interval in steps (example 5).
    #[arg(long, default_value_t = 100)]
    snapshot_every: usize,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Example number, 1 to 4.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
    n: u8,
    /// Comma-separated methods: biharmonic, constant, linear, quadratic.
    #[arg(long, value_delimiter = ',', default_value = "biharmonic,constant,linear,quadratic")]
    methods: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ExtendArgs {
    /// Field file with the known values.
    #[arg(long)]
    field: PathBuf,
    /// Level set file; nodes with phi <= 0 are known.
    #[arg(long, conflicts_with = "known_list", required_unless_present = "known_list")]
    phi: Option<PathBuf>,
    /// File of known node indices, one per line.
    #[arg(long)]
    known_list: Option<PathBuf>,
    /// Output field file.
    #[arg(long)]
    out: PathBuf,
    /// One kind for every face, or a comma-separated kind per axis.
    #[arg(long, default_value = "dirichlet")]
    bc: String,
    #[arg(long, value_enum, default_value_t = SolverArg::Pcg)]
    method: SolverArg,
    #[arg(long, default_value_t = levex::solver::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    maxit: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Pcg,
    Dense,
}

impl From<SolverArg> for Method {
    fn from(m: SolverArg) -> Self {
        match m {
            SolverArg::Pcg => Method::PcgFastPoisson,
            SolverArg::Dense => Method::Dense,
        }
    }
}

/// Usage problems exit with 2, everything else with 1.
enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_)
            | Error::InvalidBc(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::LengthMismatch { .. }
            | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(t) = std::env::var("LEVEX_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("levex: LEVEX_THREADS must be a positive integer, got {t:?}");
                return ExitCode::from(2);
            }
        }
    }
    let res = match cli.cmd {
        Cmd::Example(a) => cmd_example(&a),
        Cmd::Extend(a) => cmd_extend(&a),
        Cmd::Compare(a) => cmd_compare(&a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("levex: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("levex: {m}");
            ExitCode::from(1)
        }
    }
}

fn parse_box_bc(s: &str) -> CliResult<BoxBc> {
    s.parse::<BoxBc>().map_err(|e| Failure::Usage(e.to_string()))
}

fn parse_bc_spec(s: &str, ndim: usize) -> CliResult<BcSpec> {
    if !s.contains(',') {
        return Ok(parse_box_bc(s)?.spec(ndim));
    }
    let kinds = s
        .split(',')
        .map(|k| match k.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Bc::DirichletZero),
            "neumann" => Ok(Bc::NeumannZero),
            "periodic" => Ok(Bc::Periodic),
            other => usage(format!("unknown boundary condition {other:?}")),
        })
        .collect::<CliResult<Vec<_>>>()?;
    if kinds.len() != ndim {
        return usage(format!("--bc lists {} axes, the field has {ndim}", kinds.len()));
    }
    Ok(BcSpec::per_axis(&kinds)?)
}

/// A grid size `N` or `NXxNY`.
fn parse_size(s: &str) -> CliResult<Vec<usize>> {
    let parts = s
        .split('x')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::Usage(format!("bad grid size {s:?}")))?;
    if let Some(&n) = parts.iter().find(|&&n| n < levex::grid::MIN_NODES_PER_AXIS) {
        return usage(format!(
            "grid size {n} is below the minimum of {} nodes per axis",
            levex::grid::MIN_NODES_PER_AXIS
        ));
    }
    Ok(parts)
}

fn grids_or(common: &Common, default: &[&str]) -> CliResult<Vec<Vec<usize>>> {
    let list: Vec<String> = if common.grids.is_empty() {
        default.iter().map(|s| s.to_string()).collect()
    } else {
        common.grids.clone()
    };
    list.iter().map(|s| parse_size(s)).collect()
}

fn square(size: &[usize]) -> CliResult<usize> {
    match size {
        [n] => Ok(*n),
        [a, b] if a == b => Ok(*a),
        _ => usage(format!("this example needs square grids, got {size:?}")),
    }
}

fn label(size: &[usize], ndim: usize) -> String {
    let dims: Vec<usize> = if size.len() == 1 { vec![size[0]; ndim] } else { size.to_vec() };
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn orders(errors: &[f64]) -> Vec<String> {
    let mut out = vec![String::new()];
    if errors.len() >= 2 {
        match estimated_orders(errors) {
            Ok(o) => out.extend(o.iter().map(|v| format!("{v:.4}"))),
            Err(_) => out.extend(std::iter::repeat_n("nan".to_string(), errors.len() - 1)),
        }
    }
    out
}

fn solve_options(common: &Common) -> SolveOptions {
    SolveOptions {
        method: common.method.into(),
        tol: common.tol,
        maxit: common.maxit,
    }
}

/// One benchmark case over the ladder.
struct Case {
    problem: Problem,
    label: String,
    regions: Vec<NodeSet>,
}

fn cases(n: u8, common: &Common, terms: usize) -> CliResult<Vec<Case>> {
    let mut out = Vec::new();
    match n {
        1 => {
            let bc = parse_box_bc(common.bc.as_deref().unwrap_or("dirichlet"))?;
            for size in grids_or(common, &["128", "256", "512"])? {
                let n = square(&size)?;
                out.push(Case {
                    problem: problems::example1(n, bc)?,
                    label: label(&size, 2),
                    regions: Vec::new(),
                });
            }
        }
        2 => {
            let bc = parse_box_bc(common.bc.as_deref().unwrap_or("periodic"))?;
            if bc != BoxBc::Periodic {
                return usage("example 2 is periodic only");
            }
            for size in grids_or(common, &["32", "64"])? {
                let n = match size.as_slice() {
                    [n] => *n,
                    _ => return usage("example 2 takes cube sizes"),
                };
                out.push(Case {
                    problem: problems::example2(n)?,
                    label: label(&size, 3),
                    regions: Vec::new(),
                });
            }
        }
        3 => {
            let bc = parse_box_bc(common.bc.as_deref().unwrap_or("neumann"))?;
            for size in grids_or(common, &["128", "256", "512"])? {
                let n = square(&size)?;
                let problem = problems::example3(n, bc)?;
                let (outside, inside) = annulus_split(&problem.grid);
                out.push(Case {
                    problem,
                    label: label(&size, 2),
                    regions: vec![outside, inside],
                });
            }
        }
        4 => {
            let channel = match parse_box_bc(common.bc.as_deref().unwrap_or("periodic"))? {
                BoxBc::Periodic => false,
                BoxBc::Neumann => true,
                _ => return usage("example 4 takes --bc periodic or neumann"),
            };
            let curve = SineInterface::random(common.seed, terms)?;
            for size in grids_or(common, &["192x64", "384x128", "768x256"])? {
                let (nx, ny) = match size.as_slice() {
                    [nx] if nx % 3 == 0 => (*nx, nx / 3),
                    [nx, ny] => (*nx, *ny),
                    _ => return usage(format!("bad example 4 grid {size:?}")),
                };
                out.push(Case {
                    problem: problems::example4(nx, ny, &curve, channel)?,
                    label: format!("{nx}x{ny}"),
                    regions: Vec::new(),
                });
            }
        }
        _ => return usage(format!("no example {n}")),
    }
    Ok(out)
}

fn band_cells(n: u8, common: &Common) -> f64 {
    common.band_cells.unwrap_or(if n == 2 { 1.0 } else { 4.0 })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run_case(case: &Case, approach: &Approach, common: &Common, n: u8) -> CliResult<Outcome> {
    let mut approach = approach.clone();
    if let Approach::Biharmonic(opts) = &mut approach {
        // the irregular interfaces of example 4 need more than max(dims)
        if n == 4 && opts.maxit.is_none() {
            opts.maxit = Some(10 * case.problem.grid.dims().iter().max().copied().unwrap_or(1));
        }
    }
    Ok(solve_problem(&case.problem, &approach, band_cells(n, common), &case.regions)?)
}

/// Error and order columns shared by example and compare tables.
fn error_columns(regions: usize) -> Vec<&'static str> {
    if regions == 2 {
        vec!["error_outside", "est_order_outside", "error_inside", "est_order_inside"]
    } else {
        vec!["error", "est_order"]
    }
}

fn push_rows(table: &mut String, prefix: &[String], cases: &[Case], outcomes: &[Outcome]) {
    let nreg = outcomes.first().map_or(1, |o| o.errors.len());
    let ords: Vec<Vec<String>> = (0..nreg)
        .map(|r| orders(&outcomes.iter().map(|o| o.errors[r]).collect::<Vec<_>>()))
        .collect();
    for (i, (c, o)) in cases.iter().zip(outcomes).enumerate() {
        let mut row: Vec<String> = prefix.to_vec();
        row.push(c.label.clone());
        row.push(o.iterations().map_or(String::new(), |v| v.to_string()));
        row.push(o.condition().map_or(String::new(), sci));
        for r in 0..nreg {
            row.push(sci(o.errors[r]));
            row.push(ords[r][i].clone());
        }
        let _ = writeln!(table, "{}", row.join(","));
    }
}

fn cmd_example(a: &ExampleArgs) -> CliResult<()> {
    let common = &a.common;
    std::fs::create_dir_all(&common.out_dir).map_err(|e| Failure::Usage(e.to_string()))?;
    if a.n == 5 {
        return cmd_stefan(a);
    }
    let approach = Approach::Biharmonic(solve_options(common));
    let term_sets: &[usize] = if a.n == 4 { &[10, 1] } else { &[0] };
    let mut table = String::new();
    let mut runtime = String::from("case,grid,seconds\n");
    for (t, &terms) in term_sets.iter().enumerate() {
        let cs = cases(a.n, common, terms)?;
        let mut outcomes = Vec::new();
        for c in &cs {
            let stem = if a.n == 4 {
                format!("example4_{terms}terms_{}", c.label)
            } else {
                format!("example{}_{}", a.n, c.label)
            };
            if common.emit_inputs {
                write_field(&common.out_dir.join(format!("{stem}_known.field")), &c.problem.known())?;
                write_field(&common.out_dir.join(format!("{stem}_phi.field")), c.problem.phi.field())?;
            }
            let o = run_case(c, &approach, common, a.n)?;
            write_field(&common.out_dir.join(format!("{stem}.field")), &o.field)?;
            let _ = writeln!(runtime, "{stem},{},{:.3}", c.label, o.seconds);
            outcomes.push(o);
        }
        let nreg = cs.first().map_or(1, |c| c.regions.len());
        let mut prefix = Vec::new();
        if t == 0 {
            let mut header = Vec::new();
            if a.n == 4 {
                header.push("terms");
            }
            header.extend(["grid", "iterations", "cond_est_precond"]);
            header.extend(error_columns(nreg));
            let _ = writeln!(table, "{}", header.join(","));
        }
        if a.n == 4 {
            prefix.push(terms.to_string());
        }
        push_rows(&mut table, &prefix, &cs, &outcomes);
    }
    let path = common.out_dir.join(format!("example{}_table.csv", a.n));
    write_text(&path, &table)?;
    write_text(&common.out_dir.join(format!("example{}_runtime.csv", a.n)), &runtime)?;
    print!("{table}");
    Ok(())
}

fn cmd_stefan(a: &ExampleArgs) -> CliResult<()> {
    let common = &a.common;
    let mut table = String::from("grid,sigma,step,t,solid_node_count,max_vn\n");
    for size in grids_or(common, &["200"])? {
        let n = square(&size)?;
        let mut params = StefanParams::standard(n, a.sigma, a.t_end)?;
        params.extension_tol = common.tol.min(1e-8);
        let snaps = stefan::run(&params, a.snapshot_every)?;
        let dir = common.out_dir.join(format!("example5_{}_sigma{}", label(&size, 2), a.sigma));
        stefan::write_snapshots(&dir, &snaps)?;
        for s in &snaps {
            let _ = writeln!(
                table,
                "{},{},{},{:.6},{},{}",
                label(&size, 2),
                a.sigma,
                s.step,
                s.t,
                s.solid_count,
                sci(s.max_vn)
            );
        }
    }
    write_text(&common.out_dir.join("example5_table.csv"), &table)?;
    print!("{table}");
    Ok(())
}

fn parse_methods(list: &[String]) -> CliResult<Vec<String>> {
    let methods: Vec<String> = list
        .iter()
        .map(|m| m.trim().to_ascii_lowercase())
        .filter(|m| !m.is_empty())
        .collect();
    if methods.is_empty() {
        return usage("--methods is empty");
    }
    for m in &methods {
        if !["biharmonic", "constant", "linear", "quadratic"].contains(&m.as_str()) {
            return usage(format!("unknown method {m:?}"));
        }
    }
    Ok(methods)
}

fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    let common = &a.common;
    let methods = parse_methods(&a.methods)?;
    std::fs::create_dir_all(&common.out_dir).map_err(|e| Failure::Usage(e.to_string()))?;
    let terms = 10;
    let cs = cases(a.n, common, terms)?;
    let nreg = cs.first().map_or(1, |c| c.regions.len());
    let mut header = vec!["method", "grid", "iterations", "cond_est_precond"];
    header.extend(error_columns(nreg));
    let mut table = header.join(",") + "\n";
    let mut runtime = String::from("method,grid,seconds\n");
    for m in &methods {
        let approach = match m.as_str() {
            "biharmonic" => Approach::Biharmonic(solve_options(common)),
            other => {
                let order = match other {
                    "constant" => ExtrapolationOrder::Constant,
                    "linear" => ExtrapolationOrder::Linear,
                    _ => ExtrapolationOrder::Quadratic,
                };
                Approach::Extrapolate(
                    order,
                    ExtrapolationOptions {
                        band_cells: Some(8.0_f64.max(2.0 * band_cells(a.n, common))),
                        ..Default::default()
                    },
                )
            }
        };
        let mut outcomes = Vec::new();
        for c in &cs {
            let o = run_case(c, &approach, common, a.n)?;
            let _ = writeln!(runtime, "{m},{},{:.3}", c.label, o.seconds);
            outcomes.push(o);
        }
        push_rows(&mut table, &[m.clone()], &cs, &outcomes);
    }
    write_text(&common.out_dir.join(format!("compare{}_table.csv", a.n)), &table)?;
    write_text(&common.out_dir.join(format!("compare{}_runtime.csv", a.n)), &runtime)?;
    print!("{table}");
    Ok(())
}

fn cmd_extend(a: &ExtendArgs) -> CliResult<()> {
    let field = read_field(&a.field)?;
    let grid = *field.grid();
    let mask = match (&a.phi, &a.known_list) {
        (Some(p), _) => {
            let phi = levex::LevelSet::new(read_field(p)?);
            if !phi.grid().same_nodes(&grid) {
                return usage("level set and field grids differ");
            }
            Mask::from_known(grid, phi.values().iter().map(|&v| v <= 0.0).collect())?
        }
        (None, Some(l)) => {
            let text = std::fs::read_to_string(l).map_err(|e| Failure::Usage(format!("{}: {e}", l.display())))?;
            let idx = read_index_list(&text, grid.len())?;
            let mut known = vec![false; grid.len()];
            for i in idx {
                known[i] = true;
            }
            Mask::from_known(grid, known)?
        }
        (None, None) => return usage("one of --phi or --known-list is required"),
    };
    let bc = parse_bc_spec(&a.bc, grid.ndim())?;
    let opts = SolveOptions {
        method: a.method.into(),
        tol: a.tol,
        maxit: a.maxit,
    };
    let (out, stats) = extend(&field.masked(&mask), &mask, &bc, &opts)?;
    write_field(&a.out, &out)?;
    println!("{},{:e},{}", stats.iterations, stats.relative_residual, stats.converged);
    Ok(())
}
