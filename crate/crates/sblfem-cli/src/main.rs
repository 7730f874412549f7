//! Command line front end: layer parameters, mesh inspection, single
//! solves, convergence sweeps, and the canonical experiment bundle.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sblfem::approximation::{
    energy_norm_error, quad_points_for_degree, reference_on_mesh, EnergyQuadrature,
    DEFAULT_QUAD_LEVELS,
};
use sblfem::assembly::{
    assemble_global, assembly_quadrature_size, dump_matrix_csv, solve_linear, DiscreteSolution,
    DofMap,
};
use sblfem::error::{Error, Result};
use sblfem::mesh::build_sbl_mesh;
use sblfem::problem::{
    compute_layer_parameters, constant_coefficient_exact, ProblemSpec, DEFAULT_SAMPLE_COUNT,
};
use sblfem::quadrature::gauss_rule;
use sblfem::report::{emit_csv, emit_svg_semilog, group_by_pair};
use sblfem::sweep::{fit_rate, run_paper, run_sweep, ErrorMode, SweepConfig, PAPER_PAIRS};

#[derive(Parser)]
#[command(
    name = "sblfem",
    about = "hp finite elements on spectral boundary layer meshes for \
             -eps1 u'' + eps2 b u' + c u = f, u(0) = u(1) = 0",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the layer parameters mu0, mu1 and the parameter regime.
    Mu(MuArgs),
    /// Print the spectral boundary layer mesh for a degree.
    Mesh(MeshArgs),
    /// Solve one instance; report the energy error when a truth exists.
    Solve(SolveArgs),
    /// Degree sweep over one or more (eps1, eps2) pairs; writes CSV and SVG.
    Sweep(SweepArgs),
    /// Write the canonical experiment bundle (both examples, three pairs,
    /// p = 1..11, regime figures) into a directory.
    Paper(PaperArgs),
}

#[derive(Args)]
struct MuArgs {
    /// Registry problem: 1 (b = c = f = 1) or 2 (b = e^x, c = x, f = 1).
    #[arg(long, default_value_t = 1)]
    example: u32,
    #[arg(long)]
    eps1: f64,
    #[arg(long)]
    eps2: f64,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, default_value_t = 1)]
    example: u32,
    #[arg(long)]
    eps1: f64,
    #[arg(long)]
    eps2: f64,
    /// Polynomial degree the mesh is built for.
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Layer width multiplier.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 1)]
    example: u32,
    #[arg(long)]
    eps1: f64,
    #[arg(long)]
    eps2: f64,
    #[arg(long, default_value_t = 1)]
    p: u32,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Truth for the error report: exact | reference.
    #[arg(long, default_value = "exact", value_parser = parse_error_mode)]
    error_mode: ErrorMode,
    /// Write the assembled global matrix as CSV into the output directory.
    #[arg(long)]
    dump_matrix: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Registry problem (defaults to 1).
    #[arg(long)]
    example: Option<u32>,
    /// May repeat; pairs up with --eps2 occurrences. Without any pair the
    /// three canonical pairs are swept.
    #[arg(long)]
    eps1: Vec<f64>,
    #[arg(long)]
    eps2: Vec<f64>,
    #[arg(long)]
    p_min: Option<u32>,
    #[arg(long)]
    p_max: Option<u32>,
    #[arg(long)]
    kappa: Option<f64>,
    /// exact | reference.
    #[arg(long)]
    error_mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero the wall-time column for byte-reproducible output.
    #[arg(long)]
    deterministic_timing: bool,
    /// Worker threads (default: rayon's choice, capped by SBLFEM_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Geometric levels in the energy-error quadrature.
    #[arg(long)]
    quad_levels: Option<u32>,
    /// Gauss points per quadrature panel (default: max(degree+2, 10)).
    #[arg(long)]
    quad_points: Option<usize>,
    /// key=value defaults for any of the above; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PaperArgs {
    #[arg(long, default_value = "paper-out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_error_mode(s: &str) -> std::result::Result<ErrorMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn problem_for(example: u32, eps1: f64, eps2: f64) -> Result<ProblemSpec> {
    ProblemSpec::registry(&format!("example{example}"), eps1, eps2)
}

fn run_mu(args: MuArgs) -> Result<()> {
    let problem = problem_for(args.example, args.eps1, args.eps2)?;
    let layer = compute_layer_parameters(&problem, DEFAULT_SAMPLE_COUNT)?;
    println!("mu0 = {} (attained at x = {})", layer.mu0, layer.argmin_mu0);
    println!("mu1 = {} (attained at x = {})", layer.mu1, layer.argmin_mu1);
    println!(
        "regime = {} (eps1/eps2^2 = {:e})",
        layer.regime, layer.ratio
    );
    if layer.is_degenerate() {
        println!("note: mu0 = 0 (inf c = 0); no left layer element will be built");
    }
    Ok(())
}

/// Short scientific form for mesh coordinates: "0 | 3.27482e-4 | ... | 1".
fn fmt_breakpoint(x: f64) -> String {
    if x == 0.0 || x == 1.0 {
        return format!("{x:.0}");
    }
    let full = format!("{x:.5e}");
    match full.split_once('e') {
        Some((mantissa, exp)) => {
            format!(
                "{}e{exp}",
                mantissa.trim_end_matches('0').trim_end_matches('.')
            )
        }
        None => full,
    }
}

fn run_mesh(args: MeshArgs) -> Result<()> {
    let problem = problem_for(args.example, args.eps1, args.eps2)?;
    let layer = compute_layer_parameters(&problem, DEFAULT_SAMPLE_COUNT)?;
    let mesh = build_sbl_mesh(&layer, args.kappa, args.p)?;
    let breakpoints: Vec<String> = mesh
        .breakpoints()
        .iter()
        .copied()
        .map(fmt_breakpoint)
        .collect();
    println!("breakpoints: {}", breakpoints.join(" | "));
    let widths: Vec<String> = (1..=mesh.element_count())
        .map(|j| format!("{:e}", mesh.width(j)))
        .collect();
    println!("widths: {}", widths.join(" | "));
    println!(
        "elements = {}, dof = {}",
        mesh.element_count(),
        DofMap::new(mesh.element_count(), args.p).len()
    );
    Ok(())
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let problem = problem_for(args.example, args.eps1, args.eps2)?;
    let layer = compute_layer_parameters(&problem, DEFAULT_SAMPLE_COUNT)?;
    let mesh = build_sbl_mesh(&layer, args.kappa, args.p)?;
    let rule = gauss_rule(assembly_quadrature_size(args.p))?;
    let system = assemble_global(&problem, &mesh, args.p, &rule)?;
    let coefficients = solve_linear(&system)?;
    let solution = DiscreteSolution::new(mesh.clone(), args.p, coefficients)?;
    println!(
        "elements = {}, dof = {}",
        mesh.element_count(),
        solution.dof()
    );
    let (mid, _) = solution.evaluate(0.5)?;
    println!("u(0.5) = {mid}");
    if args.dump_matrix {
        std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
        let path = args.out.join("matrix.csv");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        dump_matrix_csv(&system, file).map_err(|e| Error::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    match args.error_mode {
        ErrorMode::Exact => match constant_coefficient_exact(&problem) {
            Ok(truth) => {
                let quad =
                    EnergyQuadrature::new(DEFAULT_QUAD_LEVELS, quad_points_for_degree(args.p))?;
                let (_, rel) = energy_norm_error(&truth, &solution, problem.eps1, &mesh, &quad)?;
                println!("relative energy error = {rel:.6e} % (closed-form truth)");
            }
            Err(_) => {
                println!(
                    "no closed-form truth for this problem; rerun with --error-mode reference"
                );
            }
        },
        ErrorMode::Reference => {
            let truth = reference_on_mesh(&problem, &mesh, args.p)?;
            let quad =
                EnergyQuadrature::new(DEFAULT_QUAD_LEVELS, quad_points_for_degree(truth.degree()))?;
            let (_, rel) = energy_norm_error(&truth, &solution, problem.eps1, &mesh, &quad)?;
            println!(
                "relative energy error = {rel:.6e} % (reference truth: degree {}, dof {})",
                truth.degree(),
                truth.dof()
            );
        }
    }
    Ok(())
}

/// Plain key=value lines; '#' starts a comment, keys may use '-' or '_'.
fn load_config(path: &PathBuf) -> Result<HashMap<String, String>> {
    const KNOWN: [&str; 12] = [
        "example",
        "eps1",
        "eps2",
        "p_min",
        "p_max",
        "kappa",
        "error_mode",
        "out",
        "deterministic_timing",
        "threads",
        "quad_levels",
        "quad_points",
    ];
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidParameter(format!(
                "{} line {}: expected key=value, found {raw:?}",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim().replace('-', "_");
        if !KNOWN.contains(&key.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "{} line {}: unknown config key {key:?}",
                path.display(),
                i + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn cfg_parse<T: std::str::FromStr>(cfg: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    match cfg.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|_| {
            Error::InvalidParameter(format!("config key {key}: cannot parse {raw:?}"))
        }),
    }
}

fn cfg_list(cfg: &HashMap<String, String>, key: &str) -> Result<Option<Vec<f64>>> {
    match cfg.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| {
                    Error::InvalidParameter(format!("config key {key}: cannot parse {v:?}"))
                })
            })
            .collect::<Result<Vec<f64>>>()
            .map(Some),
    }
}

fn build_sweep_config(args: &SweepArgs) -> Result<(SweepConfig, PathBuf)> {
    let cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let example = match args.example {
        Some(e) => e,
        None => cfg_parse(&cfg, "example")?.unwrap_or(1),
    };
    let pairs: Vec<(f64, f64)> = if !args.eps1.is_empty() || !args.eps2.is_empty() {
        if args.eps1.len() != args.eps2.len() {
            return Err(Error::InvalidParameter(format!(
                "{} --eps1 values but {} --eps2 values",
                args.eps1.len(),
                args.eps2.len()
            )));
        }
        args.eps1
            .iter()
            .copied()
            .zip(args.eps2.iter().copied())
            .collect()
    } else {
        match (cfg_list(&cfg, "eps1")?, cfg_list(&cfg, "eps2")?) {
            (Some(a), Some(b)) if a.len() == b.len() => a.into_iter().zip(b).collect(),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter(
                    "config eps1 and eps2 lists differ in length".into(),
                ))
            }
            (None, None) => PAPER_PAIRS.to_vec(),
            _ => {
                return Err(Error::InvalidParameter(
                    "config must set both eps1 and eps2 or neither".into(),
                ))
            }
        }
    };
    let mut config = SweepConfig::new(format!("example{example}"), pairs);
    config.p_min = match args.p_min {
        Some(v) => v,
        None => cfg_parse(&cfg, "p_min")?.unwrap_or(config.p_min),
    };
    config.p_max = match args.p_max {
        Some(v) => v,
        None => cfg_parse(&cfg, "p_max")?.unwrap_or(config.p_max),
    };
    config.kappa = match args.kappa {
        Some(v) => v,
        None => cfg_parse(&cfg, "kappa")?.unwrap_or(config.kappa),
    };
    let mode = match &args.error_mode {
        Some(v) => Some(v.clone()),
        None => cfg.get("error_mode").cloned(),
    };
    if let Some(mode) = mode {
        config.error_mode = mode.parse()?;
    }
    config.deterministic_timing = args.deterministic_timing
        || cfg_parse::<bool>(&cfg, "deterministic_timing")?.unwrap_or(false);
    config.threads = match args.threads {
        Some(v) => Some(v),
        None => cfg_parse(&cfg, "threads")?,
    };
    config.quad_levels = match args.quad_levels {
        Some(v) => v,
        None => cfg_parse(&cfg, "quad_levels")?.unwrap_or(config.quad_levels),
    };
    config.quad_points = match args.quad_points {
        Some(v) => Some(v),
        None => cfg_parse(&cfg, "quad_points")?,
    };
    let out = match &args.out {
        Some(v) => v.clone(),
        None => cfg
            .get("out")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out")),
    };
    Ok((config, out))
}

fn run_sweep_cmd(args: SweepArgs) -> Result<()> {
    let (config, out) = build_sweep_config(&args)?;
    let records = run_sweep(&config)?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let csv = out.join("sweep.csv");
    emit_csv(&records, &csv)?;
    let groups = group_by_pair(&records);
    let svg = out.join("sweep.svg");
    emit_svg_semilog(
        &groups,
        &format!("{} energy error vs degrees of freedom", config.problem),
        &svg,
    )?;
    for group in &groups {
        let r = &group[0];
        match fit_rate(group) {
            Ok(fit) => println!(
                "(eps1={:e}, eps2={:e}): sigma_hat = {:.4}, r_squared = {:.5} over p = {}..{} ({} rows)",
                r.eps1, r.eps2, fit.sigma_hat, fit.r_squared, fit.p_range.0, fit.p_range.1, fit.used
            ),
            Err(e) => println!("(eps1={:e}, eps2={:e}): rate fit unavailable: {e}", r.eps1, r.eps2),
        }
    }
    println!("wrote {}", csv.display());
    println!("wrote {}", svg.display());
    Ok(())
}

fn run_paper_cmd(args: PaperArgs) -> Result<()> {
    let files = run_paper(&args.out, args.threads)?;
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Mu(args) => run_mu(args),
        Command::Mesh(args) => run_mesh(args),
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Paper(args) => run_paper_cmd(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
