//! Convergence sweeps over (eps1, eps2) pairs and polynomial degrees,
//! least-squares rate fitting, and the canonical experiment set that writes
//! the CSV/SVG artifact bundle.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::approximation::{
    energy_norm_error, quad_points_for_degree, reference_on_mesh, EnergyQuadrature,
    DEFAULT_QUAD_LEVELS,
};
use crate::assembly::{assemble_global, assembly_quadrature_size, solve_linear, DiscreteSolution};
use crate::error::{Error, Result};
use crate::mesh::build_sbl_mesh;
use crate::problem::{
    classify_regime, compute_layer_parameters, constant_coefficient_exact, validate_assumptions,
    ProblemSpec, Regime, DEFAULT_SAMPLE_COUNT,
};
use crate::quadrature::gauss_rule;
use crate::report::{emit_csv, emit_svg_semilog};

/// How the truth used in the error measurement is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// Closed-form solution; requires constant b, c, f.
    Exact,
    /// Higher-degree solve on the same mesh with at least twice the DOF.
    Reference,
}

impl std::fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorMode::Exact => "exact",
            ErrorMode::Reference => "reference",
        })
    }
}

impl std::str::FromStr for ErrorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ErrorMode::Exact),
            "reference" => Ok(ErrorMode::Reference),
            other => Err(Error::InvalidParameter(format!(
                "unknown error mode {other:?} (have: exact, reference)"
            ))),
        }
    }
}

/// Everything one sweep needs. Fields are public so callers (CLI, tests) can
/// adjust from the defaults; run_sweep re-validates.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Registry problem name.
    pub problem: String,
    pub pairs: Vec<(f64, f64)>,
    pub p_min: u32,
    pub p_max: u32,
    pub kappa: f64,
    pub error_mode: ErrorMode,
    /// Report wall_time_s as 0.0 so repeated runs emit identical bytes.
    pub deterministic_timing: bool,
    /// Worker threads; None uses the global pool (or SBLFEM_THREADS).
    pub threads: Option<usize>,
    /// Geometric levels of the energy-error quadrature.
    pub quad_levels: u32,
    /// Gauss points per panel; None picks max(degree+2, 10) per cell.
    pub quad_points: Option<usize>,
}

impl SweepConfig {
    pub fn new(problem: impl Into<String>, pairs: Vec<(f64, f64)>) -> Self {
        SweepConfig {
            problem: problem.into(),
            pairs,
            p_min: 1,
            p_max: 11,
            kappa: 1.0,
            error_mode: ErrorMode::Exact,
            deterministic_timing: false,
            threads: None,
            quad_levels: DEFAULT_QUAD_LEVELS,
            quad_points: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::InvalidParameter(
                "no (eps1, eps2) pairs given".into(),
            ));
        }
        for &(e1, e2) in &self.pairs {
            if !(e1 > 0.0 && e1 <= e2 && e2 <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "pair (eps1, eps2) = ({e1:e}, {e2:e}) violates 0 < eps1 <= eps2 <= 1"
                )));
            }
        }
        if self.p_min < 1 || self.p_min > self.p_max {
            return Err(Error::InvalidParameter(format!(
                "degree range {}..{} is empty or starts below 1",
                self.p_min, self.p_max
            )));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa = {} must be positive and finite",
                self.kappa
            )));
        }
        if self.quad_levels == 0 {
            return Err(Error::InvalidParameter("quad_levels must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        // Surface unknown problem names before the sweep starts.
        let &(e1, e2) = &self.pairs[0];
        ProblemSpec::registry(&self.problem, e1, e2)?;
        Ok(())
    }
}

/// One sweep cell result. Failed cells carry dof = 0 and NaN in the error
/// and timing columns.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub eps1: f64,
    pub eps2: f64,
    pub p: u32,
    pub dof: usize,
    pub rel_err_pct: f64,
    pub wall_time_s: f64,
    pub regime: Regime,
}

/// Exponential rate fitted to ln(err) over p by ordinary least squares.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Estimated decay rate per unit p (negated slope).
    pub sigma_hat: f64,
    pub r_squared: f64,
    /// (lowest, highest) p among the rows used.
    pub p_range: (u32, u32),
    /// Number of usable rows (finite, positive error).
    pub used: usize,
}

/// Least-squares fit of ln(rel_err) on p for the records of one pair.
/// Rows with non-finite or non-positive error are excluded; fewer than 4
/// usable rows is an error. A flat error profile returns sigma_hat = 0 with
/// r_squared = 0.
pub fn fit_rate(records: &[ConvergenceRecord]) -> Result<RateFit> {
    let usable: Vec<(f64, f64, u32)> = records
        .iter()
        .filter(|r| r.rel_err_pct.is_finite() && r.rel_err_pct > 0.0)
        .map(|r| (r.p as f64, r.rel_err_pct.ln(), r.p))
        .collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData(usable.len()));
    }
    let n = usable.len() as f64;
    let x_mean = usable.iter().map(|u| u.0).sum::<f64>() / n;
    let y_mean = usable.iter().map(|u| u.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|u| (u.0 - x_mean).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|u| (u.0 - x_mean) * (u.1 - y_mean)).sum();
    let ss_tot: f64 = usable.iter().map(|u| (u.1 - y_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(1));
    }
    let p_lo = usable.iter().map(|u| u.2).min().unwrap();
    let p_hi = usable.iter().map(|u| u.2).max().unwrap();
    if ss_tot == 0.0 {
        return Ok(RateFit {
            sigma_hat: 0.0,
            r_squared: 0.0,
            p_range: (p_lo, p_hi),
            used: usable.len(),
        });
    }
    let slope = sxy / sxx;
    let ss_res: f64 = usable
        .iter()
        .map(|u| (u.1 - (y_mean + slope * (u.0 - x_mean))).powi(2))
        .sum();
    Ok(RateFit {
        sigma_hat: -slope,
        r_squared: 1.0 - ss_res / ss_tot,
        p_range: (p_lo, p_hi),
        used: usable.len(),
    })
}

fn parse_thread_env(raw: &str) -> Result<usize> {
    match raw.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(Error::InvalidParameter(format!(
            "SBLFEM_THREADS = {raw:?} is not a positive integer"
        ))),
        Ok(n) => Ok(n),
    }
}

fn resolve_threads(explicit: Option<usize>) -> Result<Option<usize>> {
    if explicit.is_some() {
        return Ok(explicit);
    }
    match std::env::var("SBLFEM_THREADS") {
        Ok(raw) => parse_thread_env(&raw).map(Some),
        Err(_) => Ok(None),
    }
}

/// Solve one cell and measure its error. The wall clock covers assembly and
/// the linear solve only; reference solves and error quadrature are
/// verification cost, not method cost.
fn run_cell(config: &SweepConfig, eps1: f64, eps2: f64, p: u32) -> Result<(usize, f64, f64)> {
    let problem = ProblemSpec::registry(&config.problem, eps1, eps2)?;
    let layer = compute_layer_parameters(&problem, DEFAULT_SAMPLE_COUNT)?;
    let mesh = build_sbl_mesh(&layer, config.kappa, p)?;
    let rule = gauss_rule(assembly_quadrature_size(p))?;
    let start = Instant::now();
    let system = assemble_global(&problem, &mesh, p, &rule)?;
    let coefficients = solve_linear(&system)?;
    let wall = start.elapsed().as_secs_f64();
    let solution = DiscreteSolution::new(mesh.clone(), p, coefficients)?;
    let dof = solution.dof();
    let rel = match config.error_mode {
        ErrorMode::Exact => {
            let truth = constant_coefficient_exact(&problem)?;
            let points = config.quad_points.unwrap_or(quad_points_for_degree(p));
            let quad = EnergyQuadrature::new(config.quad_levels, points)?;
            energy_norm_error(&truth, &solution, problem.eps1, &mesh, &quad)?.1
        }
        ErrorMode::Reference => {
            let truth = reference_on_mesh(&problem, &mesh, p)?;
            let points = config
                .quad_points
                .unwrap_or(quad_points_for_degree(truth.degree()));
            let quad = EnergyQuadrature::new(config.quad_levels, points)?;
            energy_norm_error(&truth, &solution, problem.eps1, &mesh, &quad)?.1
        }
    };
    Ok((dof, rel, wall))
}

/// Run every (pair, p) cell. Records come back sorted by (pair index, p)
/// regardless of execution order or thread count; a failed cell becomes a
/// row with dof = 0 and NaN error/timing, and the sweep continues.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<ConvergenceRecord>> {
    config.validate()?;
    // Advisory data-assumption check, reported once per pair up front so the
    // warnings land in a deterministic order.
    for &(e1, e2) in &config.pairs {
        let problem = ProblemSpec::registry(&config.problem, e1, e2)?;
        if let Err(err) = validate_assumptions(&problem, DEFAULT_SAMPLE_COUNT) {
            eprintln!(
                "warning: {} at (eps1, eps2) = ({e1:e}, {e2:e}): {err}",
                config.problem
            );
        }
    }
    let cells: Vec<(f64, f64, u32)> = config
        .pairs
        .iter()
        .flat_map(|&(e1, e2)| (config.p_min..=config.p_max).map(move |p| (e1, e2, p)))
        .collect();
    let run = |&(e1, e2, p): &(f64, f64, u32)| -> ConvergenceRecord {
        let (regime, _) = classify_regime(e1, e2);
        match run_cell(config, e1, e2, p) {
            Ok((dof, rel, wall)) => ConvergenceRecord {
                eps1: e1,
                eps2: e2,
                p,
                dof,
                rel_err_pct: rel,
                wall_time_s: if config.deterministic_timing {
                    0.0
                } else {
                    wall
                },
                regime,
            },
            Err(_) => ConvergenceRecord {
                eps1: e1,
                eps2: e2,
                p,
                dof: 0,
                rel_err_pct: f64::NAN,
                wall_time_s: f64::NAN,
                regime,
            },
        }
    };
    let records = match resolve_threads(config.threads)? {
        Some(1) => cells.iter().map(run).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| cells.par_iter().map(run).collect())
        }
        None => cells.par_iter().map(run).collect(),
    };
    Ok(records)
}

/// The three canonical (eps1, eps2) pairs of the convergence study.
pub const PAPER_PAIRS: [(f64, f64); 3] = [(1e-9, 1e-4), (1e-10, 1e-5), (1e-12, 1e-12)];

/// Additional pairs filling out the per-regime figures; the canonical
/// triples alone leave the strongly convection-dominated regime empty.
pub const EXTRA_CRD_PAIRS: [(f64, f64); 2] = [(1e-8, 1e-3), (1e-11, 1e-4)];
pub const EXTRA_TRANSITION_PAIRS: [(f64, f64); 2] = [(1e-8, 1e-4), (1e-6, 1e-3)];
pub const EXTRA_RD_PAIRS: [(f64, f64); 2] = [(1e-8, 1e-8), (1e-4, 1e-4)];

fn pair_records(records: &[ConvergenceRecord], pair: (f64, f64)) -> Vec<ConvergenceRecord> {
    records
        .iter()
        .filter(|r| r.eps1.to_bits() == pair.0.to_bits() && r.eps2.to_bits() == pair.1.to_bits())
        .cloned()
        .collect()
}

fn regime_groups(
    canonical: &[ConvergenceRecord],
    extras: &[ConvergenceRecord],
    regime: Regime,
    extra_pairs: &[(f64, f64)],
) -> Vec<Vec<ConvergenceRecord>> {
    let mut groups = Vec::new();
    for &pair in PAPER_PAIRS.iter() {
        if classify_regime(pair.0, pair.1).0 == regime {
            groups.push(pair_records(canonical, pair));
        }
    }
    for &pair in extra_pairs {
        groups.push(pair_records(extras, pair));
    }
    groups
}

/// Run the canonical configuration: both registry problems, kappa = 1,
/// p = 1..11, the three canonical pairs, plus the per-regime extras; write
/// two CSVs, five SVGs, and a metadata description into `out_dir`. Returns
/// the written paths. Timing columns are zeroed so the bundle is
/// byte-reproducible.
pub fn run_paper(out_dir: &Path, threads: Option<usize>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let mut cfg1 = SweepConfig::new("example1", PAPER_PAIRS.to_vec());
    cfg1.deterministic_timing = true;
    cfg1.threads = threads;
    let records1 = run_sweep(&cfg1)?;

    let mut cfg2 = SweepConfig::new("example2", PAPER_PAIRS.to_vec());
    cfg2.error_mode = ErrorMode::Reference;
    cfg2.deterministic_timing = true;
    cfg2.threads = threads;
    let records2 = run_sweep(&cfg2)?;

    let extra_pairs: Vec<(f64, f64)> = EXTRA_CRD_PAIRS
        .iter()
        .chain(&EXTRA_TRANSITION_PAIRS)
        .chain(&EXTRA_RD_PAIRS)
        .copied()
        .collect();
    let mut cfg_extra = SweepConfig::new("example1", extra_pairs);
    cfg_extra.deterministic_timing = true;
    cfg_extra.threads = threads;
    let extras = run_sweep(&cfg_extra)?;

    let csv1 = out_dir.join("example1.csv");
    emit_csv(&records1, &csv1)?;
    written.push(csv1);
    let csv2 = out_dir.join("example2.csv");
    emit_csv(&records2, &csv2)?;
    written.push(csv2);

    let svg1 = out_dir.join("example1.svg");
    emit_svg_semilog(
        &PAPER_PAIRS.map(|pair| pair_records(&records1, pair)),
        "constant coefficients, error vs exact solution",
        &svg1,
    )?;
    written.push(svg1);
    let svg2 = out_dir.join("example2.svg");
    emit_svg_semilog(
        &PAPER_PAIRS.map(|pair| pair_records(&records2, pair)),
        "variable coefficients, error vs degree-doubled reference",
        &svg2,
    )?;
    written.push(svg2);

    let regimes = [
        (
            Regime::ConvectionReactionDiffusion,
            &EXTRA_CRD_PAIRS,
            "regime_convection_reaction_diffusion.svg",
            "convection-reaction-diffusion regime (eps1 < 0.1 eps2^2)",
        ),
        (
            Regime::TransitionBand,
            &EXTRA_TRANSITION_PAIRS,
            "regime_transition.svg",
            "transition regime (eps1 ~ eps2^2)",
        ),
        (
            Regime::ReactionDiffusion,
            &EXTRA_RD_PAIRS,
            "regime_reaction_diffusion.svg",
            "reaction-diffusion regime (eps1 > 10 eps2^2)",
        ),
    ];
    for (regime, extra, file, title) in regimes {
        let groups = regime_groups(&records1, &extras, regime, extra);
        let path = out_dir.join(file);
        emit_svg_semilog(&groups, title, &path)?;
        written.push(path);
    }

    let meta = out_dir.join("metadata.txt");
    write_metadata(&meta)?;
    written.push(meta);
    Ok(written)
}

fn write_metadata(path: &Path) -> Result<()> {
    use std::io::Write;
    let mut text = String::new();
    text.push_str("canonical convergence study\n");
    text.push_str("===========================\n\n");
    text.push_str("mesh: spectral boundary layer mesh, kappa = 1, degrees p = 1..11\n");
    text.push_str("error: percentage relative error in the energy norm\n");
    text.push_str("timing: wall_time_s column zeroed for byte-reproducible output\n\n");
    text.push_str("files\n");
    text.push_str("-----\n");
    text.push_str("example1.csv  constant-coefficient problem, truth = closed form\n");
    text.push_str(
        "example2.csv  variable-coefficient problem, truth = same-mesh solve with >= 2x DOF\n",
    );
    text.push_str("example1.svg  semilog error curves for the canonical pairs (example1)\n");
    text.push_str("example2.svg  semilog error curves for the canonical pairs (example2)\n");
    text.push_str("regime_*.svg  example1 curves grouped by eps1/eps2^2 regime\n\n");
    text.push_str("canonical pairs\n");
    text.push_str("---------------\n");
    for (e1, e2) in PAPER_PAIRS {
        text.push_str(&format!("({e1:e}, {e2:e})\n"));
    }
    text.push_str("\nextra pairs in the regime figures (chosen on a log grid)\n");
    text.push_str("--------------------------------------------------------\n");
    for (label, pairs) in [
        ("convection-reaction-diffusion", &EXTRA_CRD_PAIRS),
        ("transition", &EXTRA_TRANSITION_PAIRS),
        ("reaction-diffusion", &EXTRA_RD_PAIRS),
    ] {
        for (e1, e2) in pairs.iter() {
            text.push_str(&format!("{label}: ({e1:e}, {e2:e})\n"));
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_records(errs: &[(u32, f64)]) -> Vec<ConvergenceRecord> {
        errs.iter()
            .map(|&(p, e)| ConvergenceRecord {
                eps1: 1e-9,
                eps2: 1e-4,
                p,
                dof: 3 * p as usize - 1,
                rel_err_pct: e,
                wall_time_s: 0.0,
                regime: Regime::TransitionBand,
            })
            .collect()
    }

    #[test]
    fn exact_exponential_rows_fit_exactly() {
        let rows: Vec<(u32, f64)> = (1..=8).map(|p| (p, (-2.0 * p as f64).exp())).collect();
        let fit = fit_rate(&synthetic_records(&rows)).unwrap();
        assert!((fit.sigma_hat - 2.0).abs() < 1e-12, "{}", fit.sigma_hat);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_eq!(fit.p_range, (1, 8));
        assert_eq!(fit.used, 8);
    }

    #[test]
    fn constant_rows_fit_to_zero_rate() {
        let rows: Vec<(u32, f64)> = (1..=6).map(|p| (p, 0.25)).collect();
        let fit = fit_rate(&synthetic_records(&rows)).unwrap();
        assert_eq!(fit.sigma_hat, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn short_or_degenerate_inputs_are_rejected() {
        let rows: Vec<(u32, f64)> = (1..=3).map(|p| (p, 0.5)).collect();
        assert!(matches!(
            fit_rate(&synthetic_records(&rows)),
            Err(Error::InsufficientData(3))
        ));
        // Zero and NaN errors do not count as usable rows.
        let rows = [(1, 0.5), (2, 0.0), (3, f64::NAN), (4, 0.1), (5, 0.05)];
        assert!(matches!(
            fit_rate(&synthetic_records(&rows)),
            Err(Error::InsufficientData(3))
        ));
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let good = SweepConfig::new("example1", vec![(1e-9, 1e-4)]);
        assert!(good.validate().is_ok());
        let mut c = good.clone();
        c.pairs.clear();
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.pairs = vec![(1e-4, 1e-9)];
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.p_min = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.p_min = 5;
        c.p_max = 4;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.kappa = 0.0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.threads = Some(0);
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.quad_levels = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.problem = "example9".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn thread_env_parsing() {
        assert_eq!(parse_thread_env("4").unwrap(), 4);
        assert_eq!(parse_thread_env(" 2 ").unwrap(), 2);
        assert!(parse_thread_env("0").is_err());
        assert!(parse_thread_env("two").is_err());
        assert!(parse_thread_env("").is_err());
    }

    #[test]
    fn dof_column_follows_the_three_element_formula() {
        let mut cfg = SweepConfig::new("example1", vec![(1e-9, 1e-4)]);
        cfg.deterministic_timing = true;
        cfg.threads = Some(1);
        let records = run_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 11);
        let dofs: Vec<usize> = records.iter().map(|r| r.dof).collect();
        assert_eq!(dofs, vec![2, 5, 8, 11, 14, 17, 20, 23, 26, 29, 32]);
        for r in &records {
            assert!(r.rel_err_pct.is_finite() && r.rel_err_pct > 0.0);
            assert_eq!(r.wall_time_s, 0.0);
            assert_eq!(r.regime, Regime::TransitionBand);
        }
        // Log-linear decay from p = 2 on.
        for w in records[1..].windows(2) {
            assert!(w[1].rel_err_pct < w[0].rel_err_pct);
        }
        let fit = fit_rate(&records).unwrap();
        assert!(fit.sigma_hat > 0.3, "sigma_hat = {}", fit.sigma_hat);
        assert!(fit.r_squared >= 0.98, "r_squared = {}", fit.r_squared);
    }

    #[test]
    fn unperturbed_pair_reaches_spectral_accuracy_quickly() {
        let mut cfg = SweepConfig::new("example1", vec![(1.0, 1.0)]);
        cfg.p_min = 8;
        cfg.p_max = 8;
        cfg.threads = Some(1);
        let records = run_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert!(
            records[0].rel_err_pct <= 1e-5,
            "p = 8 error {}%",
            records[0].rel_err_pct
        );
    }

    #[test]
    fn strongly_perturbed_pairs_share_error_curves() {
        // Both pairs sit in eps1 <= 0.1 eps2^2; robustness says the error at
        // fixed p cannot depend on how deep eps1 is below the threshold.
        let mut cfg = SweepConfig::new("example1", vec![(1e-9, 1e-4), (1e-11, 1e-4)]);
        cfg.p_min = 2;
        cfg.p_max = 6;
        cfg.threads = Some(1);
        let records = run_sweep(&cfg).unwrap();
        for p_idx in 0..5 {
            let a = records[p_idx].rel_err_pct;
            let b = records[5 + p_idx].rel_err_pct;
            let ratio = (a / b).max(b / a);
            assert!(ratio < 3.0, "p = {}: {a} vs {b}", records[p_idx].p);
        }
    }

    #[test]
    fn failed_cells_become_nan_rows_and_the_sweep_continues() {
        // example2 has no closed form, so exact mode cannot measure it.
        let mut cfg = SweepConfig::new("example2", vec![(1e-9, 1e-4)]);
        cfg.p_min = 1;
        cfg.p_max = 4;
        cfg.threads = Some(1);
        let records = run_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        for r in &records {
            assert_eq!(r.dof, 0);
            assert!(r.rel_err_pct.is_nan());
            assert!(r.wall_time_s.is_nan());
        }
        assert!(matches!(
            fit_rate(&records),
            Err(Error::InsufficientData(0))
        ));
    }

    #[test]
    fn reference_mode_covers_problems_without_closed_forms() {
        let mut cfg = SweepConfig::new("example2", vec![(1e-9, 1e-4)]);
        cfg.error_mode = ErrorMode::Reference;
        cfg.p_min = 2;
        cfg.p_max = 3;
        cfg.threads = Some(1);
        let records = run_sweep(&cfg).unwrap();
        for r in &records {
            // Gap mesh (no left layer element): DOF = 2p - 1.
            assert_eq!(r.dof, 2 * r.p as usize - 1);
            assert!(r.rel_err_pct.is_finite() && r.rel_err_pct > 0.0);
        }
    }

    #[test]
    fn parallel_and_serial_sweeps_agree_bitwise() {
        let base = {
            let mut c = SweepConfig::new("example1", vec![(1e-9, 1e-4), (1e-12, 1e-12)]);
            c.p_min = 1;
            c.p_max = 5;
            c.deterministic_timing = true;
            c
        };
        let mut serial_cfg = base.clone();
        serial_cfg.threads = Some(1);
        let mut parallel_cfg = base;
        parallel_cfg.threads = Some(4);
        let serial = run_sweep(&serial_cfg).unwrap();
        let parallel = run_sweep(&parallel_cfg).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.p, b.p);
            assert_eq!(a.dof, b.dof);
            assert_eq!(a.rel_err_pct.to_bits(), b.rel_err_pct.to_bits());
        }
    }
}
