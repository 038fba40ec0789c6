use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use nhph_core::ed::{
    aklt_chain, default_scaling_sizes, full_spectrum, gap_scaling, obc_similarity_check,
    periodic_gaps, ChainBoundary, SimilarityReport, CLUSTER_TOL, SIMILARITY_CAP,
};
use nhph_core::io::{
    fmt_complex, fmt_real, EntanglementFile, MpsFile, ProjectorFile, SpectrumFile,
};
use nhph_core::itebd::{
    evolve, find_ground_state, make_gate, Checkpoint, EvolutionConfig, WEIGHT_FLOOR,
};
use nhph_core::linalg::{max_abs_diff, rank_tol, DEGENERACY_TOL, RANK_TOL};
use nhph_core::mps::{asymmetric_aklt, fixed_point_metric, transfer_matrix, MpsError, StatePair};
use nhph_core::observables::{
    entanglement_spectrum, infidelity_per_site, order_parameters, string_order, Mode,
};
use nhph_core::parent::{
    blocked_map, criterion_biorthogonal, criterion_direct_sum, expand_lambda, hamiltonian_k2,
    metric, projector_from_maps, Side, PROJECTOR_TOL,
};
use nhph_core::UniformMps;

use crate::error::CliError;
use crate::output::{Meta, OutputDir};
use crate::pool::{map_ordered, worker_count};

/// Critical points skipped by sweeps.
pub const CRITICAL_POINTS: [f64; 2] = [1.0 / 3.0, 3.0];

fn check_mu(mu: f64) -> Result<(), CliError> {
    if mu.is_finite() && mu > 0.0 {
        Ok(())
    } else {
        Err(CliError::Other(format!(
            "mu must be finite and positive, got {mu}"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Other(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}

fn check_count(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::Other(format!(
            "{name} must be at least {min}, got {v}"
        )))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    /// Deformation parameter of the asymmetric AKLT pair.
    #[arg(long, required_unless_present = "right")]
    pub mu: Option<f64>,
    /// Interaction length.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Right state as MPS JSON (overrides --mu).
    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,
    /// Left state as MPS JSON.
    #[arg(long, requires = "right")]
    pub left: Option<PathBuf>,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Criteria {
    metric_invertible: bool,
    direct_sum: bool,
    biorthogonal: bool,
}

#[derive(Serialize)]
struct ClosedFormCheck {
    max_deviation: f64,
    agrees: bool,
}

#[derive(Serialize)]
struct ConstructReport {
    k: usize,
    mu: Option<f64>,
    metric_rank: usize,
    metric_dim: usize,
    metric_condition: f64,
    criteria: Criteria,
    hermitian: Option<bool>,
    closed_form_check: Option<ClosedFormCheck>,
    fixed_point_metric_singular: Option<bool>,
    warnings: Vec<String>,
}

fn read_mps(path: &PathBuf) -> Result<UniformMps, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: MpsFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    Ok(file.to_state()?)
}

pub fn construct(args: &ConstructArgs) -> Result<(), CliError> {
    check_count("k", args.k, 1)?;
    let pair = match (&args.right, &args.left) {
        (Some(r), Some(l)) => StatePair::new(read_mps(r)?, read_mps(l)?)?,
        _ => {
            let mu = args.mu.expect("clap enforces --mu");
            check_mu(mu)?;
            StatePair::asymmetric_aklt(mu)?
        }
    };
    let out = OutputDir::create(&args.out)?;
    let meta = Meta::new(
        "construct",
        args,
        vec![
            ("rank", RANK_TOL),
            ("projector", PROJECTOR_TOL),
            ("degeneracy", DEGENERACY_TOL),
        ],
    );

    let right = blocked_map(&pair.right, args.k, Side::Right)?;
    let left = blocked_map(&pair.left, args.k, Side::Left)?;
    let g = metric(&left, &right)?;
    let criteria = Criteria {
        metric_invertible: g.is_invertible(),
        direct_sum: criterion_direct_sum(&left, &right)?,
        biorthogonal: criterion_biorthogonal(&left, &right)?,
    };
    let mut warnings = Vec::new();
    let e = transfer_matrix(&pair.left, &pair.right)?;
    let fixed_point_metric_singular = match fixed_point_metric(&e, DEGENERACY_TOL) {
        Ok(m) => {
            let singular = rank_tol(&m, RANK_TOL) < m.nrows();
            if singular {
                warnings.push(
                    "fixed-point metric is singular: the parent Hamiltonian exists only at finite k".into(),
                );
            }
            Some(singular)
        }
        Err(MpsError::Linalg(e)) => {
            warnings.push(format!("fixed-point metric unavailable: {e}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut report = ConstructReport {
        k: args.k,
        mu: pair.mu,
        metric_rank: g.rank(),
        metric_dim: g.matrix.nrows(),
        metric_condition: g.condition_estimate,
        criteria,
        hermitian: None,
        closed_form_check: None,
        fixed_point_metric_singular,
        warnings,
    };
    if !report.criteria.metric_invertible {
        out.json("construct.json", &meta, &report)?;
        return Err(CliError::SingularMetric(format!(
            "metric rank {} of {}",
            report.metric_rank, report.metric_dim
        )));
    }

    let mut p = projector_from_maps(&left, &right)?;
    p.mu = pair.mu;
    report.hermitian = Some(p.hermiticity_residual() < PROJECTOR_TOL);
    if p.k == 2 && p.d == 3 {
        if let Some(mu) = pair.mu {
            let closed = hamiltonian_k2(mu)?;
            let dev = max_abs_diff(&closed.matrix, &p.matrix);
            report.closed_form_check = Some(ClosedFormCheck {
                max_deviation: dev,
                agrees: dev < 1e-12,
            });
        }
        let coeffs = expand_lambda(&p)?;
        let header: Vec<String> = std::iter::once("m".to_string())
            .chain((1..=9).map(|n| format!("n{n}")))
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = coeffs
            .rows()
            .into_iter()
            .enumerate()
            .map(|(m, row)| {
                std::iter::once((m + 1).to_string())
                    .chain(row.iter().map(|&z| fmt_complex(z)))
                    .collect()
            })
            .collect();
        out.csv("lambda.csv", &meta, &header, &rows)?;
    }
    out.json("projector.json", &meta, &ProjectorFile::from_projector(&p))?;
    out.json("construct.json", &meta, &report)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Lr,
    Rr,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Lr => vec![Mode::Lr],
            ModeArg::Rr => vec![Mode::Rr],
            ModeArg::Both => vec![Mode::Lr, Mode::Rr],
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Explicit μ values (comma separated); default is a log grid.
    #[arg(long, value_delimiter = ',')]
    pub mu: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    /// Points with |ln(μ/μ_c)| below this are skipped near μ_c = 1/3, 3.
    #[arg(long, default_value_t = 1e-2)]
    pub skip_window: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Largest string length.
    #[arg(long, default_value_t = 10)]
    pub max_string: usize,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    check_count("max_string", args.max_string, 2)?;
    let grid = if args.mu.is_empty() {
        check_positive("mu_min", args.mu_min)?;
        check_positive("mu_max", args.mu_max)?;
        check_count("points", args.points, 1)?;
        log_grid(args.mu_min, args.mu_max, args.points)
    } else {
        args.mu.clone()
    };
    for &mu in &grid {
        check_mu(mu)?;
    }
    let (kept, skipped): (Vec<f64>, Vec<f64>) = grid.into_iter().partition(|&mu| {
        CRITICAL_POINTS
            .iter()
            .all(|&c| (mu / c).ln().abs() >= args.skip_window)
    });
    let mut meta = Meta::new("sweep", args, vec![("degeneracy", DEGENERACY_TOL)]);
    for mu in &skipped {
        eprintln!("notice: skipping μ = {mu} (degenerate transfer spectrum)");
        meta = meta.note(format!("skipped mu={}", fmt_real(*mu)));
    }
    let modes = args.mode.modes();
    let jobs: Vec<(f64, Mode)> = kept
        .iter()
        .flat_map(|&mu| modes.iter().map(move |&m| (mu, m)))
        .collect();
    let results = map_ordered(&jobs, worker_count(), |&(mu, mode)| {
        let row = order_parameters(mu, mode)?;
        let strings = (2..=args.max_string)
            .map(|m| string_order(mu, m, mode))
            .collect::<Result<Vec<_>, _>>()?;
        Ok::<_, MpsError>((row, strings))
    });

    let mut order_rows = Vec::new();
    let mut string_rows = Vec::new();
    for r in results {
        let (row, strings) = r?;
        let mut line = vec![fmt_real(row.mu), row.mode.label().to_string()];
        for z in [row.o_af, row.o_left, row.o_right, row.o_chiral] {
            line.push(fmt_real(z.re));
            line.push(fmt_real(z.im));
        }
        order_rows.push(line);
        for (i, z) in strings.iter().enumerate() {
            string_rows.push(vec![
                fmt_real(row.mu),
                row.mode.label().to_string(),
                (i + 2).to_string(),
                fmt_real(z.re),
                fmt_real(z.im),
            ]);
        }
    }
    let out = OutputDir::create(&args.out)?;
    out.csv(
        "order.csv",
        &meta,
        &[
            "mu",
            "mode",
            "af_re",
            "af_im",
            "left_re",
            "left_im",
            "right_re",
            "right_im",
            "chiral_re",
            "chiral_im",
        ],
        &order_rows,
    )?;
    out.csv(
        "string.csv",
        &meta,
        &["mu", "mode", "m", "re", "im"],
        &string_rows,
    )?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for ChainBoundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => ChainBoundary::Open,
            BoundaryArg::Periodic => ChainBoundary::Periodic,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EdArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Number of sites.
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    pub boundary: BoundaryArg,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EdReport {
    #[serde(flatten)]
    spectrum: SpectrumFile,
    similarity: Option<SimilarityReport>,
}

pub fn ed(args: &EdArgs) -> Result<(), CliError> {
    check_mu(args.mu)?;
    check_count("k", args.k, 2)?;
    check_count("n", args.n, args.k)?;
    let boundary: ChainBoundary = args.boundary.into();
    let h = aklt_chain(args.mu, args.k, args.n, boundary)?;
    let report = full_spectrum(&h, CLUSTER_TOL)?;
    let similarity = match boundary {
        ChainBoundary::Open if 3usize.pow(args.n as u32) <= SIMILARITY_CAP => {
            Some(obc_similarity_check(args.mu, args.n, args.k)?)
        }
        _ => None,
    };
    let meta = Meta::new("ed", args, vec![("cluster", CLUSTER_TOL)]);
    let out = OutputDir::create(&args.out)?;
    out.json(
        "spectrum.json",
        &meta,
        &EdReport {
            spectrum: SpectrumFile::new(args.mu, args.n, args.k, boundary, &report),
            similarity,
        },
    )?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct EdScalingArgs {
    /// μ values (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub mu: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Periodic chain lengths (default k+1, k+3, k+5).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

pub fn ed_scaling(args: &EdScalingArgs) -> Result<(), CliError> {
    check_count("k", args.k, 2)?;
    for &mu in &args.mu {
        check_mu(mu)?;
    }
    let sizes = if args.sizes.is_empty() {
        default_scaling_sizes(args.k)
    } else {
        args.sizes.clone()
    };
    if sizes.len() < 3 {
        return Err(CliError::Other("gap scaling needs at least 3 sizes".into()));
    }
    for &n in &sizes {
        check_count("size", n, args.k)?;
    }
    let results = map_ordered(&args.mu, worker_count(), |&mu| {
        let gaps = periodic_gaps(mu, args.k, &sizes)?;
        let fit = gap_scaling(&gaps)?;
        Ok::<_, nhph_core::ed::EdError>((mu, gaps, fit))
    });
    let mut gap_rows = Vec::new();
    let mut fit_rows = Vec::new();
    for r in results {
        let (mu, gaps, fit) = r?;
        for (n, g) in gaps {
            gap_rows.push(vec![
                fmt_real(mu),
                args.k.to_string(),
                n.to_string(),
                fmt_real(g),
            ]);
        }
        let [a, b, c] = fit.coefficients;
        fit_rows.push(vec![
            fmt_real(mu),
            args.k.to_string(),
            fmt_real(fit.extrapolated),
            fmt_real(a),
            fmt_real(b),
            fmt_real(c),
            fmt_real(fit.residual),
        ]);
    }
    let meta = Meta::new("ed-scaling", args, vec![("cluster", CLUSTER_TOL)])
        .note("fit gap = a + b/N + c/N^2 in the abscissa 1/N; extrapolated = a")
        .note(format!(
            "sizes {}",
            sizes
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        ));
    let out = OutputDir::create(&args.out)?;
    out.csv("gaps.csv", &meta, &["mu", "k", "n", "gap"], &gap_rows)?;
    out.csv(
        "scaling.csv",
        &meta,
        &["mu", "k", "extrapolated", "a", "b", "c", "rms_residual"],
        &fit_rows,
    )?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ItebdArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 12)]
    pub dmax: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub dtau: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub etol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evolve with the adjoint projector and compare with Φ_{1/μ}.
    #[arg(long)]
    pub adjoint: bool,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ItebdReport {
    mu: f64,
    k: usize,
    adjoint: bool,
    target_mu: f64,
    steps: usize,
    converged: bool,
    final_e: Option<f64>,
    infidelity: f64,
    entanglement: Vec<f64>,
    target_entanglement: Vec<f64>,
}

pub fn itebd(args: &ItebdArgs) -> Result<(), CliError> {
    check_mu(args.mu)?;
    check_count("k", args.k, 2)?;
    check_count("dmax", args.dmax, 2)?;
    check_positive("dtau", args.dtau)?;
    check_positive("etol", args.etol)?;
    let pair = StatePair::asymmetric_aklt(args.mu)?;
    let p = nhph_core::parent::build_projector(&pair, args.k)?;
    let config = EvolutionConfig {
        d_max: args.dmax,
        dtau: args.dtau,
        e_tol: args.etol,
        max_steps: args.max_steps,
        adjoint: args.adjoint,
        seed: args.seed,
    };
    let (state, trace) = match &args.resume {
        None => find_ground_state(&p, &config)?,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let cp: Checkpoint = serde_json::from_str(&text)
                .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
            if cp.k != args.k || cp.adjoint != args.adjoint {
                return Err(CliError::Other(
                    "checkpoint k or adjoint flag differs from the command line".into(),
                ));
            }
            let (start, mut trace) = cp.restore()?;
            trace.e_tol = args.etol;
            trace.converged = false;
            let gate = make_gate(
                &if args.adjoint { p.adjoint() } else { p.clone() },
                trace.dtau,
            )?;
            let state = evolve(start, &gate, &mut trace, args.max_steps)?;
            (state, trace)
        }
    };

    let target_mu = if args.adjoint { 1.0 / args.mu } else { args.mu };
    let target = asymmetric_aklt(target_mu)?;
    let uniform = state.to_uniform()?;
    let report = ItebdReport {
        mu: args.mu,
        k: args.k,
        adjoint: args.adjoint,
        target_mu,
        steps: trace.steps,
        converged: trace.converged,
        final_e: trace.e_history.last().copied(),
        infidelity: infidelity_per_site(&target, &uniform, args.k)?,
        entanglement: entanglement_spectrum(&uniform)?,
        target_entanglement: entanglement_spectrum(&target)?,
    };
    let meta = Meta::new(
        "itebd",
        args,
        vec![("e_tol", args.etol), ("weight_floor", WEIGHT_FLOOR)],
    );
    let out = OutputDir::create(&args.out)?;
    out.json(
        "checkpoint.json",
        &meta,
        &Checkpoint::new(&state, &trace, args.adjoint),
    )?;
    out.json(
        "entanglement.json",
        &meta,
        &EntanglementFile::squared_schmidt(args.mu, report.entanglement.clone()),
    )?;
    out.json("itebd.json", &meta, &report)?;
    if !trace.converged {
        return Err(CliError::NotConverged(format!(
            "e above {:e} after {} steps, infidelity {:.3e}",
            args.etol, trace.steps, report.infidelity
        )));
    }
    Ok(())
}
