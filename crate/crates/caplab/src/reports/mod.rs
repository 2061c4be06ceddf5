//! Persistence, figures and the commands behind the `caplab` binary.
//!
//! Every command computes first and writes last: results are staged in an
//! [`io::OutputSet`] and committed only when nothing failed, so an error exit leaves no
//! partial files. Exit codes: 1 verification failure or generic error, 2 no contact,
//! 3 singular input, 4 spectral truncation, 5 file I/O.

pub mod io;
pub mod suites;
pub mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::conformal_lab::ConformalError;
use crate::polar_dual::{double_dual_check, dual_surface, DualError};
use crate::rotational_solver::{
    self, catenoid_contact, catenoid_generator, solve_r0, solve_target_radius, sweep_family, Branch, ProfileSolution,
    SolverError, DEFAULT_TOL,
};
use crate::spectral::{index_nullity, index_nullity_adaptive, Form, SpectralError, SpectralProblem};
use crate::surface_analysis::{build_annulus, build_from_generator, RotationalAnnulus, SurfaceError};
use io::{GeneratorSpec, IoError, Manifest, OutputSet, SurfaceHeader};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("verification failed: {check}")]
    VerifyFailed { check: String, report: String },
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let solver = |e: &SolverError| match e {
            SolverError::NoContact { .. } => 2,
            SolverError::Singularity(_) => 3,
            _ => 1,
        };
        match self {
            CliError::Solver(e) => solver(e),
            CliError::Surface(SurfaceError::Solver(e)) => solver(e),
            CliError::Spectral(SpectralError::Truncation { .. }) => 4,
            CliError::Spectral(SpectralError::Solver(e)) => solver(e),
            CliError::Io(_) => 5,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "caplab", version, about = "Rotational minimal annuli in spherical caps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one free-boundary annulus and export it.
    Solve(SolveArgs),
    /// Sweep the family over neck radii.
    Sweep(SweepArgs),
    /// Build and export the polar dual of an annulus.
    Dual(DualArgs),
    /// Index and nullity of QS or QA.
    Spectrum(SpectrumArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Profile panels of five annuli and their duals.
    Figure1(Figure1Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Rising,
    Falling,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Rising => Branch::Rising,
            BranchArg::Falling => Branch::Falling,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Neck radius of the profile.
    #[arg(long, conflicts_with = "target_r")]
    pub r0: Option<f64>,
    /// Cap radius to hit; solved by bracketing on the sweep.
    #[arg(long = "target-R", id = "target_r")]
    pub target_r: Option<f64>,
    #[arg(long, value_enum, default_value = "rising")]
    pub branch: BranchArg,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 256)]
    pub n_t: usize,
    #[arg(long, default_value_t = 32)]
    pub n_s: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = rotational_solver::R0_MIN + 1e-3)]
    pub lo: f64,
    #[arg(long, default_value_t = rotational_solver::R0_MAX - 1e-4)]
    pub hi: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DualArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Surface header (.json) or lattice (.csv) written by `solve`.
    #[arg(long, conflicts_with_all = ["r0", "target_r"])]
    pub surface: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub n_t: usize,
    #[arg(long, default_value_t = 32)]
    pub n_s: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    #[value(name = "QS")]
    Qs,
    #[value(name = "QA")]
    Qa,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    /// Surface header (.json) or lattice (.csv) written by `solve`.
    #[arg(long, required_unless_present_any = ["r0", "catenoid"])]
    pub surface: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["surface", "catenoid"])]
    pub r0: Option<f64>,
    /// Use the critical catenoid in the Euclidean unit ball.
    #[arg(long, conflicts_with = "surface")]
    pub catenoid: bool,
    #[arg(long, value_enum, default_value = "QS")]
    pub form: FormArg,
    #[arg(long, default_value_t = 8)]
    pub modes: u32,
    #[arg(long, default_value_t = 256)]
    pub nodes: usize,
    /// Raise the truncation until the top mode is clearly positive.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long)]
    pub zero_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Boundary,
    Hopf,
    Dual,
    Conformal,
    Foliation,
    Orthogonality,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Seed for randomized suites; falls back to CAPLAB_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Figure1Args {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub n_t: usize,
}

/// Runs a parsed command and returns the JSON summary printed on stdout.
pub fn run(cli: &Cli, argv: &[String]) -> Result<String, CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, argv),
        Command::Sweep(a) => cmd_sweep(a, argv),
        Command::Dual(a) => cmd_dual(a, argv),
        Command::Spectrum(a) => cmd_spectrum(a, argv),
        Command::Verify(a) => cmd_verify(a, argv),
        Command::Figure1(a) => cmd_figure1(a, argv),
    }
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("summary serialises")
}

fn solve_source(src: &SourceArgs) -> Result<(ProfileSolution, rotational_solver::ContactData), CliError> {
    match (src.r0, src.target_r) {
        (Some(r0), None) => Ok(solve_r0(r0, src.tol)?),
        (None, Some(t)) => {
            let (p, c) = solve_target_radius(t, src.branch.into(), src.tol)?;
            if (c.params.r - t).abs() > 1e-6 {
                return Err(CliError::Solver(SolverError::InconsistentContact(format!(
                    "target R = {t} reached only to {}",
                    c.params.r
                ))));
            }
            Ok((p, c))
        }
        _ => Err(CliError::Usage("give exactly one of --r0 and --target-R".into())),
    }
}

/// Stages `surface.csv` and `surface.json` for an annulus and returns the header.
fn stage_surface(
    set: &mut OutputSet,
    annulus: &RotationalAnnulus,
    generator: GeneratorSpec,
) -> Result<SurfaceHeader, CliError> {
    let csv = io::lattice_csv(&annulus.surface)?;
    let header = SurfaceHeader {
        generator,
        contact: annulus.contact,
        grid: annulus.surface.grid.into(),
        meta: annulus.meta,
        lattice_file: "surface.csv".into(),
        lattice_sha256: io::sha256_hex(&csv),
    };
    set.add("surface.csv", csv, "lattice-csv: s,t,x0,x1,x2,x3,nu0,nu1,nu2,nu3");
    set.add_json("surface.json", &header, "surface-header-json")?;
    Ok(header)
}

pub fn cmd_solve(a: &SolveArgs, argv: &[String]) -> Result<String, CliError> {
    let (profile, contact) = solve_source(&a.source)?;
    let annulus = build_annulus(&profile, &contact, a.n_t, a.n_s)?;
    let mut set = OutputSet::default();
    set.add("profile.csv", io::profile_csv(&profile.t_grid, &profile.r, &profile.rp)?, "profile-csv: t,r,rp");
    stage_surface(&mut set, &annulus, GeneratorSpec::Profile { r0: profile.r0, tol: a.source.tol })?;
    let summary = json!({
        "r0": profile.r0,
        "R": contact.params.r,
        "gamma": contact.params.gamma,
        "epsilon": contact.params.epsilon,
        "t_plus": contact.t_plus,
        "a_eta_eta": contact.a_eta_eta,
    });
    set.add_json("contact.json", &summary, "contact-json")?;
    let mut m = Manifest::new("solve", argv);
    m.tolerances.insert("tol".into(), a.source.tol);
    m.residuals.insert("fd_deviation".into(), annulus.meta.fd_deviation);
    m.residuals.insert("max_mean_curvature".into(), annulus.meta.max_mean_curvature);
    m.residuals.insert("x0_boundary".into(), contact.x0_boundary);
    set.commit(&a.out, m)?;
    Ok(pretty(&summary))
}

pub fn cmd_sweep(a: &SweepArgs, argv: &[String]) -> Result<String, CliError> {
    if a.n == 0 || !(a.lo < a.hi) {
        return Err(CliError::Usage(format!("empty sweep: n = {}, [{}, {}]", a.n, a.lo, a.hi)));
    }
    let table = sweep_family(&rotational_solver::r0_grid(a.lo, a.hi, a.n), a.tol);
    let failures = table.rows.iter().filter(|r| r.r.is_none()).count();
    let summary = json!({
        "count": table.rows.len(),
        "failures": failures,
        "R_bar": table.r_bar.map(|(r, _)| r),
        "r0_at_R_bar": table.r_bar.map(|(_, r0)| r0),
        "R_bar_exceeds_half_pi": table.r_bar.map(|(r, _)| r > FRAC_PI_2),
    });
    let mut set = OutputSet::default();
    set.add("sweep.csv", io::sweep_csv(&table)?, "sweep-csv: r0,R,t_plus,status");
    set.add_json("sweep.json", &summary, "sweep-summary-json")?;
    let mut m = Manifest::new("sweep", argv);
    m.tolerances.insert("tol".into(), a.tol);
    if let Some((r, _)) = table.r_bar {
        m.residuals.insert("R_bar".into(), r);
    }
    set.commit(&a.out, m)?;
    Ok(pretty(&summary))
}

/// Rebuilds an annulus from a surface header (or a lattice CSV with its sibling header).
pub fn load_surface(path: &Path) -> Result<(RotationalAnnulus, SurfaceHeader), CliError> {
    let header_path =
        if path.extension().is_some_and(|e| e == "csv") { path.with_extension("json") } else { path.to_path_buf() };
    let header: SurfaceHeader = serde_json::from_slice(&io::read(&header_path)?).map_err(IoError::from)?;
    let g = header.grid;
    let annulus = match header.generator {
        GeneratorSpec::Profile { r0, tol } => {
            let (p, c) = solve_r0(r0, tol)?;
            build_annulus(&p, &c, g.n_t, g.n_s)?
        }
        GeneratorSpec::Catenoid => {
            let gen = catenoid_generator();
            let c = catenoid_contact(&gen);
            build_from_generator(gen, c, g.n_t, g.n_s)?
        }
    };
    let drift = (annulus.contact.params.r - header.contact.params.r).abs();
    if drift > 1e-9 {
        return Err(CliError::Io(IoError::Format {
            path: header_path.display().to_string(),
            msg: format!("regenerated R differs from the header by {drift:e}"),
        }));
    }
    Ok((annulus, header))
}

pub fn cmd_dual(a: &DualArgs, argv: &[String]) -> Result<String, CliError> {
    let mut set = OutputSet::default();
    let mut base_manifest = None;
    let (annulus, base_header) = match &a.surface {
        Some(path) => {
            let (ann, h) = load_surface(path)?;
            let sibling = path.with_file_name("manifest.json");
            base_manifest = io::read(&sibling).ok().map(|b| io::sha256_hex(&b));
            (ann, h)
        }
        None => {
            let (p, c) = solve_source(&a.source)?;
            let ann = build_annulus(&p, &c, a.n_t, a.n_s)?;
            let h = stage_surface(&mut set, &ann, GeneratorSpec::Profile { r0: p.r0, tol: a.source.tol })?;
            (ann, h)
        }
    };
    let dual = dual_surface(&annulus)?;
    let base_header_sha256 = io::sha256_hex(&serde_json::to_vec_pretty(&base_header).map_err(IoError::from)?);
    let csv = io::lattice_csv(&dual.surface)?;
    let residuals = json!({
        "boundary_radius": dual.boundary_radius_residual(),
        "psi_product": dual.psi_product_residual(),
        "double_dual": double_dual_check(&dual),
        "normal": dual.normal_residual,
        "metric_fd4": dual.metric_residual(crate::lattice::Stencil::Fourth),
        "minimality_fd4": dual.minimality_residual(crate::lattice::Stencil::Fourth),
    });
    let header = json!({
        "base_params": annulus.contact.params,
        "dual_params": dual.params,
        "measured": dual.measured,
        "sign": dual.sign,
        "residuals": residuals,
        "lattice_file": "dual.csv",
        "lattice_sha256": io::sha256_hex(&csv),
        "base_header_sha256": base_header_sha256,
        "base_manifest_sha256": base_manifest,
    });
    set.add("dual.csv", csv, "lattice-csv: s,t,x0,x1,x2,x3,nu0,nu1,nu2,nu3");
    set.add_json("dual.json", &header, "dual-header-json")?;
    let mut m = Manifest::new("dual", argv);
    if let Some(h) = &base_manifest {
        m.input_hashes.insert("base_manifest".into(), h.clone());
    }
    for (k, v) in residuals.as_object().expect("object") {
        m.residuals.insert(k.clone(), v.as_f64().unwrap_or(f64::NAN));
    }
    set.commit(&a.out, m)?;
    Ok(pretty(&header))
}

pub fn cmd_spectrum(a: &SpectrumArgs, argv: &[String]) -> Result<String, CliError> {
    let annulus = if a.catenoid {
        crate::rotational_solver::critical_catenoid_with(64, 16)
    } else if let Some(r0) = a.r0 {
        let (p, c) = solve_r0(r0, DEFAULT_TOL)?;
        build_annulus(&p, &c, 64, 16)?
    } else {
        let path = a.surface.as_ref().ok_or_else(|| CliError::Usage("--surface, --r0 or --catenoid".into()))?;
        load_surface(path)?.0
    };
    let form = match a.form {
        FormArg::Qs => Form::QS,
        FormArg::Qa => Form::QA,
    };
    let mut problem = SpectralProblem::new(&annulus, form, a.modes, a.nodes)?;
    problem.zero_tol = a.zero_tol;
    let report = if a.adaptive { index_nullity_adaptive(&problem)? } else { index_nullity(&problem)? };
    let text = pretty(&report);
    if let Some(out) = &a.out {
        let mut set = OutputSet::default();
        set.add_json("spectrum.json", &report, "spectral-report-json")?;
        let mut m = Manifest::new("spectrum", argv);
        m.tolerances.insert("zero_tol".into(), report.zero_tol);
        set.commit(out, m)?;
    }
    Ok(text)
}

/// Seed precedence: flag, then `CAPLAB_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("CAPLAB_SEED").ok().and_then(|s| s.trim().parse().ok())).unwrap_or(0)
}

pub fn cmd_verify(a: &VerifyArgs, argv: &[String]) -> Result<String, CliError> {
    let seed = resolve_seed(a.seed);
    let checks = suites::run_suite(a.suite, seed)?;
    let pass = checks.iter().all(|c| c.verdict);
    let summary = json!({ "suite": a.suite, "seed": seed, "pass": pass, "checks": checks });
    let text = pretty(&summary);
    if let Some(out) = &a.out {
        let mut set = OutputSet::default();
        set.add_json("verify.json", &summary, "verify-json")?;
        let mut m = Manifest::new("verify", argv);
        m.seed = Some(seed);
        set.commit(out, m)?;
    }
    match checks.iter().find(|c| !c.verdict) {
        Some(c) => Err(CliError::VerifyFailed { check: c.check.clone(), report: text }),
        None => Ok(text),
    }
}

/// Figure targets in caption order with their branch of `r0 ↦ R`.
pub const FIGURE1_TARGETS: [(f64, Branch); 5] = [
    (0.22, Branch::Rising),
    (0.98, Branch::Rising),
    (FRAC_PI_2, Branch::Rising),
    (1.95, Branch::Falling),
    (1.84, Branch::Falling),
];

pub fn cmd_figure1(a: &Figure1Args, argv: &[String]) -> Result<String, CliError> {
    use rayon::prelude::*;
    let solved: Vec<_> = FIGURE1_TARGETS
        .par_iter()
        .map(|&(target, branch)| -> Result<_, CliError> {
            let (p, c) = solve_target_radius(target, branch, DEFAULT_TOL)
                .map_err(|_| SolverError::NoContact { t_max: rotational_solver::DEFAULT_T_MAX })?;
            let annulus = build_annulus(&p, &c, a.n_t, 16)?;
            let dual = dual_surface(&annulus)?;
            Ok((target, branch, p.r0, annulus, dual))
        })
        .collect::<Result<_, _>>()?;
    let mut set = OutputSet::default();
    let mut panels = Vec::new();
    for (i, (target, branch, r0, annulus, dual)) in solved.iter().enumerate() {
        let column = |pts: &[[f64; 4]], grid: &crate::lattice::Grid| -> Vec<(f64, f64)> {
            (0..grid.rows())
                .map(|row| {
                    let x = pts[grid.idx(row, 0)];
                    (x[0], x[1])
                })
                .collect()
        };
        let r = annulus.contact.params.r;
        let top = svg::Panel {
            title: format!("free-boundary annulus, R = {r:.4}"),
            chord: r.cos(),
            curve: column(&annulus.surface.points, &annulus.surface.grid),
            notes: vec![format!("R = {r:.6}  r0 = {r0:.6}  branch = {branch:?}")],
        };
        let dp = dual.params;
        let bottom = svg::Panel {
            title: format!("polar dual, R~ = {:.4}", dp.r),
            chord: dp.r.cos(),
            curve: column(&dual.surface.points, &dual.surface.grid),
            notes: vec![
                format!("R~ = {:.6}  gamma~ = {:.6}", dp.r, dp.gamma),
                format!("min(R, pi - R) = {:.6}", r.min(PI - r)),
            ],
        };
        let (tn, bn) = (format!("panel{}_top.svg", i + 1), format!("panel{}_bottom.svg", i + 1));
        set.add(&tn, svg::render(&top).into_bytes(), "svg-1.1");
        set.add(&bn, svg::render(&bottom).into_bytes(), "svg-1.1");
        panels.push(json!({
            "target_R": target, "R": r, "r0": r0, "branch": branch,
            "dual_R": dp.r, "dual_gamma": dp.gamma, "top": tn, "bottom": bn,
        }));
    }
    let index = json!({
        "convention": "panels show the s = 0 slice in the (x0, x1) plane with x0 pointing right; caps are centred at e0 on the right; dashed chord is the cap boundary x0 = cos R",
        "panels": panels,
    });
    set.add_json("index.json", &index, "figure-index-json")?;
    set.commit(&a.out, Manifest::new("figure1", argv))?;
    Ok(pretty(&index))
}
