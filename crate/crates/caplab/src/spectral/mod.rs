//! Index forms on rotational annuli.
//!
//! A test function `φ(t) cos ks` (or `sin ks`) reduces either form to a Sturm–Liouville
//! problem in `t`:
//!
//! `Q_k(φ) = ∫ (p φ′² + W_k φ²) dt − Σ_∂ q √g_ss φ²`,  `p = √(g_ss/g_tt)`,
//! `W_k = k² √(g_tt/g_ss) − V √(g_tt g_ss)`,
//!
//! with `V = 2κ` for the modified Dirichlet form and `V = |A|² + 2κ` for the Jacobi form.
//! Each mode is discretised with linear elements and a lumped (trapezoid) mass, which is the
//! second-order ghost-node Robin closure in disguise. Inertia comes from Sturm counts, so the
//! index and nullity are exact for the discrete problem.
//!
//! The residual checks (coordinate kernel, Jacobi fields from Killing fields and the
//! conformal/weighted operator identity) run on the full lattice instead.

pub mod tridiag;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

use crate::lattice::{self, Grid, SampledSurface, SpectralS, Stencil};
use crate::rotational_solver::{Ambient, SolverError};
use crate::sphere_geometry::{conformal_dilation, ct_coefficient, GeometryError, SpherePoint};
use crate::surface_analysis::RotationalAnnulus;
use crate::vec::{self, Vec4};
use tridiag::SymTridiag;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("mode {k} still has eigenvalue {min_eigenvalue:e} <= zero_tol; raise the Fourier truncation")]
    Truncation { k: u32, min_eigenvalue: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    /// Modified Dirichlet (Steklov-type) form.
    QS,
    /// Second variation of the wetting energy.
    QA,
}

impl std::str::FromStr for Form {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "QS" | "qs" => Ok(Form::QS),
            "QA" | "qa" => Ok(Form::QA),
            other => Err(format!("unknown form {other:?}; expected QS or QA")),
        }
    }
}

/// Robin coefficient of the Jacobi form: `q = k_S/sin γ − cot γ·A(η,η)` with `k_S = ct_κ(R)`.
pub fn qa_robin(kappa: f64, r: f64, gamma: f64, a_eta_eta: f64) -> Result<f64, GeometryError> {
    let ks = ct_coefficient(kappa, r)?;
    Ok(ks / gamma.sin() - gamma.cos() / gamma.sin() * a_eta_eta)
}

#[derive(Debug, Clone)]
pub struct SpectralProblem<'a> {
    pub surface: &'a RotationalAnnulus,
    pub form: Form,
    pub kappa: f64,
    /// Robin coefficients at `(−t_plus, +t_plus)`.
    pub robin: [f64; 2],
    pub mode_max: u32,
    pub n_nodes: usize,
    /// Overrides the default `1e-3·max(1, |λ_min of mode 0|)`.
    pub zero_tol: Option<f64>,
}

impl<'a> SpectralProblem<'a> {
    pub fn new(
        surface: &'a RotationalAnnulus,
        form: Form,
        mode_max: u32,
        n_nodes: usize,
    ) -> Result<Self, SpectralError> {
        if n_nodes < 8 {
            return Err(SpectralError::InvalidInput(format!("n_nodes = {n_nodes} < 8")));
        }
        let kappa = surface.surface.ambient.kappa();
        let p = surface.contact.params;
        let robin = match form {
            Form::QS => {
                let c = ct_coefficient(kappa, p.r)?;
                [c, c]
            }
            Form::QA => {
                let [plus, minus] = surface.contact.a_eta_eta;
                [qa_robin(kappa, p.r, p.gamma, minus)?, qa_robin(kappa, p.r, p.gamma, plus)?]
            }
        };
        Ok(Self { surface, form, kappa, robin, mode_max, n_nodes, zero_tol: None })
    }
}

/// One Fourier mode: `K u = λ M u` with lumped `M`, plus its symmetric scaling.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub k: u32,
    pub t: Vec<f64>,
    pub mass: Vec<f64>,
    /// Stiffness diagonal, upper and lower off-diagonals.
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    /// `M^{-1/2} K M^{-1/2}`.
    pub scaled: SymTridiag,
}

impl ModeOperator {
    pub fn asymmetry(&self) -> f64 {
        self.upper.iter().zip(&self.lower).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Rayleigh quotient `uᵀKu / uᵀMu`.
    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        let n = u.len();
        let mut num = 0.0;
        for i in 0..n {
            num += self.diag[i] * u[i] * u[i];
            if i + 1 < n {
                num += 2.0 * self.upper[i] * u[i] * u[i + 1];
            }
        }
        num / u.iter().zip(&self.mass).map(|(a, m)| a * a * m).sum::<f64>()
    }
}

/// Per-node coefficients `(g_tt, g_ss, |A|²)` on `n_nodes + 1` uniform nodes.
fn coefficients(surface: &RotationalAnnulus, n_nodes: usize) -> Result<(Vec<f64>, Vec<[f64; 3]>), SpectralError> {
    let tp = surface.contact.t_plus;
    let ts: Vec<f64> =
        (0..=n_nodes).map(|i| if i == n_nodes { tp } else { -tp + 2.0 * tp * i as f64 / n_nodes as f64 }).collect();
    let lgs = surface.generator.lattice(&ts, &[0.0])?;
    let mut out = Vec::with_capacity(lgs.len());
    for lg in &lgs {
        let off = vec::dot(&lg.x_t, &lg.x_s).abs();
        if off > 1e-10 {
            return Err(SpectralError::Assembly(format!("metric is not diagonal: |g_ts| = {off:e}")));
        }
        out.push([lg.g_tt, lg.g_ss, lg.norm_a_sq()]);
    }
    Ok((ts, out))
}

pub fn assemble(problem: &SpectralProblem, k: u32) -> Result<ModeOperator, SpectralError> {
    if k > problem.mode_max {
        return Err(SpectralError::InvalidInput(format!("mode {k} > mode_max {}", problem.mode_max)));
    }
    let (t, coef) = coefficients(problem.surface, problem.n_nodes)?;
    Ok(assemble_from(problem, k, t, &coef))
}

fn assemble_from(problem: &SpectralProblem, k: u32, t: Vec<f64>, coef: &[[f64; 3]]) -> ModeOperator {
    let n = coef.len();
    let h = (t[n - 1] - t[0]) / (n - 1) as f64;
    let kk = f64::from(k * k);
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];
    let mut lower = vec![0.0; n - 1];
    let mut mass = vec![0.0; n];
    let p: Vec<f64> = coef.iter().map(|c| (c[1] / c[0]).sqrt()).collect();
    for i in 0..n - 1 {
        let pe = 0.5 * (p[i] + p[i + 1]) / h;
        diag[i] += pe;
        diag[i + 1] += pe;
        upper[i] -= pe;
        lower[i] -= pe;
    }
    for i in 0..n {
        let [gtt, gss, a2] = coef[i];
        let v = match problem.form {
            Form::QS => 2.0 * problem.kappa,
            Form::QA => a2 + 2.0 * problem.kappa,
        };
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        diag[i] += w * (kk * (gtt / gss).sqrt() - v * (gtt * gss).sqrt());
        mass[i] = w * (gtt * gss).sqrt();
    }
    diag[0] -= problem.robin[0] * coef[0][1].sqrt();
    diag[n - 1] -= problem.robin[1] * coef[n - 1][1].sqrt();
    let d: Vec<f64> = (0..n).map(|i| diag[i] / mass[i]).collect();
    let e: Vec<f64> = (0..n - 1).map(|i| upper[i] / (mass[i] * mass[i + 1]).sqrt()).collect();
    ModeOperator { k, t, mass, diag, upper, lower, scaled: SymTridiag::new(d, e) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub k: u32,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub form: Form,
    pub kappa: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub gamma: f64,
    pub modes: Vec<ModeSpectrum>,
    pub ind: usize,
    pub nul: usize,
    pub ind0: usize,
    pub zero_tol: f64,
    pub n_nodes: usize,
    pub mode_max: u32,
    /// Smallest eigenvalue per mode is nondecreasing in `k`.
    pub monotone: bool,
}

/// Number of eigenvalues reported per mode beyond those at or below `zero_tol`.
const REPORTED: usize = 6;

/// Bisection resolves eigenvalues to a few ulps of the operator norm; this leaves headroom.
const ROUNDOFF_ULPS: f64 = 1e3;

fn mode_eigs(
    problem: &SpectralProblem,
    n_nodes: usize,
    zero_tol_hint: Option<f64>,
) -> Result<Vec<(ModeOperator, Vec<f64>)>, SpectralError> {
    let (t, coef) = coefficients(problem.surface, n_nodes)?;
    let sub = SpectralProblem { n_nodes, ..problem.clone() };
    (0..=problem.mode_max)
        .into_par_iter()
        .map(|k| {
            let op = assemble_from(&sub, k, t.clone(), &coef);
            let below = zero_tol_hint.map_or(0, |z| op.scaled.count_below(z.max(0.0) * 1.01 + 1e-300));
            let ev = op.scaled.lowest(below + REPORTED);
            Ok((op, ev))
        })
        .collect()
}

/// Index, nullity and per-mode spectra at the problem's truncation.
///
/// An eigenvalue counts as null when `|λ| < zero_tol` and halving the node count moves it
/// away from zero by at least a first-order factor, or it sits at the roundoff floor
/// `ROUNDOFF_ULPS · ε · ‖A‖` of the scaled operator (kernels the elements represent exactly).
pub fn index_nullity(problem: &SpectralProblem) -> Result<SpectralReport, SpectralError> {
    let probe = mode_eigs(problem, problem.n_nodes, None)?;
    let zero_tol = problem.zero_tol.unwrap_or_else(|| 1e-3 * probe[0].1[0].abs().max(1.0));
    let fine = mode_eigs(problem, problem.n_nodes, Some(zero_tol))?;
    let coarse = mode_eigs(problem, (problem.n_nodes / 2).max(8), Some(zero_tol))?;
    let (mut ind, mut nul) = (0, 0);
    let mut modes = Vec::new();
    for ((op, ev), (_, evc)) in fine.iter().zip(&coarse) {
        let mult = if op.k == 0 { 1 } else { 2 };
        let (lo, hi) = op.scaled.bounds();
        let floor = ROUNDOFF_ULPS * f64::EPSILON * lo.abs().max(hi.abs());
        for (j, &l) in ev.iter().enumerate() {
            if l >= zero_tol {
                break;
            }
            let lc = evc.get(j).copied().unwrap_or(f64::MAX);
            let converging = l.abs() < floor || l.abs() <= 0.75 * lc.abs();
            if l.abs() < zero_tol && converging {
                nul += mult;
            } else if l < 0.0 {
                ind += mult;
            }
        }
        modes.push(ModeSpectrum { k: op.k, eigenvalues: ev.clone() });
    }
    let top = modes.last().expect("at least mode 0");
    if top.eigenvalues[0] <= zero_tol {
        return Err(SpectralError::Truncation { k: top.k, min_eigenvalue: top.eigenvalues[0] });
    }
    let monotone = modes.windows(2).all(|w| w[1].eigenvalues[0] >= w[0].eigenvalues[0] - 1e-12);
    let p = problem.surface.contact.params;
    Ok(SpectralReport {
        form: problem.form,
        kappa: problem.kappa,
        r: p.r,
        gamma: p.gamma,
        modes,
        ind,
        nul,
        ind0: ind + nul,
        zero_tol,
        n_nodes: problem.n_nodes,
        mode_max: problem.mode_max,
        monotone,
    })
}

/// Raises the truncation until the top mode's smallest eigenvalue exceeds 1, then reports.
pub fn index_nullity_adaptive(problem: &SpectralProblem) -> Result<SpectralReport, SpectralError> {
    let (t, coef) = coefficients(problem.surface, problem.n_nodes)?;
    let mut k = problem.mode_max.max(1);
    loop {
        let op = assemble_from(&SpectralProblem { mode_max: k, ..problem.clone() }, k, t.clone(), &coef);
        if op.scaled.eigenvalue(0) > 1.0 {
            break;
        }
        if k >= 512 {
            return Err(SpectralError::Truncation { k, min_eigenvalue: op.scaled.eigenvalue(0) });
        }
        k += 1;
    }
    index_nullity(&SpectralProblem { mode_max: k, ..problem.clone() })
}

/// `|⟨φ, v⟩_M| / (‖φ‖_M ‖v‖_M)` between the mode-1 Jacobi-form eigenvector nearest zero and the
/// `t`-profile of each transverse Killing Jacobi field.
pub fn qa_kernel_overlaps(surface: &RotationalAnnulus, n_nodes: usize) -> Result<(f64, [f64; 2]), SpectralError> {
    let problem = SpectralProblem::new(surface, Form::QA, 1, n_nodes)?;
    let op = assemble(&problem, 1)?;
    let n = op.t.len();
    let ev = op.scaled.lowest(n.min(12));
    let lambda = ev.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).expect("nonempty");
    // Eigenvector of the scaled problem is M^{1/2} v.
    let y = op.scaled.eigenvector(lambda);
    let ts = op.t.clone();
    let mut overlaps = [0.0; 2];
    for (slot, (rot, s)) in [(Rotation::E1E2, 0.0), (Rotation::E1E3, FRAC_PI_2)].into_iter().enumerate() {
        let lgs = surface.generator.lattice(&ts, &[s])?;
        let phi: Vec<f64> = lgs.iter().map(|lg| killing_normal(rot, &lg.x, &lg.nu)).collect();
        let z: Vec<f64> = phi.iter().zip(&op.mass).map(|(a, m)| a * m.sqrt()).collect();
        let dot: f64 = z.iter().zip(&y).map(|(a, b)| a * b).sum();
        let nz = z.iter().map(|a| a * a).sum::<f64>().sqrt();
        overlaps[slot] = dot.abs() / nz;
    }
    Ok((lambda, overlaps))
}

/// Rotation generators fixing `e₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    E1E2,
    E1E3,
    /// The annulus's own symmetry.
    E2E3,
}

impl Rotation {
    pub fn planes(self) -> (usize, usize) {
        match self {
            Rotation::E1E2 => (1, 2),
            Rotation::E1E3 => (1, 3),
            Rotation::E2E3 => (2, 3),
        }
    }

    pub fn all() -> [Rotation; 3] {
        [Rotation::E1E2, Rotation::E1E3, Rotation::E2E3]
    }
}

/// `⟨Kx, ν⟩` for `K = e_a ∧ e_b`, i.e. `Kx = x_a e_b − x_b e_a`.
pub fn killing_normal(rot: Rotation, x: &Vec4, nu: &Vec4) -> f64 {
    let (a, b) = rot.planes();
    x[a] * nu[b] - x[b] * nu[a]
}

/// Interior sup of `L u` and boundary sup of `∂_η u − q u` for a lattice field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPair {
    pub interior: f64,
    pub boundary: f64,
}

impl ResidualPair {
    pub fn max(&self) -> f64 {
        self.interior.max(self.boundary)
    }
}

fn operator_residual(
    s: &SampledSurface,
    u: &[f64],
    potential: &dyn Fn(usize) -> f64,
    robin: [f64; 2],
    st: Stencil,
) -> ResidualPair {
    let grid = &s.grid;
    let spec = SpectralS::new(grid.n_s);
    let lap = lattice::laplacian_diag(grid, &spec, &s.g_tt, &s.g_ss, u);
    let mut interior: f64 = 0.0;
    for i in 1..grid.n_t {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            interior = interior.max((lap[k] + potential(k) * u[k]).abs());
        }
    }
    let (lo, hi) = lattice::conormal_derivative(grid, &s.g_tt, u, st);
    let mut boundary: f64 = 0.0;
    for j in 0..grid.n_s {
        boundary = boundary.max((lo[j] - robin[0] * u[grid.idx(0, j)]).abs());
        boundary = boundary.max((hi[j] - robin[1] * u[grid.idx(grid.n_t, j)]).abs());
    }
    ResidualPair { interior, boundary }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateKernelReport {
    /// Residual pair for each coordinate `x₀..x₃`.
    pub per_coordinate: [ResidualPair; 4],
}

impl CoordinateKernelReport {
    /// Max over the kernel coordinates `x₁, x₂, x₃`.
    pub fn kernel_max(&self) -> f64 {
        self.per_coordinate[1..].iter().map(ResidualPair::max).fold(0.0, f64::max)
    }
}

/// Residuals of `(Δ + 2κ)x_i = 0` and `∂_η x_i = ct_κ(R) x_i`.
pub fn coordinate_kernel_residual(
    surface: &RotationalAnnulus,
    st: Stencil,
) -> Result<CoordinateKernelReport, SpectralError> {
    let s = &surface.surface;
    let kappa = s.ambient.kappa();
    let ct = ct_coefficient(kappa, surface.contact.params.r)?;
    let per = std::array::from_fn(|c| {
        let u: Vec<f64> = s.points.iter().map(|x| x[c]).collect();
        operator_residual(s, &u, &|_| 2.0 * kappa, [ct, ct], st)
    });
    Ok(CoordinateKernelReport { per_coordinate: per })
}

/// Residuals of the Jacobi equation for `u = ⟨Kx, ν⟩`.
pub fn jacobi_residual(surface: &RotationalAnnulus, rot: Rotation, st: Stencil) -> Result<ResidualPair, SpectralError> {
    let p = surface.contact.params;
    if (p.gamma - FRAC_PI_2).abs() > 1e-8 {
        return Err(SpectralError::InvalidInput(format!("contact angle {} is not pi/2", p.gamma)));
    }
    let s = &surface.surface;
    let kappa = s.ambient.kappa();
    let [plus, minus] = surface.contact.a_eta_eta;
    let robin = [qa_robin(kappa, p.r, p.gamma, minus)?, qa_robin(kappa, p.r, p.gamma, plus)?];
    let u: Vec<f64> = s.points.iter().zip(&s.normals).map(|(x, n)| killing_normal(rot, x, n)).collect();
    Ok(operator_residual(s, &u, &|k| s.norm_a_sq(k) + 2.0 * kappa, robin, st))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub trials: usize,
    pub max_residual: f64,
    /// Residual for `u ≡ 1`, where only the potentials enter.
    pub constant_residual: f64,
}

/// Random `u = Σ c_{mk} P_m(t/T) trig(ks)`, `m ≤ 3`, `k ≤ 2`, scaled to unit sup-norm.
pub fn random_test_field(grid: &Grid, rng: &mut impl Rng) -> Vec<f64> {
    let tp = grid.t_max;
    let mut coeffs = Vec::new();
    for m in 0..=3 {
        for k in 0..=2u32 {
            coeffs.push((m, k, rng.gen_range(-1.0..1.0), if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) }));
        }
    }
    let mut u: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let (t, s) = (grid.t(idx / grid.n_s), grid.s(idx % grid.n_s));
            let tau = t / tp;
            coeffs
                .iter()
                .map(|&(m, k, a, b)| tau.powi(m) * (a * (f64::from(k) * s).cos() + b * (f64::from(k) * s).sin()))
                .sum()
        })
        .collect();
    let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    u.iter_mut().for_each(|v| *v /= sup);
    u
}

/// The image under the cap dilation of a free-boundary annulus in `B_R`, with lattice geometry.
pub fn dilated_surface(surface: &RotationalAnnulus) -> Result<SampledSurface, SpectralError> {
    if surface.surface.ambient != Ambient::Sphere {
        return Err(SpectralError::InvalidInput("weighted check needs a spherical surface".into()));
    }
    let r = surface.contact.params.r;
    let pts = surface
        .surface
        .points
        .iter()
        .map(|x| Ok(conformal_dilation(r, &SpherePoint::new(*x)?)?.coords()))
        .collect::<Result<Vec<_>, SpectralError>>()?;
    // Fourth order so the one-sided end rows do not leak an O(h) flux error into row 1.
    Ok(lattice::fd_geometry(surface.surface.grid, Ambient::Sphere, pts, None, Stencil::Fourth))
}

/// Both sides of `e^φ L^{g̃}(e^φ u) = L_f u` on the dilated image of `surface` in `B_{π/2}`.
///
/// There `φ = log h_R` with `h_R = 1/(1 + cos R x₀)`, `f = −2φ`, and `(B_{π/2}, e^{2φ}g₁)` has
/// constant curvature `sin²R`, so the image is `f`-minimal. Returns per-node residuals.
pub fn weighted_identity_residuals(image: &SampledSurface, r: f64, u: &[f64]) -> Vec<f64> {
    let grid = &image.grid;
    let spec = SpectralS::new(grid.n_s);
    let c = r.cos();
    let s2 = r.sin().powi(2);
    let phi: Vec<f64> = image.points.iter().map(|x| -(c * x[0]).ln_1p()).collect();
    let f: Vec<f64> = phi.iter().map(|p| -2.0 * p).collect();
    // Δ is linear, so e^{−φ}Δ(e^φ u) − Δu = (e^{−φ} − 1)Δu + e^{−φ}Δ((e^φ − 1)u). Writing it this
    // way keeps the difference free of cancellation between two O(1/h²) lattice Laplacians.
    let w: Vec<f64> = phi.iter().zip(u).map(|(p, v)| p.exp_m1() * v).collect();
    let lap_w = lattice::laplacian_diag_with(grid, &spec, &image.g_tt, &image.g_ss, &w, Stencil::Fourth);
    let lap_u = lattice::laplacian_diag_with(grid, &spec, &image.g_tt, &image.g_ss, u, Stencil::Fourth);
    let (f_t, f_s) = (lattice::d_t(grid, &f, Stencil::Fourth), spec.diff(grid, &f, 1));
    let (u_t, u_s) = (lattice::d_t(grid, u, Stencil::Fourth), spec.diff(grid, u, 1));
    let mut out = vec![0.0; grid.len()];
    for i in 1..grid.n_t {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            let (x0, nu0) = (image.points[k][0], image.normals[k][0]);
            let den = 1.0 + c * x0;
            let phi_nu = -c * nu0 / den;
            let hess_f = -2.0 * c * c * nu0 * nu0 / (den * den) - 2.0 * c * x0 / den;
            let h = image.mean_curvature(k);
            let d = image.det_g(k);
            let grad = (image.g_ss[k] * f_t[k] * u_t[k] + image.g_tt[k] * f_s[k] * u_s[k]
                - image.g_ts[k] * (f_t[k] * u_s[k] + f_s[k] * u_t[k]))
                / d;
            // |A|² enters both sides identically; 2 sin²R e^{2φ} − 2 = 2(sin²R (e^{2φ} − 1) − cos²R).
            let pot = 2.0 * h * phi_nu + 2.0 * phi_nu * phi_nu + 2.0 * (s2 * (2.0 * phi[k]).exp_m1() - c * c) - hess_f;
            out[k] = (-phi[k]).exp_m1() * lap_u[k] + (-phi[k]).exp() * lap_w[k] + grad + pot * u[k];
        }
    }
    out
}

pub fn weighted_operator_check(
    surface: &RotationalAnnulus,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<WeightedReport, SpectralError> {
    let p = surface.contact.params;
    if (p.r - r).abs() > 1e-6 || (p.gamma - FRAC_PI_2).abs() > 1e-8 {
        return Err(SpectralError::InvalidInput(format!(
            "surface is a ({}, {}) annulus; the check needs a free-boundary annulus in B_{r}",
            p.r, p.gamma
        )));
    }
    let image = dilated_surface(surface)?;
    let sup = |v: Vec<f64>| v.into_iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let constant_residual = sup(weighted_identity_residuals(&image, r, &vec![1.0; image.grid.len()]));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<f64>> = (0..trials).map(|_| random_test_field(&image.grid, &mut rng)).collect();
    let max_residual =
        fields.par_iter().map(|u| sup(weighted_identity_residuals(&image, r, u))).reduce(|| 0.0, f64::max);
    Ok(WeightedReport { r, trials, max_residual, constant_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotational_solver::{critical_catenoid_with, solve_r0};
    use crate::surface_analysis::build_annulus;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn annulus(r0: f64, n_t: usize) -> RotationalAnnulus {
        let (p, c) = solve_r0(r0, 1e-11).unwrap();
        build_annulus(&p, &c, n_t, 32).unwrap()
    }

    #[test]
    fn assembly_is_symmetric_and_checks_the_mode_range() {
        let a = annulus(0.6, 64);
        let p = SpectralProblem::new(&a, Form::QA, 4, 128).unwrap();
        for k in 0..=4 {
            assert!(assemble(&p, k).unwrap().asymmetry() < 1e-12);
        }
        assert!(assemble(&p, 5).is_err());
    }

    #[test]
    fn clifford_qs_mode_structure() {
        let a = annulus(FRAC_1_SQRT_2, 64);
        let p = SpectralProblem::new(&a, Form::QS, 8, 256).unwrap();
        let m0 = assemble(&p, 0).unwrap();
        let l0 = m0.scaled.eigenvalue(0);
        assert!(l0 < 0.0);
        // Flat metric with Neumann ends: the ground state is the constant, λ = −2.
        assert!((l0 + 2.0).abs() < 1e-10, "{l0}");
        let y = m0.scaled.eigenvector(l0);
        let x0: Vec<f64> = m0.mass.iter().map(|m| m.sqrt()).collect();
        let nx = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let overlap = x0.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().abs() / nx;
        assert!(overlap > 0.999, "{overlap}");
        assert!(assemble(&p, 1).unwrap().scaled.eigenvalue(0).abs() < 1e-10);
        let r = index_nullity(&p).unwrap();
        assert_eq!((r.ind, r.nul, r.ind0), (1, 3, 4));
        assert!(r.monotone);
    }

    #[test]
    fn clifford_qa_index_and_nullity() {
        // −Δ − 4 on the flat half-torus: ind = 4 (m² + k² < 2), nul = 2 (m = k = 1).
        let a = annulus(FRAC_1_SQRT_2, 64);
        let r = index_nullity(&SpectralProblem::new(&a, Form::QA, 8, 256).unwrap()).unwrap();
        assert_eq!((r.ind, r.nul), (4, 2));
    }

    #[test]
    fn catenoid_qs_index() {
        let c = critical_catenoid_with(64, 16);
        let r = index_nullity(&SpectralProblem::new(&c, Form::QS, 8, 256).unwrap()).unwrap();
        assert_eq!((r.ind, r.nul), (1, 3));
    }

    #[test]
    fn truncation_is_enforced() {
        let a = annulus(FRAC_1_SQRT_2, 64);
        let p = SpectralProblem::new(&a, Form::QS, 1, 128).unwrap();
        assert!(matches!(index_nullity(&p), Err(SpectralError::Truncation { k: 1, .. })));
        let r = index_nullity_adaptive(&p).unwrap();
        assert!(r.mode_max >= 2 && r.modes.last().unwrap().eigenvalues[0] > 1.0);
        assert_eq!(r.ind0, 4);
    }

    #[test]
    fn coordinate_kernel_on_clifford() {
        let a = annulus(FRAC_1_SQRT_2, 512);
        let rep = coordinate_kernel_residual(&a, Stencil::Second).unwrap();
        assert!(rep.kernel_max() < 2e-5, "{rep:?}");
        assert!(rep.per_coordinate[0].boundary > 0.1);
    }

    #[test]
    fn axial_rotation_gives_zero_jacobi_field() {
        let a = annulus(0.6, 64);
        let r = jacobi_residual(&a, Rotation::E2E3, Stencil::Second).unwrap();
        assert!(r.max() < 1e-12);
    }

    #[test]
    fn transverse_jacobi_fields_match_the_null_mode() {
        for r0 in [FRAC_1_SQRT_2, 0.5] {
            let a = annulus(r0, 64);
            let (lambda, ov) = qa_kernel_overlaps(&a, 512).unwrap();
            assert!(lambda.abs() < 1e-3, "{lambda}");
            assert!(ov[0] > 0.999 && ov[1] > 0.999, "{ov:?}");
        }
    }

    #[test]
    fn weighted_identity_is_exact_at_the_equator() {
        let a = annulus(FRAC_1_SQRT_2, 128);
        let w = weighted_operator_check(&a, a.contact.params.r, 5, 1).unwrap();
        assert!(w.max_residual < 1e-12 && w.constant_residual < 1e-12, "{w:?}");
    }

    #[test]
    fn weighted_check_rejects_mismatched_radius() {
        let a = annulus(0.6, 64);
        assert!(weighted_operator_check(&a, 0.3, 1, 0).is_err());
    }
}
