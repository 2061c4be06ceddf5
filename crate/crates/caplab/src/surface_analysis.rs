//! Sampled rotational annuli and the per-surface checks run on them.
//!
//! Geometry on the lattice comes from closed forms of the generator, cross-checked at
//! assembly against lattice differences. The checks cover the boundary relations of a
//! capillary surface, the conormal curvature sign, Hopf constancy, radial-graph and
//! constrained properties, the two-piece slice property, the boundary Green identity,
//! and normal-graph perturbations used as admissible non-minimal test surfaces.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;
use thiserror::Error;

use crate::lattice::{self, Grid, SampledSurface, SpectralS, Stencil};
use crate::rotational_solver::{ContactData, Generator, ProfileSolution, SolverError};
use crate::sphere_geometry::clamped_acos;
use crate::vec::{self, Vec4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("direction must be a unit vector orthogonal to e0: {0}")]
    InvalidDirection(String),
    #[error("slice is degenerate: {fraction:.3} of nodes have |x_a| < 1e-9")]
    DegenerateSlice { fraction: f64 },
    #[error("boundary left the equator by {deviation:e}")]
    ContactLost { deviation: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("A(eta, eta) differs in sign across the boundary ({plus:e} vs {minus:e})")]
    SignMismatch { plus: f64, minus: f64 },
}

/// Assembly diagnostics recorded with every built annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyMeta {
    /// Max deviation of closed-form tangents from lattice differences.
    pub fd_deviation: f64,
    pub max_offdiag_metric: f64,
    pub max_mean_curvature: f64,
    pub max_a_ts: f64,
    pub max_normal_defect: f64,
}

/// A rotational annulus truncated at its contact circles and sampled on a lattice.
#[derive(Debug, Clone)]
pub struct RotationalAnnulus {
    pub generator: Generator,
    pub contact: ContactData,
    pub surface: SampledSurface,
    pub meta: AssemblyMeta,
}

impl RotationalAnnulus {
    pub fn grid(&self) -> &Grid {
        &self.surface.grid
    }

    pub fn profile(&self) -> Option<&ProfileSolution> {
        match &self.generator {
            Generator::Profile(p) => Some(p),
            Generator::Catenoid { .. } => None,
        }
    }

    /// Standard normal sign σ (`σν` meets the cap at angle γ).
    pub fn sigma(&self) -> f64 {
        f64::from(self.contact.normal_sign)
    }

    /// Principal curvature `A_tt/g_tt` at lattice row `i`.
    pub fn kappa_t(&self, i: usize) -> f64 {
        let k = self.grid().idx(i, 0);
        self.surface.a_tt[k] / self.surface.g_tt[k]
    }

    pub fn kappa_s(&self, i: usize) -> f64 {
        let k = self.grid().idx(i, 0);
        self.surface.a_ss[k] / self.surface.g_ss[k]
    }

    /// Resampled copy on another lattice.
    pub fn resample(&self, n_t: usize, n_s: usize) -> Result<Self, SurfaceError> {
        build_from_generator(self.generator.clone(), self.contact, n_t, n_s)
    }
}

/// Samples the profile annulus `|t| ≤ t_plus`.
pub fn build_annulus(
    profile: &ProfileSolution,
    contact: &ContactData,
    n_t: usize,
    n_s: usize,
) -> Result<RotationalAnnulus, SurfaceError> {
    build_from_generator(Generator::Profile(Arc::new(profile.clone())), *contact, n_t, n_s)
}

pub fn build_from_generator(
    generator: Generator,
    contact: ContactData,
    n_t: usize,
    n_s: usize,
) -> Result<RotationalAnnulus, SurfaceError> {
    if n_t < 32 || n_s < 16 {
        return Err(SurfaceError::InvalidLattice(format!("n_t = {n_t} < 32 or n_s = {n_s} < 16")));
    }
    let grid = Grid::new(n_t, n_s, -contact.t_plus, contact.t_plus);
    let n = grid.len();
    let mut s = SampledSurface {
        grid,
        ambient: generator.ambient(),
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        x_t: Vec::with_capacity(n),
        x_s: Vec::with_capacity(n),
        g_tt: Vec::with_capacity(n),
        g_ts: Vec::with_capacity(n),
        g_ss: Vec::with_capacity(n),
        a_tt: Vec::with_capacity(n),
        a_ts: vec![0.0; n],
        a_ss: Vec::with_capacity(n),
    };
    let ts: Vec<f64> = (0..grid.rows()).map(|i| grid.t(i)).collect();
    let ss: Vec<f64> = (0..n_s).map(|j| grid.s(j)).collect();
    for lg in generator.lattice(&ts, &ss)? {
        s.points.push(lg.x);
        s.normals.push(lg.nu);
        s.x_t.push(lg.x_t);
        s.x_s.push(lg.x_s);
        s.g_tt.push(lg.g_tt);
        s.g_ts.push(vec::dot(&lg.x_t, &lg.x_s));
        s.g_ss.push(lg.g_ss);
        s.a_tt.push(lg.a_tt);
        s.a_ss.push(lg.a_ss);
    }
    // A_ts = −⟨ν, ∂_t∂_s x⟩ from the closed-form x_s differenced in t would add noise;
    // rotational symmetry makes ∂_t x_s ∝ f_s, which is orthogonal to ν exactly.
    let meta = assembly_meta(&s);
    Ok(RotationalAnnulus { generator, contact, surface: s, meta })
}

fn assembly_meta(s: &SampledSurface) -> AssemblyMeta {
    let grid = &s.grid;
    let spec = SpectralS::new(grid.n_s);
    let fd_t = lattice::map4(&s.points, |f| lattice::d_t(grid, f, Stencil::Second));
    let fd_s = lattice::map4(&s.points, |f| spec.diff(grid, f, 1));
    let mut m = AssemblyMeta {
        fd_deviation: 0.0,
        max_offdiag_metric: 0.0,
        max_mean_curvature: 0.0,
        max_a_ts: 0.0,
        max_normal_defect: 0.0,
    };
    for k in 0..grid.len() {
        m.fd_deviation = m.fd_deviation.max(vec::dist(&fd_t[k], &s.x_t[k])).max(vec::dist(&fd_s[k], &s.x_s[k]));
        m.max_offdiag_metric = m.max_offdiag_metric.max(s.g_ts[k].abs());
        m.max_mean_curvature = m.max_mean_curvature.max(s.mean_curvature(k).abs());
        m.max_a_ts = m.max_a_ts.max(s.a_ts[k].abs());
        let nu = &s.normals[k];
        let defect = (vec::norm(nu) - 1.0)
            .abs()
            .max(vec::dot(nu, &s.x_t[k]).abs() / s.g_tt[k].sqrt())
            .max(vec::dot(nu, &s.x_s[k]).abs() / s.g_ss[k].sqrt());
        m.max_normal_defect = m.max_normal_defect.max(defect);
    }
    m
}

/// How conormal derivatives are taken in [`boundary_relations_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Closed form via the Weingarten relation `∂_η ν = A(η,η) η`.
    Analytic,
    /// One-sided second-order lattice differences.
    Stencil,
}

/// Max residuals of the capillary boundary relations over both boundary circles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub x0_on_cap: f64,
    pub dx0_conormal: f64,
    pub nu0_angle: f64,
    pub dnu0_conormal: f64,
    /// Only for `R = π/2`: `∂_η⟨ν,a⟩ + cot γ A(η,η)⟨ν,a⟩`, a ∈ {e₁,e₂,e₃}.
    pub nu_a_equator: Option<f64>,
}

impl BoundaryReport {
    pub fn max(&self) -> f64 {
        [self.x0_on_cap, self.dx0_conormal, self.nu0_angle, self.dnu0_conormal, self.nu_a_equator.unwrap_or(0.0)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn boundary_relations_check(surface: &RotationalAnnulus, mode: DerivativeMode) -> BoundaryReport {
    let s = &surface.surface;
    let grid = &s.grid;
    let p = surface.contact.params;
    let (r, g) = (p.r, p.gamma);
    let sigma = surface.sigma();
    let n = grid.n_t;
    let comp = |v: &[Vec4], c: usize| -> Vec<f64> { v.iter().map(|x| x[c]).collect() };
    let snu: Vec<Vec4> = s.normals.iter().map(|v| vec::scale(sigma, v)).collect();
    // Conormal derivatives of ⟨x,e_c⟩ and ⟨σν,e_c⟩ at boundary rows.
    let deriv = |field: &[f64], lattice_vec: &dyn Fn(usize) -> f64| -> (Vec<f64>, Vec<f64>) {
        match mode {
            DerivativeMode::Stencil => lattice::conormal_derivative(grid, &s.g_tt, field, Stencil::Second),
            DerivativeMode::Analytic => {
                let lo = (0..grid.n_s).map(|j| lattice_vec(grid.idx(0, j))).collect();
                let hi = (0..grid.n_s).map(|j| lattice_vec(grid.idx(n, j))).collect();
                (lo, hi)
            }
        }
    };
    let eta = |k: usize| {
        let out = if k < grid.n_s { -1.0 } else { 1.0 };
        vec::scale(out / s.g_tt[k].sqrt(), &s.x_t[k])
    };
    let a_eta = |k: usize| sigma * s.a_tt[k] / s.g_tt[k];
    let x0 = comp(&s.points, 0);
    let nu0 = comp(&snu, 0);
    let (dx0_lo, dx0_hi) = deriv(&x0, &|k| eta(k)[0]);
    let (dn0_lo, dn0_hi) = deriv(&nu0, &|k| a_eta(k) * eta(k)[0]);
    let mut rep =
        BoundaryReport { x0_on_cap: 0.0, dx0_conormal: 0.0, nu0_angle: 0.0, dnu0_conormal: 0.0, nu_a_equator: None };
    let at_equator = (r - FRAC_PI_2).abs() < 1e-8;
    let mut nu_a_max: f64 = 0.0;
    let nu_a: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = if at_equator {
        (1..4)
            .map(|c| {
                let f = comp(&snu, c);
                let (lo, hi) = deriv(&f, &|k| a_eta(k) * eta(k)[c]);
                (f, lo, hi)
            })
            .collect()
    } else {
        Vec::new()
    };
    for (row, dx0, dn0) in [(0usize, &dx0_lo, &dn0_lo), (n, &dx0_hi, &dn0_hi)] {
        for j in 0..grid.n_s {
            let k = grid.idx(row, j);
            let aee = a_eta(k);
            rep.x0_on_cap = rep.x0_on_cap.max((x0[k] - r.cos()).abs());
            rep.dx0_conormal = rep.dx0_conormal.max((dx0[j] + r.sin() * g.sin()).abs());
            rep.nu0_angle = rep.nu0_angle.max((nu0[k] + r.sin() * g.cos()).abs());
            // ∂_η ν₀ = tan γ A(η,η) ν₀; at γ = π/2 use the equivalent ∂_η ν₀ = −sin R sin γ A(η,η).
            let res = if g.cos() > 1e-8 { dn0[j] - g.tan() * aee * nu0[k] } else { dn0[j] + r.sin() * g.sin() * aee };
            rep.dnu0_conormal = rep.dnu0_conormal.max(res.abs());
            for (f, lo, hi) in &nu_a {
                let d = if row == 0 { lo[j] } else { hi[j] };
                let cot = g.cos() / g.sin();
                nu_a_max = nu_a_max.max((d + cot * aee * f[k]).abs());
            }
        }
    }
    if at_equator {
        rep.nu_a_equator = Some(nu_a_max);
    }
    rep
}

/// Which boundary circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Plus,
    Minus,
}

/// `A(η,η)` for the standard normal at the named circle; errors if the circles disagree in sign.
pub fn a_eta_eta(surface: &RotationalAnnulus, boundary: Boundary) -> Result<f64, SurfaceError> {
    let n = surface.grid().n_t;
    let sg = surface.sigma();
    let plus = sg * surface.kappa_t(n);
    let minus = sg * surface.kappa_t(0);
    if plus.signum() != minus.signum() {
        return Err(SurfaceError::SignMismatch { plus, minus });
    }
    Ok(match boundary {
        Boundary::Plus => plus,
        Boundary::Minus => minus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfReport {
    pub max: f64,
    pub min: f64,
    pub spread: f64,
}

/// Spread of `φ_H = 2 g_ss² |Å|²` over the lattice.
pub fn hopf_constancy(surface: &SampledSurface) -> HopfReport {
    let (mut mx, mut mn) = (f64::MIN, f64::MAX);
    for k in 0..surface.grid.len() {
        let phi = 2.0 * surface.g_ss[k].powi(2) * surface.traceless_norm_sq(k);
        mx = mx.max(phi);
        mn = mn.min(phi);
    }
    HopfReport { max: mx, min: mn, spread: (mx - mn) / mx }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGraphReport {
    pub radial_graph: bool,
    pub min_abs_d_rho_nu: f64,
}

/// Whether `ν₀` keeps a strict sign on interior rows.
pub fn radial_graph_check(surface: &RotationalAnnulus) -> Result<RadialGraphReport, SurfaceError> {
    let s = &surface.surface;
    let grid = &s.grid;
    let (mut pos, mut neg) = (false, false);
    let mut min_abs = f64::MAX;
    for i in 1..grid.n_t {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            let rho = clamped_acos(s.points[k][0]);
            if rho < 1e-8 {
                return Err(SurfaceError::Precondition("surface passes through e0".into()));
            }
            let v = s.normals[k][0];
            pos |= v > 0.0;
            neg |= v <= 0.0;
            min_abs = min_abs.min(v.abs() / rho.sin());
        }
    }
    Ok(RadialGraphReport { radial_graph: pos != neg, min_abs_d_rho_nu: min_abs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedReport {
    pub constrained: bool,
    pub min_x0: f64,
    pub max_rho: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Whether the annulus stays inside `B_R` (via `x₀ ≥ 0` when `R ≤ π/2`).
pub fn constrained_check(surface: &RotationalAnnulus) -> ConstrainedReport {
    let s = &surface.surface;
    let r = surface.contact.params.r;
    let min_x0 = s.points.iter().map(|x| x[0]).fold(f64::MAX, f64::min);
    let max_rho = clamped_acos(min_x0);
    let constrained = if r <= FRAC_PI_2 + 1e-12 { min_x0 >= -1e-10 } else { max_rho <= r + 1e-10 };
    ConstrainedReport { constrained, min_x0, max_rho, r }
}

/// Connected-component counts of `{x_a > 0}` and `{x_a < 0}` on the lattice.
pub fn two_piece_slices(surface: &RotationalAnnulus, a: &Vec4) -> Result<(usize, usize), SurfaceError> {
    if (vec::norm(a) - 1.0).abs() > 1e-12 || a[0].abs() > 1e-12 {
        return Err(SurfaceError::InvalidDirection(format!("{a:?}")));
    }
    let s = &surface.surface;
    let grid = &s.grid;
    let vals: Vec<f64> = s.points.iter().map(|x| vec::dot(x, a)).collect();
    let zero = vals.iter().filter(|v| v.abs() < 1e-9).count();
    let fraction = zero as f64 / vals.len() as f64;
    if fraction > 0.1 {
        return Err(SurfaceError::DegenerateSlice { fraction });
    }
    let count = |sign: f64| {
        let inside = |k: usize| vals[k].abs() >= 1e-9 && vals[k].signum() == sign;
        let mut seen = vec![false; vals.len()];
        let mut comps = 0;
        for start in 0..vals.len() {
            if seen[start] || !inside(start) {
                continue;
            }
            comps += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                let (i, j) = (k / grid.n_s, k % grid.n_s);
                let mut nbrs = vec![grid.idx(i, (j + 1) % grid.n_s), grid.idx(i, (j + grid.n_s - 1) % grid.n_s)];
                if i > 0 {
                    nbrs.push(grid.idx(i - 1, j));
                }
                if i < grid.n_t {
                    nbrs.push(grid.idx(i + 1, j));
                }
                for q in nbrs {
                    if !seen[q] && inside(q) {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        comps
    };
    Ok((count(1.0), count(-1.0)))
}

/// `|∮_{∂Σ} x_a|` by the periodic trapezoid rule over both boundary circles.
pub fn green_identity_check(surface: &SampledSurface, a: &Vec4) -> f64 {
    let grid = &surface.grid;
    let mut sum = 0.0;
    for row in [0, grid.n_t] {
        for j in 0..grid.n_s {
            let k = grid.idx(row, j);
            sum += vec::dot(&surface.points[k], a) * surface.g_ss[k].sqrt() * grid.h_s();
        }
    }
    sum.abs()
}

/// A scalar field on the `(s, t)` parameter domain with its `t`-derivative.
pub trait ScalarField: Sync {
    fn value(&self, s: f64, t: f64) -> f64;
    fn d_t(&self, s: f64, t: f64) -> f64;
}

/// `u = Σ cos(m π (t + T)/(2T)) (a cos ks + b sin ks)`, which satisfies `∂_t u = 0` at `t = ±T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannModes {
    pub t_half: f64,
    /// `(m, k, a, b)` tuples.
    pub terms: Vec<(u32, u32, f64, f64)>,
}

impl NeumannModes {
    /// Random coefficients for `m < m_max`, `k < k_max`, scaled so the lattice sup-norm is `amp`.
    pub fn random(t_half: f64, m_max: u32, k_max: u32, amp: f64, grid: &Grid, rng: &mut impl rand::Rng) -> Self {
        let mut terms = Vec::new();
        for m in 0..m_max {
            for k in 0..k_max {
                terms.push((m, k, rng.gen_range(-1.0..1.0), if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) }));
            }
        }
        let mut f = Self { t_half, terms };
        let sup =
            (0..grid.len()).map(|k| f.value(grid.s(k % grid.n_s), grid.t(k / grid.n_s)).abs()).fold(0.0, f64::max);
        for t in &mut f.terms {
            t.2 *= amp / sup;
            t.3 *= amp / sup;
        }
        f
    }

    pub fn constant(t_half: f64, c: f64) -> Self {
        Self { t_half, terms: vec![(0, 0, c, 0.0)] }
    }
}

impl ScalarField for NeumannModes {
    fn value(&self, s: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, k, a, b)| {
                let ph = f64::from(m) * PI * (t + self.t_half) / (2.0 * self.t_half);
                ph.cos() * (a * (f64::from(k) * s).cos() + b * (f64::from(k) * s).sin())
            })
            .sum()
    }

    fn d_t(&self, s: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, k, a, b)| {
                let w = f64::from(m) * PI / (2.0 * self.t_half);
                let ph = w * (t + self.t_half);
                -w * ph.sin() * (a * (f64::from(k) * s).cos() + b * (f64::from(k) * s).sin())
            })
            .sum()
    }
}

/// A normal-graph perturbation with its boundary diagnostics.
#[derive(Debug, Clone)]
pub struct NormalGraph {
    pub surface: SampledSurface,
    /// `max |⟨ν_u, ∂_ρ⟩|` over boundary rows (0 for contact angle π/2).
    pub contact_angle_residual: f64,
    pub sup_u: f64,
}

/// `x_u = cos u · x + sin u · ν` over a free-boundary annulus in `B_{π/2}`.
pub fn normal_graph(base: &RotationalAnnulus, u: &dyn ScalarField) -> Result<NormalGraph, SurfaceError> {
    let p = base.contact.params;
    if base.surface.ambient != crate::rotational_solver::Ambient::Sphere
        || (p.r - FRAC_PI_2).abs() > 1e-8
        || (p.gamma - FRAC_PI_2).abs() > 1e-12
    {
        return Err(SurfaceError::Precondition("base must meet the equator at angle π/2".into()));
    }
    let s = &base.surface;
    let grid = s.grid;
    let mut sup_u: f64 = 0.0;
    for j in 0..grid.n_s {
        for row in [0, grid.n_t] {
            let d = u.d_t(grid.s(j), grid.t(row));
            if d.abs() > 1e-8 {
                return Err(SurfaceError::Precondition(format!("Neumann condition violated: d_t u = {d:e}")));
            }
        }
    }
    let mut pts = Vec::with_capacity(grid.len());
    for i in 0..grid.rows() {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            let uv = u.value(grid.s(j), grid.t(i));
            sup_u = sup_u.max(uv.abs());
            pts.push(vec::add(&vec::scale(uv.cos(), &s.points[k]), &vec::scale(uv.sin(), &s.normals[k])));
        }
    }
    if sup_u >= 0.1 {
        return Err(SurfaceError::Precondition(format!("|u|_inf = {sup_u} must stay below 0.1")));
    }
    let mut deviation: f64 = 0.0;
    for row in [0, grid.n_t] {
        for j in 0..grid.n_s {
            deviation = deviation.max(pts[grid.idx(row, j)][0].abs());
        }
    }
    if deviation > 1e-6 {
        return Err(SurfaceError::ContactLost { deviation });
    }
    let surf = lattice::fd_geometry(grid, s.ambient, pts, Some(&s.normals), Stencil::Second);
    let mut angle: f64 = 0.0;
    for row in [0, grid.n_t] {
        for j in 0..grid.n_s {
            angle = angle.max(surf.normals[grid.idx(row, j)][0].abs());
        }
    }
    Ok(NormalGraph { surface: surf, contact_angle_residual: angle, sup_u })
}
