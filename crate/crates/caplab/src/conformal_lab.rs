//! Radially warped balls `(𝔹_r̄, e^{2φ(r)}δ)` and the identities that live on them.
//!
//! Everything here is a check: closed-form expressions are evaluated next to an independent
//! numerical computation (finite differences, lattice quadrature, area variation) and the
//! residuals are reported. The S³ checks use stereographic coordinates from `−e₀`, where
//! `φ = log(2/(1+r²))` and the cap `B_R` becomes the centred ball of radius `tan(R/2)`.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::lattice::{self, Grid, SampledSurface, SpectralS, Stencil};
use crate::rotational_solver::Ambient;
use crate::spectral::{killing_normal, Rotation};
use crate::sphere_geometry::{
    conformal_translation, conformal_translation_factor, stereographic, GeometryError, SpherePoint,
};
use crate::surface_analysis::{NormalGraph, RotationalAnnulus, SurfaceError};
use crate::vec::{self, Vec3, Vec4};

/// Hypersurface dimension `n`; the ambient ball is `(n+1)`-dimensional.
const N_DIM: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConformalError {
    #[error("surface meets the projection pole (x0 = {x0})")]
    Pole { x0: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Geometry(GeometryError),
}

impl From<GeometryError> for ConformalError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Pole { x0 } => ConformalError::Pole { x0 },
            other => ConformalError::Geometry(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileLabel {
    SpaceForm { kappa: f64 },
    Gaussian { n: u32 },
    Custom,
}

/// Closed form of `φ`; private so that samples and derivatives always agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Shape {
    /// `log(2/(1+κr²))`, or `0` for `κ = 0`.
    SpaceForm(f64),
    /// `−r²/(4n)`.
    Gaussian(u32),
    /// `Σ c_k r^{2k+2}`.
    EvenPoly(Vec<f64>),
}

/// `φ`, `φ′`, `φ″`, `φ′/r` and `(φ′/r)′` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiJet {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
    pub over_r: f64,
    pub over_r_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedProfile {
    pub label: ProfileLabel,
    pub rbar: f64,
    /// Sample radii in `(0, r̄]`.
    pub nodes: Vec<f64>,
    shape: Shape,
}

/// Default sample count on `(0, r̄]`.
pub const PROFILE_NODES: usize = 1000;

impl WarpedProfile {
    fn build(label: ProfileLabel, shape: Shape, rbar: f64, n: usize) -> Result<Self, ConformalError> {
        if !(rbar > 0.0 && rbar.is_finite()) || n == 0 {
            return Err(ConformalError::Domain(format!("rbar = {rbar}, nodes = {n}")));
        }
        let nodes = (1..=n).map(|i| rbar * i as f64 / n as f64).collect();
        let p = Self { label, rbar, nodes, shape };
        for &r in &p.nodes {
            let j = p.eval(r);
            if ![j.phi, j.d1, j.d2].iter().all(|v| v.is_finite()) {
                return Err(ConformalError::Domain(format!("profile not finite at r = {r}")));
            }
        }
        Ok(p)
    }

    /// Constant curvature `κ`: `φ = log(2/(1+κr²))` (flat `φ = 0` for `κ = 0`).
    pub fn space_form(kappa: f64, rbar: f64) -> Result<Self, ConformalError> {
        if kappa < 0.0 && rbar * rbar * -kappa >= 1.0 {
            return Err(ConformalError::Domain(format!("hyperbolic model needs rbar < {}", 1.0 / (-kappa).sqrt())));
        }
        Self::build(ProfileLabel::SpaceForm { kappa }, Shape::SpaceForm(kappa), rbar, PROFILE_NODES)
    }

    /// Gaussian weight `φ = −r²/(4n)`.
    pub fn gaussian(n: u32, rbar: f64) -> Result<Self, ConformalError> {
        if n == 0 {
            return Err(ConformalError::Domain("Gaussian profile needs n >= 1".into()));
        }
        Self::build(ProfileLabel::Gaussian { n }, Shape::Gaussian(n), rbar, PROFILE_NODES)
    }

    /// Even polynomial `φ = Σ c_k r^{2k+2}`, smooth through the origin.
    pub fn even_polynomial(coeffs: Vec<f64>, rbar: f64) -> Result<Self, ConformalError> {
        Self::build(ProfileLabel::Custom, Shape::EvenPoly(coeffs), rbar, PROFILE_NODES)
    }

    pub fn with_nodes(mut self, n: usize) -> Result<Self, ConformalError> {
        self = Self::build(self.label, self.shape, self.rbar, n)?;
        Ok(self)
    }

    pub fn eval(&self, r: f64) -> PhiJet {
        match &self.shape {
            Shape::SpaceForm(k) if *k == 0.0 => PhiJet { phi: 0.0, d1: 0.0, d2: 0.0, over_r: 0.0, over_r_d: 0.0 },
            Shape::SpaceForm(k) => {
                let q = 1.0 + k * r * r;
                let over_r = -2.0 * k / q;
                PhiJet {
                    phi: (2.0 / q).ln(),
                    d1: over_r * r,
                    d2: -2.0 * k * (1.0 - k * r * r) / (q * q),
                    over_r,
                    over_r_d: 4.0 * k * k * r / (q * q),
                }
            }
            Shape::Gaussian(n) => {
                let c = 1.0 / (4.0 * f64::from(*n));
                PhiJet { phi: -c * r * r, d1: -2.0 * c * r, d2: -2.0 * c, over_r: -2.0 * c, over_r_d: 0.0 }
            }
            Shape::EvenPoly(cs) => {
                let mut j = PhiJet { phi: 0.0, d1: 0.0, d2: 0.0, over_r: 0.0, over_r_d: 0.0 };
                for (k, c) in cs.iter().enumerate() {
                    let p = 2 * k as i32 + 2;
                    let pf = f64::from(p);
                    j.phi += c * r.powi(p);
                    j.d1 += c * pf * r.powi(p - 1);
                    j.d2 += c * pf * (pf - 1.0) * r.powi(p - 2);
                    j.over_r += c * pf * r.powi(p - 2);
                    if p > 2 {
                        j.over_r_d += c * pf * (pf - 2.0) * r.powi(p - 3);
                    }
                }
                j
            }
        }
    }

    /// `(r, φ, φ′, φ″)` on the nodes.
    pub fn samples(&self) -> Vec<[f64; 4]> {
        self.nodes
            .iter()
            .map(|&r| {
                let j = self.eval(r);
                [r, j.phi, j.d1, j.d2]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    StrictlyNegative,
    IdenticallyZero,
    Mixed,
}

/// Values of `(φ′/r)′ − r(φ′/r)²` below this count as zero.
pub const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: Verdict,
}

pub fn condition_a_value(profile: &WarpedProfile, r: f64) -> f64 {
    let j = profile.eval(r);
    j.over_r_d - r * j.over_r * j.over_r
}

pub fn condition_a_eval(profile: &WarpedProfile) -> ConditionReport {
    let values: Vec<f64> = profile.nodes.iter().map(|&r| condition_a_value(profile, r)).collect();
    let verdict = if values.iter().all(|v| v.abs() < ZERO_TOL) {
        Verdict::IdenticallyZero
    } else if values.iter().all(|&v| v <= -ZERO_TOL) {
        Verdict::StrictlyNegative
    } else {
        Verdict::Mixed
    };
    ConditionReport { nodes: profile.nodes.clone(), values, verdict }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciGapReport {
    pub nodes: Vec<f64>,
    pub radial: Vec<f64>,
    pub tangential: Vec<f64>,
    pub gap: Vec<f64>,
    /// `sign(gap) = −sign((φ′/r)′ − r(φ′/r)²)` at every node.
    pub sign_agreement: bool,
}

fn sign_with_tol(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// Radial and tangential Ricci curvatures of `e^{2φ}δ` on unit vectors, and their gap.
///
/// With `N = n + 1`: `Ric(r̂,r̂) = −(N−1)(φ″ + φ′/r)e^{−2φ}` and
/// `Ric(θ̂,θ̂) = −(φ″ + (2N−3)φ′/r + (N−2)φ′²)e^{−2φ}`.
pub fn ricci_radial_gap(profile: &WarpedProfile) -> RicciGapReport {
    let nn = N_DIM + 1.0;
    let mut out = RicciGapReport {
        nodes: profile.nodes.clone(),
        radial: vec![],
        tangential: vec![],
        gap: vec![],
        sign_agreement: true,
    };
    for &r in &profile.nodes {
        let j = profile.eval(r);
        let e = (-2.0 * j.phi).exp();
        let rad = -(nn - 1.0) * (j.d2 + j.over_r) * e;
        let tan = -(j.d2 + (2.0 * nn - 3.0) * j.over_r + (nn - 2.0) * j.d1 * j.d1) * e;
        let gap = rad - tan;
        let a = condition_a_value(profile, r);
        // Both sides are O(r) near the origin; compare signs at a scale-aware threshold.
        let tol = ZERO_TOL * (1.0 + r);
        let (sg, sa) = (sign_with_tol(gap, tol * e), sign_with_tol(-a, tol));
        if sg != sa && sg != 0 && sa != 0 {
            out.sign_agreement = false;
        }
        out.radial.push(rad);
        out.tangential.push(tan);
        out.gap.push(gap);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UaReport {
    pub interior: f64,
    pub boundary: f64,
}

/// Checks `L u_a = −n e^{−2φ}(φ″ − φ′/r − φ′²)⟨ν_δ,∂_r⟩² u_a + |A|² u_a` and `∂_η u_a = κ u_a`
/// for `u_a = e^φ⟨y, a⟩` on a lattice of S³ points pushed to the stereographic ball.
///
/// Geometry is rebuilt in the model: Euclidean differences of the projected lattice, then
/// the conformal change to `e^{2φ}δ` for the metric, `|A|²` and `Ric(ν,ν)`. Boundary rows
/// are the `t`-ends of the grid and `κ` is the umbilicity of `∂B_R` in the model.
pub fn ua_identity_check(grid: &Grid, points: &[Vec4], r: f64, a: &Vec3) -> Result<UaReport, ConformalError> {
    if !(r > 0.0 && r < PI) {
        return Err(ConformalError::Domain(format!("R = {r} outside (0, π)")));
    }
    let a = vec::normalize(a).ok_or_else(|| ConformalError::Domain("a must be nonzero".into()))?;
    let rho_r = (0.5 * r).tan();
    let model = WarpedProfile::space_form(1.0, rho_r.max(1.0))?;
    let ys = points
        .iter()
        .map(|x| {
            let y = stereographic(&SpherePoint::new(*x)?)?;
            Ok([0.0, y[0], y[1], y[2]])
        })
        .collect::<Result<Vec<Vec4>, ConformalError>>()?;
    // Fourth order: second-order one-sided ends would leak O(h) into row 1 through the metric.
    let e = lattice::fd_geometry(*grid, Ambient::Euclid, ys, None, Stencil::Fourth);
    let n = grid.len();
    let (mut g_tt, mut g_ss) = (vec![0.0; n], vec![0.0; n]);
    let mut u = vec![0.0; n];
    let mut pot = vec![0.0; n];
    for k in 0..n {
        let y = e.points[k];
        let rho = vec::norm(&y);
        let jet = model.eval(rho);
        let e2 = (2.0 * jet.phi).exp();
        g_tt[k] = e2 * e.g_tt[k];
        g_ss[k] = e2 * e.g_ss[k];
        u[k] = jet.phi.exp() * (a[0] * y[1] + a[1] * y[2] + a[2] * y[3]);
        let c = if rho > 0.0 { vec::dot(&e.normals[k], &y) / rho } else { 0.0 };
        let phi_nu = jet.d1 * c;
        let phi_nunu = jet.d2 * c * c + jet.over_r * (1.0 - c * c);
        let lap_phi = jet.d2 + N_DIM * jet.over_r;
        let ric =
            -(e2.recip()) * ((N_DIM - 1.0) * (phi_nunu - phi_nu * phi_nu) + lap_phi + (N_DIM - 1.0) * jet.d1 * jet.d1);
        let rhs = -N_DIM / e2 * (jet.d2 - jet.over_r - jet.d1 * jet.d1) * c * c;
        // |A_g|² cancels between the two sides; what remains is Ric − rhs.
        pot[k] = ric - rhs;
    }
    let spec = SpectralS::new(grid.n_s);
    let lap = lattice::laplacian_diag_with(grid, &spec, &g_tt, &g_ss, &u, Stencil::Fourth);
    let mut interior: f64 = 0.0;
    for i in 1..grid.n_t {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            interior = interior.max((lap[k] + pot[k] * u[k]).abs());
        }
    }
    let jr = model.eval(rho_r);
    let kappa = (-jr.phi).exp() * (1.0 / rho_r + jr.d1);
    let (lo, hi) = lattice::conormal_derivative(grid, &g_tt, &u, Stencil::Fourth);
    let mut boundary: f64 = 0.0;
    for j in 0..grid.n_s {
        boundary = boundary.max((lo[j] - kappa * u[grid.idx(0, j)]).abs());
        boundary = boundary.max((hi[j] - kappa * u[grid.idx(grid.n_t, j)]).abs());
    }
    Ok(UaReport { interior, boundary })
}

/// [`ua_identity_check`] on a free-boundary annulus of the sweep.
pub fn ua_identity_check_annulus(surface: &RotationalAnnulus, a: &Vec3) -> Result<UaReport, ConformalError> {
    let p = surface.contact.params;
    if surface.surface.ambient != Ambient::Sphere || (p.gamma - FRAC_PI_2).abs() > 1e-8 {
        return Err(ConformalError::Domain("needs a free-boundary annulus in S³".into()));
    }
    ua_identity_check(&surface.surface.grid, &surface.surface.points, p.r, a)
}

/// The totally geodesic disc `{x₁ = 0} ∩ B_R` on a `(ρ, s)` lattice with `ρ ∈ [ρ_min, R]`.
pub fn geodesic_disc(r: f64, rho_min: f64, n_t: usize, n_s: usize) -> (Grid, Vec<Vec4>) {
    let grid = Grid { n_t, n_s, t_min: rho_min, t_max: r };
    let pts = (0..grid.len())
        .map(|k| {
            let (rho, s) = (grid.t(k / n_s), grid.s(k % n_s));
            [rho.cos(), 0.0, rho.sin() * s.cos(), rho.sin() * s.sin()]
        })
        .collect();
    (grid, pts)
}

fn check_foliation_domain(profile: &WarpedProfile, s: f64, r: f64) -> Result<(), ConformalError> {
    let rb = profile.rbar;
    if !(s > 0.0 && s < rb && (0.0..=rb).contains(&r)) {
        return Err(ConformalError::Domain(format!("(s, r) = ({s}, {r}) outside 0 < s < {rb}, 0 <= r <= {rb}")));
    }
    Ok(())
}

/// `∂u_s/∂x₀` at `x₀ = 0` for the conformal-translation foliation of the equatorial disc:
/// `(2st²/(r̄²(r²+s²)))(−1 + (φ′(t)/t)(r̄²−t²)/2)` with `t = r̄²√((r²+s²)/(r̄⁴+s²r²))`.
pub fn foliation_derivative(profile: &WarpedProfile, s: f64, r: f64) -> Result<f64, ConformalError> {
    check_foliation_domain(profile, s, r)?;
    let rb2 = profile.rbar * profile.rbar;
    let t = rb2 * ((r * r + s * s) / (rb2 * rb2 + s * s * r * r)).sqrt();
    let j = profile.eval(t);
    Ok(2.0 * s * t * t / (rb2 * (r * r + s * s)) * (-1.0 + j.over_r * (rb2 - t * t) / 2.0))
}

/// `u_s(x) = φ(|Φ_s(x)|) + log(conformal factor of Φ_s at x)`, the log-density of `Φ_s^*(e^{2φ}δ)`.
pub fn foliation_log_density(profile: &WarpedProfile, s: f64, x: &Vec3) -> Result<f64, ConformalError> {
    let y = [s, 0.0, 0.0];
    let p = conformal_translation(&y, profile.rbar, x)?;
    Ok(profile.eval(vec::norm(&p)).phi + conformal_translation_factor(&y, profile.rbar, x).ln())
}

/// Central difference of [`foliation_log_density`] in `x₀` at `(0, r, 0)`.
pub fn foliation_derivative_fd(profile: &WarpedProfile, s: f64, r: f64, h: f64) -> Result<f64, ConformalError> {
    check_foliation_domain(profile, s, r)?;
    let up = foliation_log_density(profile, s, &[h, r, 0.0])?;
    let dn = foliation_log_density(profile, s, &[-h, r, 0.0])?;
    Ok((up - dn) / (2.0 * h))
}

/// Mean curvature in `e^{2φ}δ` of the leaf `Φ_s(disc)` at `Φ_s(0, r, 0)`, from a 3×3 stencil
/// of the leaf's parametrisation, with the normal pushed forward from `e₀`.
pub fn foliation_mean_curvature_fd(profile: &WarpedProfile, s: f64, r: f64, h: f64) -> Result<f64, ConformalError> {
    check_foliation_domain(profile, s, r)?;
    let y = [s, 0.0, 0.0];
    let rb = profile.rbar;
    let r0 = r.min(rb - h);
    let p = |a: f64, b: f64| conformal_translation(&y, rb, &[0.0, r0 + a, b]);
    let c = p(0.0, 0.0)?;
    let (pa, pb) = (p(h, 0.0)?, p(0.0, h)?);
    let (ma, mb) = (p(-h, 0.0)?, p(0.0, -h)?);
    let (pp, pm, mp, mm) = (p(h, h)?, p(h, -h)?, p(-h, h)?, p(-h, -h)?);
    let d1 = |u: Vec3, v: Vec3| vec::scale(0.5 / h, &vec::sub(&u, &v));
    let d2 = |u: Vec3, v: Vec3| vec::scale(1.0 / (h * h), &vec::sub(&vec::add(&u, &v), &vec::scale(2.0, &c)));
    let (xa, xb) = (d1(pa, ma), d1(pb, mb));
    let xaa = d2(pa, ma);
    let xbb = d2(pb, mb);
    let xab = vec::scale(0.25 / (h * h), &vec::sub(&vec::add(&pp, &mm), &vec::add(&pm, &mp)));
    let nu = vec::normalize(&vec::cross3(&xa, &xb)).ok_or(ConformalError::Domain("degenerate leaf".into()))?;
    let (g11, g12, g22) = (vec::dot(&xa, &xa), vec::dot(&xa, &xb), vec::dot(&xb, &xb));
    let (a11, a12, a22) = (-vec::dot(&nu, &xaa), -vec::dot(&nu, &xab), -vec::dot(&nu, &xbb));
    let det = g11 * g22 - g12 * g12;
    let h_delta = (g22 * a11 - 2.0 * g12 * a12 + g11 * a22) / det;
    let rho = vec::norm(&c);
    let j = profile.eval(rho);
    Ok((-j.phi).exp() * (h_delta + N_DIM * j.d1 * vec::dot(&nu, &c) / rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoliationSample {
    pub s: f64,
    pub r: f64,
    pub derivative: f64,
    pub mean_curvature_fd: f64,
}

/// Random `(s, r)` samples of the foliation derivative with the leaf mean curvature alongside.
pub fn foliation_samples(
    profile: &WarpedProfile,
    count: usize,
    seed: u64,
) -> Result<Vec<FoliationSample>, ConformalError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rb = profile.rbar;
    let pairs: Vec<(f64, f64)> =
        (0..count).map(|_| (rng.gen_range(1e-3..0.999) * rb, rng.gen_range(0.0..0.999) * rb)).collect();
    pairs
        .par_iter()
        .map(|&(s, r)| {
            Ok(FoliationSample {
                s,
                r,
                derivative: foliation_derivative(profile, s, r)?,
                mean_curvature_fd: foliation_mean_curvature_fd(profile, s, r, 1e-4 * rb)?,
            })
        })
        .collect()
}

/// Cap weight data at a point: `(f, ⟨∇̄f, ν⟩)` for `f = n log(1 + cos R x₀)`.
fn cap_weight_jet(r: f64, x0: f64, nu0: f64) -> (f64, f64) {
    let c = r.cos();
    let den = 1.0 + c * x0;
    (N_DIM * (c * x0).ln_1p(), N_DIM * c * nu0 / den)
}

/// `|∫ H_f ⟨K, ν⟩ e^{−f} dμ|` on a normal graph meeting `∂B_{π/2}` orthogonally, with
/// `H_f = H − ⟨∇̄f, ν⟩` from lattice finite differences and trapezoid quadrature.
pub fn killing_orthogonality(graph: &NormalGraph, rot: Rotation, r: f64) -> Result<f64, ConformalError> {
    if graph.contact_angle_residual > 1e-2 || !(r > 0.0 && r <= FRAC_PI_2) {
        return Err(ConformalError::Domain(format!(
            "needs R in (0, pi/2] and orthogonal contact (residual {:e})",
            graph.contact_angle_residual
        )));
    }
    Ok(weighted_killing_integral(&graph.surface, rot, r).abs())
}

/// Signed lattice integral behind [`killing_orthogonality`].
pub fn weighted_killing_integral(s: &SampledSurface, rot: Rotation, r: f64) -> f64 {
    let grid = &s.grid;
    let mut sum = 0.0;
    for i in 0..grid.rows() {
        let w = lattice::quadrature_weight(grid, i);
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            let (f, f_nu) = cap_weight_jet(r, s.points[k][0], s.normals[k][0]);
            let hf = s.mean_curvature(k) - f_nu;
            sum += w * hf * killing_normal(rot, &s.points[k], &s.normals[k]) * (-f).exp() * s.det_g(k).sqrt();
        }
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceReport {
    pub r: f64,
    pub formula: f64,
    pub finite_difference: f64,
    pub residual: f64,
}

/// `H^{e^{2φ}δ}` of the centred sphere of radius `r`: formula `e^{−φ}(n/r + nφ′)` against the
/// first variation of its `e^{2φ}δ` area along the unit normal, with step `delta`.
pub fn conformal_hypersurface_check_with(
    r: f64,
    profile: &WarpedProfile,
    delta: f64,
) -> Result<HypersurfaceReport, ConformalError> {
    if !(r > delta && r + delta <= profile.rbar * (1.0 + 1e-12)) {
        return Err(ConformalError::Domain(format!("radius {r} with step {delta} outside (0, {}]", profile.rbar)));
    }
    let j = profile.eval(r);
    let formula = (-j.phi).exp() * N_DIM * (1.0 / r + j.d1);
    // Area of the coordinate sphere in e^{2φ}δ by midpoint quadrature of |p_θ × p_ψ|.
    let area = |rho: f64| {
        let nth = 64;
        let e2 = (2.0 * profile.eval(rho).phi).exp();
        let dth = PI / nth as f64;
        (0..nth).map(|i| rho * rho * ((i as f64 + 0.5) * dth).sin() * dth).sum::<f64>() * 2.0 * PI * e2
    };
    let ephi = |rho: f64| profile.eval(rho).phi.exp();
    let dist = delta / 3.0 * (ephi(r - delta) + 4.0 * ephi(r) + ephi(r + delta));
    let finite_difference = (area(r + delta).ln() - area(r - delta).ln()) / dist;
    Ok(HypersurfaceReport { r, formula, finite_difference, residual: (formula - finite_difference).abs() })
}

pub fn conformal_hypersurface_check(r: f64, profile: &WarpedProfile) -> Result<HypersurfaceReport, ConformalError> {
    conformal_hypersurface_check_with(r, profile, 2.5e-4 * profile.rbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPair {
    pub coarse: f64,
    pub fine: f64,
}

/// Machine-readable outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub inputs_hash: String,
    pub residuals: ResidualPair,
    pub order_estimate: Option<f64>,
    pub verdict: bool,
}

impl VerificationReport {
    /// Hashes the JSON of `inputs`; the order is only estimated when both residuals are positive.
    pub fn new(check: &str, inputs: &impl Serialize, coarse: f64, fine: f64, verdict: bool) -> Self {
        let json = serde_json::to_vec(inputs).expect("inputs serialise");
        let inputs_hash = format!("{:x}", Sha256::digest(&json));
        let order_estimate = (coarse > 0.0 && fine > 0.0).then(|| lattice::order_estimate(coarse, fine));
        Self { check: check.into(), inputs_hash, residuals: ResidualPair { coarse, fine }, order_estimate, verdict }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotational_solver::solve_r0;
    use crate::surface_analysis::{build_annulus, normal_graph, NeumannModes};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn space_forms_are_the_equality_case() {
        for (k, rb) in [(1.0, 2.0), (0.0, 1.0), (-1.0, 0.9)] {
            let p = WarpedProfile::space_form(k, rb).unwrap();
            assert_eq!(condition_a_eval(&p).verdict, Verdict::IdenticallyZero);
            let g = ricci_radial_gap(&p);
            assert!(g.sign_agreement && g.gap.iter().all(|v| v.abs() < 1e-10));
        }
        assert!(WarpedProfile::space_form(-1.0, 1.0).is_err());
    }

    #[test]
    fn space_form_ricci_is_constant() {
        // Ric = 2κ on unit vectors of the 3-dimensional model.
        for k in [1.0, -1.0] {
            let g = ricci_radial_gap(&WarpedProfile::space_form(k, 0.9).unwrap());
            assert!(g.radial.iter().chain(&g.tangential).all(|v| (v - 2.0 * k).abs() < 1e-12));
        }
    }

    #[test]
    fn gaussian_condition_value() {
        let p = WarpedProfile::gaussian(2, 3.0).unwrap();
        let c = condition_a_eval(&p);
        assert_eq!(c.verdict, Verdict::StrictlyNegative);
        for (r, v) in c.nodes.iter().zip(&c.values) {
            assert!((v + r / 16.0).abs() < 1e-12);
        }
        let g = ricci_radial_gap(&p);
        assert!(g.sign_agreement && g.gap.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn quadratic_and_quartic_profiles() {
        // φ = r²: (φ′/r)′ − r(φ′/r)² = −4r < 0 everywhere.
        let p = WarpedProfile::even_polynomial(vec![1.0], 2.0).unwrap();
        let c = condition_a_eval(&p);
        assert_eq!(c.verdict, Verdict::StrictlyNegative);
        assert!(c.nodes.iter().zip(&c.values).all(|(r, v)| (v + 4.0 * r).abs() < 1e-12));
        // φ = r⁴/4: 2r − r⁵ changes sign at r = 2^{1/4}.
        let q = WarpedProfile::even_polynomial(vec![0.0, 0.25], 2.0).unwrap();
        assert_eq!(condition_a_eval(&q).verdict, Verdict::Mixed);
        assert!(ricci_radial_gap(&q).sign_agreement);
    }

    proptest! {
        #[test]
        fn ricci_gap_sign_matches_condition(c in prop::collection::vec(-1.0f64..1.0, 1..5), rb in 0.2f64..2.0) {
            let p = WarpedProfile::even_polynomial(c, rb).unwrap();
            prop_assert!(ricci_radial_gap(&p).sign_agreement);
        }
    }

    #[test]
    fn ua_identity_on_clifford_converges() {
        let (p, c) = solve_r0(FRAC_1_SQRT_2, 1e-12).unwrap();
        let res: Vec<UaReport> = [128, 256]
            .iter()
            .map(|&n| ua_identity_check_annulus(&build_annulus(&p, &c, n, 32).unwrap(), &[1.0, 0.0, 0.0]).unwrap())
            .collect();
        assert!(res[1].interior < 1e-5 && res[1].boundary < 1e-5, "{res:?}");
        assert!(lattice::order_estimate(res[0].interior, res[1].interior) > 1.9);
    }

    #[test]
    fn ua_identity_on_geodesic_disc_is_trivial() {
        let (g, pts) = geodesic_disc(1.0, 0.1, 64, 16);
        let r = ua_identity_check(&g, &pts, 1.0, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!((r.interior, r.boundary), (0.0, 0.0));
    }

    #[test]
    fn ua_identity_detects_the_pole() {
        let (g, mut pts) = geodesic_disc(1.0, 0.1, 32, 16);
        pts[5] = [-1.0, 0.0, 0.0, 0.0];
        assert!(matches!(ua_identity_check(&g, &pts, 1.0, &[1.0, 0.0, 0.0]), Err(ConformalError::Pole { .. })));
    }

    #[test]
    fn foliation_derivative_matches_finite_differences() {
        let p = WarpedProfile::space_form(1.0, (0.5f64 * 1.3).tan()).unwrap();
        for (s, r) in [(0.1, 0.2), (0.4, 0.0), (0.05, 0.7)] {
            let d = foliation_derivative(&p, s, r).unwrap();
            let fd = foliation_derivative_fd(&p, s, r, 1e-5).unwrap();
            assert!((d - fd).abs() < 1e-8 * (1.0 + d.abs()), "{s} {r}: {d} {fd}");
            let u = foliation_log_density(&p, s, &[0.0, r, 0.0]).unwrap();
            let h = foliation_mean_curvature_fd(&p, s, r, 1e-4).unwrap();
            assert!((h - 2.0 * (-u).exp() * d).abs() < 1e-5, "{h} {d}");
        }
        assert!(foliation_derivative(&p, 1e-9, 0.3).unwrap().abs() < 1e-8);
        assert!(foliation_derivative(&p, 0.0, 0.3).is_err());
    }

    #[test]
    fn gaussian_foliation_is_mean_convex() {
        let p = WarpedProfile::gaussian(2, 1.5).unwrap();
        for f in foliation_samples(&p, 200, 3).unwrap() {
            assert!(f.derivative < 0.0 && f.mean_curvature_fd < 0.0, "{f:?}");
        }
    }

    fn clifford(n_t: usize) -> RotationalAnnulus {
        let (p, c) = solve_r0(FRAC_1_SQRT_2, 1e-12).unwrap();
        build_annulus(&p, &c, n_t, 32).unwrap()
    }

    #[test]
    fn killing_integral_vanishes_on_the_base() {
        let base = clifford(128);
        let g = normal_graph(&base, &NeumannModes::constant(base.contact.t_plus, 0.0)).unwrap();
        assert!(killing_orthogonality(&g, Rotation::E1E2, FRAC_PI_2).unwrap() < 1e-12);
    }

    #[test]
    fn axial_killing_integrand_vanishes_on_symmetric_graphs() {
        let base = clifford(128);
        let u = NeumannModes { t_half: base.contact.t_plus, terms: vec![(2, 0, 0.04, 0.0)] };
        let g = normal_graph(&base, &u).unwrap();
        let s = &g.surface;
        for k in 0..s.grid.len() {
            assert!(killing_normal(Rotation::E2E3, &s.points[k], &s.normals[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn killing_integral_converges_to_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let coarse_base = clifford(128);
        let u = NeumannModes::random(coarse_base.contact.t_plus, 3, 3, 0.05, &coarse_base.surface.grid, &mut rng);
        let vals: Vec<f64> = [256, 512]
            .iter()
            .map(|&n| killing_orthogonality(&normal_graph(&clifford(n), &u).unwrap(), Rotation::E1E3, 0.98).unwrap())
            .collect();
        assert!(vals[1] < 1e-4, "{vals:?}");
        assert!(lattice::order_estimate(vals[0], vals[1]) > 1.9, "{vals:?}");
    }

    #[test]
    fn hypersurface_formula_matches_area_variation() {
        let flat = WarpedProfile::space_form(0.0, 2.0).unwrap();
        assert_eq!(conformal_hypersurface_check(1.0, &flat).unwrap().formula, 2.0);
        let s3 = WarpedProfile::space_form(1.0, 2.0).unwrap();
        assert!(conformal_hypersurface_check(1.0, &s3).unwrap().formula.abs() < 1e-15);
        let p = WarpedProfile::even_polynomial(vec![0.3, -0.2, 0.05], 1.5).unwrap();
        let a = conformal_hypersurface_check_with(0.8, &p, 1e-3).unwrap();
        let b = conformal_hypersurface_check_with(0.8, &p, 5e-4).unwrap();
        assert!(b.residual < 1e-6, "{b:?}");
        assert!(lattice::order_estimate(a.residual, b.residual) > 1.9);
    }

    #[test]
    fn verification_report_hashes_inputs() {
        let a = VerificationReport::new("x", &(1, 2.0), 4e-4, 1e-4, true);
        let b = VerificationReport::new("x", &(1, 2.0), 4e-4, 1e-4, true);
        assert_eq!(a.inputs_hash, b.inputs_hash);
        assert!((a.order_estimate.unwrap() - 2.0).abs() < 1e-12);
        assert_ne!(a.inputs_hash, VerificationReport::new("x", &(1, 2.5), 1.0, 1.0, true).inputs_hash);
    }
}
