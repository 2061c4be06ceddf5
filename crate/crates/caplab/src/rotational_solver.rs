//! Rotational minimal annuli in S³ and their contact with geodesic caps.
//!
//! A surface rotationally symmetric about the x₂x₃-plane is written
//! `x(s,t) = (r cos t, r sin t, w cos s, w sin s)` with `w = √(1 − r²)`, and it is minimal
//! exactly when `r(1−r²) r″ = (1−2r²)(2r′² + r²(1−r²))`. Solutions with neck data
//! `(r(0), r′(0)) = (r0, 0)` are even in `t`; the annulus is truncated symmetrically at
//! the first contact with a cap `∂B_R` about `e₀`.
//!
//! The critical catenoid in the Euclidean unit ball, the `R → 0` endpoint of the family,
//! lives here as a second [`Generator`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;
use thiserror::Error;

use crate::ode::{self, DenseSolution, Dopri5Options, OdeError};
use crate::sphere_geometry::{clamped_acos, clamped_asin, CapParams, GeometryError, SpherePoint};
use crate::vec::{self, Vec4};

/// Guard on `r(1 − r²)`, the coefficient the ODE divides by.
pub const SINGULAR_BAND: f64 = 1e-8;
/// Open interval of admissible neck radii.
pub const R0_MIN: f64 = 0.01;
pub const R0_MAX: f64 = 0.999;
/// Default integrator tolerance (absolute and relative).
pub const DEFAULT_TOL: f64 = 1e-11;
/// Default integration horizon: `ν₀(π) = −r w²/√(…) < 0`, so the first root lies before π.
pub const DEFAULT_T_MAX: f64 = PI + 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("singular band reached: {0}")]
    Singularity(String),
    #[error("adaptive step control failed: {0}")]
    StepFailure(String),
    #[error("nu0 keeps its sign on (0, {t_max}]: no contact with a cap")]
    NoContact { t_max: f64 },
    #[error("contact angle computations disagree: {0}")]
    InconsistentContact(String),
    #[error("t = {t} outside the profile range [-{t_max}, {t_max}]")]
    Range { t: f64, t_max: f64 },
    #[error("A(eta, eta) has different signs on the two boundary circles ({plus:e} vs {minus:e})")]
    SignMismatch { plus: f64, minus: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<OdeError<SolverError>> for SolverError {
    fn from(e: OdeError<SolverError>) -> Self {
        match e {
            OdeError::Rhs { source, .. } => source,
            other => SolverError::StepFailure(other.to_string()),
        }
    }
}

/// Right-hand side of the profile ODE for the state `(r, r′)`.
pub fn ode_rhs(_t: f64, state: &[f64; 2]) -> Result<[f64; 2], SolverError> {
    let [r, rp] = *state;
    let q = r * (1.0 - r * r);
    if !(q > SINGULAR_BAND) || !rp.is_finite() {
        return Err(SolverError::Singularity(format!("r(1-r^2) = {q:e} at r = {r}")));
    }
    let rpp = (1.0 - 2.0 * r * r) * (2.0 * rp * rp + r * r * (1.0 - r * r)) / q;
    Ok([rp, rpp])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub method: String,
    pub tolerance: f64,
    pub max_step: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Even solution of the profile ODE on `[−t_max, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSolution {
    pub r0: f64,
    pub t_max: f64,
    /// Accepted step nodes, reflected to negative `t`.
    pub t_grid: Vec<f64>,
    pub r: Vec<f64>,
    pub rp: Vec<f64>,
    pub integrator_meta: IntegratorMeta,
    dense: DenseSolution<2>,
}

impl ProfileSolution {
    /// `(r, r′, r″)` at `t`, using the even reflection for `t < 0`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64), SolverError> {
        let a = t.abs();
        if !(a <= self.t_max) {
            return Err(SolverError::Range { t, t_max: self.t_max });
        }
        let [r, rp] = self.dense.eval(a);
        let [_, rpp] = ode_rhs(a, &[r, rp])?;
        let sg = if t < 0.0 { -1.0 } else { 1.0 };
        Ok((r, sg * rp, rpp))
    }

    pub fn dense(&self) -> &DenseSolution<2> {
        &self.dense
    }

    /// `(r, r′, r″)` at each of `ts`, marching fixed steps of at most `SAMPLE_STEP` from the neck.
    ///
    /// On uniform lattices this keeps the sampling error smooth in `t`, which the lattice
    /// difference checks rely on; [`eval`](Self::eval) is preferred for scattered points.
    pub fn sample(&self, ts: &[f64]) -> Result<Vec<(f64, f64, f64)>, SolverError> {
        let mut order: Vec<usize> = (0..ts.len()).collect();
        order.sort_by(|&a, &b| ts[a].abs().total_cmp(&ts[b].abs()));
        let mut out = vec![(0.0, 0.0, 0.0); ts.len()];
        let (mut tau, mut y) = (0.0, [self.r0, 0.0]);
        for i in order {
            let a = ts[i].abs();
            if !(a <= self.t_max) {
                return Err(SolverError::Range { t: ts[i], t_max: self.t_max });
            }
            if a > tau {
                let steps = ((a - tau) / SAMPLE_STEP).ceil() as usize;
                y = ode::fixed_steps(ode_rhs, tau, y, a, steps)?;
                tau = a;
            }
            let [_, rpp] = ode_rhs(a, &y)?;
            let sg = if ts[i] < 0.0 { -1.0 } else { 1.0 };
            out[i] = (y[0], sg * y[1], rpp);
        }
        Ok(out)
    }
}

/// Largest fixed step used by [`ProfileSolution::sample`].
pub const SAMPLE_STEP: f64 = 2.5e-3;

/// Integrates the profile ODE from the neck `(r0, 0)` to `t_max`.
pub fn integrate_profile(r0: f64, t_max: f64, tol: f64) -> Result<ProfileSolution, SolverError> {
    if !(r0 > R0_MIN && r0 < R0_MAX) {
        return Err(SolverError::Singularity(format!("r0 = {r0} outside the admissible band ({R0_MIN}, {R0_MAX})")));
    }
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(SolverError::InvalidInput(format!("tol = {tol:e} outside [1e-13, 1e-6]")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(SolverError::InvalidInput(format!("t_max = {t_max} must be positive")));
    }
    let opts = Dopri5Options { rtol: tol, atol: tol, h_max: 0.05, ..Default::default() };
    let dense = ode::integrate(ode_rhs, 0.0, [r0, 0.0], t_max, &opts)?;
    let nodes = dense.nodes();
    let n = nodes.len();
    let mut t_grid = Vec::with_capacity(2 * n - 1);
    let mut r = Vec::with_capacity(2 * n - 1);
    let mut rp = Vec::with_capacity(2 * n - 1);
    for (t, y) in nodes.iter().rev().take(n - 1) {
        t_grid.push(-t);
        r.push(y[0]);
        rp.push(-y[1]);
    }
    for (t, y) in &nodes {
        t_grid.push(*t);
        r.push(y[0]);
        rp.push(y[1]);
    }
    let integrator_meta = IntegratorMeta {
        method: "dopri5-dense".into(),
        tolerance: tol,
        max_step: opts.h_max,
        accepted_steps: dense.steps.len(),
        rejected_steps: dense.rejected,
    };
    Ok(ProfileSolution { r0, t_max, t_grid, r, rp, integrator_meta, dense })
}

/// Embedding of the rotational surface at `(s, t)`.
pub fn embed(profile: &ProfileSolution, s: f64, t: f64) -> Result<SpherePoint, SolverError> {
    let (r, _, _) = profile.eval(t)?;
    let w = (1.0 - r * r).sqrt();
    Ok(SpherePoint::new([r * t.cos(), r * t.sin(), w * s.cos(), w * s.sin()])?)
}

fn nu0_from(r: f64, rp: f64, t: f64) -> Result<f64, SolverError> {
    let w2 = 1.0 - r * r;
    let den = (rp * rp + r * r * w2).sqrt();
    if den < 1e-12 {
        return Err(SolverError::Singularity(format!("normal denominator {den:e} at t = {t}")));
    }
    Ok((r * w2 * t.cos() + rp * t.sin()) / den)
}

/// `ν₀ = ⟨ν, e₀⟩` along the profile.
pub fn nu0(profile: &ProfileSolution, t: f64) -> Result<f64, SolverError> {
    let (r, rp, _) = profile.eval(t)?;
    nu0_from(r, rp, t)
}

/// `∂_t ν₀ = r²(r′ cos t − r sin t)/√(r′² + r²(1−r²))`, valid along solutions.
pub fn nu0_derivative(profile: &ProfileSolution, t: f64) -> Result<f64, SolverError> {
    let (r, rp, _) = profile.eval(t)?;
    let den = (rp * rp + r * r * (1.0 - r * r)).sqrt();
    Ok(r * r * (rp * t.cos() - r * t.sin()) / den)
}

/// Closed-form first- and second-order data of a rotational generator at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalGeometry {
    pub x: Vec4,
    pub x_t: Vec4,
    pub x_s: Vec4,
    pub nu: Vec4,
    pub g_tt: f64,
    pub g_ss: f64,
    pub a_tt: f64,
    pub a_ss: f64,
}

impl LocalGeometry {
    /// Principal curvature along `∂_t` (Weingarten: `∂_t ν = kappa_t · ∂_t x`).
    pub fn kappa_t(&self) -> f64 {
        self.a_tt / self.g_tt
    }

    pub fn kappa_s(&self) -> f64 {
        self.a_ss / self.g_ss
    }

    pub fn mean_curvature(&self) -> f64 {
        self.kappa_t() + self.kappa_s()
    }

    pub fn norm_a_sq(&self) -> f64 {
        self.kappa_t().powi(2) + self.kappa_s().powi(2)
    }

    pub fn nu_t(&self) -> Vec4 {
        vec::scale(self.kappa_t(), &self.x_t)
    }

    pub fn nu_s(&self) -> Vec4 {
        vec::scale(self.kappa_s(), &self.x_s)
    }
}

/// Ambient space of a sampled surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ambient {
    /// Unit sphere S³, κ = 1.
    Sphere,
    /// Euclidean ℝ³ embedded as `x₀ = 0`, κ = 0.
    Euclid,
}

impl Ambient {
    pub fn kappa(&self) -> f64 {
        match self {
            Ambient::Sphere => 1.0,
            Ambient::Euclid => 0.0,
        }
    }
}

/// The meridian-generating data of a rotational annulus.
#[derive(Debug, Clone)]
pub enum Generator {
    Profile(Arc<ProfileSolution>),
    /// `c(cosh t cos s, cosh t sin s, t)` stored as `(0, c t, c cosh t cos s, c cosh t sin s)`.
    Catenoid {
        c: f64,
        t0: f64,
    },
}

impl Generator {
    pub fn ambient(&self) -> Ambient {
        match self {
            Generator::Profile(_) => Ambient::Sphere,
            Generator::Catenoid { .. } => Ambient::Euclid,
        }
    }

    pub fn local(&self, s: f64, t: f64) -> Result<LocalGeometry, SolverError> {
        let (cs, ss) = (s.cos(), s.sin());
        match self {
            Generator::Profile(p) => {
                let (r, rp, rpp) = p.eval(t)?;
                Ok(profile_local(r, rp, rpp, s, t))
            }
            Generator::Catenoid { c, .. } => {
                let (ch, sh) = (t.cosh(), t.sinh());
                let g = c * c * ch * ch;
                Ok(LocalGeometry {
                    x: [0.0, c * t, c * ch * cs, c * ch * ss],
                    x_t: [0.0, *c, c * sh * cs, c * sh * ss],
                    x_s: [0.0, 0.0, -c * ch * ss, c * ch * cs],
                    nu: [0.0, -sh / ch, cs / ch, ss / ch],
                    g_tt: g,
                    g_ss: g,
                    a_tt: -c,
                    a_ss: *c,
                })
            }
        }
    }
}

impl Generator {
    /// Local geometry on the lattice `ts × ss`, row-major in `t`.
    pub fn lattice(&self, ts: &[f64], ss: &[f64]) -> Result<Vec<LocalGeometry>, SolverError> {
        let mut out = Vec::with_capacity(ts.len() * ss.len());
        match self {
            Generator::Profile(p) => {
                for (&t, (r, rp, rpp)) in ts.iter().zip(p.sample(ts)?) {
                    out.extend(ss.iter().map(|&s| profile_local(r, rp, rpp, s, t)));
                }
            }
            Generator::Catenoid { .. } => {
                for &t in ts {
                    for &s in ss {
                        out.push(self.local(s, t)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Closed-form geometry of `x(s,t) = (r cos t, r sin t, w cos s, w sin s)`.
///
/// The unit normal is `ν = c(r w² e_r − r′ e_θ − r² w f)` with `c = 1/√(r′² + r²w²)`,
/// and `A_ij = −⟨ν, ∂_ij x⟩`.
pub fn profile_local(r: f64, rp: f64, rpp: f64, s: f64, t: f64) -> LocalGeometry {
    let (ct, st) = (t.cos(), t.sin());
    let (cs, ss) = (s.cos(), s.sin());
    let w2 = 1.0 - r * r;
    let w = w2.sqrt();
    let wp = -r * rp / w;
    let wpp = -(rp * rp + r * rpp) / w - r * r * rp * rp / (w * w2);
    let er = [ct, st, 0.0, 0.0];
    let eth = [-st, ct, 0.0, 0.0];
    let f = [0.0, 0.0, cs, ss];
    let fs = [0.0, 0.0, -ss, cs];
    let x = vec::add(&vec::scale(r, &er), &vec::scale(w, &f));
    let x_t = vec::add(&vec::add(&vec::scale(rp, &er), &vec::scale(r, &eth)), &vec::scale(wp, &f));
    let x_s = vec::scale(w, &fs);
    let c = 1.0 / (rp * rp + r * r * w2).sqrt();
    let nu = vec::scale(
        c,
        &vec::sub(&vec::sub(&vec::scale(r * w2, &er), &vec::scale(rp, &eth)), &vec::scale(r * r * w, &f)),
    );
    // x_tt = (r″ − r) e_r + 2r′ e_θ + w″ f;  x_ss = −w f.
    let x_tt = vec::add(&vec::add(&vec::scale(rpp - r, &er), &vec::scale(2.0 * rp, &eth)), &vec::scale(wpp, &f));
    let a_tt = -vec::dot(&nu, &x_tt);
    let a_ss = -c * r * r * w2;
    LocalGeometry { x, x_t, x_s, nu, g_tt: r * r + rp * rp / w2, g_ss: w2, a_tt, a_ss }
}

/// Contact of a symmetric truncation `|t| ≤ t_plus` with the cap `∂B_R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactData {
    pub t_plus: f64,
    pub params: CapParams,
    pub x0_boundary: f64,
    /// Sign σ making `σν` the standard normal (`⟨σν, ∂_ρ⟩ = cos γ ≥ 0`); +1 when γ = π/2.
    pub normal_sign: i8,
    /// `A(η, η)` for the standard normal at `+t_plus` and `−t_plus`.
    pub a_eta_eta: [f64; 2],
}

fn eta_and_a(gen: &Generator, t: f64, outward: f64) -> Result<(Vec4, LocalGeometry), SolverError> {
    let lg = gen.local(0.0, t)?;
    let eta = vec::scale(outward / lg.g_tt.sqrt(), &lg.x_t);
    Ok((eta, lg))
}

/// Builds [`ContactData`] for the truncation `|t| ≤ t_b` of a sphere generator.
fn contact_at(gen: &Generator, t_b: f64, free_boundary: bool) -> Result<ContactData, SolverError> {
    let (eta, lg) = eta_and_a(gen, t_b, 1.0)?;
    let p = SpherePoint::new(lg.x)?;
    let x0 = lg.x[0];
    let r_cap = clamped_acos(x0);
    let s_r = r_cap.sin();
    if s_r < 1e-12 {
        return Err(SolverError::InconsistentContact(format!("boundary at the cap centre (x0 = {x0})")));
    }
    let d_rho = vec::scale(1.0 / s_r, &vec::sub(&vec::scale(x0, &p.coords()), &vec::basis4(0)));
    let sin_g = vec::dot(&eta, &d_rho);
    let nu_rho = vec::dot(&lg.nu, &d_rho);
    if sin_g <= 0.0 {
        return Err(SolverError::InconsistentContact(format!(
            "conormal points into the cap (<eta, d_rho> = {sin_g:e})"
        )));
    }
    let sigma: i8 = if free_boundary || nu_rho.abs() < 1e-14 || nu_rho > 0.0 { 1 } else { -1 };
    let cos_g = f64::from(sigma) * nu_rho;
    let gamma = if free_boundary { FRAC_PI_2 } else { clamped_asin(sin_g) };
    let mismatch = (gamma.cos() - cos_g).abs().max((sin_g * sin_g + cos_g * cos_g - 1.0).abs());
    if free_boundary {
        if (sin_g - 1.0).abs() > 1e-8 {
            return Err(SolverError::InconsistentContact(format!("free boundary with sin(gamma) = {sin_g}")));
        }
    } else if mismatch > 1e-6 {
        return Err(SolverError::InconsistentContact(format!(
            "arcsin route gives cos(gamma) = {}, normal route gives {cos_g}",
            gamma.cos()
        )));
    }
    let a_plus = f64::from(sigma) * lg.kappa_t();
    let (_, lg_minus) = eta_and_a(gen, -t_b, -1.0)?;
    let a_minus = f64::from(sigma) * lg_minus.kappa_t();
    if a_plus.signum() != a_minus.signum() {
        return Err(SolverError::SignMismatch { plus: a_plus, minus: a_minus });
    }
    let epsilon: i8 = if a_plus > 0.0 { 1 } else { -1 };
    let params = CapParams::new(r_cap, gamma, epsilon)?;
    Ok(ContactData { t_plus: t_b, params, x0_boundary: x0, normal_sign: sigma, a_eta_eta: [a_plus, a_minus] })
}

/// Illinois-modified regula falsi on a sign-changing bracket, run to machine resolution.
pub fn find_root<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64, SolverError>
where
    F: FnMut(f64) -> Result<f64, SolverError>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(SolverError::InvalidInput("root bracket without sign change".into()));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = (b - a).abs();
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        // Fall back to bisection when the secant point hugs an end of the bracket.
        let lo = a.min(b) + 0.01 * width;
        let hi = a.max(b) - 0.01 * width;
        if !(c > lo && c < hi) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// First sign change of `g` on the accepted steps of `profile`, each split into `sub` pieces.
fn first_bracket<G>(
    profile: &ProfileSolution,
    sub: usize,
    mut g: G,
) -> Result<Option<(f64, f64, f64, f64)>, SolverError>
where
    G: FnMut(f64) -> Result<f64, SolverError>,
{
    let mut ta = 0.0;
    let mut ga = g(0.0)?;
    for st in &profile.dense().steps {
        for j in 1..=sub {
            let tb = if j == sub { st.t1() } else { st.t0 + st.h * j as f64 / sub as f64 };
            let gb = g(tb)?;
            if ga.signum() != gb.signum() || gb == 0.0 {
                return Ok(Some((ta, tb, ga, gb)));
            }
            ta = tb;
            ga = gb;
        }
    }
    Ok(None)
}

/// Free-boundary truncation at the first positive root of `ν₀`.
pub fn find_free_boundary(profile: &ProfileSolution) -> Result<ContactData, SolverError> {
    let bracket = first_bracket(profile, 4, |t| nu0(profile, t))?;
    let (a, b, fa, fb) = bracket.ok_or(SolverError::NoContact { t_max: profile.t_max })?;
    let t_plus = find_root(|t| nu0(profile, t), a, b, fa, fb)?;
    let gen = Generator::Profile(Arc::new(profile.clone()));
    contact_at(&gen, t_plus, true)
}

/// Capillary truncation at `±t_b` with angle read off the conormal.
pub fn find_capillary_boundary(profile: &ProfileSolution, t_b: f64) -> Result<ContactData, SolverError> {
    if !(t_b > 0.0 && t_b <= profile.t_max) {
        return Err(SolverError::Range { t: t_b, t_max: profile.t_max });
    }
    let gen = Generator::Profile(Arc::new(profile.clone()));
    contact_at(&gen, t_b, false)
}

/// Contact data for a generator already known to be truncated at `t_plus`.
pub fn contact_for_generator(gen: &Generator, t_plus: f64, free_boundary: bool) -> Result<ContactData, SolverError> {
    match gen {
        Generator::Profile(_) => contact_at(gen, t_plus, free_boundary),
        Generator::Catenoid { .. } => Err(SolverError::InvalidInput("catenoid contact is fixed".into())),
    }
}

/// Profile integration plus free-boundary search with default horizon.
pub fn solve_r0(r0: f64, tol: f64) -> Result<(ProfileSolution, ContactData), SolverError> {
    let p = integrate_profile(r0, DEFAULT_T_MAX, tol)?;
    let c = find_free_boundary(&p)?;
    Ok((p, c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r0: f64,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub t_plus: Option<f64>,
    pub epsilon: Option<i8>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Largest R over successful rows and the neck radius attaining it.
    pub r_bar: Option<(f64, f64)>,
}

impl SweepTable {
    pub fn successes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.rows.iter().filter_map(|r| Some((r.r0, r.r?, r.t_plus?)))
    }
}

/// Free-boundary sweep over `r0_grid`; failures are recorded per row.
pub fn sweep_family(r0_grid: &[f64], tol: f64) -> SweepTable {
    let rows: Vec<SweepRow> = r0_grid
        .par_iter()
        .map(|&r0| match solve_r0(r0, tol) {
            Ok((_, c)) => SweepRow {
                r0,
                r: Some(c.params.r),
                t_plus: Some(c.t_plus),
                epsilon: Some(c.params.epsilon),
                status: "ok".into(),
            },
            Err(e) => SweepRow { r0, r: None, t_plus: None, epsilon: None, status: format!("failed: {e}") },
        })
        .collect();
    let r_bar =
        rows.iter().filter_map(|r| Some((r.r?, r.r0))).fold(None, |acc: Option<(f64, f64)>, (rr, r0)| match acc {
            Some((best, _)) if best >= rr => acc,
            _ => Some((rr, r0)),
        });
    SweepTable { rows, r_bar }
}

/// Uniform grid of `n` neck radii strictly inside `(lo, hi)`.
pub fn r0_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

/// Branch of the non-injective map `r0 ↦ R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// From `r0 → 1` (small caps) down to the maximiser of `R`.
    Rising,
    /// Past the maximum `R̄`, `r0 → 0.01`.
    Falling,
}

/// Neck radius with free-boundary radius `target` on `branch`.
pub fn solve_target_radius(
    target: f64,
    branch: Branch,
    tol: f64,
) -> Result<(ProfileSolution, ContactData), SolverError> {
    // Descending r0 mirrors the caption order; the grid is dense enough to separate branches.
    let mut grid = r0_grid(R0_MIN + 1e-3, R0_MAX - 1e-4, 480);
    grid.reverse();
    let table = sweep_family(&grid, tol);
    let pts: Vec<(f64, f64)> = table.rows.iter().filter_map(|r| Some((r.r0, r.r?))).collect();
    let (_, r0_bar) = table.r_bar.ok_or(SolverError::NoContact { t_max: DEFAULT_T_MAX })?;
    let on_branch = |r0: f64| match branch {
        Branch::Rising => r0 >= r0_bar,
        Branch::Falling => r0 <= r0_bar,
    };
    let bracket = pts
        .windows(2)
        .find(|w| on_branch(w[0].0) && on_branch(w[1].0) && (w[0].1 - target).signum() != (w[1].1 - target).signum());
    let w = bracket.ok_or(SolverError::NoContact { t_max: DEFAULT_T_MAX })?;
    let f = |r0: f64| solve_r0(r0, tol).map(|(_, c)| c.params.r - target);
    let r0 = find_root(f, w[0].0, w[1].0, w[0].1 - target, w[1].1 - target)?;
    solve_r0(r0, tol)
}

/// Root of `t tanh t = 1` by bisection on `[1, 1.5]`.
pub fn catenoid_t0() -> f64 {
    let (mut a, mut b) = (1.0f64, 1.5f64);
    while b - a > 4.0 * f64::EPSILON {
        let m = 0.5 * (a + b);
        if m * m.tanh() - 1.0 > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Generator of the critical catenoid in the Euclidean unit ball.
pub fn catenoid_generator() -> Generator {
    let t0 = catenoid_t0();
    Generator::Catenoid { c: 1.0 / (t0 * t0.cosh()), t0 }
}

/// Contact data of the critical catenoid (`R = 1` in the unit ball, `γ = π/2`).
pub fn catenoid_contact(gen: &Generator) -> ContactData {
    let t0 = match gen {
        Generator::Catenoid { t0, .. } => *t0,
        Generator::Profile(_) => panic!("catenoid_contact called on a sphere profile"),
    };
    let lg = gen.local(0.0, t0).expect("catenoid is defined everywhere");
    let k = lg.kappa_t();
    let params = CapParams { r: 1.0, gamma: FRAC_PI_2, epsilon: if k > 0.0 { 1 } else { -1 }, kappa: 0.0 };
    ContactData { t_plus: t0, params, x0_boundary: 0.0, normal_sign: 1, a_eta_eta: [k, k] }
}

/// The critical catenoid sampled on the default lattice.
pub fn critical_catenoid() -> crate::surface_analysis::RotationalAnnulus {
    critical_catenoid_with(256, 32)
}

pub fn critical_catenoid_with(n_t: usize, n_s: usize) -> crate::surface_analysis::RotationalAnnulus {
    let gen = catenoid_generator();
    let contact = catenoid_contact(&gen);
    crate::surface_analysis::build_from_generator(gen, contact, n_t, n_s)
        .expect("catenoid lattice parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn rhs_vanishes_on_clifford() {
        let [a, b] = ode_rhs(0.3, &[FRAC_1_SQRT_2, 0.0]).unwrap();
        assert_eq!(a, 0.0);
        assert!(b.abs() < 1e-15);
    }

    #[test]
    fn rhs_at_neck_matches_reduced_formula() {
        // With r′ = 0 the equation reduces to r″ = (1 − 2r²) r.
        for r0 in [0.1, 0.3, 0.6, 0.9] {
            let [_, rpp] = ode_rhs(0.0, &[r0, 0.0]).unwrap();
            assert!((rpp - (1.0 - 2.0 * r0 * r0) * r0).abs() < 1e-15);
        }
    }

    #[test]
    fn rhs_guards_the_band() {
        assert!(matches!(ode_rhs(0.0, &[1e-9, 0.0]), Err(SolverError::Singularity(_))));
        assert!(matches!(ode_rhs(0.0, &[1.0, 0.0]), Err(SolverError::Singularity(_))));
    }

    #[test]
    fn clifford_profile_is_constant() {
        let p = integrate_profile(FRAC_1_SQRT_2, 3.0, 1e-11).unwrap();
        for i in 0..=300 {
            let t = -3.0 + 0.02 * i as f64;
            let (r, rp, _) = p.eval(t).unwrap();
            assert!((r - FRAC_1_SQRT_2).abs() < 1e-12 && rp.abs() < 1e-12);
        }
    }

    #[test]
    fn neck_guard_rejects_out_of_band() {
        assert!(matches!(integrate_profile(0.999, 3.0, 1e-11), Err(SolverError::Singularity(_))));
        assert!(matches!(integrate_profile(0.005, 3.0, 1e-11), Err(SolverError::Singularity(_))));
        assert!(matches!(integrate_profile(0.5, 3.0, 1e-3), Err(SolverError::InvalidInput(_))));
    }

    /// First integral of the ODE: r′² = r²w²(r²w²/(r0²w0²) − 1).
    fn first_integral_residual(p: &ProfileSolution, t: f64) -> f64 {
        let (r, rp, _) = p.eval(t).unwrap();
        let q = r * r * (1.0 - r * r);
        let q0 = p.r0 * p.r0 * (1.0 - p.r0 * p.r0);
        (rp * rp - q * (q / q0 - 1.0)).abs()
    }

    #[test]
    fn profile_obeys_first_integral_and_ode() {
        for r0 in [0.05, 0.3, 0.6, 0.9, 0.995] {
            let p = integrate_profile(r0, 3.0, 1e-11).unwrap();
            for i in 0..=200 {
                let t = -3.0 + 0.03 * i as f64;
                let rp = p.eval(t).unwrap().1;
                assert!(first_integral_residual(&p, t) < 1e-8 * (1.0 + rp * rp), "r0={r0} t={t}");
                // ODE residual from fixed-step samples: fourth-order differences of r′.
                let h = 2.5e-4;
                if t.abs() + 2.0 * h < 3.0 {
                    let v = p.sample(&[t - 2.0 * h, t - h, t, t + h, t + 2.0 * h]).unwrap();
                    let (r, rp, rpp) = v[2];
                    let fd = (-v[4].1 + 8.0 * v[3].1 - 8.0 * v[1].1 + v[0].1) / (12.0 * h);
                    let lhs = r * (1.0 - r * r) * fd;
                    let rhs = (1.0 - 2.0 * r * r) * (2.0 * rp * rp + r * r * (1.0 - r * r));
                    assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rpp.abs()), "r0={r0} t={t} {:e}", lhs - rhs);
                }
            }
        }
    }

    #[test]
    fn step_halving_oracle() {
        let a = integrate_profile(0.6, 3.0, 1e-11).unwrap();
        let b = integrate_profile(0.6, 3.0, 1e-12).unwrap();
        for i in 0..=100 {
            let t = 0.03 * i as f64;
            assert!((a.eval(t).unwrap().0 - b.eval(t).unwrap().0).abs() < 10.0 * 1e-11 * 10.0);
        }
    }

    #[test]
    fn embed_and_nu0_closed_forms() {
        let p = integrate_profile(FRAC_1_SQRT_2, 2.0, 1e-11).unwrap();
        let x = embed(&p, 0.0, 0.0).unwrap().coords();
        assert!(vec::dist(&x, &[FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0]) < 1e-12);
        for t in [0.0, 0.4, 1.2] {
            assert!((nu0(&p, t).unwrap() - FRAC_1_SQRT_2 * t.cos()).abs() < 1e-12);
        }
        let q = integrate_profile(0.4, 2.0, 1e-11).unwrap();
        assert!((nu0(&q, 0.0).unwrap() - (1.0f64 - 0.16).sqrt()).abs() < 1e-12);
        assert!(embed(&q, 0.0, 2.5).is_err());
    }

    #[test]
    fn nu0_derivative_matches_differences() {
        for r0 in [0.2, 0.5, 0.8, 0.95] {
            let p = integrate_profile(r0, 3.0, 1e-12).unwrap();
            for i in 1..29 {
                let t = 0.1 * i as f64;
                let h = 1e-5;
                let fd = (nu0(&p, t + h).unwrap() - nu0(&p, t - h).unwrap()) / (2.0 * h);
                let cf = nu0_derivative(&p, t).unwrap();
                assert!((fd - cf).abs() < 1e-7, "r0={r0} t={t}: {fd} vs {cf}");
            }
        }
    }

    #[test]
    fn embed_t_derivative_is_second_order() {
        let p = integrate_profile(0.55, 2.0, 1e-12).unwrap();
        let gen = Generator::Profile(Arc::new(p.clone()));
        let (s, t) = (0.7, 0.9);
        let exact = gen.local(s, t).unwrap().x_t;
        let err = |h: f64| {
            let a = embed(&p, s, t + h).unwrap().coords();
            let b = embed(&p, s, t - h).unwrap().coords();
            vec::dist(&vec::scale(0.5 / h, &vec::sub(&a, &b)), &exact)
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn clifford_free_boundary() {
        let (_, c) = solve_r0(FRAC_1_SQRT_2, 1e-11).unwrap();
        assert!((c.t_plus - FRAC_PI_2).abs() < 1e-12);
        assert!((c.params.r - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(c.params.gamma, FRAC_PI_2);
        assert_eq!(c.params.epsilon, 1);
        assert!((c.a_eta_eta[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn clifford_capillary_quarter_truncation() {
        let p = integrate_profile(FRAC_1_SQRT_2, 2.0, 1e-11).unwrap();
        let c = find_capillary_boundary(&p, std::f64::consts::FRAC_PI_4).unwrap();
        assert!((c.params.r - PI / 3.0).abs() < 1e-12);
        // Independent projections: ⟨η, ∂ρ⟩ and ⟨ν, ∂ρ⟩ at the boundary point.
        let t = std::f64::consts::FRAC_PI_4;
        let r = FRAC_1_SQRT_2;
        let x = [r * t.cos(), r * t.sin(), r, 0.0];
        let eta = [-t.sin(), t.cos(), 0.0, 0.0];
        let nu = [r * 0.5 * 2.0 * t.cos(), r * 0.5 * 2.0 * t.sin(), -2.0 * 0.5 * r, 0.0];
        let rr = c.params.r;
        let d_rho = vec::scale(1.0 / rr.sin(), &vec::sub(&vec::scale(rr.cos(), &x), &vec::basis4(0)));
        let sin_g = vec::dot(&eta, &d_rho);
        let cos_g = vec::dot(&nu, &d_rho).abs();
        assert!((c.params.gamma.sin() - sin_g).abs() < 1e-12);
        assert!((c.params.gamma.cos() - cos_g).abs() < 1e-12);
    }

    #[test]
    fn capillary_small_truncation_is_consistent() {
        let p = integrate_profile(0.6, 2.0, 1e-11).unwrap();
        for tb in [1e-3, 0.05, 0.3] {
            match find_capillary_boundary(&p, tb) {
                Ok(c) => assert!(c.params.gamma > 0.0 && c.params.gamma <= FRAC_PI_2),
                Err(SolverError::InconsistentContact(_)) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }

    #[test]
    fn free_boundary_root_residual_and_determinism() {
        for r0 in [0.05, 0.2, 0.45, 0.8, 0.97] {
            let (p, c) = solve_r0(r0, 1e-11).unwrap();
            assert!(nu0(&p, c.t_plus).unwrap().abs() < 1e-10);
            assert!((c.params.r.cos() - p.eval(c.t_plus).unwrap().0 * c.t_plus.cos()).abs() < 1e-14);
            let (_, c2) = solve_r0(r0, 1e-11).unwrap();
            assert_eq!(c, c2);
            assert_eq!(c.a_eta_eta[0].signum(), c.a_eta_eta[1].signum());
        }
    }

    #[test]
    fn step_halving_moves_radius_little() {
        for r0 in [0.3, 0.8] {
            let a = solve_r0(r0, 1e-10).unwrap().1.params.r;
            let b = solve_r0(r0, 5e-11).unwrap().1.params.r;
            assert!((a - b).abs() < 100.0 * 1e-10);
        }
    }

    #[test]
    fn critical_point_equivalence() {
        // sign(∂_t x₀) = sign(r′cos t − r sin t) along the profile.
        let p = integrate_profile(0.35, 3.0, 1e-11).unwrap();
        for i in 1..290 {
            let t = 0.01 * i as f64;
            let (r, rp, _) = p.eval(t).unwrap();
            let crit = rp * t.cos() - r * t.sin();
            let h = 1e-6;
            let dx0 = (p.eval(t + h).unwrap().0 * (t + h).cos() - p.eval(t - h).unwrap().0 * (t - h).cos()) / (2.0 * h);
            if crit.abs() > 1e-6 {
                assert_eq!(dx0.signum(), crit.signum(), "t={t}");
            }
        }
    }

    #[test]
    fn sweep_contains_clifford_and_exceeds_half_pi() {
        let mut grid = r0_grid(0.02, 0.98, 24);
        grid.push(FRAC_1_SQRT_2);
        let table = sweep_family(&grid, 1e-11);
        let row = table.rows.iter().find(|r| r.r0 == FRAC_1_SQRT_2).unwrap();
        assert!((row.r.unwrap() - FRAC_PI_2).abs() < 1e-10);
        assert!((row.t_plus.unwrap() - FRAC_PI_2).abs() < 1e-10);
        assert!(table.r_bar.unwrap().0 > FRAC_PI_2);
    }

    #[test]
    fn sweep_is_continuous_under_refinement() {
        let jumps = |n: usize| {
            let t = sweep_family(&r0_grid(0.1, 0.9, n), 1e-10);
            let rs: Vec<f64> = t.successes().map(|(_, r, _)| r).collect();
            rs.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
        };
        let (a, b) = (jumps(20), jumps(40));
        assert!(b < 0.6 * a, "{a} -> {b}");
    }

    #[test]
    fn catenoid_t0_fixture() {
        let t0 = catenoid_t0();
        assert!((t0 * t0.tanh() - 1.0).abs() < 1e-15);
        assert!((t0 - 1.199_678_640_257_734).abs() < 1e-12);
    }

    #[test]
    fn catenoid_boundary_is_orthogonal() {
        let gen = catenoid_generator();
        let Generator::Catenoid { t0, .. } = gen else { unreachable!() };
        for s in [0.0, 1.0, 2.5] {
            for (t, out) in [(t0, 1.0), (-t0, -1.0)] {
                let lg = gen.local(s, t).unwrap();
                assert!((vec::norm(&lg.x) - 1.0).abs() < 1e-14);
                let eta = vec::scale(out / lg.g_tt.sqrt(), &lg.x_t);
                assert!((vec::dot(&eta, &lg.x) - 1.0).abs() < 1e-10);
            }
        }
        for i in 0..100 {
            let t = -t0 + 2.0 * t0 * i as f64 / 99.0;
            assert!(gen.local(0.3 * i as f64, t).unwrap().mean_curvature().abs() < 1e-10);
        }
    }

    #[test]
    fn local_geometry_matches_differences() {
        let p = Arc::new(integrate_profile(0.45, 3.0, 1e-12).unwrap());
        let gen = Generator::Profile(p);
        let (s, t) = (0.4, 0.8);
        let lg = gen.local(s, t).unwrap();
        let h = 1e-5;
        let xs = |s: f64, t: f64| gen.local(s, t).unwrap();
        let fd_t = vec::scale(0.5 / h, &vec::sub(&xs(s, t + h).x, &xs(s, t - h).x));
        let fd_s = vec::scale(0.5 / h, &vec::sub(&xs(s + h, t).x, &xs(s - h, t).x));
        assert!(vec::dist(&fd_t, &lg.x_t) < 1e-8);
        assert!(vec::dist(&fd_s, &lg.x_s) < 1e-8);
        let nt = vec::scale(0.5 / h, &vec::sub(&xs(s, t + h).nu, &xs(s, t - h).nu));
        assert!(vec::dist(&nt, &lg.nu_t()) < 1e-7);
        assert!(lg.mean_curvature().abs() < 1e-9);
        assert!((vec::norm(&lg.nu) - 1.0).abs() < 1e-14);
        for v in [lg.x, lg.x_t, lg.x_s] {
            assert!(vec::dot(&v, &lg.nu).abs() < 1e-13);
        }
    }
}
