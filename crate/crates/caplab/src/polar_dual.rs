//! Lawson polar duals of rotational annuli.
//!
//! The dual is the Gauss map `x̃ = εν` of the standard normal, with `ε` fixed by
//! `εA(η,η) > 0`. Its tangents come from the Weingarten relation `∂_i ν = (A_ii/g_ii) ∂_i x`
//! (diagonal in rotational coordinates), so the dual lattice carries closed-form first
//! derivatives; everything that needs second derivatives of `x̃` is checked by lattice
//! differences instead.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{self, SampledSurface, SpectralS, Stencil};
use crate::rotational_solver::Ambient;
use crate::sphere_geometry::{clamped_acos, clamped_asin, CapParams, GeometryError};
use crate::surface_analysis::RotationalAnnulus;
use crate::vec::{self, Vec3, Vec4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("dual radius degenerates: sin R~ = {0:e}")]
    DegenerateDual(f64),
    #[error("surface has an umbilic point: min |A| = {0:e}")]
    Umbilic(f64),
    #[error("dual of a non-spherical surface is undefined")]
    NotSpherical,
    #[error("projected Gauss map degenerates: nu0^2 = {0}")]
    ProjectionDegenerate(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `(R̃, γ̃, ε̃)` of the dual.
///
/// `ε̃` is the sign of `Ã(η̃,η̃)` for the dual's standard normal, which is `±x` with the sign
/// making `⟨ν̃, ∂_ρ⟩ ≥ 0`, i.e. `−sgn(cos R)`; `+1` when `cos R` vanishes (free boundary).
pub fn dual_params(params: &CapParams) -> Result<CapParams, DualError> {
    let eps = f64::from(params.epsilon);
    let (sr, cr) = (params.r.sin(), params.r.cos());
    let (sg, cg) = (params.gamma.sin(), params.gamma.cos());
    // cos R̃ = −ε sin R cos γ, sin R̃ = √(cos²R + sin²R sin²γ), and cos γ̃ = |cos R| / sin R̃;
    // the atan2 forms stay accurate where arccos/arcsin lose half the digits.
    let sin_rt = cr.hypot(sr * sg);
    if sin_rt < 1e-12 {
        return Err(DualError::DegenerateDual(sin_rt));
    }
    let r_t = sin_rt.atan2(-eps * sr * cg);
    let g_t = (sr * sg).atan2(cr.abs());
    let eps_t: i8 = if cr.abs() < 1e-15 || cr < 0.0 { 1 } else { -1 };
    let out = CapParams { r: r_t, gamma: g_t, epsilon: eps_t, kappa: sin_rt * sin_rt };
    Ok(out)
}

/// Contact data read off the dual lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredContact {
    /// `arccos⟨x̃, e₀⟩`, averaged over both boundary circles.
    #[serde(rename = "R")]
    pub r: f64,
    /// `arcsin⟨∂_η̃ x̃, ∂_ρ⟩`.
    pub gamma: f64,
    /// Spread of `⟨x̃, e₀⟩` over the boundary lattice.
    pub radius_spread: f64,
}

#[derive(Debug, Clone)]
pub struct DualSurface {
    pub base: RotationalAnnulus,
    /// `x̃ = sign·ν_base` (the product `ε·σ`).
    pub sign: f64,
    pub params: CapParams,
    /// Dual lattice: points `x̃`, closed-form tangents, cross-product normals oriented along `x`,
    /// and `Ã_ij = ⟨∂_i ν̃, ∂_j x̃⟩`.
    pub surface: SampledSurface,
    pub psi: Vec<f64>,
    pub measured: MeasuredContact,
    /// `max |ν̃ − x|` after re-orthonormalisation.
    pub normal_residual: f64,
}

pub fn dual_surface(base: &RotationalAnnulus) -> Result<DualSurface, DualError> {
    let s = &base.surface;
    if s.ambient != Ambient::Sphere {
        return Err(DualError::NotSpherical);
    }
    let grid = s.grid;
    let min_a = (0..grid.len()).map(|k| s.norm_a_sq(k).sqrt()).fold(f64::MAX, f64::min);
    if min_a < 1e-8 {
        return Err(DualError::Umbilic(min_a));
    }
    let params = dual_params(&base.contact.params)?;
    let sign = f64::from(base.contact.params.epsilon) * base.sigma();
    let n = grid.len();
    let mut d = SampledSurface {
        grid,
        ambient: Ambient::Sphere,
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        x_t: Vec::with_capacity(n),
        x_s: Vec::with_capacity(n),
        g_tt: Vec::with_capacity(n),
        g_ts: Vec::with_capacity(n),
        g_ss: Vec::with_capacity(n),
        a_tt: Vec::with_capacity(n),
        a_ts: Vec::with_capacity(n),
        a_ss: Vec::with_capacity(n),
    };
    let mut psi = Vec::with_capacity(n);
    let mut normal_residual: f64 = 0.0;
    for k in 0..n {
        let x = &s.points[k];
        let xt = vec::scale(sign * s.a_tt[k] / s.g_tt[k], &s.x_t[k]);
        let xs = vec::scale(sign * s.a_ss[k] / s.g_ss[k], &s.x_s[k]);
        let mut nu = lattice::normal_from_tangents(Ambient::Sphere, &vec::scale(sign, &s.normals[k]), &xt, &xs);
        // ν̃ is ±x; orient it along x and record the defect.
        let sgn_nu = if vec::dot(&nu, x) < 0.0 { -1.0 } else { 1.0 };
        nu = vec::scale(sgn_nu, &nu);
        normal_residual = normal_residual.max(vec::dist(&nu, x));
        d.points.push(vec::scale(sign, &s.normals[k]));
        d.g_tt.push(vec::dot(&xt, &xt));
        d.g_ts.push(vec::dot(&xt, &xs));
        d.g_ss.push(vec::dot(&xs, &xs));
        // ∂_i ν̃ = ∂_i x for ν̃ = x.
        d.a_tt.push(vec::dot(&s.x_t[k], &xt));
        d.a_ts.push(vec::dot(&s.x_t[k], &xs));
        d.a_ss.push(vec::dot(&s.x_s[k], &xs));
        d.x_t.push(xt);
        d.x_s.push(xs);
        d.normals.push(nu);
        psi.push(0.5 * s.norm_a_sq(k));
    }
    let measured = measure_contact(&d);
    Ok(DualSurface { base: base.clone(), sign, params, surface: d, psi, measured, normal_residual })
}

fn measure_contact(d: &SampledSurface) -> MeasuredContact {
    let grid = &d.grid;
    let (mut lo, mut hi, mut sum, mut cnt) = (f64::MAX, f64::MIN, 0.0, 0.0);
    let mut gamma_sum = 0.0;
    for (row, out) in [(0usize, -1.0), (grid.n_t, 1.0)] {
        for j in 0..grid.n_s {
            let k = grid.idx(row, j);
            let x0 = d.points[k][0];
            lo = lo.min(x0);
            hi = hi.max(x0);
            sum += x0;
            cnt += 1.0;
            let r_t = clamped_acos(x0);
            let d_rho = vec::scale(1.0 / r_t.sin(), &vec::sub(&vec::scale(x0, &d.points[k]), &vec::basis4(0)));
            let eta = vec::scale(out / d.g_tt[k].sqrt(), &d.x_t[k]);
            gamma_sum += clamped_asin(vec::dot(&eta, &d_rho));
        }
    }
    MeasuredContact { r: clamped_acos(sum / cnt), gamma: gamma_sum / cnt, radius_spread: hi - lo }
}

impl DualSurface {
    /// `|arccos⟨x̃,e₀⟩ − R̃|` over the boundary lattice.
    pub fn boundary_radius_residual(&self) -> f64 {
        let grid = &self.surface.grid;
        let mut m: f64 = 0.0;
        for row in [0, grid.n_t] {
            for j in 0..grid.n_s {
                let x0 = self.surface.points[grid.idx(row, j)][0];
                m = m.max((clamped_acos(x0) - self.params.r).abs());
            }
        }
        m
    }

    /// `max |Ψ̃Ψ − 1|` with `Ψ̃ = |Ã|²_g̃ / 2`.
    pub fn psi_product_residual(&self) -> f64 {
        (0..self.psi.len()).map(|k| (0.5 * self.surface.norm_a_sq(k) * self.psi[k] - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Lattice-difference dual geometry (tangents, normal oriented along `x`, second fundamental form).
    pub fn fd_surface(&self, st: Stencil) -> SampledSurface {
        lattice::fd_geometry(
            self.surface.grid,
            Ambient::Sphere,
            self.surface.points.clone(),
            Some(&self.base.surface.points),
            st,
        )
    }

    /// `max |g̃_ij − Ψ g_ij|` with `g̃` from lattice differences of `x̃`.
    pub fn metric_residual(&self, st: Stencil) -> f64 {
        let f = self.fd_surface(st);
        let b = &self.base.surface;
        (0..self.psi.len())
            .map(|k| {
                (f.g_tt[k] - self.psi[k] * b.g_tt[k])
                    .abs()
                    .max((f.g_ss[k] - self.psi[k] * b.g_ss[k]).abs())
                    .max(f.g_ts[k].abs())
            })
            .fold(0.0, f64::max)
    }

    /// `max |⟨∂_i x, ∂_j x̃⟩ − A^{x̃}_ij|` with `∂_j x̃` from lattice differences and `A^{x̃}` the
    /// base second fundamental form for the normal `x̃`.
    pub fn a_tilde_residual(&self, st: Stencil) -> f64 {
        let f = self.fd_surface(st);
        let b = &self.base.surface;
        (0..self.psi.len())
            .map(|k| {
                let tt = vec::dot(&b.x_t[k], &f.x_t[k]) - self.sign * b.a_tt[k];
                let ss = vec::dot(&b.x_s[k], &f.x_s[k]) - self.sign * b.a_ss[k];
                let ts = vec::dot(&b.x_t[k], &f.x_s[k]) - self.sign * b.a_ts[k];
                tt.abs().max(ss.abs()).max(ts.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Sup of the dual mean curvature from lattice differences.
    pub fn minimality_residual(&self, st: Stencil) -> f64 {
        self.fd_surface(st).max_mean_curvature()
    }
}

/// `min_± max |x̃̃ ∓ x|` where the double dual is the (re-orthonormalised) dual normal.
pub fn double_dual_check(dual: &DualSurface) -> f64 {
    let x = &dual.base.surface.points;
    let nu = &dual.surface.normals;
    let plus = x.iter().zip(nu).map(|(a, b)| vec::dist(a, b)).fold(0.0, f64::max);
    let minus = x.iter().zip(nu).map(|(a, b)| vec::norm(&vec::add(a, b))).fold(0.0, f64::max);
    plus.min(minus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussMapReport {
    pub n: Vec<Vec3>,
    /// `min |det dn|` over interior rows, `det dn = ⟨n, n_t × n_s⟩ / √det g`.
    pub min_abs_det: f64,
    pub det_sign_constant: bool,
    /// `max |n − (ν₁,ν₂,ν₃)|` on boundary rows.
    pub boundary_residual: f64,
}

pub fn projected_gauss_map(surface: &SampledSurface) -> Result<GaussMapReport, DualError> {
    let grid = surface.grid;
    let worst = surface.normals.iter().map(|v| v[0] * v[0]).fold(0.0, f64::max);
    if worst >= 1.0 - 1e-10 {
        return Err(DualError::ProjectionDegenerate(worst));
    }
    let n: Vec<Vec3> = surface
        .normals
        .iter()
        .map(|v| {
            let p = [v[1], v[2], v[3]];
            let m = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            [p[0] / m, p[1] / m, p[2] / m]
        })
        .collect();
    let spec = SpectralS::new(grid.n_s);
    let as4: Vec<Vec4> = n.iter().map(|v| [0.0, v[0], v[1], v[2]]).collect();
    let n_t = lattice::map4(&as4, |f| lattice::d_t(&grid, f, Stencil::Second));
    let n_s = lattice::map4(&as4, |f| spec.diff(&grid, f, 1));
    let (mut min_abs, mut pos, mut neg) = (f64::MAX, false, false);
    for i in 1..grid.n_t {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            let a = [n_t[k][1], n_t[k][2], n_t[k][3]];
            let b = [n_s[k][1], n_s[k][2], n_s[k][3]];
            let det = vec::dot(&n[k], &vec::cross3(&a, &b)) / surface.det_g(k).sqrt();
            min_abs = min_abs.min(det.abs());
            pos |= det > 0.0;
            neg |= det < 0.0;
        }
    }
    let mut boundary_residual: f64 = 0.0;
    for row in [0, grid.n_t] {
        for j in 0..grid.n_s {
            let k = grid.idx(row, j);
            let v = &surface.normals[k];
            let d = [n[k][0] - v[1], n[k][1] - v[2], n[k][2] - v[3]];
            boundary_residual = boundary_residual.max((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
        }
    }
    Ok(GaussMapReport { n, min_abs_det: min_abs, det_sign_constant: !(pos && neg), boundary_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotational_solver::solve_r0;
    use crate::surface_analysis::build_annulus;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn annulus(r0: f64, n_t: usize) -> RotationalAnnulus {
        let (p, c) = solve_r0(r0, 1e-11).unwrap();
        build_annulus(&p, &c, n_t, 32).unwrap()
    }

    fn params(r: f64, g: f64, e: i8) -> CapParams {
        CapParams::new(r, g, e).unwrap()
    }

    #[test]
    fn free_boundary_dualises_to_hemisphere() {
        for r in [0.22, 0.98, 1.4] {
            let d = dual_params(&params(r, FRAC_PI_2, 1)).unwrap();
            assert!((d.r - FRAC_PI_2).abs() < 1e-15 && (d.gamma - r).abs() < 1e-14);
        }
        let d = dual_params(&params(1.95, FRAC_PI_2, 1)).unwrap();
        assert!((d.gamma - (PI - 1.95)).abs() < 1e-14);
    }

    #[test]
    fn hemisphere_dualises_by_epsilon() {
        let g = 0.7;
        let p = dual_params(&params(FRAC_PI_2, g, 1)).unwrap();
        assert!((p.r - (PI - g)).abs() < 1e-14 && (p.gamma - FRAC_PI_2).abs() < 1e-12);
        let m = dual_params(&params(FRAC_PI_2, g, -1)).unwrap();
        assert!((m.r - g).abs() < 1e-14 && (m.gamma - FRAC_PI_2).abs() < 1e-12);
        let c = dual_params(&params(FRAC_PI_2, FRAC_PI_2, -1)).unwrap();
        assert!((c.r - FRAC_PI_2).abs() < 1e-15 && (c.gamma - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_dual_is_rejected() {
        // sin R cos γ = 1 would need R = π/2, γ = 0, outside CapParams; build it literally.
        let p = CapParams { r: FRAC_PI_2, gamma: 0.0, epsilon: 1, kappa: 1.0 };
        assert!(matches!(dual_params(&p), Err(DualError::DegenerateDual(_))));
    }

    proptest! {
        #[test]
        fn dual_params_round_trip(r in 0.05f64..3.09, g in 0.05f64..FRAC_PI_2, e in prop::bool::ANY) {
            let p = params(r, g, if e { 1 } else { -1 });
            let d = dual_params(&p).unwrap();
            prop_assert!((d.gamma.sin() * d.r.sin() - r.sin() * g.sin()).abs() < 1e-14);
            if (g - FRAC_PI_2).abs() < 1e-12 {
                let dd = dual_params(&d).unwrap();
                prop_assert!((dd.r - r).abs() + (dd.gamma - g).abs() < 1e-12);
            }
        }

        #[test]
        fn free_boundary_round_trip_any_epsilon(r in 0.05f64..3.09, e in prop::bool::ANY) {
            let p = params(r, FRAC_PI_2, if e { 1 } else { -1 });
            let dd = dual_params(&dual_params(&p).unwrap()).unwrap();
            prop_assert!((dd.r - r).abs() + (dd.gamma - FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn clifford_is_self_dual() {
        let d = dual_surface(&annulus(FRAC_1_SQRT_2, 128)).unwrap();
        assert!((d.params.r - FRAC_PI_2).abs() < 1e-8 && (d.params.gamma - FRAC_PI_2).abs() < 1e-6);
        assert!(double_dual_check(&d) < 1e-8);
        assert!(d.psi_product_residual() < 1e-10);
        for k in 0..d.surface.grid.len() {
            assert!((d.surface.g_tt[k] - 0.5).abs() < 1e-10 && (d.surface.g_ss[k] - 0.5).abs() < 1e-10);
        }
        assert!(d.boundary_radius_residual() < 1e-8);
    }

    #[test]
    fn dual_of_figure_radius_lands_on_the_equator() {
        let (p, c) =
            crate::rotational_solver::solve_target_radius(0.98, crate::rotational_solver::Branch::Rising, 1e-11)
                .unwrap();
        let d = dual_surface(&build_annulus(&p, &c, 256, 32).unwrap()).unwrap();
        assert!((d.params.r - FRAC_PI_2).abs() < 1e-8);
        assert!(d.boundary_radius_residual() < 1e-8);
        assert!((d.measured.gamma - c.params.r).abs() < 1e-6, "{}", d.measured.gamma);
    }

    #[test]
    fn dual_geometry_checks_on_the_family() {
        for r0 in [0.5, 0.9] {
            let d = dual_surface(&annulus(r0, 1024)).unwrap();
            assert!(d.minimality_residual(Stencil::Fourth) < 1e-6, "{r0}");
            assert!(d.metric_residual(Stencil::Fourth) < 1e-7, "{r0}");
            assert!(d.a_tilde_residual(Stencil::Fourth) < 1e-7, "{r0}");
            assert!(d.psi_product_residual() < 1e-7);
            assert!(double_dual_check(&d) < 1e-6);
            assert!(d.normal_residual < 1e-8);
            assert!((d.measured.r - d.params.r).abs() < 1e-8);
        }
    }

    #[test]
    fn dual_lattice_checks_are_fourth_order_near_a_thin_neck() {
        let (p, c) = solve_r0(0.2, 1e-11).unwrap();
        let at = |n| dual_surface(&build_annulus(&p, &c, n, 32).unwrap()).unwrap();
        let (coarse, fine) = (at(512), at(1024));
        let m = lattice::order_estimate(coarse.metric_residual(Stencil::Fourth), fine.metric_residual(Stencil::Fourth));
        assert!(m > 3.7, "metric order {m}");
        let h = lattice::order_estimate(
            coarse.minimality_residual(Stencil::Fourth),
            fine.minimality_residual(Stencil::Fourth),
        );
        assert!(h > 3.5, "minimality order {h}");
        assert!(fine.minimality_residual(Stencil::Fourth) < 1e-6);
    }

    #[test]
    fn gauss_map_boundary_and_nondegeneracy() {
        let a = annulus(0.85, 128);
        assert!(a.contact.params.r < FRAC_PI_2);
        let g = projected_gauss_map(&a.surface).unwrap();
        assert!(g.boundary_residual < 1e-10);
        assert!(g.min_abs_det > 0.0 && g.det_sign_constant);
    }

    #[test]
    fn gauss_map_guard() {
        let mut s = annulus(0.85, 64).surface;
        s.normals[5 * s.grid.n_s] = [1.0, 0.0, 0.0, 0.0];
        assert!(matches!(projected_gauss_map(&s), Err(DualError::ProjectionDegenerate(_))));
    }
}
