//! Points, tangent vectors and caps of the unit sphere S³ ⊂ ℝ⁴, plus the two
//! conformal maps used by the cap models: stereographic projection from −e₀ with its
//! dilations, and the conformal translations of a Euclidean ball.
//!
//! Coordinates are ambient: `x = (x₀, x₁, x₂, x₃)` and caps are geodesic balls
//! `B_R = {ρ < R}` about the north pole `e₀`, where `ρ = arccos x₀`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

use crate::vec::{self, Vec3, Vec4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point too close to the projection pole -e0 (x0 = {x0})")]
    Pole { x0: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cannot normalize a zero or non-finite vector")]
    ZeroVector,
    #[error("invalid cap parameters: {0}")]
    InvalidCap(String),
}

/// Pole guard: stereographic projection is refused when `x₀ ≤ −1 + POLE_GUARD`.
pub const POLE_GUARD: f64 = 1e-9;

/// A unit vector of ℝ⁴.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coords: Vec4,
}

impl SpherePoint {
    /// Normalizes `coords` onto S³.
    pub fn new(coords: Vec4) -> Result<Self, GeometryError> {
        vec::normalize(&coords).map(|c| Self { coords: c }).ok_or(GeometryError::ZeroVector)
    }

    /// The north pole `e₀`, centre of every cap.
    pub fn north() -> Self {
        Self { coords: [1.0, 0.0, 0.0, 0.0] }
    }

    pub fn basis(i: usize) -> Self {
        Self { coords: vec::basis4(i) }
    }

    pub fn coords(&self) -> Vec4 {
        self.coords
    }

    pub fn x0(&self) -> f64 {
        self.coords[0]
    }

    /// Geodesic distance to `e₀`.
    pub fn rho(&self) -> f64 {
        clamped_acos(self.coords[0])
    }
}

/// A vector tangent to S³ at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: SpherePoint,
    pub vec: Vec4,
}

impl TangentVector {
    /// Projects `v` onto `T_base S³`.
    pub fn new(base: SpherePoint, v: Vec4) -> Self {
        let b = base.coords();
        let vec = vec::axpy(&v, -vec::dot(&b, &v), &b);
        Self { base, vec }
    }

    /// Unit vector `∂_ρ` at `p`, pointing away from `e₀`; `None` at `±e₀`.
    pub fn d_rho(p: &SpherePoint) -> Option<Self> {
        let x = p.coords();
        let rho = p.rho();
        let s = rho.sin();
        if s < 1e-14 {
            return None;
        }
        let v = vec::scale(1.0 / s, &vec::sub(&vec::scale(rho.cos(), &x), &vec::basis4(0)));
        Some(Self { base: *p, vec: v })
    }
}

/// Contact data of a capillary surface in `B_R`.
///
/// `epsilon` is the sign making `ε·A(η,η) > 0` on the boundary (±1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapParams {
    #[serde(rename = "R")]
    pub r: f64,
    pub gamma: f64,
    pub epsilon: i8,
    pub kappa: f64,
}

impl CapParams {
    pub fn new(r: f64, gamma: f64, epsilon: i8) -> Result<Self, GeometryError> {
        if !(r > 0.0 && r < std::f64::consts::PI) {
            return Err(GeometryError::InvalidCap(format!("R = {r} outside (0, π)")));
        }
        if !(gamma > 0.0 && gamma <= FRAC_PI_2 + 1e-12) {
            return Err(GeometryError::InvalidCap(format!("gamma = {gamma} outside (0, π/2]")));
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(GeometryError::InvalidCap(format!("epsilon = {epsilon} is not ±1")));
        }
        let s = r.sin();
        Ok(Self { r, gamma: gamma.min(FRAC_PI_2), epsilon, kappa: s * s })
    }
}

/// `arccos` with its argument clamped to `[−1, 1]`.
pub fn clamped_acos(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// `arcsin` with its argument clamped to `[−1, 1]`.
pub fn clamped_asin(s: f64) -> f64 {
    s.clamp(-1.0, 1.0).asin()
}

pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    clamped_acos(vec::dot(&p.coords(), &q.coords()))
}

/// Inverse stereographic projection ℝ³ → S³ (sends 0 to `e₀`, ∞ to `−e₀`).
pub fn stereographic_inv(y: &Vec3) -> SpherePoint {
    let r2 = vec::dot(y, y);
    let d = 1.0 + r2;
    let c = [(1.0 - r2) / d, 2.0 * y[0] / d, 2.0 * y[1] / d, 2.0 * y[2] / d];
    // Already unit up to roundoff; normalizing keeps the invariant at 1e-16.
    SpherePoint::new(c).expect("stereographic image is never zero")
}

/// Stereographic projection from `−e₀`: `x ↦ (x₁, x₂, x₃)/(1 + x₀)`.
pub fn stereographic(p: &SpherePoint) -> Result<Vec3, GeometryError> {
    let x = p.coords();
    if x[0] <= -1.0 + POLE_GUARD {
        return Err(GeometryError::Pole { x0: x[0] });
    }
    let d = 1.0 + x[0];
    Ok([x[1] / d, x[2] / d, x[3] / d])
}

/// Differential of [`stereographic`] at `p` applied to a tangent vector `v`.
///
/// `v/(1+x₀) − ⟨v,e₀⟩(x + e₀)/(1+x₀)²`, whose `e₀` component vanishes; the three
/// remaining components are returned.
pub fn stereographic_differential(p: &SpherePoint, v: &Vec4) -> Result<Vec3, GeometryError> {
    let x = p.coords();
    if x[0] <= -1.0 + POLE_GUARD {
        return Err(GeometryError::Pole { x0: x[0] });
    }
    let d = 1.0 + x[0];
    let k = v[0] / (d * d);
    Ok([v[1] / d - k * x[1], v[2] / d - k * x[2], v[3] / d - k * x[3]])
}

/// Euclidean dilation factor of the cap model, `λ = tan(π/4)/tan(R/2)`.
pub fn dilation_factor(r: f64) -> f64 {
    1.0 / (0.5 * r).tan()
}

/// `Φ_R = Ξ ∘ D_λ ∘ Ξ⁻¹`: stereographic dilation carrying `∂B_R` onto `∂B_{π/2}`.
pub fn conformal_dilation(r: f64, p: &SpherePoint) -> Result<SpherePoint, GeometryError> {
    if !(r > 0.0 && r < std::f64::consts::PI) {
        return Err(GeometryError::Domain(format!("R = {r} outside (0, π)")));
    }
    let y = stereographic(p)?;
    Ok(stereographic_inv(&vec::scale(dilation_factor(r), &y)))
}

/// Conformal translation `Φ_y` of the ball `𝔹_r̄`, mapping 0 to `y`.
pub fn conformal_translation(y: &Vec3, rbar: f64, x: &Vec3) -> Result<Vec3, GeometryError> {
    let y2 = vec::dot(y, y);
    if !(rbar > 0.0) || y2.sqrt() >= rbar {
        return Err(GeometryError::Domain(format!("|y| = {} not below rbar = {rbar}", y2.sqrt())));
    }
    let rb2 = rbar * rbar;
    let xy = vec::dot(x, y);
    let x2 = vec::dot(x, x);
    let den = rb2 * rb2 + 2.0 * rb2 * xy + x2 * y2;
    let a = rb2 + 2.0 * xy + x2;
    let b = rb2 - y2;
    Ok(std::array::from_fn(|i| rb2 * (a * y[i] + b * x[i]) / den))
}

/// Conformal factor of `Φ_y`: `(Φ_y)^*δ = factor² δ`.
pub fn conformal_translation_factor(y: &Vec3, rbar: f64, x: &Vec3) -> f64 {
    let rb2 = rbar * rbar;
    let y2 = vec::dot(y, y);
    let den = rb2 * rb2 + 2.0 * rb2 * vec::dot(x, y) + vec::dot(x, x) * y2;
    rb2 * (rb2 - y2) / den
}

/// Cap weight `(h_R(ρ), f_R(ρ)) = (1/(1 + cos R cos ρ), −n·log h_R)`.
pub fn cap_weight(r: f64, rho: f64, n: u32) -> Result<(f64, f64), GeometryError> {
    if !(r > 0.0 && r <= std::f64::consts::PI) || !(0.0..=std::f64::consts::PI).contains(&rho) {
        return Err(GeometryError::Domain(format!("(R, ρ) = ({r}, {rho}) out of range")));
    }
    let c = r.cos() * rho.cos();
    let d = 1.0 + c;
    if d <= 0.0 {
        return Err(GeometryError::Domain("cap weight blows up at the antipodal cap boundary".into()));
    }
    Ok((1.0 / d, f64::from(n) * c.ln_1p()))
}

/// Boundary coefficient `ct_κ(R)` of the modified Dirichlet form.
pub fn ct_coefficient(kappa: f64, r: f64) -> Result<f64, GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::Domain(format!("R = {r} must be positive")));
    }
    if kappa > 0.0 {
        let sk = kappa.sqrt();
        let a = r * sk;
        if a.sin().abs() < 1e-12 || a >= std::f64::consts::PI {
            return Err(GeometryError::Domain(format!("R√κ = {a} is not in (0, π)")));
        }
        Ok(sk / a.tan())
    } else if kappa == 0.0 {
        Ok(1.0 / r)
    } else {
        let sk = (-kappa).sqrt();
        Ok(sk / (r * sk).tanh())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn geodesic_distance_basics() {
        let e0 = SpherePoint::north();
        let m = SpherePoint::new([-1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(geodesic_distance(&e0, &e0), 0.0);
        assert_abs_diff_eq!(geodesic_distance(&e0, &m), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(geodesic_distance(&e0, &SpherePoint::basis(1)), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn stereographic_fixed_points() {
        assert_eq!(stereographic_inv(&[0.0; 3]).coords(), [1.0, 0.0, 0.0, 0.0]);
        let q = stereographic_inv(&[0.0, 0.6, 0.8]);
        assert_abs_diff_eq!(q.x0(), 0.0, epsilon = 1e-15);
        assert_eq!(stereographic(&SpherePoint::north()).unwrap(), [0.0; 3]);
        assert_eq!(stereographic(&SpherePoint::basis(1)).unwrap(), [1.0, 0.0, 0.0]);
        assert!(matches!(
            stereographic(&SpherePoint::new([-1.0, 0.0, 0.0, 0.0]).unwrap()),
            Err(GeometryError::Pole { .. })
        ));
    }

    #[test]
    fn dilation_fixes_centre_and_is_identity_at_half_pi() {
        let p = SpherePoint::new([0.3, -0.2, 0.5, 0.7]).unwrap();
        for r in [0.2, 1.0, 2.5] {
            assert_eq!(conformal_dilation(r, &SpherePoint::north()).unwrap().coords(), [1.0, 0.0, 0.0, 0.0]);
        }
        let q = conformal_dilation(FRAC_PI_2, &p).unwrap();
        assert!(vec::dist(&q.coords(), &p.coords()) < 1e-15);
    }

    #[test]
    fn dilation_is_a_homothety_onto_the_cap_model() {
        // Φ_R^*(h_R² g₁) = g₁/sin²R: compare squared lengths of a small chord.
        for r in [0.22, 0.98, 1.4, 1.95] {
            let p = SpherePoint::new([0.4, 0.1, -0.7, 0.3]).unwrap();
            let v = TangentVector::new(p, [0.2, -0.5, 0.1, 0.9]).vec;
            let h = 1e-6;
            let a = conformal_dilation(r, &SpherePoint::new(vec::axpy(&p.coords(), h, &v)).unwrap()).unwrap();
            let b = conformal_dilation(r, &SpherePoint::new(vec::axpy(&p.coords(), -h, &v)).unwrap()).unwrap();
            let img = vec::scale(0.5 / h, &vec::sub(&a.coords(), &b.coords()));
            let q = conformal_dilation(r, &p).unwrap();
            let (hr, _) = cap_weight(r, q.rho(), 2).unwrap();
            let lhs = hr * hr * vec::dot(&img, &img);
            let rhs = vec::dot(&v, &v) / (r.sin() * r.sin());
            assert!((lhs / rhs - 1.0).abs() < 1e-8, "R={r}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn translation_at_origin_and_identity() {
        let y = [0.1, -0.2, 0.3];
        let t = conformal_translation(&y, 0.8, &[0.0; 3]).unwrap();
        assert!(vec::dist(&t, &y) < 1e-15);
        let x = [0.3, 0.2, -0.1];
        assert!(vec::dist(&conformal_translation(&[0.0; 3], 0.8, &x).unwrap(), &x) < 1e-15);
        assert!(conformal_translation(&[0.9, 0.0, 0.0], 0.8, &x).is_err());
    }

    #[test]
    fn cap_weight_and_ct() {
        for (r, rho) in [(FRAC_PI_2, 0.7), (1.1, FRAC_PI_2)] {
            let (h, f) = cap_weight(r, rho, 2).unwrap();
            assert_abs_diff_eq!(h, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(f, 0.0, epsilon = 1e-15);
        }
        assert_eq!(ct_coefficient(0.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(ct_coefficient(1.0, FRAC_PI_2).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ct_coefficient(1.0, FRAC_PI_4).unwrap(), 1.0, epsilon = 1e-15);
        assert!(ct_coefficient(1.0, PI).is_err());
        assert_abs_diff_eq!(ct_coefficient(-1.0, 1.0).unwrap(), 1.0 / 1f64.tanh(), epsilon = 1e-15);
    }

    #[test]
    fn cap_params_validation() {
        let p = CapParams::new(1.0, 0.5, 1).unwrap();
        assert!((p.kappa - 1f64.sin().powi(2)).abs() < 1e-14);
        assert!(CapParams::new(1.0, 0.0, 1).is_err());
        assert!(CapParams::new(1.0, 0.5, 0).is_err());
    }

    fn unit4() -> impl Strategy<Value = Vec4> {
        prop::array::uniform4(-1.0f64..1.0).prop_filter("nonzero", |v| vec::norm(v) > 0.1)
    }

    proptest! {
        #[test]
        fn stereographic_round_trips(y in prop::array::uniform3(-20.0f64..20.0)) {
            let p = stereographic_inv(&y);
            prop_assert!((vec::norm(&p.coords()) - 1.0).abs() < 1e-12);
            let back = stereographic(&p).unwrap();
            prop_assert!(vec::dist(&back, &y) < 1e-12 * (1.0 + vec::dot(&y, &y)));
        }

        #[test]
        fn projection_then_inverse(v in unit4()) {
            let p = SpherePoint::new(v).unwrap();
            prop_assume!(p.x0() > -0.9);
            let q = stereographic_inv(&stereographic(&p).unwrap());
            prop_assert!(vec::dist(&q.coords(), &p.coords()) < 1e-12);
        }

        #[test]
        fn dilation_maps_cap_boundary_to_equator(r in 0.05f64..3.0, a in 0.0f64..6.3, b in 0.0f64..3.1) {
            let dir = [b.sin() * a.cos(), b.sin() * a.sin(), b.cos()];
            let p = SpherePoint::new([r.cos(), r.sin() * dir[0], r.sin() * dir[1], r.sin() * dir[2]]).unwrap();
            let q = conformal_dilation(r, &p).unwrap();
            prop_assert!((q.rho() - FRAC_PI_2).abs() < 1e-10);
        }

        #[test]
        fn translation_preserves_boundary(
            rbar in 0.2f64..3.0, ys in prop::array::uniform3(-0.5f64..0.5), a in 0.0f64..6.3, b in 0.0f64..3.1
        ) {
            let y = vec::scale(rbar, &ys);
            let x = [rbar * b.sin() * a.cos(), rbar * b.sin() * a.sin(), rbar * b.cos()];
            let z = conformal_translation(&y, rbar, &x).unwrap();
            prop_assert!((vec::norm(&z) - rbar).abs() < 1e-12 * rbar.max(1.0));
        }

        #[test]
        fn stereographic_differential_matches_difference(v in unit4(), w in unit4()) {
            let p = SpherePoint::new(v).unwrap();
            prop_assume!(p.x0() > -0.8);
            let t = TangentVector::new(p, w).vec;
            let h = 1e-6;
            let a = stereographic(&SpherePoint::new(vec::axpy(&p.coords(), h, &t)).unwrap()).unwrap();
            let b = stereographic(&SpherePoint::new(vec::axpy(&p.coords(), -h, &t)).unwrap()).unwrap();
            let fd = vec::scale(0.5 / h, &vec::sub(&a, &b));
            let d = stereographic_differential(&p, &t).unwrap();
            prop_assert!(vec::dist(&fd, &d) < 1e-6 * (1.0 + vec::norm(&d)));
        }

        #[test]
        fn half_pi_cap_weight_vanishes(rho in 0.0f64..PI) {
            let (h, f) = cap_weight(FRAC_PI_2, rho, 2).unwrap();
            prop_assert!(f.abs() < 1e-15 && (h - 1.0).abs() < 1e-15);
        }
    }
}
