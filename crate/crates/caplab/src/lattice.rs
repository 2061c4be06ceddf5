//! Uniform `(s, t)` lattices, difference operators, and sampled surfaces.
//!
//! The `s` direction is periodic and differentiated spectrally, so all discretization
//! error lives in `t`, where finite differences of selectable order are used. Rows run
//! over `t_i = t_min + i·h_t` for `i = 0..=n_t`; columns over `s_j = j·2π/n_s`.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::rotational_solver::Ambient;
use crate::vec::{self, Vec4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_t: usize,
    pub n_s: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl Grid {
    pub fn new(n_t: usize, n_s: usize, t_min: f64, t_max: f64) -> Self {
        assert!(n_t >= 4 && n_s >= 2 && t_max > t_min, "degenerate lattice");
        Self { n_t, n_s, t_min, t_max }
    }

    pub fn rows(&self) -> usize {
        self.n_t + 1
    }

    pub fn len(&self) -> usize {
        self.rows() * self.n_s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h_t(&self) -> f64 {
        (self.t_max - self.t_min) / self.n_t as f64
    }

    pub fn h_s(&self) -> f64 {
        2.0 * PI / self.n_s as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.n_t {
            self.t_max
        } else {
            self.t_min + i as f64 * self.h_t()
        }
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.h_s()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_s + j
    }

    pub fn is_boundary_row(&self, i: usize) -> bool {
        i == 0 || i == self.n_t
    }
}

/// Order of the `t`-direction difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Second,
    Fourth,
}

/// First `t`-derivative of a scalar lattice field.
pub fn d_t(grid: &Grid, f: &[f64], st: Stencil) -> Vec<f64> {
    let h = grid.h_t();
    let n = grid.n_t;
    let mut out = vec![0.0; f.len()];
    for j in 0..grid.n_s {
        let c = |i: usize| f[grid.idx(i, j)];
        for i in 0..=n {
            out[grid.idx(i, j)] = match st {
                Stencil::Second => {
                    if i == 0 {
                        (-3.0 * c(0) + 4.0 * c(1) - c(2)) / (2.0 * h)
                    } else if i == n {
                        (3.0 * c(n) - 4.0 * c(n - 1) + c(n - 2)) / (2.0 * h)
                    } else {
                        (c(i + 1) - c(i - 1)) / (2.0 * h)
                    }
                }
                Stencil::Fourth => {
                    if i == 0 {
                        (-25.0 * c(0) + 48.0 * c(1) - 36.0 * c(2) + 16.0 * c(3) - 3.0 * c(4)) / (12.0 * h)
                    } else if i == 1 {
                        (-3.0 * c(0) - 10.0 * c(1) + 18.0 * c(2) - 6.0 * c(3) + c(4)) / (12.0 * h)
                    } else if i == n {
                        (25.0 * c(n) - 48.0 * c(n - 1) + 36.0 * c(n - 2) - 16.0 * c(n - 3) + 3.0 * c(n - 4))
                            / (12.0 * h)
                    } else if i == n - 1 {
                        (3.0 * c(n) + 10.0 * c(n - 1) - 18.0 * c(n - 2) + 6.0 * c(n - 3) - c(n - 4)) / (12.0 * h)
                    } else {
                        (-c(i + 2) + 8.0 * c(i + 1) - 8.0 * c(i - 1) + c(i - 2)) / (12.0 * h)
                    }
                }
            };
        }
    }
    out
}

/// Second `t`-derivative of a scalar lattice field.
pub fn d_tt(grid: &Grid, f: &[f64], st: Stencil) -> Vec<f64> {
    let h2 = grid.h_t().powi(2);
    let n = grid.n_t;
    let mut out = vec![0.0; f.len()];
    for j in 0..grid.n_s {
        let c = |i: usize| f[grid.idx(i, j)];
        for i in 0..=n {
            out[grid.idx(i, j)] = match st {
                Stencil::Second => {
                    if i == 0 {
                        (2.0 * c(0) - 5.0 * c(1) + 4.0 * c(2) - c(3)) / h2
                    } else if i == n {
                        (2.0 * c(n) - 5.0 * c(n - 1) + 4.0 * c(n - 2) - c(n - 3)) / h2
                    } else {
                        (c(i + 1) - 2.0 * c(i) + c(i - 1)) / h2
                    }
                }
                Stencil::Fourth => {
                    let one_sided = |a: [f64; 6]| {
                        (45.0 * a[0] - 154.0 * a[1] + 214.0 * a[2] - 156.0 * a[3] + 61.0 * a[4] - 10.0 * a[5])
                            / (12.0 * h2)
                    };
                    let near = |a: [f64; 6]| {
                        (10.0 * a[0] - 15.0 * a[1] - 4.0 * a[2] + 14.0 * a[3] - 6.0 * a[4] + a[5]) / (12.0 * h2)
                    };
                    if i == 0 {
                        one_sided(std::array::from_fn(&c))
                    } else if i == 1 {
                        near(std::array::from_fn(&c))
                    } else if i == n {
                        one_sided(std::array::from_fn(|k| c(n - k)))
                    } else if i == n - 1 {
                        near(std::array::from_fn(|k| c(n - k)))
                    } else {
                        (-c(i + 2) + 16.0 * c(i + 1) - 30.0 * c(i) + 16.0 * c(i - 1) - c(i - 2)) / (12.0 * h2)
                    }
                }
            };
        }
    }
    out
}

/// Spectral differentiation along the periodic `s` direction.
pub struct SpectralS {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralS {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn wavenumber(&self, j: usize) -> f64 {
        if j <= self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        }
    }

    /// Derivative of the given order (1 or 2) of one periodic row.
    pub fn diff_row(&self, row: &[f64], order: u32) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex<f64>> = row.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (j, b) in buf.iter_mut().enumerate() {
            let k = self.wavenumber(j);
            let nyquist = n % 2 == 0 && j == n / 2;
            *b = match order {
                1 if nyquist => Complex::new(0.0, 0.0),
                1 => *b * Complex::new(0.0, k),
                2 => *b * (-k * k),
                _ => panic!("unsupported derivative order"),
            };
        }
        self.inv.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    pub fn diff(&self, grid: &Grid, f: &[f64], order: u32) -> Vec<f64> {
        let mut out = Vec::with_capacity(f.len());
        for i in 0..grid.rows() {
            out.extend(self.diff_row(&f[grid.idx(i, 0)..grid.idx(i, 0) + grid.n_s], order));
        }
        out
    }
}

/// Splits a lattice of 4-vectors into four scalar lattices.
pub fn components(v: &[Vec4]) -> [Vec<f64>; 4] {
    std::array::from_fn(|k| v.iter().map(|x| x[k]).collect())
}

pub fn assemble(c: &[Vec<f64>; 4]) -> Vec<Vec4> {
    (0..c[0].len()).map(|i| [c[0][i], c[1][i], c[2][i], c[3][i]]).collect()
}

/// Applies a scalar operator componentwise to a 4-vector lattice.
pub fn map4(v: &[Vec4], op: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Vec4> {
    let c = components(v);
    assemble(&[op(&c[0]), op(&c[1]), op(&c[2]), op(&c[3])])
}

/// Laplace–Beltrami operator for a diagonal metric `g_tt dt² + g_ss ds²`.
///
/// Conservative three-point form in `t` with half-node coefficients averaged from the
/// nodes, spectral in `s`. Boundary rows are left at zero.
pub fn laplacian_diag(grid: &Grid, spec: &SpectralS, g_tt: &[f64], g_ss: &[f64], u: &[f64]) -> Vec<f64> {
    let h2 = grid.h_t().powi(2);
    let u_ss = spec.diff(grid, u, 2);
    let mut out = vec![0.0; u.len()];
    let p: Vec<f64> = g_tt.iter().zip(g_ss).map(|(a, b)| (b / a).sqrt()).collect();
    for i in 1..grid.n_t {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            let (kp, km) = (grid.idx(i + 1, j), grid.idx(i - 1, j));
            let pp = 0.5 * (p[k] + p[kp]);
            let pm = 0.5 * (p[k] + p[km]);
            let sqrt_g = (g_tt[k] * g_ss[k]).sqrt();
            out[k] = (pp * (u[kp] - u[k]) - pm * (u[k] - u[km])) / (h2 * sqrt_g) + u_ss[k] / g_ss[k];
        }
    }
    out
}

/// Laplace–Beltrami operator with a selectable `t` stencil.
///
/// `Second` is [`laplacian_diag`]; `Fourth` nests two fourth-order first derivatives,
/// `(∂_t(p ∂_t u))/√g`, with the usual one-sided closures. Boundary rows are left at zero.
pub fn laplacian_diag_with(
    grid: &Grid,
    spec: &SpectralS,
    g_tt: &[f64],
    g_ss: &[f64],
    u: &[f64],
    st: Stencil,
) -> Vec<f64> {
    if st == Stencil::Second {
        return laplacian_diag(grid, spec, g_tt, g_ss, u);
    }
    let u_t = d_t(grid, u, st);
    let flux: Vec<f64> = (0..u.len()).map(|k| (g_ss[k] / g_tt[k]).sqrt() * u_t[k]).collect();
    let div = d_t(grid, &flux, st);
    let u_ss = spec.diff(grid, u, 2);
    let mut out = vec![0.0; u.len()];
    for i in 1..grid.n_t {
        for j in 0..grid.n_s {
            let k = grid.idx(i, j);
            out[k] = div[k] / (g_tt[k] * g_ss[k]).sqrt() + u_ss[k] / g_ss[k];
        }
    }
    out
}

/// Outward conormal derivative `∂_η u = ±∂_t u/√g_tt` on both boundary rows.
///
/// Returns `(row 0 values, row n_t values)` computed with one-sided stencils.
pub fn conormal_derivative(grid: &Grid, g_tt: &[f64], u: &[f64], st: Stencil) -> (Vec<f64>, Vec<f64>) {
    let du = d_t(grid, u, st);
    let n = grid.n_t;
    let lo = (0..grid.n_s).map(|j| -du[grid.idx(0, j)] / g_tt[grid.idx(0, j)].sqrt()).collect();
    let hi = (0..grid.n_s).map(|j| du[grid.idx(n, j)] / g_tt[grid.idx(n, j)].sqrt()).collect();
    (lo, hi)
}

/// Trapezoid weights in `t` times rectangle weights in `s`.
pub fn quadrature_weight(grid: &Grid, i: usize) -> f64 {
    let w = if grid.is_boundary_row(i) { 0.5 } else { 1.0 };
    w * grid.h_t() * grid.h_s()
}

/// A surface sampled on a lattice, with its first and second fundamental forms.
#[derive(Debug, Clone)]
pub struct SampledSurface {
    pub grid: Grid,
    pub ambient: Ambient,
    pub points: Vec<Vec4>,
    pub normals: Vec<Vec4>,
    pub x_t: Vec<Vec4>,
    pub x_s: Vec<Vec4>,
    pub g_tt: Vec<f64>,
    pub g_ts: Vec<f64>,
    pub g_ss: Vec<f64>,
    pub a_tt: Vec<f64>,
    pub a_ts: Vec<f64>,
    pub a_ss: Vec<f64>,
}

impl SampledSurface {
    pub fn det_g(&self, k: usize) -> f64 {
        self.g_tt[k] * self.g_ss[k] - self.g_ts[k] * self.g_ts[k]
    }

    /// `H = g^{ij} A_ij`.
    pub fn mean_curvature(&self, k: usize) -> f64 {
        (self.g_ss[k] * self.a_tt[k] - 2.0 * self.g_ts[k] * self.a_ts[k] + self.g_tt[k] * self.a_ss[k]) / self.det_g(k)
    }

    /// `|A|² = g^{ik} g^{jl} A_ij A_kl`.
    pub fn norm_a_sq(&self, k: usize) -> f64 {
        let d = self.det_g(k);
        let (itt, its, iss) = (self.g_ss[k] / d, -self.g_ts[k] / d, self.g_tt[k] / d);
        // Mixed tensor S = g⁻¹A; |A|² = tr(S²).
        let s11 = itt * self.a_tt[k] + its * self.a_ts[k];
        let s12 = itt * self.a_ts[k] + its * self.a_ss[k];
        let s21 = its * self.a_tt[k] + iss * self.a_ts[k];
        let s22 = its * self.a_ts[k] + iss * self.a_ss[k];
        s11 * s11 + 2.0 * s12 * s21 + s22 * s22
    }

    /// `|Å|² = |A|² − H²/2`.
    pub fn traceless_norm_sq(&self, k: usize) -> f64 {
        let h = self.mean_curvature(k);
        self.norm_a_sq(k) - 0.5 * h * h
    }

    pub fn max_mean_curvature(&self) -> f64 {
        (0..self.grid.len()).map(|k| self.mean_curvature(k).abs()).fold(0.0, f64::max)
    }
}

/// Unit normal spanned-complement of `x`, `x_t`, `x_s` (sphere) or `e₀`, `x_t`, `x_s` (Euclid).
pub fn normal_from_tangents(ambient: Ambient, x: &Vec4, x_t: &Vec4, x_s: &Vec4) -> Vec4 {
    let first = match ambient {
        Ambient::Sphere => *x,
        Ambient::Euclid => vec::basis4(0),
    };
    let n = vec::cross4(&first, x_t, x_s);
    vec::normalize(&n).unwrap_or([f64::NAN; 4])
}

/// Rebuilds tangents, normal and second fundamental form of a point lattice by
/// differences, orienting the normal along `reference` where given.
pub fn fd_geometry(
    grid: Grid,
    ambient: Ambient,
    points: Vec<Vec4>,
    reference: Option<&[Vec4]>,
    st: Stencil,
) -> SampledSurface {
    let spec = SpectralS::new(grid.n_s);
    let x_t = map4(&points, |f| d_t(&grid, f, st));
    let x_s = map4(&points, |f| spec.diff(&grid, f, 1));
    let x_tt = map4(&points, |f| d_tt(&grid, f, st));
    let x_ss = map4(&points, |f| spec.diff(&grid, f, 2));
    let x_ts = map4(&x_s, |f| d_t(&grid, f, st));
    let n = grid.len();
    let mut normals = Vec::with_capacity(n);
    let (mut g_tt, mut g_ts, mut g_ss) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut a_tt, mut a_ts, mut a_ss) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let mut nu = normal_from_tangents(ambient, &points[k], &x_t[k], &x_s[k]);
        if let Some(r) = reference {
            if vec::dot(&nu, &r[k]) < 0.0 {
                nu = vec::scale(-1.0, &nu);
            }
        }
        g_tt[k] = vec::dot(&x_t[k], &x_t[k]);
        g_ts[k] = vec::dot(&x_t[k], &x_s[k]);
        g_ss[k] = vec::dot(&x_s[k], &x_s[k]);
        a_tt[k] = -vec::dot(&nu, &x_tt[k]);
        a_ts[k] = -vec::dot(&nu, &x_ts[k]);
        a_ss[k] = -vec::dot(&nu, &x_ss[k]);
        normals.push(nu);
    }
    SampledSurface { grid, ambient, points, normals, x_t, x_s, g_tt, g_ts, g_ss, a_tt, a_ts, a_ss }
}

/// Observed convergence order between two residuals at spacings `h` and `h/2`.
pub fn order_estimate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_field(grid: &Grid, deg: i32) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut f = vec![0.0; grid.len()];
        let mut df = vec![0.0; grid.len()];
        let mut ddf = vec![0.0; grid.len()];
        for i in 0..grid.rows() {
            let t = grid.t(i);
            for j in 0..grid.n_s {
                let k = grid.idx(i, j);
                f[k] = t.powi(deg);
                df[k] = f64::from(deg) * t.powi(deg - 1);
                ddf[k] = f64::from(deg * (deg - 1)) * t.powi(deg - 2);
            }
        }
        (f, df, ddf)
    }

    #[test]
    fn stencils_are_exact_on_polynomials() {
        let grid = Grid::new(12, 4, -0.7, 1.3);
        for (st, max_deg_d, max_deg_dd) in [(Stencil::Second, 2, 3), (Stencil::Fourth, 4, 5)] {
            for deg in 2..=max_deg_d {
                let (f, df, _) = poly_field(&grid, deg);
                let d = d_t(&grid, &f, st);
                for k in 0..f.len() {
                    assert!((d[k] - df[k]).abs() < 1e-10, "{st:?} deg {deg}");
                }
            }
            for deg in 2..=max_deg_dd {
                let (f, _, ddf) = poly_field(&grid, deg);
                let d = d_tt(&grid, &f, st);
                for k in 0..f.len() {
                    assert!((d[k] - ddf[k]).abs() < 1e-8, "{st:?} deg {deg}: {} vs {}", d[k], ddf[k]);
                }
            }
        }
    }

    #[test]
    fn spectral_s_derivative_is_exact_for_trig_rows() {
        let grid = Grid::new(4, 16, 0.0, 1.0);
        let spec = SpectralS::new(16);
        let f: Vec<f64> = (0..grid.len()).map(|k| (3.0 * grid.s(k % 16)).sin() + (grid.s(k % 16)).cos()).collect();
        let d1 = spec.diff(&grid, &f, 1);
        let d2 = spec.diff(&grid, &f, 2);
        for k in 0..f.len() {
            let s = grid.s(k % 16);
            assert!((d1[k] - (3.0 * (3.0 * s).cos() - s.sin())).abs() < 1e-12);
            assert!((d2[k] - (-9.0 * (3.0 * s).sin() - s.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_laplacian_second_order() {
        // Flat metric: Δ(sin t cos s) = −2 sin t cos s.
        let err = |n_t: usize| {
            let grid = Grid::new(n_t, 8, 0.0, 2.0);
            let spec = SpectralS::new(8);
            let ones = vec![1.0; grid.len()];
            let u: Vec<f64> = (0..grid.len()).map(|k| grid.t(k / 8).sin() * grid.s(k % 8).cos()).collect();
            let l = laplacian_diag(&grid, &spec, &ones, &ones, &u);
            (8..grid.len() - 8).map(|k| (l[k] + 2.0 * u[k]).abs()).fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn cross_normal_is_unit() {
        let n =
            normal_from_tangents(Ambient::Sphere, &[1.0, 0.0, 0.0, 0.0], &[0.0, 2.0, 0.0, 0.0], &[0.0, 0.0, 3.0, 0.0]);
        assert_eq!(n, [0.0, 0.0, 0.0, 1.0]);
    }
}
