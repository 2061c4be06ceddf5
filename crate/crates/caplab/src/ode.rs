//! Dormand–Prince 5(4) with Hairer's continuous extension.
//!
//! The integrator is generic over the state dimension and over the error type the
//! right-hand side may raise, so a singular right-hand side can abort the run with its
//! own diagnosis instead of a NaN.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError<E> {
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: E },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {0} steps")]
    MaxSteps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// First trial step; a small fraction of the span when absent.
    pub h_init: Option<f64>,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-11, h_max: 0.1, h_min: 1e-13, max_steps: 200_000, h_init: None }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Interpolated state at `t ∈ [t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn y0(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn y1(&self) -> [f64; N] {
        std::array::from_fn(|i| self.rcont[0][i] + self.rcont[1][i])
    }
}

/// Dense solution on `[t_start, t_end]`, forward in time.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
    pub rejected: usize,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.t0)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t1())
    }

    /// Index of the step whose closed interval contains `t` (clamped to the ends).
    pub fn locate(&self, t: f64) -> usize {
        let idx = self.steps.partition_point(|s| s.t1() < t);
        idx.min(self.steps.len().saturating_sub(1))
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        self.steps[self.locate(t)].eval(t)
    }

    /// Accepted step nodes including both ends.
    pub fn nodes(&self) -> Vec<(f64, [f64; N])> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        if let Some(s) = self.steps.first() {
            out.push((s.t0, s.y0()));
        }
        out.extend(self.steps.iter().map(|s| (s.t1(), s.y1())));
        out
    }
}

fn lin<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `t_end > t0`.
pub fn integrate<const N: usize, E, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Dopri5Options,
) -> Result<DenseSolution<N>, OdeError<E>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let call = |t: f64, y: &[f64; N]| f(t, y).map_err(|source| OdeError::Rhs { t, source });
    let mut t = t0;
    let mut y = y0;
    let mut k1 = call(t, &y)?;
    let span = t_end - t0;
    let mut h = opts.h_init.unwrap_or((0.01 * span).min(1e-3 * span.max(1.0))).min(opts.h_max);
    let mut steps = Vec::new();
    let mut rejected = 0;
    let mut last_rhs_err: Option<OdeError<E>> = None;

    while t < t_end {
        if steps.len() + rejected >= opts.max_steps {
            return Err(OdeError::MaxSteps(opts.max_steps));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let trial = (|| {
            let k2 = call(t + C2 * h, &lin(&y, h, &[(A21, &k1)]))?;
            let k3 = call(t + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = call(t + C4 * h, &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = call(t + C5 * h, &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = call(t + h, &lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
            let y1 = lin(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = call(t + h, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        let (_k2, k3, k4, k5, k6, k7, y1) = match trial {
            Ok(v) => v,
            Err(e) => {
                // A stage left the admissible region: shrink and retry.
                rejected += 1;
                h *= 0.25;
                if h < opts.h_min {
                    return Err(last_rhs_err.take().unwrap_or(e));
                }
                last_rhs_err = Some(e);
                continue;
            }
        };
        let mut err2 = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err2 += (e / sc).powi(2);
        }
        let err = (err2 / N as f64).sqrt();
        if !err.is_finite() {
            rejected += 1;
            h *= 0.25;
            if h < opts.h_min {
                return Err(OdeError::StepUnderflow { t, h });
            }
            continue;
        }
        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
        if err <= 1.0 {
            let rc2: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let rc3: [f64; N] = std::array::from_fn(|i| h * k1[i] - rc2[i]);
            let rc4: [f64; N] = std::array::from_fn(|i| rc2[i] - h * k7[i] - rc3[i]);
            let rc5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            steps.push(DenseStep { t0: t, h, rcont: [y, rc2, rc3, rc4, rc5] });
            t = if last { t_end } else { t + h };
            y = y1;
            k1 = k7;
            last_rhs_err = None;
            h = (h * fac).min(opts.h_max);
        } else {
            rejected += 1;
            h *= fac.min(1.0);
        }
        if h < opts.h_min && t < t_end {
            return Err(OdeError::StepUnderflow { t, h });
        }
    }
    Ok(DenseSolution { steps, rejected })
}

/// `steps` equal Dormand–Prince 5th-order steps from `t0` to `t1`, without error control.
///
/// Used to sample a solution on a uniform lattice: the global error of a fixed step
/// sequence is a smooth function of `t`, so lattice differences do not amplify it the way
/// they amplify the step-to-step jumps of a dense interpolant.
pub fn fixed_steps<const N: usize, E, F>(f: F, t0: f64, y0: [f64; N], t1: f64, steps: usize) -> Result<[f64; N], E>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + C2 * h, &lin(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(t + C5 * h, &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = f(t + h, &lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        y = lin(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64; 2]) -> Result<[f64; 2], ()> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn nodes_match_exact_solution() {
        let opts = Dopri5Options { rtol: 1e-12, atol: 1e-12, ..Default::default() };
        let sol = integrate(harmonic, 0.0, [1.0, 0.0], 10.0, &opts).unwrap();
        for (t, y) in sol.nodes() {
            assert!((y[0] - t.cos()).abs() < 1e-10, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-10);
        }
        assert_eq!(sol.t_end(), 10.0);
    }

    #[test]
    fn dense_output_is_accurate_between_nodes() {
        let opts = Dopri5Options { rtol: 1e-11, atol: 1e-11, ..Default::default() };
        let sol = integrate(harmonic, 0.0, [1.0, 0.0], 6.0, &opts).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=6000 {
            let t = i as f64 * 1e-3;
            let y = sol.eval(t);
            worst = worst.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
        }
        assert!(worst < 1e-9, "dense error {worst:e}");
    }

    #[test]
    fn dense_output_has_fourth_order_local_error() {
        // One fixed large step: the interpolant error at the midpoint scales like h⁵.
        let err_at = |h: f64| {
            let opts = Dopri5Options { rtol: 1.0, atol: 1.0, h_max: h, h_init: Some(h), ..Default::default() };
            let sol = integrate(|_t, y: &[f64; 1]| Ok::<_, ()>([y[0]]), 0.0, [1.0], h, &opts).unwrap();
            assert_eq!(sol.steps.len(), 1);
            (sol.eval(0.5 * h)[0] - (0.5 * h).exp()).abs()
        };
        let ratio = err_at(0.4) / err_at(0.2);
        assert!(ratio > 20.0, "ratio {ratio}");
    }

    #[test]
    fn fixed_steps_are_fifth_order() {
        let err = |n| (fixed_steps(harmonic, 0.0, [1.0, 0.0], 2.0, n).unwrap()[0] - 2f64.cos()).abs();
        let ratio = err(40) / err(80);
        assert!(ratio > 27.0 && ratio < 37.0, "ratio {ratio}");
    }

    #[test]
    fn rhs_errors_surface() {
        let f = |t: f64, y: &[f64; 1]| if t > 1.0 { Err("blocked") } else { Ok([y[0]]) };
        let r = integrate(f, 0.0, [1.0], 2.0, &Dopri5Options::default());
        assert!(matches!(r, Err(OdeError::Rhs { source: "blocked", .. })));
    }
}
