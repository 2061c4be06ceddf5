//! Symmetric tridiagonal eigenvalues by Sturm bisection, eigenvectors by inverse iteration.
//!
//! Index counting only needs inertia, which the Sturm sequence gives exactly, and the
//! reports only need the low end of each spectrum, so bisection beats a full QR sweep.

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e` (`e.len() = d.len() − 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len(), "off-diagonal length");
        Self { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let off = if i == 0 { 0.0 } else { self.e[i - 1] * self.e[i - 1] / q };
            q = self.d[i] - x - off;
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `j`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 2.0 * f64::EPSILON * scale || mid == lo || mid == hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `m` smallest eigenvalues, ascending.
    pub fn lowest(&self, m: usize) -> Vec<f64> {
        (0..m.min(self.len())).map(|j| self.eigenvalue(j)).collect()
    }

    /// Unit eigenvector for a (computed) eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.d.len();
        let (lo, hi) = self.bounds();
        let shift = lambda + 1e-10 * (hi - lo).max(1.0);
        let mut v = vec![1.0; n];
        for (i, x) in v.iter_mut().enumerate() {
            // Deterministic, non-symmetric start to avoid orthogonality with odd/even modes.
            *x += 0.1 * ((i as f64) * 0.7).sin();
        }
        for _ in 0..4 {
            v = self.solve_shifted(shift, &v);
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nrm);
        }
        v
    }

    /// Solves `(T − σI) y = b` by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        // Rows hold up to three nonzeros after pivoting: (diag, sup1, sup2).
        let mut a: Vec<[f64; 3]> =
            (0..n).map(|i| [self.d[i] - sigma, if i + 1 < n { self.e[i] } else { 0.0 }, 0.0]).collect();
        let mut sub: Vec<f64> = (0..n).map(|i| if i > 0 { self.e[i - 1] } else { 0.0 }).collect();
        let mut y = b.to_vec();
        let tiny = f64::EPSILON * self.bounds().1.abs().max(1.0);
        for i in 0..n.saturating_sub(1) {
            let l = sub[i + 1];
            if l.abs() > a[i][0].abs() {
                // Swap rows i and i+1.
                let row_i = a[i];
                let row_n = [l, a[i + 1][0], a[i + 1][1]];
                a[i] = row_n;
                let m = row_i[0] / row_n[0];
                a[i + 1] = [row_i[1] - m * row_n[1], row_i[2] - m * row_n[2], 0.0];
                y.swap(i, i + 1);
                y[i + 1] -= m * y[i];
            } else {
                let piv = if a[i][0].abs() < tiny { tiny } else { a[i][0] };
                a[i][0] = piv;
                let m = l / piv;
                a[i + 1][0] -= m * a[i][1];
                a[i + 1][1] -= m * a[i][2];
                y[i + 1] -= m * y[i];
            }
            sub[i + 1] = 0.0;
        }
        if a[n - 1][0].abs() < tiny {
            a[n - 1][0] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= a[i][1] * x[i + 1];
            }
            if i + 2 < n {
                s -= a[i][2] * x[i + 2];
            }
            x[i] = s / a[i][0];
        }
        x
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * v[i];
                if i > 0 {
                    s += self.e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.e[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn laplace_1d(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_dirichlet_laplacian_spectrum() {
        let n = 50;
        let t = laplace_1d(n);
        for j in 0..n {
            let exact = 2.0 - 2.0 * ((j + 1) as f64 * PI / (n + 1) as f64).cos();
            assert!((t.eigenvalue(j) - exact).abs() < 1e-13);
        }
        assert_eq!(t.count_below(0.0), 0);
        assert_eq!(t.count_below(4.0), n);
    }

    #[test]
    fn eigenvectors_satisfy_the_equation() {
        let t = laplace_1d(40);
        for j in [0, 3, 17] {
            let l = t.eigenvalue(j);
            let v = t.eigenvector(l);
            let tv = t.mul(&v);
            let res = tv.iter().zip(&v).map(|(a, b)| (a - l * b).abs()).fold(0.0, f64::max);
            assert!(res < 1e-10, "{j}: {res}");
        }
    }

    proptest! {
        #[test]
        fn inertia_matches_bisection(d in prop::collection::vec(-3.0f64..3.0, 2..30), seed in 0u64..1000) {
            let n = d.len();
            let e: Vec<f64> = (0..n - 1).map(|i| (((i as u64 + seed) * 7919 % 200) as f64 / 100.0) - 1.0).collect();
            let t = SymTridiag::new(d, e);
            let ev = t.lowest(n);
            for w in ev.windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-12);
            }
            let trace: f64 = t.d.iter().sum();
            prop_assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-9 * (1.0 + trace.abs()));
        }
    }
}
