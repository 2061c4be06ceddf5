//! Fixed-size vector helpers for ambient ℝ³ and ℝ⁴ coordinates.

pub type Vec3 = [f64; 3];
pub type Vec4 = [f64; 4];

#[inline]
pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] - b[i])
}

#[inline]
pub fn scale<const N: usize>(s: f64, a: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| s * a[i])
}

/// `a + s·b`
#[inline]
pub fn axpy<const N: usize>(a: &[f64; N], s: f64, b: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] + s * b[i])
}

#[inline]
pub fn dist<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    norm(&sub(a, b))
}

/// Unit vector along `a`, or `None` for a (numerically) zero vector.
pub fn normalize<const N: usize>(a: &[f64; N]) -> Option<[f64; N]> {
    let n = norm(a);
    if n.is_finite() && n > 1e-300 {
        Some(scale(1.0 / n, a))
    } else {
        None
    }
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Ternary cross product in ℝ⁴: the vector `n` with `⟨n, v⟩ = det(a, b, c, v)`.
///
/// It is orthogonal to `a`, `b` and `c`, and its length is the 3-volume they span.
pub fn cross4(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&j| j != i).collect();
        let m = [
            [a[cols[0]], a[cols[1]], a[cols[2]]],
            [b[cols[0]], b[cols[1]], b[cols[2]]],
            [c[cols[0]], c[cols[1]], c[cols[2]]],
        ];
        // Cofactor expansion along the fourth row of (a; b; c; v).
        let sign = if (i + 3) % 2 == 0 { 1.0 } else { -1.0 };
        *o = sign * det3(m);
    }
    out
}

/// `e_i` in ℝ⁴.
pub fn basis4(i: usize) -> Vec4 {
    let mut e = [0.0; 4];
    e[i] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross4_is_orthogonal_and_oriented() {
        let a = [1.0, 0.3, -0.2, 0.5];
        let b = [0.1, 1.0, 0.7, -0.4];
        let c = [0.2, -0.6, 1.0, 0.9];
        let n = cross4(&a, &b, &c);
        for v in [a, b, c] {
            assert!(dot(&n, &v).abs() < 1e-14);
        }
        // ⟨n, e3⟩ equals det(a, b, c, e3) for the standard basis.
        let n0 = cross4(&basis4(0), &basis4(1), &basis4(2));
        assert_eq!(n0, [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cross3_right_handed() {
        assert_eq!(cross3(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
    }
}
