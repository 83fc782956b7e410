use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::ShError;

/// Flat coefficient index of `(l, m)`: `l² + l + m`.
#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients through band `n`.
#[inline]
pub fn coeff_count(n: usize) -> usize {
    (n + 1) * (n + 1)
}

/// Real orthonormal `Y_l^m(dir)` without the Condon-Shortley phase.
pub fn sh_basis<T: Scalar>(l: usize, m: i64, dir: Vec3<T>) -> Result<T, ShError> {
    if m.unsigned_abs() as usize > l {
        return Err(ShError::InvalidOrder { l, m });
    }
    let mut out = vec![T::zero(); coeff_count(l)];
    sh_basis_all(l, dir, &mut out);
    Ok(out[sh_index(l, m)])
}

/// Writes every `Y_l^m(dir)` with `l <= n` into `out` in flat index order.
///
/// Uses the associated Legendre recurrences with the `sin^m θ` factor folded
/// into `(x + iy)^m`, so no division by `sin θ` is needed at the poles.
pub fn sh_basis_all<T: Scalar>(n: usize, dir: Vec3<T>, out: &mut [T]) {
    assert!(out.len() >= coeff_count(n), "output buffer too small");
    let (x, y, z) = (dir.x(), dir.y(), dir.z());
    let sqrt2 = T::SQRT_2();
    // q holds P̄_l^m / sin^m θ for the current m and the two previous l.
    let mut qmm = T::one() / (T::lit(4.0) * T::PI()).sqrt();
    let (mut re, mut im) = (T::one(), T::zero());
    for m in 0..=n {
        if m > 0 {
            let mf = T::of_usize(m);
            qmm *= ((T::lit(2.0) * mf + T::one()) / (T::lit(2.0) * mf)).sqrt();
            let nre = re * x - im * y;
            im = re * y + im * x;
            re = nre;
        }
        let put = |l: usize, q: T, out: &mut [T]| {
            let base = l * l + l;
            if m == 0 {
                out[base] = q;
            } else {
                out[base + m] = sqrt2 * q * re;
                out[base - m] = sqrt2 * q * im;
            }
        };
        put(m, qmm, out);
        if m == n {
            break;
        }
        let mut q_prev = qmm;
        let mut q = (T::lit(2.0) * T::of_usize(m) + T::lit(3.0)).sqrt() * z * qmm;
        put(m + 1, q, out);
        for l in (m + 2)..=n {
            let lf = T::of_usize(l);
            let mf = T::of_usize(m);
            let l2 = lf * lf;
            let m2 = mf * mf;
            let a = ((T::lit(4.0) * l2 - T::one()) / (l2 - m2)).sqrt();
            let lm1 = lf - T::one();
            let b = ((lm1 * lm1 - m2) / (T::lit(4.0) * lm1 * lm1 - T::one())).sqrt();
            let next = a * (z * q - b * q_prev);
            q_prev = q;
            q = next;
            put(l, q, out);
        }
    }
}
