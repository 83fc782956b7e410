use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::{SpheremapError, SphericalMesh};

/// Corresponding points between a source and a target sphere, given as
/// vertex id pairs `[src, tar]` and/or explicit direction pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<[[f64; 3]; 2]>,
}

impl LandmarkSet {
    pub fn load(path: &Path) -> Result<Self, SpheremapError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpheremapError::Landmarks(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| SpheremapError::Landmarks(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len() + self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Resolves every landmark to a `(source, target)` direction pair.
    pub fn resolve<T: Scalar>(
        &self,
        src: &[Vec3<T>],
        tar: &[Vec3<T>],
    ) -> Result<Vec<(Vec3<T>, Vec3<T>)>, SpheremapError> {
        let mut out = Vec::with_capacity(self.len());
        for &[s, t] in &self.pairs {
            for (v, n) in [(s, src.len()), (t, tar.len())] {
                if v >= n {
                    return Err(SpheremapError::LandmarkOutOfRange { vertex: v, count: n });
                }
            }
            out.push((src[s], tar[t]));
        }
        for [s, t] in &self.directions {
            let f = |a: &[f64; 3]| Vec3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2])).normalized();
            out.push((f(s), f(t)));
        }
        Ok(out)
    }
}

/// Least-squares proper rotation `R` minimising `Σ |R·tar_i - src_i|²`
/// (Horn's quaternion method).
pub fn procrustes_rotation<T: Scalar>(pairs: &[(Vec3<T>, Vec3<T>)]) -> Result<Matrix<T>, SpheremapError> {
    if pairs.len() < 3 {
        return Err(SpheremapError::TooFewLandmarks(pairs.len()));
    }
    let spread = |pick: &dyn Fn(&(Vec3<T>, Vec3<T>)) -> Vec3<T>| {
        let mut m = Matrix::zeros(3, 3);
        for p in pairs {
            let d = pick(p);
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] += d[i] * d[j];
                }
            }
        }
        let (ev, _) = symmetric_eigen(&m);
        ev[1] > T::lit(1e-10) * ev[0]
    };
    if !spread(&|p| p.0) || !spread(&|p| p.1) {
        return Err(SpheremapError::CollinearLandmarks);
    }

    // s[i][j] = Σ tar_i src_j
    let mut s = [[T::zero(); 3]; 3];
    for (src, tar) in pairs {
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] += tar[i] * src[j];
            }
        }
    }
    let [[sxx, sxy, sxz], [syx, syy, syz], [szx, szy, szz]] = s;
    let n = Matrix::from_rows(&[
        vec![sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        vec![syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        vec![szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        vec![sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ]);
    let (_, vecs) = symmetric_eigen(&n);
    let (w, x, y, z) = (vecs[(0, 0)], vecs[(1, 0)], vecs[(2, 0)], vecs[(3, 0)]);
    let q = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / q, x / q, y / q, z / q);
    let one = T::one();
    let two = T::lit(2.0);
    Ok(Matrix::from_rows(&[
        vec![one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
        vec![two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
        vec![two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
    ]))
}

/// Rotates `tar` onto `src` using the landmarks and returns the rotation.
pub fn align_spheres<T: Scalar>(
    src: &SphericalMesh<T>,
    tar: &mut SphericalMesh<T>,
    landmarks: &LandmarkSet,
) -> Result<Matrix<T>, SpheremapError> {
    let pairs = landmarks.resolve(src.sphere_positions(), tar.sphere_positions())?;
    let r = procrustes_rotation(&pairs)?;
    tar.rotate(&r);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot_z(deg: f64) -> Matrix<f64> {
        let (s, c) = deg.to_radians().sin_cos();
        Matrix::from_rows(&[vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]])
    }

    fn apply(r: &Matrix<f64>, p: Vec3<f64>) -> Vec3<f64> {
        let v = r.mul_vec(&p.0);
        Vec3::new(v[0], v[1], v[2])
    }

    #[test]
    fn recovers_inverse_of_known_rotation() {
        let r0 = rot_z(30.0);
        let src: Vec<Vec3<f64>> = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.6, 0.8),
            Vec3::new(-0.48, 0.6, -0.64),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let pairs: Vec<_> = src.iter().map(|&s| (s, apply(&r0, s))).collect();
        let r = procrustes_rotation(&pairs).unwrap();
        assert!(r.max_abs_diff(&r0.transpose()) < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_and_short_sets_are_rejected() {
        let e = Vec3::new(0.0, 0.0, 1.0);
        let pairs = vec![(e, e), (-e, -e), (e, e)];
        assert!(matches!(procrustes_rotation(&pairs), Err(SpheremapError::CollinearLandmarks)));
        assert!(matches!(procrustes_rotation(&pairs[..2]), Err(SpheremapError::TooFewLandmarks(2))));
    }

    #[test]
    fn landmark_json_shape() {
        let l: LandmarkSet = serde_json::from_str(r#"{"pairs": [[0, 3], [5, 7]]}"#).unwrap();
        assert_eq!(l.pairs, vec![[0, 3], [5, 7]]);
        assert!(l.directions.is_empty());
    }
}
