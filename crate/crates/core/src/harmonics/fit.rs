use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{qr_least_squares, Cholesky, Matrix};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::basis::{coeff_count, sh_basis_all};
use super::{Pdf, Property, ShError};

/// Directions, values and patch mask for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSamples<T> {
    pub directions: Vec<Vec3<T>>,
    pub values: Vec<T>,
    pub mask: Vec<bool>,
}

impl<T: Scalar> SphericalSamples<T> {
    pub fn new(directions: Vec<Vec3<T>>, values: Vec<T>, mask: Vec<bool>) -> Result<Self, ShError> {
        if directions.len() != values.len() || directions.len() != mask.len() {
            return Err(ShError::LengthMismatch {
                directions: directions.len(),
                values: values.len(),
                mask: mask.len(),
            });
        }
        check_unit(&directions)?;
        Ok(SphericalSamples {
            directions,
            values,
            mask,
        })
    }

    /// Every sample inside the mask.
    pub fn unmasked(directions: Vec<Vec3<T>>, values: Vec<T>) -> Result<Self, ShError> {
        let mask = vec![true; directions.len()];
        Self::new(directions, values, mask)
    }
}

fn check_unit<T: Scalar>(directions: &[Vec3<T>]) -> Result<(), ShError> {
    let tol = T::lit(1e-6).max(T::epsilon() * T::lit(16.0));
    for (index, d) in directions.iter().enumerate() {
        let norm = d.norm();
        if (norm - T::one()).abs() > tol {
            return Err(ShError::NotUnit {
                index,
                norm: norm.as_f64(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Cholesky on the regularized normal equations.
    Cholesky,
    /// Householder QR on the weighted, regularization-augmented system.
    Qr,
}

/// Treatment of samples outside the patch mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutOfMask {
    /// Included as exact zeros with full weight.
    Zero,
    /// Left out of the objective.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub order: usize,
    pub regularization: f64,
    pub solver: Solver,
    pub out_of_mask: OutOfMask,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            order: 16,
            regularization: 1e-8,
            solver: Solver::Cholesky,
            out_of_mask: OutOfMask::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub pdf: Pdf<T>,
    /// Area-weighted RMS of `eval - value` over the masked samples.
    pub residual: T,
    /// Area-weighted RMS over every sample that entered the objective.
    pub objective_residual: T,
}

const ROW_CHUNK: usize = 512;

/// Weighted least-squares fitter for a fixed set of sample directions.
///
/// The design matrix is evaluated once. With [`OutOfMask::Zero`] the normal
/// matrix does not depend on the mask, so it is factored once and reused for
/// every patch and property fitted on the same sphere.
#[derive(Debug, Clone)]
pub struct ShFitter<T> {
    opts: FitOptions,
    k: usize,
    design: Vec<T>,
    weights: Vec<T>,
    shared: Option<Cholesky<T>>,
}

impl<T: Scalar> ShFitter<T> {
    pub fn new(directions: &[Vec3<T>], weights: Vec<T>, opts: FitOptions) -> Result<Self, ShError> {
        if weights.len() != directions.len() {
            return Err(ShError::LengthMismatch {
                directions: directions.len(),
                values: weights.len(),
                mask: directions.len(),
            });
        }
        check_unit(directions)?;
        let k = coeff_count(opts.order);
        let mut design = vec![T::zero(); directions.len() * k];
        design
            .par_chunks_mut(k)
            .zip(directions.par_iter())
            .for_each(|(row, &d)| sh_basis_all(opts.order, d, row));
        let mut fitter = ShFitter {
            opts,
            k,
            design,
            weights,
            shared: None,
        };
        if opts.out_of_mask == OutOfMask::Zero && opts.solver == Solver::Cholesky {
            let all = vec![true; directions.len()];
            fitter.shared = Some(fitter.factor(&all)?);
        }
        Ok(fitter)
    }

    pub fn options(&self) -> &FitOptions {
        &self.opts
    }

    pub fn sample_count(&self) -> usize {
        self.weights.len()
    }

    fn row(&self, v: usize) -> &[T] {
        &self.design[v * self.k..(v + 1) * self.k]
    }

    fn normal_matrix(&self, include: &[bool]) -> Matrix<T> {
        let k = self.k;
        // Fixed chunking and an in-order sum keep the result independent of
        // the thread count.
        let partials: Vec<Vec<T>> = (0..self.weights.len())
            .collect::<Vec<_>>()
            .par_chunks(ROW_CHUNK)
            .map(|rows| {
                let mut acc = vec![T::zero(); k * k];
                for &v in rows {
                    if !include[v] {
                        continue;
                    }
                    let w = self.weights[v];
                    let a = self.row(v);
                    for i in 0..k {
                        let wi = w * a[i];
                        let dst = &mut acc[i * k..i * k + i + 1];
                        for (d, &aj) in dst.iter_mut().zip(&a[..=i]) {
                            *d += wi * aj;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut n = vec![T::zero(); k * k];
        for p in partials {
            for (d, s) in n.iter_mut().zip(p) {
                *d += s;
            }
        }
        let lambda = T::lit(self.opts.regularization);
        for i in 0..k {
            n[i * k + i] += lambda;
            for j in 0..i {
                n[j * k + i] = n[i * k + j];
            }
        }
        Matrix::from_row_major(k, k, n)
    }

    fn factor(&self, include: &[bool]) -> Result<Cholesky<T>, ShError> {
        let samples = include.iter().filter(|&&b| b).count();
        let rank_error = ShError::RankDeficient {
            samples,
            coefficients: self.k,
        };
        if self.opts.regularization <= 0.0 && samples < self.k {
            return Err(rank_error);
        }
        self.normal_matrix(include).cholesky().ok_or(rank_error)
    }

    /// Fits `values` (zero-filled outside `mask` or dropped, per options).
    pub fn fit(&self, property: Property, values: &[T], mask: &[bool]) -> Result<FitResult<T>, ShError> {
        let v = self.weights.len();
        if values.len() != v || mask.len() != v {
            return Err(ShError::LengthMismatch {
                directions: v,
                values: values.len(),
                mask: mask.len(),
            });
        }
        let include: Vec<bool> = match self.opts.out_of_mask {
            OutOfMask::Zero => vec![true; v],
            OutOfMask::Drop => mask.to_vec(),
        };
        let target: Vec<T> = values
            .iter()
            .zip(mask)
            .map(|(&x, &m)| if m { x } else { T::zero() })
            .collect();

        let coeffs = match self.opts.solver {
            Solver::Cholesky => {
                let rhs = self.weighted_rhs(&target, &include);
                match &self.shared {
                    Some(ch) => ch.solve(&rhs),
                    None => self.factor(&include)?.solve(&rhs),
                }
            }
            Solver::Qr => self.solve_qr(&target, &include)?,
        };
        let pdf = Pdf::from_flat(property, self.opts.order, &coeffs)?;
        let fitted = self.evaluate(&pdf);
        let rms = |sel: &dyn Fn(usize) -> bool| {
            let (mut num, mut den) = (T::zero(), T::zero());
            for i in (0..v).filter(|&i| sel(i)) {
                let r = fitted[i] - target[i];
                num += self.weights[i] * r * r;
                den += self.weights[i];
            }
            if den > T::zero() {
                (num / den).sqrt()
            } else {
                T::zero()
            }
        };
        Ok(FitResult {
            pdf,
            residual: rms(&|i| mask[i]),
            objective_residual: rms(&|i| include[i]),
        })
    }

    fn weighted_rhs(&self, target: &[T], include: &[bool]) -> Vec<T> {
        let k = self.k;
        let mut rhs = vec![T::zero(); k];
        for v in 0..target.len() {
            if !include[v] || target[v].is_zero() {
                continue;
            }
            let s = self.weights[v] * target[v];
            for (r, &a) in rhs.iter_mut().zip(self.row(v)) {
                *r += s * a;
            }
        }
        rhs
    }

    fn solve_qr(&self, target: &[T], include: &[bool]) -> Result<Vec<T>, ShError> {
        let k = self.k;
        let rows: Vec<usize> = (0..target.len()).filter(|&v| include[v]).collect();
        let lambda = self.opts.regularization;
        let extra = if lambda > 0.0 { k } else { 0 };
        let m = rows.len() + extra;
        let rank_error = ShError::RankDeficient {
            samples: rows.len(),
            coefficients: k,
        };
        if m < k {
            return Err(rank_error);
        }
        let mut a = Vec::with_capacity(m * k);
        let mut b = Vec::with_capacity(m);
        for &v in &rows {
            let sw = self.weights[v].sqrt();
            a.extend(self.row(v).iter().map(|&x| x * sw));
            b.push(target[v] * sw);
        }
        let sl = T::lit(lambda.sqrt());
        for i in 0..extra {
            a.extend((0..k).map(|j| if i == j { sl } else { T::zero() }));
            b.push(T::zero());
        }
        qr_least_squares(&Matrix::from_row_major(m, k, a), &b).ok_or(rank_error)
    }

    /// Evaluates `pdf` at every sample direction.
    pub fn evaluate(&self, pdf: &Pdf<T>) -> Vec<T> {
        let c = pdf.flat();
        assert_eq!(c.len(), self.k, "PDF order does not match the fitter");
        self.design
            .par_chunks(self.k)
            .map(|row| row.iter().zip(&c).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

/// One-off fit of `samples` with per-sample area `weights`.
pub fn fit_pdf<T: Scalar>(
    samples: &SphericalSamples<T>,
    weights: Vec<T>,
    property: Property,
    opts: FitOptions,
) -> Result<FitResult<T>, ShError> {
    ShFitter::new(&samples.directions, weights, opts)?.fit(property, &samples.values, &samples.mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{lumped_vertex_areas, primitives};

    fn sphere(level: u32) -> (Vec<Vec3<f64>>, Vec<f64>) {
        let m = primitives::icosphere::<f64>(level);
        let w = lumped_vertex_areas(&m.positions, &m.faces);
        (m.positions, w)
    }

    #[test]
    fn constant_field_projects_onto_y00() {
        let (dirs, w) = sphere(3);
        let s = SphericalSamples::unmasked(dirs.clone(), vec![1.0; dirs.len()]).unwrap();
        let opts = FitOptions {
            order: 4,
            ..Default::default()
        };
        let r = fit_pdf(&s, w, Property::Concentration, opts).unwrap();
        let c = r.pdf.flat();
        assert!((c[0] - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-6);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn zero_and_drop_agree_on_full_mask() {
        let (dirs, w) = sphere(2);
        let vals: Vec<f64> = dirs.iter().map(|d| d.x() * d.y() + 0.3).collect();
        let mask = vec![true; dirs.len()];
        let mut opts = FitOptions {
            order: 3,
            ..Default::default()
        };
        let a = ShFitter::new(&dirs, w.clone(), opts).unwrap().fit(Property::Hue, &vals, &mask).unwrap();
        opts.out_of_mask = OutOfMask::Drop;
        let b = ShFitter::new(&dirs, w.clone(), opts).unwrap().fit(Property::Hue, &vals, &mask).unwrap();
        opts.solver = Solver::Qr;
        let c = ShFitter::new(&dirs, w, opts).unwrap().fit(Property::Hue, &vals, &mask).unwrap();
        assert!(a.pdf.max_abs_diff(&b.pdf) < 1e-12);
        assert!(a.pdf.max_abs_diff(&c.pdf) < 1e-9);
    }

    #[test]
    fn unregularized_underdetermined_fit_is_rejected() {
        let (dirs, w) = sphere(0);
        let opts = FitOptions {
            order: 4,
            regularization: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            ShFitter::new(&dirs, w, opts),
            Err(ShError::RankDeficient { samples: 12, coefficients: 25 })
        ));
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let r = SphericalSamples::new(vec![Vec3::new(0.0, 0.0, 1.1)], vec![1.0], vec![true]);
        assert!(matches!(r, Err(ShError::NotUnit { index: 0, .. })));
    }
}
