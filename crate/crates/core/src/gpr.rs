//! Zero-mean Gaussian-process regression on graph nodes and the direct
//! power function.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::kernel::GbfKernel;
use crate::spectral::Spectrum;

/// Negative variances down to `-ROUNDOFF_RTOL * K(v, v)` are treated as zero.
pub const ROUNDOFF_RTOL: f64 = 1e-10;

fn factor(k_w: &DMatrix<f64>, sigma2: f64) -> Result<Cholesky<f64, Dyn>> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be non-negative, got {sigma2}"
        )));
    }
    if k_w.nrows() != k_w.ncols() {
        return Err(Error::Dimension {
            expected: k_w.nrows(),
            got: k_w.ncols(),
        });
    }
    let mut m = k_w.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += sigma2;
    }
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite)
}

/// Solves `(K_W + sigma2 I) c = y` by Cholesky factorization.
pub fn fit_coefficients(k_w: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64) -> Result<DVector<f64>> {
    if y.len() != k_w.nrows() {
        return Err(Error::Dimension {
            expected: k_w.nrows(),
            got: y.len(),
        });
    }
    Ok(factor(k_w, sigma2)?.solve(y))
}

pub(crate) fn check_node_set(nodes: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in nodes {
        if v >= n {
            return Err(Error::InvalidNode { node: v, n });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::RepeatedNode { node: v });
        }
    }
    Ok(())
}

/// A fitted regression model; the predictor is `sum_i c_i K(., w_i)`.
#[derive(Debug, Clone)]
pub struct GprModel<'a> {
    spectrum: &'a Spectrum,
    kernel: &'a GbfKernel,
    sampling_set: Vec<usize>,
    coefficients: DVector<f64>,
    sigma2: f64,
}

impl<'a> GprModel<'a> {
    pub fn fit(
        spectrum: &'a Spectrum,
        kernel: &'a GbfKernel,
        sampling_set: &[usize],
        y: &DVector<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        if sampling_set.is_empty() {
            return Err(Error::EmptySeeds);
        }
        check_node_set(sampling_set, spectrum.len())?;
        let k_w = kernel.matrix(spectrum, Some(sampling_set), Some(sampling_set))?;
        let coefficients = fit_coefficients(&k_w, y, sigma2)?;
        Ok(GprModel {
            spectrum,
            kernel,
            sampling_set: sampling_set.to_vec(),
            coefficients,
            sigma2,
        })
    }

    pub fn sampling_set(&self) -> &[usize] {
        &self.sampling_set
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn noise_variance(&self) -> f64 {
        self.sigma2
    }

    pub fn predict(&self, v: usize) -> Result<f64> {
        if v >= self.spectrum.len() {
            return Err(Error::InvalidNode {
                node: v,
                n: self.spectrum.len(),
            });
        }
        Ok(self
            .sampling_set
            .iter()
            .zip(self.coefficients.iter())
            .map(|(&w, c)| c * self.kernel.entry(self.spectrum, v, w))
            .sum())
    }

    pub fn predict_all(&self) -> DVector<f64> {
        let k = self
            .kernel
            .matrix(self.spectrum, None, Some(&self.sampling_set))
            .expect("sampling set validated at fit time");
        k * &self.coefficients
    }
}

fn clamp_variance(value: f64, diag: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -ROUNDOFF_RTOL * diag.abs() {
        Ok(0.0)
    } else {
        Err(Error::IndefiniteKernel(value))
    }
}

/// Posterior standard deviation at `v` given samples on `w`.
pub fn power_direct(s: &Spectrum, k: &GbfKernel, w: &[usize], sigma2: f64, v: usize) -> Result<f64> {
    Ok(power_direct_all(s, k, w, sigma2)?[checked(v, s.len())?])
}

fn checked(v: usize, n: usize) -> Result<usize> {
    if v < n {
        Ok(v)
    } else {
        Err(Error::InvalidNode { node: v, n })
    }
}

/// Posterior standard deviation at every node, sharing one factorization.
///
/// With `sigma2 == 0` nodes in `w` get exactly zero. Kernel entries, the
/// Cholesky factor of `K_W + sigma2 I` and the Schur complement are all
/// evaluated in double-double arithmetic, so the variance keeps its accuracy
/// when it is many orders of magnitude below `K(v, v)`.
pub fn power_direct_all(s: &Spectrum, k: &GbfKernel, w: &[usize], sigma2: f64) -> Result<DVector<f64>> {
    let n = s.len();
    check_node_set(w, n)?;
    let diag = k.diagonal(s)?;
    if w.is_empty() {
        return diag
            .iter()
            .map(|&d| clamp_variance(d, d).map(f64::sqrt))
            .collect::<Result<Vec<_>>>()
            .map(DVector::from_vec);
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be non-negative, got {sigma2}"
        )));
    }
    let l = extended_cholesky(s, k, w, sigma2)?;
    let m = w.len();
    let mut in_w = vec![false; n];
    w.iter().for_each(|&x| in_w[x] = true);
    let mut out = DVector::zeros(n);
    let mut z = vec![TwoFloat::from(0.0); m];
    for v in 0..n {
        if sigma2 == 0.0 && in_w[v] {
            continue;
        }
        let mut p2 = k.entry_extended(s, v, v);
        for i in 0..m {
            let mut x = k.entry_extended(s, v, w[i]);
            for j in 0..i {
                x -= l[i * m + j] * z[j];
            }
            z[i] = x / l[i * m + i];
            p2 -= z[i] * z[i];
        }
        out[v] = clamp_variance(p2.hi(), diag[v])?.sqrt();
    }
    Ok(out)
}

/// Row-major lower factor `L` with `L L^T = K_W + sigma2 I`.
fn extended_cholesky(s: &Spectrum, k: &GbfKernel, w: &[usize], sigma2: f64) -> Result<Vec<TwoFloat>> {
    let m = w.len();
    let mut l = vec![TwoFloat::from(0.0); m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut x = k.entry_extended(s, w[i], w[j]);
            if i == j {
                x += sigma2;
            }
            for p in 0..j {
                x -= l[i * m + p] * l[j * m + p];
            }
            if i == j {
                if !(x.hi() > 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * m + i] = x.sqrt();
            } else {
                l[i * m + j] = x / l[j * m + j];
            }
        }
    }
    Ok(l)
}
