//! Laplacian eigendecomposition and the graph Fourier transform.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{laplacian, Graph, LaplacianKind};

const SYMMETRY_TOL: f64 = 1e-10;
const SIGN_ZERO_TOL: f64 = 1e-12;
/// Laplacian eigenvalues within this multiple of `max(1, lambda_max)` of zero
/// are set to exactly zero.
const LAPLACIAN_ZERO_TOL: f64 = 1e-11;

/// Ascending eigenvalues and the matching orthonormal eigenvectors.
///
/// Eigenvector signs are fixed so that the first entry with magnitude above
/// `1e-12` is positive. Degenerate eigenspaces keep whatever basis the solver
/// produced.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    // Transposed copy: column v holds (u_1(v), ..., u_n(v)).
    node_modes: DMatrix<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Column `k` is the eigenvector of `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// All Fourier modes evaluated at node `v`, contiguous.
    pub fn modes_at(&self, v: usize) -> &[f64] {
        let n = self.len();
        &self.node_modes.as_slice()[v * n..(v + 1) * n]
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.len(),
                got,
            })
        }
    }
}

pub fn eigendecompose(matrix: &DMatrix<f64>) -> Result<Spectrum> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: matrix.ncols(),
        });
    }
    let scale = matrix.amax().max(1.0);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale || matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSymmetric(asym));
    }

    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 0).ok_or(Error::SolverFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|x| x.abs() > SIGN_ZERO_TOL) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        eigenvectors.set_column(dst, &col);
    }
    let node_modes = eigenvectors.transpose();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        node_modes,
    })
}

/// Spectrum of the graph Laplacian of the requested kind.
///
/// Laplacians are positive semi-definite, so round-off eigenvalues around
/// zero (and any slightly negative ones) are snapped to `0.0`.
pub fn laplacian_spectrum(g: &Graph, kind: LaplacianKind) -> Result<Spectrum> {
    let l = laplacian(g, kind)?;
    let mut s = eigendecompose(&l)?;
    let top = s.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for x in s.eigenvalues.iter_mut() {
        if *x < 0.0 || x.abs() <= LAPLACIAN_ZERO_TOL * top {
            *x = 0.0;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Forward: `U^T x`. Inverse: `U x`.
pub fn gft(s: &Spectrum, x: &DVector<f64>, direction: Direction) -> Result<DVector<f64>> {
    s.check_len(x.len())?;
    Ok(match direction {
        Direction::Forward => s.eigenvectors.tr_mul(x),
        Direction::Inverse => &s.eigenvectors * x,
    })
}

/// Generalized convolution `U diag(U^T y) U^T x`.
pub fn convolve(s: &Spectrum, y: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let y_hat = gft(s, y, Direction::Forward)?;
    let x_hat = gft(s, x, Direction::Forward)?;
    gft(s, &y_hat.component_mul(&x_hat), Direction::Inverse)
}
