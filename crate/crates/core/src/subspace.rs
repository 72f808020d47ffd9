//! Hankel data matrix, sample covariance and ordered Hermitian eigendecomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scale applied to `Y Yᴴ` when forming the covariance.
///
/// Every consumer downstream (criterion ratios, eigenvector subspaces) is
/// invariant to this factor; it only changes the reported eigenvalue scale.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CovarianceNorm {
    /// `1 / L_A`, the number of snapshots (columns).
    #[default]
    Snapshots,
    /// `1 / M_A`, the number of rows.
    Rows,
    /// `1 / A`.
    ZoomFactor,
    Custom(f64),
}

impl CovarianceNorm {
    pub fn factor(self, rows: usize, cols: usize, zoom_factor: usize) -> f64 {
        match self {
            Self::Snapshots => 1.0 / cols as f64,
            Self::Rows => 1.0 / rows as f64,
            Self::ZoomFactor => 1.0 / zoom_factor as f64,
            Self::Custom(c) => c,
        }
    }
}

/// `M × L` Hankel matrix with `entries[(i, j)] = u[i + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    entries: DMatrix<Complex64>,
}

impl DataMatrix {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }
}

pub fn hankel(sequence: &[Complex64], rows: usize) -> Result<DataMatrix> {
    if rows == 0 || rows > sequence.len() {
        return Err(Error::Dimension(format!(
            "Hankel rows must lie in [1, {}], got {rows}",
            sequence.len()
        )));
    }
    let cols = sequence.len() - rows + 1;
    Ok(DataMatrix {
        entries: DMatrix::from_fn(rows, cols, |i, j| sequence[i + j]),
    })
}

/// `norm · Y Yᴴ`, symmetrized so the result is exactly Hermitian.
pub fn sample_covariance(y: &DataMatrix, norm: f64) -> Result<DMatrix<Complex64>> {
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "covariance normalization must be positive, got {norm}"
        )));
    }
    let m = y.entries();
    let r = m * m.adjoint() * Complex64::new(norm, 0.0);
    Ok(hermitian_part(&r))
}

fn hermitian_part(r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (r + r.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues in non-increasing order with matching unit-norm eigenvectors
/// (column `k` belongs to eigenvalue `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    min_unclamped: f64,
}

impl EigenSpectrum {
    /// Negative round-off values are reported as zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// Smallest eigenvalue as returned by the solver, before clamping.
    pub fn min_unclamped(&self) -> f64 {
        self.min_unclamped
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

pub fn eig_hermitian_desc(r: &DMatrix<Complex64>) -> Result<EigenSpectrum> {
    if !r.is_square() || r.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a nonempty square matrix, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if r.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let eig = hermitian_part(r).symmetric_eigen();

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let raw: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let min_unclamped = raw.last().copied().unwrap_or(0.0);
    let eigenvectors =
        DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenSpectrum {
        eigenvalues: raw.into_iter().map(|v| v.max(0.0)).collect(),
        eigenvectors,
        min_unclamped,
    })
}
