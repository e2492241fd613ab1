//! Dense real linear-algebra kernels: matrix exponential, LU solves,
//! eigenvalues, Lagrange interpolation coefficients and commutators.

mod eigen;
mod expm;
mod lu;
mod matrix;

pub use eigen::{eigen, eigen_with, Spectrum};
pub use expm::{expm, THETA_13};
pub use lu::Lu;
pub use matrix::{dot, Matrix};

use crate::error::{Error, Result};

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// A pivot below `singular_pivot · ‖A‖₁` marks the matrix singular.
    pub singular_pivot: f64,
    /// Eigenvalues closer than `eigen_gap · max|λ|` count as repeated.
    pub eigen_gap: f64,
    /// Imaginary parts below `imag_zero · max|λ|` count as zero.
    pub imag_zero: f64,
    /// Slack for row sums, probability sums and sign checks.
    pub stochastic: f64,
    /// Slack for structural zeros (closed sets, block patterns).
    pub structure: f64,
    /// Relative size under which a spectral coefficient counts as zero.
    pub coefficient_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            singular_pivot: 1e-12,
            eigen_gap: 1e-8,
            imag_zero: 1e-10,
            stochastic: 1e-12,
            structure: 1e-12,
            coefficient_zero: 1e-9,
        }
    }
}

/// Solves `A X = B`.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    solve_with(a, b, &Tolerances::default())
}

pub fn solve_with(a: &Matrix, b: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    if !b.is_finite() {
        return Err(Error::NonFinite("right-hand side"));
    }
    Lu::factor(a, tol)?.solve(b)
}

/// `AB − BA`.
pub fn commutator(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.require_square()?;
    if b.rows() != n || b.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "commutator of {n}x{n} and {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    Ok(&(a * b) - &(b * a))
}

/// `∏_{j≠l} (A − λ_j I) / (λ_l − λ_j)`, the spectral projector of a
/// matrix with real simple spectrum onto its `l`-th eigenvalue.
pub fn lagrange_coefficient(a: &Matrix, spectrum: &Spectrum, l: usize) -> Result<Matrix> {
    let n = a.require_square()?;
    if spectrum.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "spectrum of length {} for a {n}x{n} matrix",
            spectrum.len()
        )));
    }
    if l >= n {
        return Err(Error::InvalidInput(format!(
            "eigenvalue index {l} out of range"
        )));
    }
    if !spectrum.all_real_and_simple {
        return Err(Error::UnsupportedSpectrum(
            "Lagrange coefficients need real, simple eigenvalues".into(),
        ));
    }
    let lambdas = spectrum.real_parts();
    let mut out = Matrix::identity(n);
    for (j, &lj) in lambdas.iter().enumerate() {
        if j == l {
            continue;
        }
        let mut factor = a.clone();
        for i in 0..n {
            factor[(i, i)] -= lj;
        }
        out = &out * &factor.scale(1.0 / (lambdas[l] - lj));
    }
    Ok(out)
}

/// All Lagrange coefficients of `a`, in spectrum order.
pub fn spectral_projectors(a: &Matrix, spectrum: &Spectrum) -> Result<Vec<Matrix>> {
    (0..spectrum.len())
        .map(|l| lagrange_coefficient(a, spectrum, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_diagonal() {
        let x = solve(&Matrix::from_diag(&[2.0, 4.0]), &Matrix::identity(2)).unwrap();
        assert_eq!(x, Matrix::from_diag(&[0.5, 0.25]));
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(solve(&Matrix::identity(2), &b).unwrap(), b);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve(&a, &Matrix::identity(2)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn commutator_identities() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(commutator(&a, &a).unwrap(), Matrix::zeros(2, 2));
        assert_eq!(
            commutator(&a, &Matrix::identity(2)).unwrap(),
            Matrix::zeros(2, 2)
        );
        assert!(commutator(&a, &Matrix::identity(3)).is_err());
    }

    #[test]
    fn projector_of_diagonal() {
        let a = Matrix::from_diag(&[-1.0, -2.0]);
        let s = eigen(&a).unwrap();
        let l = s.dominant_index;
        assert!((s.eigenvalues[l].re + 1.0).abs() < 1e-14);
        let p = lagrange_coefficient(&a, &s, l).unwrap();
        assert_eq!(p, Matrix::from_diag(&[1.0, 0.0]));
    }

    #[test]
    fn projector_needs_simple_spectrum() {
        let a = Matrix::from_diag(&[-1.0, -1.0]);
        let s = eigen(&a).unwrap();
        assert!(matches!(
            lagrange_coefficient(&a, &s, 0),
            Err(Error::UnsupportedSpectrum(_))
        ));
    }
}
