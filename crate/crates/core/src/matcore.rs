//! Dense complex matrix kernel.
//!
//! Everything above this module works with [`CMatrix`] (a dense
//! `nalgebra` matrix of `Complex64`) and reaches spectral information through
//! [`eig_hermitian`]. Matrix functions, pseudoinverse square roots and
//! support/kernel projectors are all assembled from the same Hermitian
//! eigendecomposition so they share one numerical-rank rule: an eigenvalue is
//! treated as zero when its magnitude is at most
//! `ZERO_THRESHOLD_REL * max(1, largest |eigenvalue|)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative zero-eigenvalue threshold used for rank decisions.
pub const ZERO_THRESHOLD_REL: f64 = 1e-12;

/// Relative Hermiticity tolerance, measured as `‖H − H†‖_F / max(1, ‖H‖_F)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Most negative eigenvalue (relative to `max(1, ‖P‖)`) still accepted as PSD.
pub const PSD_TOL: f64 = 1e-10;

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector belonging to `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Zero threshold τ for this spectrum at the given relative level.
    pub fn threshold_with(&self, rel: f64) -> f64 {
        rel * self.spectral_radius().max(1.0)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold_with(ZERO_THRESHOLD_REL)
    }

    /// `V diag(w) V†` for the given eigenvalue weights.
    pub fn assemble(&self, weights: &[f64]) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = self.eigenvectors.column(k);
            for j in 0..d {
                let vj = v[j].conj() * w;
                for i in 0..d {
                    out[(i, j)] += v[i] * vj;
                }
            }
        }
        out
    }

    /// `V diag(w) V†` for complex weights.
    pub fn assemble_complex(&self, weights: &[Complex64]) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for (k, &w) in weights.iter().enumerate() {
            let v = self.eigenvectors.column(k);
            for j in 0..d {
                let vj = v[j].conj() * w;
                for i in 0..d {
                    out[(i, j)] += v[i] * vj;
                }
            }
        }
        out
    }

    /// `exp(iθH)` for the decomposed Hermitian `H`.
    pub fn exp_i(&self, theta: f64) -> CMatrix {
        let phases: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, theta * l))
            .collect();
        self.assemble_complex(&phases)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.assemble(&self.eigenvalues)
    }

    /// Applies `f` to the spectrum. With `support_only`, eigenvalues of
    /// magnitude at most `tau` are mapped to zero without evaluating `f`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F, support_only: bool, tau: f64) -> Result<CMatrix> {
        let weights = self
            .eigenvalues
            .iter()
            .map(|&l| {
                if support_only && l.abs() <= tau {
                    return Ok(0.0);
                }
                let y = f(l);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::Domain { eigenvalue: l })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.assemble(&weights))
    }

    /// Projector onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projector<P: Fn(f64) -> bool>(&self, keep: P) -> CMatrix {
        let weights: Vec<f64> = self
            .eigenvalues
            .iter()
            .map(|&l| if keep(l) { 1.0 } else { 0.0 })
            .collect();
        self.assemble(&weights)
    }

    fn check_psd(&self) -> Result<()> {
        let bound = PSD_TOL * self.spectral_radius().max(1.0);
        match self.eigenvalues.first() {
            Some(&min) if min < -bound => Err(Error::NotPsd {
                min_eigenvalue: min,
                bound: -bound,
            }),
            _ => Ok(()),
        }
    }
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() == m.ncols() && m.nrows() > 0 {
        Ok(m.nrows())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// `‖H − H†‖_F / max(1, ‖H‖_F)`.
pub fn hermitian_residual(h: &CMatrix) -> f64 {
    (h - h.adjoint()).norm() / h.norm().max(1.0)
}

/// Verifies shape, finiteness and Hermiticity; returns `(H + H†)/2`.
pub fn hermitian_part_checked(h: &CMatrix) -> Result<CMatrix> {
    check_square(h)?;
    check_finite(h)?;
    let residual = hermitian_residual(h);
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            residual,
            bound: HERMITIAN_TOL,
        });
    }
    Ok((h + h.adjoint()) * Complex64::new(0.5, 0.0))
}

pub fn eig_hermitian(h: &CMatrix) -> Result<HermitianEig> {
    let sym = hermitian_part_checked(h)?;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Spectral function `V f(λ) V†`. Use `support_only` for functions such as
/// `log` or negative powers that are only defined on the support.
pub fn func_hermitian<F: Fn(f64) -> f64>(h: &CMatrix, f: F, support_only: bool) -> Result<CMatrix> {
    let eig = eig_hermitian(h)?;
    eig.map(f, support_only, eig.threshold())
}

/// Eigendecomposition of a matrix that must also be positive semidefinite.
pub fn eig_psd(p: &CMatrix) -> Result<HermitianEig> {
    let eig = eig_hermitian(p)?;
    eig.check_psd()?;
    Ok(eig)
}

/// Principal square root of a PSD matrix; eigenvalues below τ map to zero.
pub fn sqrt_psd(p: &CMatrix) -> Result<CMatrix> {
    let eig = eig_psd(p)?;
    eig.map(|l| l.max(0.0).sqrt(), true, eig.threshold())
}

/// Square root of the Moore–Penrose pseudoinverse: `Σ_{λ>τ} λ^{-1/2} |φ⟩⟨φ|`.
pub fn pinv_sqrt(p: &CMatrix) -> Result<CMatrix> {
    pinv_sqrt_with(p, ZERO_THRESHOLD_REL)
}

pub fn pinv_sqrt_with(p: &CMatrix, threshold_rel: f64) -> Result<CMatrix> {
    let eig = eig_psd(p)?;
    let tau = eig.threshold_with(threshold_rel);
    Ok(eig.assemble(
        &eig.eigenvalues
            .iter()
            .map(|&l| if l > tau { l.powf(-0.5) } else { 0.0 })
            .collect::<Vec<_>>(),
    ))
}

/// Orthogonal projector onto the kernel (eigenvalues at most τ).
pub fn kernel_projector(p: &CMatrix) -> Result<CMatrix> {
    kernel_projector_with(p, ZERO_THRESHOLD_REL)
}

pub fn kernel_projector_with(p: &CMatrix, threshold_rel: f64) -> Result<CMatrix> {
    let eig = eig_psd(p)?;
    let tau = eig.threshold_with(threshold_rel);
    Ok(eig.projector(|l| l <= tau))
}

/// Orthogonal projector onto the support (eigenvalues above τ).
pub fn support_projector(p: &CMatrix) -> Result<CMatrix> {
    let eig = eig_psd(p)?;
    let tau = eig.threshold();
    Ok(eig.projector(|l| l > tau))
}

/// `exp(iθH)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &CMatrix, theta: f64) -> Result<CMatrix> {
    Ok(eig_hermitian(h)?.exp_i(theta))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `(1/2) ‖A − B‖_1` for Hermitian `A`, `B`.
pub fn trace_norm_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let eig = eig_hermitian(&(a - b))?;
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// `|i⟩⟨j|` in dimension `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let d = values.len();
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(values[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Real part of the trace.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Matrix from real row-major data, handy for small literals.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
}
