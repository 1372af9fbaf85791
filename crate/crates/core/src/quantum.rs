//! Density matrices, pure states and Kraus channels.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matcore::{self, CMatrix};

/// Tolerance for the three density-matrix invariants.
pub const STATE_TOL: f64 = 1e-10;

/// Default tolerance on `‖Σ K†K − I‖_F`.
pub const DEFAULT_TP_TOL: f64 = 1e-10;

/// A validated quantum state: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates `m` at the default tolerance and stores its Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::new_with_tol(m, STATE_TOL)
    }

    pub fn new_with_tol(m: CMatrix, tol: f64) -> Result<Self> {
        matcore::check_square(&m)?;
        matcore::check_finite(&m)?;
        let residual = (&m - m.adjoint()).norm();
        if residual > tol {
            return Err(Error::NotHermitian {
                residual,
                bound: tol,
            });
        }
        let matrix = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = matcore::eig_hermitian(&matrix)?;
        let min = eig.eigenvalues[0];
        if min < -tol {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                bound: -tol,
            });
        }
        let deviation = (matcore::trace_re(&matrix) - 1.0).abs();
        if deviation > tol {
            return Err(Error::TraceNotOne {
                deviation,
                bound: tol,
            });
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: matcore::identity(d) * Complex64::new(1.0 / d as f64, 0.0),
        }
    }

    /// Basis state `|i⟩⟨i|`.
    pub fn basis(d: usize, i: usize) -> Self {
        Self {
            matrix: matcore::matrix_unit(d, i, i),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        matcore::trace_re(&self.matrix)
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        matcore::trace_norm_distance(&self.matrix, &other.matrix)
    }
}

/// Validates a candidate matrix as a density matrix.
pub fn validate_density(m: &CMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(m.clone())
}

/// A unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    amplitudes: DVector<Complex64>,
}

impl PureStateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }
}

pub fn density_from_pure(psi: &PureStateVector) -> DensityMatrix {
    DensityMatrix {
        matrix: psi.amplitudes() * psi.amplitudes().adjoint(),
    }
}

/// How a channel treats the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceBehavior {
    /// `Σ K†K = I` within the channel's tolerance.
    Preserving,
    /// `Σ K†K ≤ I` with `I − Σ K†K` bounded by the declared deficit.
    Decreasing { declared_deficit: f64 },
    /// No trace constraint (e.g. the adjoint of a non-unital channel).
    Unconstrained,
}

/// Result of applying a channel to a state, before renormalization checks.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub matrix: CMatrix,
    pub trace: f64,
    pub trace_deficit: f64,
}

/// Diagnostic for the completeness relation `Σ K†K = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    pub residual: f64,
    pub tolerance: f64,
    pub passes: bool,
    /// Always true: any Kraus form is completely positive.
    pub completely_positive: bool,
}

/// A map in operator-sum form `ρ ↦ Σ K_n ρ K_n†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<CMatrix>,
    tp_tolerance: f64,
    behavior: TraceBehavior,
}

impl KrausChannel {
    /// A trace-preserving channel at the default tolerance.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(ops, DEFAULT_TP_TOL)
    }

    pub fn with_tolerance(ops: Vec<CMatrix>, tp_tolerance: f64) -> Result<Self> {
        let dim = check_ops(&ops)?;
        let residual = completeness_residual(&ops);
        if residual > tp_tolerance {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self {
            dim,
            ops,
            tp_tolerance,
            behavior: TraceBehavior::Preserving,
        })
    }

    /// A trace-decreasing channel whose defect `I − Σ K†K` is PSD with
    /// largest eigenvalue at most `declared_deficit`.
    pub fn trace_decreasing(ops: Vec<CMatrix>, declared_deficit: f64) -> Result<Self> {
        let dim = check_ops(&ops)?;
        let defect = matcore::identity(dim) - completeness(&ops);
        let eig = matcore::eig_hermitian(&defect)?;
        let tol = DEFAULT_TP_TOL;
        let (min, max) = (eig.eigenvalues[0], eig.eigenvalues[dim - 1]);
        if min < -tol || max > declared_deficit + tol {
            return Err(Error::NotTracePreserving {
                residual: defect.norm(),
            });
        }
        Ok(Self {
            dim,
            ops,
            tp_tolerance: tol,
            behavior: TraceBehavior::Decreasing { declared_deficit },
        })
    }

    /// Completely positive map with no trace constraint.
    pub fn general(ops: Vec<CMatrix>) -> Result<Self> {
        let dim = check_ops(&ops)?;
        Ok(Self {
            dim,
            ops,
            tp_tolerance: DEFAULT_TP_TOL,
            behavior: TraceBehavior::Unconstrained,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim: d,
            ops: vec![matcore::identity(d)],
            tp_tolerance: DEFAULT_TP_TOL,
            behavior: TraceBehavior::Preserving,
        }
    }

    /// Single-Kraus unitary channel.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Same tolerance and trace behavior, new Kraus operators.
    pub(crate) fn with_ops(&self, ops: Vec<CMatrix>) -> KrausChannel {
        KrausChannel {
            dim: self.dim,
            ops,
            tp_tolerance: self.tp_tolerance,
            behavior: self.behavior,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn tp_tolerance(&self) -> f64 {
        self.tp_tolerance
    }

    pub fn behavior(&self) -> TraceBehavior {
        self.behavior
    }

    pub fn is_trace_decreasing(&self) -> bool {
        matches!(self.behavior, TraceBehavior::Decreasing { .. })
    }

    /// `Σ K†K`.
    pub fn completeness(&self) -> CMatrix {
        completeness(&self.ops)
    }

    /// Action on an arbitrary operator.
    pub fn apply_map(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out += k * x * k.adjoint();
        }
        out
    }

    fn allowed_deficit(&self) -> f64 {
        match self.behavior {
            TraceBehavior::Preserving => self.tp_tolerance,
            TraceBehavior::Decreasing { declared_deficit } => declared_deficit + self.tp_tolerance,
            TraceBehavior::Unconstrained => f64::INFINITY,
        }
    }

    /// Applies the channel and reports the trace deficit of the output.
    pub fn apply_channel(&self, rho: &DensityMatrix) -> Result<ChannelOutput> {
        self.check_dim(rho.dim())?;
        let matrix = self.apply_map(rho.matrix());
        let trace = matcore::trace_re(&matrix);
        let trace_deficit = 1.0 - trace;
        let allowed = self.allowed_deficit();
        if trace_deficit.abs() > allowed {
            return Err(Error::TraceLoss {
                deficit: trace_deficit,
                allowed,
            });
        }
        Ok(ChannelOutput {
            matrix,
            trace,
            trace_deficit,
        })
    }

    /// Applies the channel and requires a normalized output state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_channel(rho)?;
        let tol = STATE_TOL.max(self.tp_tolerance);
        if out.trace_deficit.abs() > tol {
            return Err(Error::TraceLoss {
                deficit: out.trace_deficit,
                allowed: tol,
            });
        }
        DensityMatrix::new_with_tol(out.matrix, tol)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &KrausChannel) -> Result<KrausChannel> {
        compose(self, first)
    }

    pub fn adjoint(&self) -> KrausChannel {
        adjoint_channel(self)
    }

    pub fn validate_cptp(&self) -> CptpReport {
        validate_cptp(self)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: d,
            });
        }
        Ok(())
    }
}

fn check_ops(ops: &[CMatrix]) -> Result<usize> {
    let first = ops.first().ok_or(Error::EmptyChannel)?;
    let dim = matcore::check_square(first)?;
    for k in ops {
        if k.shape() != (dim, dim) {
            return Err(Error::ShapeMismatch {
                left: (dim, dim),
                right: k.shape(),
            });
        }
        matcore::check_finite(k)?;
    }
    Ok(dim)
}

fn completeness(ops: &[CMatrix]) -> CMatrix {
    let d = ops[0].nrows();
    ops.iter()
        .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
}

fn completeness_residual(ops: &[CMatrix]) -> f64 {
    (completeness(ops) - matcore::identity(ops[0].nrows())).norm()
}

/// `second ∘ first` with Kraus operators `{K₂ᵢ K₁ⱼ}`.
pub fn compose(second: &KrausChannel, first: &KrausChannel) -> Result<KrausChannel> {
    second.check_dim(first.dim)?;
    let ops = second
        .ops
        .iter()
        .flat_map(|a| first.ops.iter().map(move |b| a * b))
        .collect();
    use TraceBehavior::*;
    let behavior = match (second.behavior, first.behavior) {
        (Unconstrained, _) | (_, Unconstrained) => Unconstrained,
        (Preserving, Preserving) => Preserving,
        (a, b) => {
            let deficit = |x: TraceBehavior| match x {
                Decreasing { declared_deficit } => declared_deficit,
                _ => 0.0,
            };
            Decreasing {
                declared_deficit: (deficit(a) + deficit(b)).min(1.0),
            }
        }
    };
    Ok(KrausChannel {
        dim: first.dim,
        ops,
        tp_tolerance: second.tp_tolerance + first.tp_tolerance,
        behavior,
    })
}

/// Heisenberg-picture map `X ↦ Σ K† X K`, Kraus operators `{K_n†}`.
pub fn adjoint_channel(ch: &KrausChannel) -> KrausChannel {
    let ops: Vec<CMatrix> = ch.ops.iter().map(|k| k.adjoint()).collect();
    let dim = ch.dim;
    let defect = matcore::identity(dim) - completeness(&ops);
    let behavior = if defect.norm() <= ch.tp_tolerance {
        TraceBehavior::Preserving
    } else {
        match matcore::eig_hermitian(&defect) {
            Ok(e) if e.eigenvalues[0] >= -ch.tp_tolerance => TraceBehavior::Decreasing {
                declared_deficit: e.eigenvalues[dim - 1],
            },
            _ => TraceBehavior::Unconstrained,
        }
    };
    KrausChannel {
        dim,
        ops,
        tp_tolerance: ch.tp_tolerance,
        behavior,
    }
}

pub fn validate_cptp(ch: &KrausChannel) -> CptpReport {
    let residual = completeness_residual(&ch.ops);
    CptpReport {
        residual,
        tolerance: ch.tp_tolerance,
        passes: residual <= ch.tp_tolerance,
        completely_positive: true,
    }
}

/// Largest Frobenius discrepancy between the actions of two maps over all
/// matrix units `|i⟩⟨j|`.
pub fn action_distance(a: &KrausChannel, b: &KrausChannel) -> Result<f64> {
    a.check_dim(b.dim)?;
    let d = a.dim;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let e = matcore::matrix_unit(d, i, j);
            worst = worst.max((a.apply_map(&e) - b.apply_map(&e)).norm());
        }
    }
    Ok(worst)
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Full-rank random state `G G† / Tr(G G†)` from a complex Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(d, d, rng);
    let m = &g * g.adjoint();
    let tr = matcore::trace_re(&m);
    let m = m * Complex64::new(1.0 / tr, 0.0);
    DensityMatrix {
        matrix: (&m + m.adjoint()) * Complex64::new(0.5, 0.0),
    }
}

pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureStateVector {
    let g = gaussian_matrix(d, 1, rng);
    let n = g.norm();
    PureStateVector {
        amplitudes: DVector::from_iterator(d, g.iter().map(|z| z / n)),
    }
}

/// Random isometry `d → d·k` (orthonormalized Gaussian), split into `k`
/// Kraus operators.
pub fn random_cptp<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> KrausChannel {
    let g = gaussian_matrix(d * k, d, rng);
    let q = g.qr().q();
    let ops = (0..k).map(|i| q.rows(i * d, d).into_owned()).collect();
    KrausChannel {
        dim: d,
        ops,
        tp_tolerance: DEFAULT_TP_TOL,
        behavior: TraceBehavior::Preserving,
    }
}

/// Random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    gaussian_matrix(d, d, rng).qr().q()
}
