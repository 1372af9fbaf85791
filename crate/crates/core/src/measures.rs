//! Entropies and asymmetry measures.
//!
//! Entropic quantities are returned in bits. [`LogBase`] converts them when
//! natural units are wanted.

use crate::error::{Error, Result};
use crate::matcore::{self, CMatrix};
use crate::quantum::DensityMatrix;
use crate::symmetry::SymmetryRep;

/// Agreement required between the two closed forms of `A_r`.
pub const CLOSED_FORM_TOL: f64 = 1e-9;

/// Small negative results within this margin are clamped to zero.
const CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Two,
    E,
}

impl LogBase {
    /// Converts a value computed in bits.
    pub fn from_bits(self, bits: f64) -> f64 {
        match self {
            LogBase::Two => bits,
            LogBase::E => bits * std::f64::consts::LN_2,
        }
    }
}

fn clamp_nonneg(x: f64) -> f64 {
    if (-CLAMP_TOL..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

fn entropy_of_spectrum(eigenvalues: &[f64], tau: f64) -> f64 {
    -eigenvalues
        .iter()
        .filter(|&&l| l > tau)
        .map(|&l| l * l.log2())
        .sum::<f64>()
}

fn entropy_of_matrix(m: &CMatrix) -> Result<f64> {
    let eig = matcore::eig_hermitian(m)?;
    Ok(clamp_nonneg(entropy_of_spectrum(
        &eig.eigenvalues,
        eig.threshold(),
    )))
}

/// `S(ρ) = −Tr ρ log₂ ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    // A validated density matrix always decomposes.
    entropy_of_matrix(rho.matrix()).unwrap_or(f64::NAN)
}

/// `S(ρ‖σ) = Tr ρ (log₂ ρ − log₂ σ)`, or `+∞` when ρ leaks outside the
/// support of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let se = matcore::eig_hermitian(sigma.matrix())?;
    let tau = se.threshold();
    let r = rho.matrix();
    let mut leak = 0.0;
    let mut cross = 0.0;
    for (j, &mu) in se.eigenvalues.iter().enumerate() {
        let w = se.eigenvectors.column(j);
        let weight = (w.adjoint() * r * w)[(0, 0)].re;
        if mu > tau {
            cross += weight * mu.log2();
        } else {
            leak += weight;
        }
    }
    if leak > tau {
        return Ok(f64::INFINITY);
    }
    let neg_entropy = -von_neumann_entropy(rho);
    Ok(clamp_nonneg(neg_entropy - cross))
}

/// `A_r(ρ) = S(Λ_G(ρ)) − S(ρ)`.
pub fn rel_entropy_asymmetry(rep: &SymmetryRep, rho: &DensityMatrix) -> Result<f64> {
    if rep.dim() != rho.dim() {
        return Err(Error::DimMismatch {
            expected: rep.dim(),
            got: rho.dim(),
        });
    }
    let twirled = entropy_of_matrix(&rep.twirl_map(rho.matrix()))?;
    Ok(clamp_nonneg(twirled - von_neumann_entropy(rho)))
}

/// Evaluates both `S(Λ_G(ρ)) − S(ρ)` and `S(ρ‖Λ_G(ρ))`, failing if they
/// disagree by more than [`CLOSED_FORM_TOL`]. Returns the first.
pub fn rel_entropy_asymmetry_validated(rep: &SymmetryRep, rho: &DensityMatrix) -> Result<f64> {
    let primary = rel_entropy_asymmetry(rep, rho)?;
    let twirled = DensityMatrix::new(rep.twirl_map(rho.matrix()))?;
    let alternative = relative_entropy(rho, &twirled)?;
    let difference = (primary - alternative).abs();
    if !(difference <= CLOSED_FORM_TOL) {
        return Err(Error::ClosedFormMismatch { difference });
    }
    Ok(primary)
}

/// Wigner–Yanase skew information `−½ Tr([√ρ, N]²) = ½ ‖[√ρ, N]‖_F²`.
pub fn skew_information(rho: &DensityMatrix, generator: &CMatrix) -> Result<f64> {
    if generator.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            got: generator.nrows(),
        });
    }
    let sqrt_rho = matcore::sqrt_psd(rho.matrix())?;
    let c = matcore::commutator(&sqrt_rho, generator);
    Ok(0.5 * c.norm_squared())
}

/// Trace distance to the twirled state, `½‖ρ − Λ_G(ρ)‖₁`.
pub fn twirl_trace_distance(rep: &SymmetryRep, rho: &DensityMatrix) -> Result<f64> {
    if rep.dim() != rho.dim() {
        return Err(Error::DimMismatch {
            expected: rep.dim(),
            got: rho.dim(),
        });
    }
    matcore::trace_norm_distance(rho.matrix(), &rep.twirl_map(rho.matrix()))
}

pub const RELATIVE_ENTROPY_OF_ASYMMETRY: &str = "relative_entropy_of_asymmetry";
pub const SKEW_INFORMATION: &str = "skew_information";
pub const TWIRL_TRACE_DISTANCE: &str = "twirl_trace_distance";

/// A measure value tagged with the measure that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureValue {
    pub measure_id: &'static str,
    pub value: f64,
}

pub type Evaluator = fn(&SymmetryRep, &DensityMatrix) -> Result<f64>;

#[derive(Clone)]
pub struct Measure {
    pub id: &'static str,
    pub eval: Evaluator,
}

impl std::fmt::Debug for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Measure").field("id", &self.id).finish()
    }
}

fn eval_skew(rep: &SymmetryRep, rho: &DensityMatrix) -> Result<f64> {
    let n = rep.generator().ok_or(Error::WrongVariant {
        expected: "one-parameter",
    })?;
    skew_information(rho, n)
}

/// Ordered set of asymmetry measures evaluated together.
#[derive(Debug, Clone, Default)]
pub struct MeasureRegistry {
    measures: Vec<Measure>,
}

impl MeasureRegistry {
    /// The relative entropy of asymmetry plus, for U(1) representations,
    /// the skew information with respect to the generator.
    pub fn for_rep(rep: &SymmetryRep) -> Self {
        let mut measures = vec![Measure {
            id: RELATIVE_ENTROPY_OF_ASYMMETRY,
            eval: rel_entropy_asymmetry,
        }];
        if rep.generator().is_some() {
            measures.push(Measure {
                id: SKEW_INFORMATION,
                eval: eval_skew,
            });
        }
        Self { measures }
    }

    /// [`for_rep`](Self::for_rep) plus the twirl trace distance, which is
    /// available for every representation.
    pub fn extended(rep: &SymmetryRep) -> Self {
        Self::for_rep(rep).with(Measure {
            id: TWIRL_TRACE_DISTANCE,
            eval: twirl_trace_distance,
        })
    }

    pub fn with(mut self, measure: Measure) -> Self {
        self.measures.push(measure);
        self
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.measures.iter().map(|m| m.id).collect()
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn evaluate(&self, rep: &SymmetryRep, rho: &DensityMatrix) -> Result<Vec<MeasureValue>> {
        self.measures
            .iter()
            .map(|m| {
                Ok(MeasureValue {
                    measure_id: m.id,
                    value: clamp_nonneg((m.eval)(rep, rho)?),
                })
            })
            .collect()
    }
}

pub fn measure_registry(rep: &SymmetryRep) -> MeasureRegistry {
    MeasureRegistry::for_rep(rep)
}
