//! Symmetry representations, G-twirling and covariance predicates.
//!
//! Two kinds of representation are supported: a finite group given as an
//! explicit list of unitaries, and a U(1) group `θ ↦ exp(iθN)` given by its
//! Hermitian generator. For U(1) the Haar average is computed exactly as the
//! pinch onto the generator's eigenspaces.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{self, CMatrix, HermitianEig};
use crate::quantum::{self, DensityMatrix, KrausChannel};

/// Tolerance for unitarity and product-table membership of finite groups.
pub const GROUP_TOL: f64 = 1e-8;

/// Absolute tolerance for clustering generator eigenvalues.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Angles probed by the U(1) covariance check: `kπ/6 + 1/7`, `k = 0..12`.
pub fn covariance_grid() -> [f64; 12] {
    std::array::from_fn(|k| k as f64 * PI / 6.0 + 1.0 / 7.0)
}

/// One eigenspace of a Hermitian generator.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    pub eigenvalue: f64,
    /// Orthonormal columns spanning the eigenspace.
    pub basis: CMatrix,
}

impl EigenBlock {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }
}

/// Eigenspace decomposition of a generator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenBlockStructure {
    pub blocks: Vec<EigenBlock>,
}

impl EigenBlockStructure {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.eigenvalue).collect()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(EigenBlock::dim).collect()
    }

    /// `Σ_i P_i X P_i`.
    pub fn pinch(&self, x: &CMatrix) -> CMatrix {
        let d = x.nrows();
        self.blocks.iter().fold(CMatrix::zeros(d, d), |acc, b| {
            let p = b.projector();
            acc + &p * x * &p
        })
    }
}

/// Groups eigenvectors of `n` whose sorted eigenvalues differ by at most
/// [`CLUSTER_TOL`] from their neighbour.
pub fn eigenblocks(n: &CMatrix) -> Result<EigenBlockStructure> {
    let eig = matcore::eig_hermitian(n)?;
    Ok(blocks_from_eig(&eig))
}

fn blocks_from_eig(eig: &HermitianEig) -> EigenBlockStructure {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if l - eig.eigenvalues[*g.last().unwrap()] <= CLUSTER_TOL => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let blocks = groups
        .into_iter()
        .map(|g| EigenBlock {
            eigenvalue: g.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / g.len() as f64,
            basis: eig.eigenvectors.select_columns(g.iter()),
        })
        .collect();
    EigenBlockStructure { blocks }
}

/// A finite group of unitaries, closed under products.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    dim: usize,
    unitaries: Vec<CMatrix>,
}

impl FiniteGroup {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn order(&self) -> usize {
        self.unitaries.len()
    }
}

/// A U(1) representation `exp(iθN)`.
#[derive(Debug, Clone)]
pub struct U1Group {
    generator: CMatrix,
    eig: HermitianEig,
    blocks: EigenBlockStructure,
}

impl U1Group {
    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn blocks(&self) -> &EigenBlockStructure {
        &self.blocks
    }

    pub fn unitary(&self, theta: f64) -> CMatrix {
        self.eig.exp_i(theta)
    }
}

#[derive(Debug, Clone)]
pub enum SymmetryRep {
    Finite(FiniteGroup),
    OneParameter(U1Group),
}

impl SymmetryRep {
    /// Builds a finite representation. Elements equal within [`GROUP_TOL`]
    /// are merged; every element must be unitary and the set closed under
    /// products.
    pub fn finite(unitaries: Vec<CMatrix>) -> Result<Self> {
        let first = unitaries
            .first()
            .ok_or_else(|| Error::InvalidDimension("empty group".into()))?;
        let dim = matcore::check_square(first)?;
        let id = matcore::identity(dim);
        let mut unique: Vec<CMatrix> = Vec::new();
        for u in unitaries {
            if u.shape() != (dim, dim) {
                return Err(Error::ShapeMismatch {
                    left: (dim, dim),
                    right: u.shape(),
                });
            }
            matcore::check_finite(&u)?;
            let residual = (u.adjoint() * &u - &id).norm();
            if residual > GROUP_TOL {
                return Err(Error::NotUnitary { residual });
            }
            if !unique.iter().any(|v| (v - &u).norm() <= GROUP_TOL) {
                unique.push(u);
            }
        }
        for a in &unique {
            for b in &unique {
                let ab = a * b;
                if !unique.iter().any(|v| (v - &ab).norm() <= GROUP_TOL) {
                    return Err(Error::NotClosed);
                }
            }
        }
        Ok(SymmetryRep::Finite(FiniteGroup {
            dim,
            unitaries: unique,
        }))
    }

    pub fn one_parameter(generator: CMatrix) -> Result<Self> {
        let generator = matcore::hermitian_part_checked(&generator)?;
        let eig = matcore::eig_hermitian(&generator)?;
        let blocks = blocks_from_eig(&eig);
        Ok(SymmetryRep::OneParameter(U1Group {
            generator,
            eig,
            blocks,
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            SymmetryRep::Finite(g) => g.dim(),
            SymmetryRep::OneParameter(g) => g.dim(),
        }
    }

    /// Generator for U(1) representations.
    pub fn generator(&self) -> Option<&CMatrix> {
        match self {
            SymmetryRep::Finite(_) => None,
            SymmetryRep::OneParameter(g) => Some(g.generator()),
        }
    }

    pub fn as_finite(&self) -> Result<&FiniteGroup> {
        match self {
            SymmetryRep::Finite(g) => Ok(g),
            SymmetryRep::OneParameter(_) => Err(Error::WrongVariant { expected: "finite" }),
        }
    }

    /// Unitaries probed by covariance checks: every element of a finite
    /// group, or `exp(iθN)` on [`covariance_grid`].
    pub fn probe_unitaries(&self) -> Vec<CMatrix> {
        match self {
            SymmetryRep::Finite(g) => g.unitaries.clone(),
            SymmetryRep::OneParameter(g) => {
                covariance_grid().iter().map(|&t| g.unitary(t)).collect()
            }
        }
    }

    /// Group average of an arbitrary operator.
    pub fn twirl_map(&self, x: &CMatrix) -> CMatrix {
        match self {
            SymmetryRep::Finite(g) => {
                let d = g.dim;
                let sum = g
                    .unitaries
                    .iter()
                    .fold(CMatrix::zeros(d, d), |acc, u| acc + u * x * u.adjoint());
                sum * Complex64::new(1.0 / g.order() as f64, 0.0)
            }
            SymmetryRep::OneParameter(g) => g.blocks.pinch(x),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: d,
            });
        }
        Ok(())
    }
}

/// G-twirl `Λ_G(ρ)`.
pub fn twirl(rep: &SymmetryRep, rho: &DensityMatrix) -> Result<DensityMatrix> {
    rep.check_dim(rho.dim())?;
    DensityMatrix::new(rep.twirl_map(rho.matrix()))
}

/// Outcome of a tolerance check, with the measured residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub holds: bool,
    pub residual: f64,
}

impl Check {
    fn at(residual: f64, tol: f64) -> Self {
        Check {
            holds: residual <= tol,
            residual,
        }
    }
}

pub fn is_symmetric(rep: &SymmetryRep, rho: &DensityMatrix, tol: f64) -> Result<Check> {
    rep.check_dim(rho.dim())?;
    let r = rho.matrix();
    let residual = match rep {
        SymmetryRep::Finite(g) => g
            .unitaries
            .iter()
            .map(|u| (u * r * u.adjoint() - r).norm())
            .fold(0.0, f64::max),
        SymmetryRep::OneParameter(g) => matcore::commutator(r, &g.generator).norm(),
    };
    Ok(Check::at(residual, tol))
}

/// Checks `Λ ∘ U_g = U_g ∘ Λ` on every matrix unit for every probed group
/// element.
pub fn is_covariant(rep: &SymmetryRep, channel: &KrausChannel, tol: f64) -> Result<Check> {
    rep.check_dim(channel.dim())?;
    let d = channel.dim();
    let mut worst: f64 = 0.0;
    let outputs: Vec<CMatrix> = (0..d * d)
        .map(|k| channel.apply_map(&matcore::matrix_unit(d, k / d, k % d)))
        .collect();
    for u in rep.probe_unitaries() {
        let ud = u.adjoint();
        for (k, out) in outputs.iter().enumerate() {
            let e = matcore::matrix_unit(d, k / d, k % d);
            let lhs = channel.apply_map(&(&u * e * &ud));
            let rhs = &u * out * &ud;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(Check::at(worst, tol))
}

/// Covariant channel with Kraus operators `{|G|^{-1/2} U_g† K_n U_g}`.
pub fn group_average_channel(rep: &SymmetryRep, channel: &KrausChannel) -> Result<KrausChannel> {
    let g = rep.as_finite()?;
    rep.check_dim(channel.dim())?;
    let scale = Complex64::new(1.0 / (g.order() as f64).sqrt(), 0.0);
    let ops = g
        .unitaries
        .iter()
        .flat_map(|u| {
            channel
                .ops()
                .iter()
                .map(move |k| u.adjoint() * k * u * scale)
        })
        .collect();
    Ok(channel.with_ops(ops))
}

/// Random unitary in the commutant of the representation: `exp(iH)` where
/// `H` is the group average of a random Hermitian matrix.
pub fn random_covariant_unitary<R: Rng + ?Sized>(
    rep: &SymmetryRep,
    rng: &mut R,
) -> Result<CMatrix> {
    let d = rep.dim();
    let g = quantum::random_unitary(d, rng);
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let h = rep.twirl_map(&h);
    matcore::exp_i_hermitian(&h, 1.0)
}

/// U(1) on two qubits with generator `σ_z ⊗ I + I ⊗ σ_z`.
pub fn two_qubit_u1() -> SymmetryRep {
    let sz = matcore::diag_real(&[1.0, -1.0]);
    let id = matcore::identity(2);
    let n = matcore::kron(&sz, &id) + matcore::kron(&id, &sz);
    SymmetryRep::one_parameter(n).expect("diagonal generator is Hermitian")
}

/// U(1) phase group on a Fock space truncated to `d` levels, `N = diag(0..d)`.
pub fn fock_u1(d: usize) -> Result<SymmetryRep> {
    if d == 0 {
        return Err(Error::InvalidDimension(
            "Fock dimension must be positive".into(),
        ));
    }
    let levels: Vec<f64> = (0..d).map(|n| n as f64).collect();
    SymmetryRep::one_parameter(matcore::diag_real(&levels))
}

/// Cyclic group `Z_n` acting as `diag(exp(2πi·k·q_j/n))`, `k = 0..n`.
pub fn cyclic(n: usize, d: usize, charges: &[i64]) -> Result<SymmetryRep> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidDimension(
            "group order and dimension must be positive".into(),
        ));
    }
    if charges.len() != d {
        return Err(Error::InvalidDimension(format!(
            "expected {d} charges, got {}",
            charges.len()
        )));
    }
    let elements = (0..n)
        .map(|k| {
            let d = charges.len();
            CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    let angle =
                        2.0 * PI * (k as i64 * charges[i]).rem_euclid(n as i64) as f64 / n as f64;
                    Complex64::from_polar(1.0, angle)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    SymmetryRep::finite(elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{diag_real, from_real_rows};
    use crate::quantum::{random_cptp, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus_state() -> DensityMatrix {
        DensityMatrix::new(from_real_rows(2, 2, &[0.5, 0.5, 0.5, 0.5])).unwrap()
    }

    fn sz_rep() -> SymmetryRep {
        SymmetryRep::one_parameter(diag_real(&[1.0, -1.0])).unwrap()
    }

    #[test]
    fn builtin_generators() {
        let rep = two_qubit_u1();
        let blocks = eigenblocks(rep.generator().unwrap()).unwrap();
        assert_eq!(blocks.eigenvalues(), vec![-2.0, 0.0, 2.0]);
        assert_eq!(blocks.block_dims(), vec![1, 2, 1]);
        let e = matcore::eig_hermitian(rep.generator().unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![-2.0, 0.0, 0.0, 2.0]);

        let fock = fock_u1(4).unwrap();
        assert_eq!(fock.generator().unwrap(), &diag_real(&[0.0, 1.0, 2.0, 3.0]));
        assert_eq!(
            eigenblocks(fock.generator().unwrap()).unwrap().block_dims(),
            vec![1; 4]
        );
        assert_eq!(
            eigenblocks(&matcore::identity(5)).unwrap().block_dims(),
            vec![5]
        );

        let z2 = cyclic(2, 2, &[0, 1]).unwrap();
        let g = z2.as_finite().unwrap();
        assert_eq!(g.order(), 2);
        assert!(g
            .elements()
            .iter()
            .any(|u| (u - matcore::identity(2)).norm() < 1e-15));
        assert!(g
            .elements()
            .iter()
            .any(|u| (u - diag_real(&[1.0, -1.0])).norm() < 1e-15));

        assert!(fock_u1(0).is_err());
        assert!(cyclic(3, 2, &[0]).is_err());
    }

    #[test]
    fn finite_constructor_checks_closure_and_unitarity() {
        let sz = diag_real(&[1.0, -1.0]);
        assert!(matches!(
            SymmetryRep::finite(vec![sz.clone()]),
            Err(Error::NotClosed)
        ));
        assert!(matches!(
            SymmetryRep::finite(vec![diag_real(&[2.0, 1.0])]),
            Err(Error::NotUnitary { .. })
        ));
        let rep = SymmetryRep::finite(vec![matcore::identity(2), sz.clone(), sz]).unwrap();
        assert_eq!(rep.as_finite().unwrap().order(), 2);
        // Charges sharing a common factor with n collapse duplicates.
        assert_eq!(
            cyclic(4, 2, &[0, 2]).unwrap().as_finite().unwrap().order(),
            2
        );
    }

    #[test]
    fn two_qubit_twirl_is_the_three_block_pinch() {
        let rep = two_qubit_u1();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(4, &mut rng);
        let p0 = matcore::matrix_unit(4, 0, 0);
        let p1 = matcore::matrix_unit(4, 1, 1) + matcore::matrix_unit(4, 2, 2);
        let p2 = matcore::matrix_unit(4, 3, 3);
        let r = rho.matrix();
        let expected = &p0 * r * &p0 + &p1 * r * &p1 + &p2 * r * &p2;
        let tw = twirl(&rep, &rho).unwrap();
        assert!((tw.matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn twirl_fixes_symmetric_states() {
        let rep = cyclic(3, 3, &[0, 1, 2]).unwrap();
        let rho = DensityMatrix::new(diag_real(&[0.2, 0.3, 0.5])).unwrap();
        assert!((twirl(&rep, &rho).unwrap().matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn symmetric_state_predicate() {
        let rep = sz_rep();
        let mixed = DensityMatrix::maximally_mixed(2);
        let c = is_symmetric(&rep, &mixed, 1e-12).unwrap();
        assert!(c.holds && c.residual == 0.0);
        let c = is_symmetric(&rep, &plus_state(), 1e-8).unwrap();
        assert!(!c.holds);
        assert!((c.residual - 2f64.sqrt()).abs() < 1e-14);
        let tw = twirl(&rep, &plus_state()).unwrap();
        assert!(is_symmetric(&rep, &tw, 1e-12).unwrap().holds);
        assert!(is_symmetric(&rep, &DensityMatrix::maximally_mixed(3), 1e-12).is_err());
    }

    #[test]
    fn covariance_predicate() {
        let rep = sz_rep();
        let id = KrausChannel::identity(2);
        assert!(is_covariant(&rep, &id, 1e-12).unwrap().holds);
        assert!(
            is_covariant(&two_qubit_u1(), &KrausChannel::identity(4), 1e-12)
                .unwrap()
                .holds
        );

        // ρ ↦ |+⟩⟨+| Tr ρ, Kraus ops |+⟩⟨i|.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let k0 = from_real_rows(2, 2, &[h, 0.0, h, 0.0]);
        let k1 = from_real_rows(2, 2, &[0.0, h, 0.0, h]);
        let replace = KrausChannel::new(vec![k0, k1]).unwrap();
        let c = is_covariant(&rep, &replace, 1e-9).unwrap();
        assert!(!c.holds && c.residual > 0.1);
    }

    #[test]
    fn group_averaging_yields_covariant_channels() {
        let rep = cyclic(6, 6, &[0, 1, 2, 3, 4, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let raw = random_cptp(6, 2, &mut rng);
        assert!(!is_covariant(&rep, &raw, 1e-10).unwrap().holds);
        let avg = group_average_channel(&rep, &raw).unwrap();
        assert!(is_covariant(&rep, &avg, 1e-10).unwrap().holds);
        assert!(avg.validate_cptp().passes);

        let again = group_average_channel(&rep, &avg).unwrap();
        assert!(quantum::action_distance(&again, &avg).unwrap() < 1e-12);

        let trivial = SymmetryRep::finite(vec![matcore::identity(6)]).unwrap();
        let same = group_average_channel(&trivial, &raw).unwrap();
        assert!(quantum::action_distance(&same, &raw).unwrap() < 1e-14);

        assert!(matches!(
            group_average_channel(&sz_rep(), &KrausChannel::identity(2)),
            Err(Error::WrongVariant { .. })
        ));
    }

    #[test]
    fn covariant_unitaries_commute_with_the_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for rep in [cyclic(6, 6, &[0, 1, 2, 3, 4, 5]).unwrap(), two_qubit_u1()] {
            let u = random_covariant_unitary(&rep, &mut rng).unwrap();
            let ch = KrausChannel::unitary(u).unwrap();
            assert!(is_covariant(&rep, &ch, 1e-10).unwrap().holds);
        }
    }

    #[test]
    fn covariance_grid_is_fixed() {
        let g = covariance_grid();
        assert!((g[0] - 1.0 / 7.0).abs() < 1e-16);
        assert!((g[11] - (11.0 * PI / 6.0 + 1.0 / 7.0)).abs() < 1e-15);
    }
}
