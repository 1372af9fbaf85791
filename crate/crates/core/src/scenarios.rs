//! The two worked scenarios: a two-qubit covariant evolution and a Fock-space
//! phase reference degraded by repeated covariant measurements.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{self, CMatrix};
use crate::quantum::{self, DensityMatrix, KrausChannel, PureStateVector};

const NORM_TOL: f64 = 1e-10;

/// Trace allowed to leak from an Example 2 trajectory before it is rejected.
pub const TRAJECTORY_TRACE_TOL: f64 = 1e-9;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_normalized(amplitudes: &[Complex64]) -> Result<()> {
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if amplitudes.is_empty() || (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// `−Σ |λ_m|² log₂ |λ_m|²`, with `0 log 0 = 0`.
fn weight_entropy(amplitudes: &[Complex64]) -> f64 {
    -amplitudes
        .iter()
        .map(|a| a.norm_sqr())
        .filter(|&w| w > 0.0)
        .map(|w| w * w.log2())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Config {
    pub p: f64,
    pub amplitudes: [Complex64; 2],
}

impl Example1Config {
    pub fn new(p: f64, amplitudes: [Complex64; 2]) -> Result<Self> {
        check_probability(p)?;
        check_normalized(&amplitudes)?;
        Ok(Self { p, amplitudes })
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} not in [0, 1]")));
    }
    Ok(())
}

/// `σ_+ = |1⟩⟨0|`.
pub fn sigma_plus() -> CMatrix {
    matcore::matrix_unit(2, 1, 0)
}

/// `σ_− = |0⟩⟨1|`.
pub fn sigma_minus() -> CMatrix {
    matcore::matrix_unit(2, 0, 1)
}

pub fn sigma_z() -> CMatrix {
    matcore::diag_real(&[1.0, -1.0])
}

/// Kraus operators `{√(1−p) I, √p σ_z⊗σ_+, √p σ_z⊗σ_−}`.
pub fn example1_channel(p: f64) -> Result<KrausChannel> {
    check_probability(p)?;
    let sz = sigma_z();
    KrausChannel::new(vec![
        matcore::identity(4) * c((1.0 - p).sqrt()),
        matcore::kron(&sz, &sigma_plus()) * c(p.sqrt()),
        matcore::kron(&sz, &sigma_minus()) * c(p.sqrt()),
    ])
}

/// `λ₀|00⟩ + λ₁|10⟩` as a density matrix.
pub fn example1_state(l0: Complex64, l1: Complex64) -> Result<DensityMatrix> {
    check_normalized(&[l0, l1])?;
    let zero = c(0.0);
    let psi = PureStateVector::new(vec![l0, zero, l1, zero])?;
    Ok(quantum::density_from_pure(&psi))
}

/// Frozen relative entropy of asymmetry for `λ₀|00⟩ + λ₁|10⟩`, independent of `p`.
pub fn example1_expected_ar(l0: Complex64, l1: Complex64) -> Result<f64> {
    check_normalized(&[l0, l1])?;
    Ok(weight_entropy(&[l0, l1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example2Config {
    /// Level spacing `N`.
    pub spacing: usize,
    /// `λ₀ … λ_M`, placed on levels `(2m+1)N`.
    pub amplitudes: Vec<Complex64>,
    pub t_max: usize,
    pub fock_dim: usize,
}

impl Example2Config {
    /// Uses the default truncation [`default_fock_dim`].
    pub fn new(spacing: usize, amplitudes: Vec<Complex64>, t_max: usize) -> Result<Self> {
        let m = amplitudes.len().saturating_sub(1);
        Self::with_fock_dim(
            spacing,
            amplitudes,
            t_max,
            default_fock_dim(spacing, m, t_max),
        )
    }

    pub fn with_fock_dim(
        spacing: usize,
        amplitudes: Vec<Complex64>,
        t_max: usize,
        fock_dim: usize,
    ) -> Result<Self> {
        if spacing == 0 {
            return Err(Error::OutOfRange("level spacing N must be positive".into()));
        }
        check_normalized(&amplitudes)?;
        let required = default_fock_dim(spacing, amplitudes.len() - 1, t_max);
        if fock_dim < required {
            return Err(Error::GuardBandViolation {
                required,
                got: fock_dim,
            });
        }
        Ok(Self {
            spacing,
            amplitudes,
            t_max,
            fock_dim,
        })
    }

    /// Equal amplitudes `1/√(M+1)`.
    pub fn equal_amplitudes(spacing: usize, m: usize, t_max: usize) -> Result<Self> {
        let a = c(1.0 / ((m + 1) as f64).sqrt());
        Self::new(spacing, vec![a; m + 1], t_max)
    }

    pub fn m(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Fock level carrying `λ_m` shifted by `n`.
    fn level(&self, m: usize, n: i64) -> i64 {
        ((2 * m + 1) * self.spacing) as i64 + n
    }

    /// `|φ_n⟩ = Σ_m λ_m |(2m+1)N + n⟩`.
    pub fn phi(&self, n: i64) -> Result<PureStateVector> {
        let mut amps = vec![c(0.0); self.fock_dim];
        for (m, &a) in self.amplitudes.iter().enumerate() {
            let level = self.level(m, n);
            if level < 0 || level as usize >= self.fock_dim {
                return Err(Error::OutOfRange(format!(
                    "level {level} outside the truncated space"
                )));
            }
            amps[level as usize] = a;
        }
        PureStateVector::new(amps)
    }
}

/// `(2M+1)N + t_max + 2`.
pub fn default_fock_dim(spacing: usize, m: usize, t_max: usize) -> usize {
    (2 * m + 1) * spacing + t_max + 2
}

/// Lowering operator `Σ_n |n⟩⟨n+1|` on `d` levels.
pub fn lowering(d: usize) -> CMatrix {
    let mut a = CMatrix::zeros(d, d);
    for n in 0..d.saturating_sub(1) {
        a[(n, n + 1)] = c(1.0);
    }
    a
}

/// Measurement update `ρ ↦ ½ρ + ¼|0⟩⟨0|ρ|0⟩⟨0| + ¼A†ρA + ¼AρA†` truncated to
/// `d` levels. Truncation leaves a completeness deficit of `¼|d−1⟩⟨d−1|`.
pub fn example2_channel(d: usize) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("Fock dimension {d} < 2")));
    }
    let a = lowering(d);
    KrausChannel::trace_decreasing(
        vec![
            matcore::identity(d) * c(std::f64::consts::FRAC_1_SQRT_2),
            matcore::matrix_unit(d, 0, 0) * c(0.5),
            a.adjoint() * c(0.5),
            a * c(0.5),
        ],
        0.25,
    )
}

/// `λ₀|N⟩ + λ₁|3N⟩ + … + λ_M|(2M+1)N⟩`.
pub fn example2_state(cfg: &Example2Config) -> Result<DensityMatrix> {
    Ok(quantum::density_from_pure(&cfg.phi(0)?))
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weight of `|φ_n⟩⟨φ_n|` after `t` measurements:
/// `Σ_k C(t,k) C(t−k, k−n) 2^{−(t−n+2k)}` over integers
/// `max(n, 0) ≤ k ≤ ⌊(t+n)/2⌋`.
pub fn p_weight(n: i64, t: u32) -> Result<f64> {
    let t = t as i64;
    if n.abs() > t {
        return Err(Error::OutOfRange(format!(
            "|n| = {} exceeds t = {t}",
            n.abs()
        )));
    }
    let lo = n.max(0);
    let hi = (t + n).div_euclid(2);
    Ok((lo..=hi)
        .map(|k| {
            binomial(t as u64, k as u64)
                * binomial((t - k) as u64, (k - n) as u64)
                * 0.5f64.powi((t - n + 2 * k) as i32)
        })
        .sum())
}

/// `Σ_{n=−t}^{t} p_n(t) |φ_n⟩⟨φ_n|`, valid for `t < N`.
pub fn example2_closed_form(cfg: &Example2Config, t: usize) -> Result<DensityMatrix> {
    if t >= cfg.spacing {
        return Err(Error::OutOfRange(format!(
            "closed form holds for t < N = {}, got t = {t}",
            cfg.spacing
        )));
    }
    let d = cfg.fock_dim;
    let mut m = CMatrix::zeros(d, d);
    let t_i = t as i64;
    for n in -t_i..=t_i {
        let w = p_weight(n, t as u32)?;
        let phi = cfg.phi(n)?;
        m += quantum::density_from_pure(&phi).matrix() * c(w);
    }
    DensityMatrix::new(m)
}

/// `[ρ₀, Λ(ρ₀), …, Λ^{t_max}(ρ₀)]`.
pub fn example2_trajectory(cfg: &Example2Config) -> Result<Vec<DensityMatrix>> {
    let channel = example2_channel(cfg.fock_dim)?;
    let mut states = vec![example2_state(cfg)?];
    for _ in 0..cfg.t_max {
        let out = channel.apply_channel(states.last().unwrap())?;
        if out.trace < 1.0 - TRAJECTORY_TRACE_TOL {
            return Err(Error::TraceLoss {
                deficit: out.trace_deficit,
                allowed: TRAJECTORY_TRACE_TOL,
            });
        }
        states.push(DensityMatrix::new_with_tol(
            out.matrix,
            TRAJECTORY_TRACE_TOL,
        )?);
    }
    Ok(states)
}

/// `[Λ⁰, Λ¹, …, Λ^{t_max}]` as Kraus channels, for recovery checks.
///
/// The Kraus count grows as `4^t`.
pub fn example2_channel_powers(cfg: &Example2Config) -> Result<Vec<KrausChannel>> {
    let step = example2_channel(cfg.fock_dim)?;
    let mut powers = vec![KrausChannel::identity(cfg.fock_dim)];
    for _ in 0..cfg.t_max {
        let next = step.after(powers.last().unwrap())?;
        powers.push(next);
    }
    Ok(powers)
}

/// Frozen relative entropy of asymmetry for `t < N`.
pub fn example2_expected_ar(amplitudes: &[Complex64]) -> Result<f64> {
    check_normalized(amplitudes)?;
    Ok(weight_entropy(amplitudes))
}
