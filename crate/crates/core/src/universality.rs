//! Covariant Petz recovery, freezing detection and the randomized check that
//! a frozen relative entropy of asymmetry freezes every other measure.
//!
//! For a covariant channel `Λ` with Kraus operators `K_n`, a symmetric prior
//! `δ₀` and `δ_t = Λ(δ₀)`, the recovery channel has Kraus operators
//! `δ₀^{1/2} K_n† δ_t^{-1/2}` (pseudoinverse square root), plus the kernel
//! projector of `δ_t` when `δ_t` is singular. It always maps `δ_t` back to
//! `δ₀`, and it maps `Λ(ρ₀)` back to `ρ₀` exactly when
//! `S(Λ(ρ₀)‖Λ(δ₀)) = S(ρ₀‖δ₀)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore;
use crate::measures::{self, MeasureRegistry, MeasureValue};
use crate::quantum::{self, DensityMatrix, KrausChannel};
use crate::symmetry::{self, SymmetryRep};

/// Completeness tolerance the constructed recovery map must meet.
pub const RECOVERY_TP_TOL: f64 = 1e-8;

/// Default tolerance for a measure to count as frozen, in bits.
pub const DEFAULT_FREEZE_TOL: f64 = 1e-9;

/// `|ΔA_r|` at or below this marks a trial as frozen.
pub const FROZEN_TRIGGER: f64 = 1e-10;

/// Bound on measure deviation and recovery residual in frozen trials.
pub const CONSEQUENCE_BOUND: f64 = 1e-7;

/// Slack for monotonicity and each step of the sandwich inequality.
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// Upper edge of the "approximately frozen" band, reported only.
pub const NEAR_FROZEN_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryBranch {
    /// `δ_t` has full rank.
    Invertible,
    /// `δ_t` is singular; the kernel projector is an extra Kraus operator.
    KernelAugmented,
}

#[derive(Debug, Clone)]
pub struct RecoveryMap {
    pub channel: KrausChannel,
    pub prior: DensityMatrix,
    pub evolved_prior: DensityMatrix,
    pub branch: RecoveryBranch,
}

impl RecoveryMap {
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.channel.apply(rho)
    }
}

pub fn petz_recovery(channel: &KrausChannel, prior: &DensityMatrix) -> Result<RecoveryMap> {
    if channel.dim() != prior.dim() {
        return Err(Error::DimMismatch {
            expected: channel.dim(),
            got: prior.dim(),
        });
    }
    let evolved_prior = channel.apply(prior)?;
    let sqrt_prior = matcore::sqrt_psd(prior.matrix())?;
    let inv_sqrt = matcore::pinv_sqrt(evolved_prior.matrix())?;
    let kernel = matcore::kernel_projector(evolved_prior.matrix())?;

    let mut ops: Vec<_> = channel
        .ops()
        .iter()
        .map(|k| &sqrt_prior * k.adjoint() * &inv_sqrt)
        .collect();
    let branch = if matcore::trace_re(&kernel) > 0.5 {
        ops.push(kernel);
        RecoveryBranch::KernelAugmented
    } else {
        RecoveryBranch::Invertible
    };
    let channel = KrausChannel::with_tolerance(ops, RECOVERY_TP_TOL)?;
    Ok(RecoveryMap {
        channel,
        prior: prior.clone(),
        evolved_prior,
        branch,
    })
}

/// Trace distances `(‖R(ρ_t) − ρ₀‖, ‖R(δ_t) − δ₀‖)`, both halved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryResiduals {
    pub state: f64,
    pub prior: f64,
}

pub fn verify_recovery(
    recovery: &RecoveryMap,
    evolved: &DensityMatrix,
    initial: &DensityMatrix,
) -> Result<RecoveryResiduals> {
    let d = recovery.channel.dim();
    for got in [evolved.dim(), initial.dim()] {
        if got != d {
            return Err(Error::DimMismatch { expected: d, got });
        }
    }
    let state = matcore::trace_norm_distance(
        &recovery.channel.apply_map(evolved.matrix()),
        initial.matrix(),
    )?;
    let prior = matcore::trace_norm_distance(
        &recovery.channel.apply_map(recovery.evolved_prior.matrix()),
        recovery.prior.matrix(),
    )?;
    Ok(RecoveryResiduals { state, prior })
}

/// Measure values at one point of a trajectory.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub index: usize,
    pub values: Vec<MeasureValue>,
    pub recovery_residual: Option<f64>,
}

impl StepRecord {
    pub fn value(&self, id: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|v| v.measure_id == id)
            .map(|v| v.value)
    }
}

#[derive(Debug, Clone)]
pub struct FreezeReport {
    pub steps: Vec<StepRecord>,
    pub measure_ids: Vec<&'static str>,
    /// `max_t |m(ρ_t) − m(ρ₀)|` per measure, aligned with `measure_ids`.
    pub max_deviation: Vec<f64>,
    pub frozen: Vec<bool>,
    pub tolerance: f64,
}

impl FreezeReport {
    pub fn is_frozen(&self, id: &str) -> Option<bool> {
        self.measure_ids
            .iter()
            .position(|m| *m == id)
            .map(|i| self.frozen[i])
    }

    pub fn deviation(&self, id: &str) -> Option<f64> {
        self.measure_ids
            .iter()
            .position(|m| *m == id)
            .map(|i| self.max_deviation[i])
    }

    pub fn all_frozen(&self) -> bool {
        self.frozen.iter().all(|&f| f)
    }

    pub fn max_recovery_residual(&self) -> Option<f64> {
        self.steps
            .iter()
            .filter_map(|s| s.recovery_residual)
            .reduce(f64::max)
    }
}

/// Evaluates every measure along `trajectory` and decides, per measure,
/// whether it stays within `tol` of its initial value.
///
/// When `channels` is given, `channels[t]` must map `trajectory[0]` to
/// `trajectory[t]`; each step then also records the residual of the Petz
/// recovery built with prior `Λ_G(ρ₀)`.
pub fn freezing_report(
    rep: &SymmetryRep,
    trajectory: &[DensityMatrix],
    registry: &MeasureRegistry,
    tol: f64,
    channels: Option<&[KrausChannel]>,
) -> Result<FreezeReport> {
    let initial = trajectory.first().ok_or(Error::EmptyTrajectory)?;
    for rho in trajectory {
        if rho.dim() != initial.dim() {
            return Err(Error::DimMismatch {
                expected: initial.dim(),
                got: rho.dim(),
            });
        }
    }
    if let Some(chs) = channels {
        if chs.len() != trajectory.len() {
            return Err(Error::InvalidDimension(format!(
                "{} channels for {} trajectory points",
                chs.len(),
                trajectory.len()
            )));
        }
    }
    let prior = symmetry::twirl(rep, initial)?;

    let steps = trajectory
        .par_iter()
        .enumerate()
        .map(|(index, rho)| {
            let values = registry.evaluate(rep, rho)?;
            let recovery_residual = match channels {
                Some(chs) => {
                    let r = petz_recovery(&chs[index], &prior)?;
                    Some(verify_recovery(&r, rho, initial)?.state)
                }
                None => None,
            };
            Ok(StepRecord {
                index,
                values,
                recovery_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let measure_ids = registry.ids();
    let max_deviation: Vec<f64> = (0..measure_ids.len())
        .map(|m| {
            let base = steps[0].values[m].value;
            steps
                .iter()
                .map(|s| (s.values[m].value - base).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let frozen = max_deviation.iter().map(|&d| d <= tol).collect();
    Ok(FreezeReport {
        steps,
        measure_ids,
        max_deviation,
        frozen,
        tolerance: tol,
    })
}

/// Where each theorem trial draws its covariant channel from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    /// Group average of a random CPTP map.
    #[default]
    Random,
    /// Random unitary from the commutant of the representation.
    CovariantUnitary,
    Identity,
    /// Even trials `Random`, odd trials `CovariantUnitary`.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremConfig {
    pub trials: usize,
    pub seed: u64,
    /// Environment dimension of the random isometry (Kraus rank before averaging).
    pub environment_levels: usize,
    pub source: ChannelSource,
}

impl TheoremConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            environment_levels: 2,
            source: ChannelSource::Random,
        }
    }

    pub fn with_source(mut self, source: ChannelSource) -> Self {
        self.source = source;
        self
    }
}

/// Outcome of one randomized trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub ar_initial: f64,
    pub ar_final: f64,
    pub frozen: bool,
    pub near_frozen: bool,
    pub monotonicity_violated: bool,
    pub sandwich_violated: bool,
    /// Largest measure deviation; only computed for frozen trials.
    pub measure_deviation: Option<f64>,
    /// Recovery residual; only computed for frozen trials.
    pub recovery_residual: Option<f64>,
}

impl TrialOutcome {
    pub fn ar_drop(&self) -> f64 {
        self.ar_initial - self.ar_final
    }

    pub fn forward_violated(&self) -> bool {
        self.measure_deviation
            .is_some_and(|d| !(d <= CONSEQUENCE_BOUND))
            || self
                .recovery_residual
                .is_some_and(|r| !(r <= CONSEQUENCE_BOUND))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremStats {
    pub trials: usize,
    pub frozen_count: usize,
    pub max_ar_drop: f64,
    pub max_measure_deviation: f64,
    pub max_recovery_residual: f64,
    pub monotonicity_violations: usize,
    pub sandwich_violations: usize,
    pub forward_violations: usize,
    pub near_frozen_count: usize,
}

impl TheoremStats {
    pub fn passed(&self) -> bool {
        self.monotonicity_violations == 0
            && self.sandwich_violations == 0
            && self.forward_violations == 0
    }
}

/// RNG for trial `index`: the run seed selects the key, the trial index the
/// stream, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn run_trial(
    rep: &SymmetryRep,
    registry: &MeasureRegistry,
    cfg: &TheoremConfig,
    index: usize,
) -> Result<TrialOutcome> {
    let d = rep.dim();
    let mut rng = trial_rng(cfg.seed, index);
    let initial = quantum::random_density(d, &mut rng);
    let source = match cfg.source {
        ChannelSource::Mixed if index.is_multiple_of(2) => ChannelSource::Random,
        ChannelSource::Mixed => ChannelSource::CovariantUnitary,
        s => s,
    };
    let channel = match source {
        ChannelSource::Random => {
            let raw = quantum::random_cptp(d, cfg.environment_levels, &mut rng);
            symmetry::group_average_channel(rep, &raw)?
        }
        ChannelSource::CovariantUnitary => {
            KrausChannel::unitary(symmetry::random_covariant_unitary(rep, &mut rng)?)?
        }
        ChannelSource::Identity | ChannelSource::Mixed => KrausChannel::identity(d),
    };

    let prior = symmetry::twirl(rep, &initial)?;
    let evolved = channel.apply(&initial)?;
    let evolved_prior = channel.apply(&prior)?;

    let ar_initial = measures::rel_entropy_asymmetry(rep, &initial)?;
    let ar_final = measures::rel_entropy_asymmetry(rep, &evolved)?;
    let drop = ar_initial - ar_final;

    let rel_initial = measures::relative_entropy(&initial, &prior)?;
    let rel_final = measures::relative_entropy(&evolved, &evolved_prior)?;
    let sandwich_violated = !(ar_final <= rel_final + INEQUALITY_SLACK
        && rel_final <= rel_initial + INEQUALITY_SLACK
        && (rel_initial - ar_initial).abs() <= INEQUALITY_SLACK);

    let frozen = drop.abs() <= FROZEN_TRIGGER;
    let (measure_deviation, recovery_residual) = if frozen {
        let before = registry.evaluate(rep, &initial)?;
        let after = registry.evaluate(rep, &evolved)?;
        let dev = before
            .iter()
            .zip(&after)
            .map(|(a, b)| (a.value - b.value).abs())
            .fold(0.0, f64::max);
        let recovery = petz_recovery(&channel, &prior)?;
        let res = verify_recovery(&recovery, &evolved, &initial)?.state;
        (Some(dev), Some(res))
    } else {
        (None, None)
    };

    Ok(TrialOutcome {
        ar_initial,
        ar_final,
        frozen,
        near_frozen: !frozen && drop.abs() <= NEAR_FROZEN_BAND,
        monotonicity_violated: ar_final > ar_initial + INEQUALITY_SLACK,
        sandwich_violated,
        measure_deviation,
        recovery_residual,
    })
}

/// Randomized check over covariant channels of a finite representation.
pub fn theorem_check(
    rep: &SymmetryRep,
    registry: &MeasureRegistry,
    cfg: &TheoremConfig,
) -> Result<TheoremStats> {
    rep.as_finite()?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(rep, registry, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&outcomes))
}

pub fn summarize(outcomes: &[TrialOutcome]) -> TheoremStats {
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    TheoremStats {
        trials: outcomes.len(),
        frozen_count: outcomes.iter().filter(|o| o.frozen).count(),
        max_ar_drop: max(&mut outcomes.iter().map(|o| o.ar_drop())),
        max_measure_deviation: max(&mut outcomes.iter().filter_map(|o| o.measure_deviation)),
        max_recovery_residual: max(&mut outcomes.iter().filter_map(|o| o.recovery_residual)),
        monotonicity_violations: outcomes.iter().filter(|o| o.monotonicity_violated).count(),
        sandwich_violations: outcomes.iter().filter(|o| o.sandwich_violated).count(),
        forward_violations: outcomes.iter().filter(|o| o.forward_violated()).count(),
        near_frozen_count: outcomes.iter().filter(|o| o.near_frozen).count(),
    }
}
