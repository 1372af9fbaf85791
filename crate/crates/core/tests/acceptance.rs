//! Acceptance run: one line per criterion, non-zero exit on any failure.

use std::process::Command;
use std::time::{Duration, Instant};

use asymfreeze::matcore::{self, CMatrix};
use asymfreeze::measures::{self, MeasureRegistry};
use asymfreeze::quantum::{self, DensityMatrix, KrausChannel};
use asymfreeze::scenarios::{self, Example2Config};
use asymfreeze::symmetry::{self, SymmetryRep};
use asymfreeze::universality::{
    self, petz_recovery, verify_recovery, ChannelSource, RecoveryBranch, TheoremConfig,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn binary_entropy(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn p_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn z6() -> SymmetryRep {
    symmetry::cyclic(6, 6, &[0, 1, 2, 3, 4, 5]).unwrap()
}

fn example1_freezing() -> Outcome {
    let rep = symmetry::two_qubit_u1();
    let h = c(std::f64::consts::FRAC_1_SQRT_2);
    let cases = [
        (h, h, 1.0),
        (c(0.3f64.sqrt()), c(0.7f64.sqrt()), 0.8812908992),
    ];
    let mut worst = 0.0f64;
    for (l0, l1, target) in cases {
        let oracle = binary_entropy(l0.norm_sqr());
        check((target - oracle).abs() < 1e-9, || {
            format!("oracle gives {oracle}, target {target}")
        })?;
        let rho0 = scenarios::example1_state(l0, l1).map_err(|e| e.to_string())?;
        for p in p_grid() {
            let ch = scenarios::example1_channel(p).map_err(|e| e.to_string())?;
            let rho = ch.apply(&rho0).map_err(|e| e.to_string())?;
            let ar = measures::rel_entropy_asymmetry(&rep, &rho).map_err(|e| e.to_string())?;
            let dev = (ar - target).abs();
            worst = worst.max(dev);
            check(dev <= 1e-9, || {
                format!("p = {p}: A_r = {ar}, expected {target}")
            })?;
        }
    }
    Ok(format!("max |A_r - expected| = {worst:.1e}"))
}

fn example1_universality() -> Outcome {
    let rep = symmetry::two_qubit_u1();
    let n = rep.generator().unwrap().clone();
    let h = c(std::f64::consts::FRAC_1_SQRT_2);
    let mut worst_skew = 0.0f64;
    let mut worst_rec = 0.0f64;
    for (l0, l1) in [(h, h), (c(0.3f64.sqrt()), c(0.7f64.sqrt()))] {
        let rho0 = scenarios::example1_state(l0, l1).map_err(|e| e.to_string())?;
        let prior = symmetry::twirl(&rep, &rho0).map_err(|e| e.to_string())?;
        let skew0 = measures::skew_information(&rho0, &n).map_err(|e| e.to_string())?;
        for p in p_grid() {
            let ch = scenarios::example1_channel(p).map_err(|e| e.to_string())?;
            let rho = ch.apply(&rho0).map_err(|e| e.to_string())?;
            let skew = measures::skew_information(&rho, &n).map_err(|e| e.to_string())?;
            worst_skew = worst_skew.max((skew - skew0).abs());
            let r = petz_recovery(&ch, &prior).map_err(|e| e.to_string())?;
            let res = verify_recovery(&r, &rho, &rho0)
                .map_err(|e| e.to_string())?
                .state;
            worst_rec = worst_rec.max(res);
            check((skew - skew0).abs() <= 1e-8, || {
                format!("p = {p}: skew moved to {skew} from {skew0}")
            })?;
            check(res <= 1e-8, || {
                format!("p = {p}: recovery residual {res:e}")
            })?;
        }
    }
    Ok(format!(
        "max skew deviation = {worst_skew:.1e}, max recovery residual = {worst_rec:.1e}"
    ))
}

fn example2_freezing() -> Outcome {
    let cfg = Example2Config::equal_amplitudes(3, 1, 2).map_err(|e| e.to_string())?;
    check(cfg.fock_dim == 13, || format!("fock_dim {}", cfg.fock_dim))?;
    let rep = symmetry::fock_u1(cfg.fock_dim).map_err(|e| e.to_string())?;
    let traj = scenarios::example2_trajectory(&cfg).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut worst_dist = 0.0f64;
    for (t, rho) in traj.iter().enumerate() {
        let ar = measures::rel_entropy_asymmetry(&rep, rho).map_err(|e| e.to_string())?;
        worst = worst.max((ar - 1.0).abs());
        check((ar - 1.0).abs() <= 1e-9, || format!("t = {t}: A_r = {ar}"))?;
        check(rho.trace() >= 1.0 - 1e-12, || {
            format!("t = {t}: trace {}", rho.trace())
        })?;
        let closed = scenarios::example2_closed_form(&cfg, t).map_err(|e| e.to_string())?;
        let dist = rho.trace_distance(&closed).map_err(|e| e.to_string())?;
        worst_dist = worst_dist.max(dist);
        check(dist <= 1e-10, || {
            format!("t = {t}: closed form off by {dist:e}")
        })?;
    }
    // Brute-force iteration from a single level far from both edges.
    let ch = scenarios::example2_channel(13).map_err(|e| e.to_string())?;
    let mut rho = DensityMatrix::basis(13, 6).matrix().clone();
    let mut stay = Vec::new();
    for _ in 0..2 {
        rho = ch.apply_map(&rho);
        stay.push(rho[(6, 6)].re);
    }
    for (t, (&brute, expected)) in stay.iter().zip([0.5, 0.375]).enumerate() {
        let formula = scenarios::p_weight(0, t as u32 + 1).map_err(|e| e.to_string())?;
        check(
            (brute - expected).abs() < 1e-15 && (formula - brute).abs() < 1e-15,
            || format!("p_0({}) = {formula}, iteration gives {brute}", t + 1),
        )?;
    }
    Ok(format!(
        "max |A_r - 1| = {worst:.1e}, max closed-form distance = {worst_dist:.1e}"
    ))
}

/// Random covariant channel that never populates the last level.
fn covariant_on_lower_block(rep: &SymmetryRep, rng: &mut ChaCha8Rng) -> KrausChannel {
    let d = rep.dim();
    let inner = quantum::random_cptp(d - 1, 2, rng);
    let mut ops: Vec<CMatrix> = inner
        .ops()
        .iter()
        .map(|k| {
            let mut m = CMatrix::zeros(d, d);
            m.view_mut((0, 0), (d - 1, d - 1)).copy_from(k);
            m
        })
        .collect();
    ops.push(matcore::matrix_unit(d, d - 1, d - 1));
    let raw = KrausChannel::new(ops).unwrap();
    symmetry::group_average_channel(rep, &raw).unwrap()
}

fn recovery_contract() -> Outcome {
    let rep = z6();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut branches = [0usize; 2];
    for trial in 0..100u64 {
        let mut rng = universality::trial_rng(2024, trial as usize);
        let kernel_case = trial >= 50;
        let (prior, ch) = if kernel_case {
            let mut w: Vec<f64> = (0..5).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            w.push(0.0);
            let prior = DensityMatrix::new(matcore::diag_real(&w)).map_err(|e| e.to_string())?;
            (prior, covariant_on_lower_block(&rep, &mut rng))
        } else {
            let rho = quantum::random_density(6, &mut rng);
            let prior = symmetry::twirl(&rep, &rho).map_err(|e| e.to_string())?;
            let raw = quantum::random_cptp(6, 2, &mut rng);
            (
                prior,
                symmetry::group_average_channel(&rep, &raw).map_err(|e| e.to_string())?,
            )
        };
        let r = petz_recovery(&ch, &prior).map_err(|e| e.to_string())?;
        let expected_branch = if kernel_case {
            RecoveryBranch::KernelAugmented
        } else {
            RecoveryBranch::Invertible
        };
        check(r.branch == expected_branch, || {
            format!("trial {trial}: branch {:?}", r.branch)
        })?;
        branches[kernel_case as usize] += 1;
        let back = r.apply(&r.evolved_prior).map_err(|e| e.to_string())?;
        let res = back.trace_distance(&prior).map_err(|e| e.to_string())?;
        let tp = r.channel.validate_cptp().residual;
        let cov = symmetry::is_covariant(&rep, &r.channel, 1e-8).map_err(|e| e.to_string())?;
        worst = (worst.0.max(res), worst.1.max(tp), worst.2.max(cov.residual));
        check(res <= 1e-9, || {
            format!("trial {trial}: R(delta_t) off by {res:e}")
        })?;
        check(tp <= 1e-9, || {
            format!("trial {trial}: completeness residual {tp:e}")
        })?;
        check(cov.holds && cov.residual <= 1e-8, || {
            format!("trial {trial}: covariance residual {:e}", cov.residual)
        })?;
    }
    Ok(format!(
        "{} invertible + {} kernel-augmented; max residuals: recovery {:.1e}, completeness {:.1e}, covariance {:.1e}",
        branches[0], branches[1], worst.0, worst.1, worst.2
    ))
}

fn theorem_suite() -> Outcome {
    let rep = z6();
    let registry = MeasureRegistry::extended(&rep);
    let mut parts = Vec::new();
    for source in [ChannelSource::Random, ChannelSource::Mixed] {
        let cfg = TheoremConfig::new(100, 42).with_source(source);
        let s = universality::theorem_check(&rep, &registry, &cfg).map_err(|e| e.to_string())?;
        check(s.trials == 100, || format!("{} trials", s.trials))?;
        check(s.monotonicity_violations == 0, || {
            format!(
                "{source:?}: {} monotonicity violations",
                s.monotonicity_violations
            )
        })?;
        check(s.sandwich_violations == 0, || {
            format!("{source:?}: {} sandwich violations", s.sandwich_violations)
        })?;
        check(s.forward_violations == 0, || {
            format!("{source:?}: {} forward violations", s.forward_violations)
        })?;
        check(
            s.max_measure_deviation <= 1e-7 && s.max_recovery_residual <= 1e-7,
            || {
                format!(
                    "{source:?}: measure deviation {:e}, recovery residual {:e}",
                    s.max_measure_deviation, s.max_recovery_residual
                )
            },
        )?;
        parts.push(format!(
            "{source:?}: {} frozen, max deviation {:.1e}, max recovery {:.1e}",
            s.frozen_count, s.max_measure_deviation, s.max_recovery_residual
        ));
    }
    Ok(parts.join("; "))
}

fn measure_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_gap = f64::NEG_INFINITY;
    for i in 0..100 {
        let d = 2 + i % 5;
        let ch = quantum::random_cptp(d, 2, &mut rng);
        let rho = quantum::random_density(d, &mut rng);
        let sigma = quantum::random_density(d, &mut rng);
        let before = measures::relative_entropy(&rho, &sigma).map_err(|e| e.to_string())?;
        let after = measures::relative_entropy(
            &ch.apply(&rho).map_err(|e| e.to_string())?,
            &ch.apply(&sigma).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(after - before);
        check(after <= before + 1e-9, || {
            format!("triple {i}: {after} > {before}")
        })?;
    }
    let reps = [
        z6(),
        symmetry::two_qubit_u1(),
        symmetry::fock_u1(6).unwrap(),
    ];
    let mut worst_forms = 0.0f64;
    let mut worst_sym = 0.0f64;
    for i in 0..100 {
        let rep = &reps[i % reps.len()];
        let rho = quantum::random_density(rep.dim(), &mut rng);
        let twirled = symmetry::twirl(rep, &rho).map_err(|e| e.to_string())?;
        let entropic = measures::rel_entropy_asymmetry(rep, &rho).map_err(|e| e.to_string())?;
        let relative = measures::relative_entropy(&rho, &twirled).map_err(|e| e.to_string())?;
        worst_forms = worst_forms.max((entropic - relative).abs());
        check((entropic - relative).abs() <= 1e-9, || {
            format!("state {i}: {entropic} vs {relative}")
        })?;
        let sym = measures::rel_entropy_asymmetry(rep, &twirled).map_err(|e| e.to_string())?;
        worst_sym = worst_sym.max(sym.abs());
        check(sym.abs() <= 1e-10, || {
            format!("state {i}: A_r(symmetric) = {sym:e}")
        })?;
    }
    Ok(format!(
        "max contraction gap = {worst_gap:.1e}, max closed-form gap = {worst_forms:.1e}, max A_r(symmetric) = {worst_sym:.1e}"
    ))
}

fn run_binary(
    config: &str,
    dir: &std::path::Path,
    tag: &str,
    threads: &str,
) -> Result<Vec<u8>, String> {
    let cfg_path = dir.join(format!("{tag}.json"));
    let out_path = dir.join(format!("{tag}.out"));
    std::fs::write(&cfg_path, config).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_asymfreeze"))
        .env("RAYON_NUM_THREADS", threads)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_path)
        .status()
        .map_err(|e| e.to_string())?;
    check(status.code() == Some(0), || format!("{tag}: exit {status}"))?;
    std::fs::read(&out_path).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        ("example1", r#"{"scenario":"example1"}"#),
        (
            "example2",
            r#"{"scenario":"example2","N":3,"M":1,"t_max":4}"#,
        ),
        (
            "theorem",
            r#"{"scenario":"theorem","seed":42,"trials":100}"#,
        ),
        (
            "theorem_mixed",
            r#"{"scenario":"theorem","seed":7,"channel_source":"mixed","format":"csv"}"#,
        ),
    ];
    for (name, cfg) in configs {
        let a = run_binary(cfg, dir.path(), &format!("{name}_a"), "1")?;
        let b = run_binary(cfg, dir.path(), &format!("{name}_b"), "4")?;
        let c = run_binary(cfg, dir.path(), &format!("{name}_c"), "4")?;
        check(!a.is_empty() && a == b && b == c, || {
            format!("{name}: reports differ")
        })?;
    }
    Ok(format!(
        "{} scenarios, 3 runs each, 1 and 4 worker threads",
        configs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "Example 1 freezing",
            Duration::from_secs(1),
            example1_freezing,
        ),
        (
            "Example 1 universality",
            Duration::from_secs(1),
            example1_universality,
        ),
        (
            "Example 2 freezing",
            Duration::from_secs(1),
            example2_freezing,
        ),
        (
            "Recovery-map contract",
            Duration::from_secs(5),
            recovery_contract,
        ),
        (
            "Theorem property suite",
            Duration::from_secs(10),
            theorem_suite,
        ),
        (
            "Measure-theoretic invariants",
            Duration::from_secs(5),
            measure_invariants,
        ),
        ("Determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= *budget {
                Ok(detail)
            } else {
                Err(format!(
                    "{detail}; runtime {elapsed:.2?} exceeds {budget:?}"
                ))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
