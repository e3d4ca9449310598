mod common;

use rand::Rng;

use common::{random_channel, rng};
use rotcode::codes::{build_code, Code, CodeFamily, CodeParams};
use rotcode::linalg::{CMatrix, C64};
use rotcode::metrics::{channel_fidelity, compose_logical_channel, ChoiMatrix};
use rotcode::noise::{loss_dephasing_channel, NoisePoint};
use rotcode::recovery::{baseline_recovery, build_recovery_problem, solve_optimal_recovery, RecoveryProblem};
use rotcode::sdp::SdpSettings;
use rotcode::sweep::{evaluate_point, trial_seeds};

fn random_small_code(t: usize, r: &mut impl Rng) -> Code {
    match t % 4 {
        0 => build_code(CodeFamily::Bin, 2 + t % 2, CodeParams::K(r.random_range(1..=2)), None),
        1 => build_code(CodeFamily::Cat, 2, CodeParams::Alpha(r.random_range(0.6..1.8)), None),
        2 => build_code(CodeFamily::Rand1, 2, CodeParams::K(1), Some(trial_seeds(9, CodeFamily::Rand1, 2, 1, t))),
        _ => build_code(CodeFamily::Rand2, 3, CodeParams::K(1), Some(trial_seeds(9, CodeFamily::Rand2, 3, 1, t))),
    }
    .unwrap()
}

#[test]
fn linear_functional_matches_composed_channel() {
    let mut r = rng(21);
    for t in 0..12 {
        let code = random_small_code(t, &mut r);
        let noise = NoisePoint::new(r.random_range(0.0..0.3), r.random_range(0.0..0.3)).unwrap();
        let ch = loss_dephasing_channel(noise, code.dim()).unwrap();
        let p = build_recovery_problem(&code, &ch).unwrap();
        for _ in 0..3 {
            let rec = random_channel(p.support_dim(), 2, &mut r);
            let linear = p.linear_fidelity(&rec).unwrap();
            let composed =
                channel_fidelity(&compose_logical_channel(&code, &ch, &p.lift(&rec).unwrap()).unwrap()).unwrap();
            assert!((linear - composed).abs() < 1e-10, "case {t}: {linear} vs {composed}");
        }
        let sol = solve_optimal_recovery(&p).unwrap();
        let composed =
            channel_fidelity(&compose_logical_channel(&code, &ch, &p.lift(&sol.recovery_choi).unwrap()).unwrap())
                .unwrap();
        assert!((sol.fidelity - composed).abs() < 1e-10);
    }
}

#[test]
fn solver_closes_duality_gap() {
    let mut r = rng(5);
    for t in 0..8 {
        let code = random_small_code(t, &mut r);
        let noise =
            NoisePoint::new(10f64.powf(r.random_range(-3.0..-0.6)), 10f64.powf(r.random_range(-3.0..-0.6))).unwrap();
        let p = build_recovery_problem(&code, &loss_dephasing_channel(noise, code.dim()).unwrap()).unwrap();
        let sol = solve_optimal_recovery(&p).unwrap();
        assert!(sol.solver_status.is_usable());
        let gap = (sol.primal_objective - sol.dual_objective).abs();
        assert!(gap < 1e-6, "case {t}: gap {gap:e}");
        assert!(baseline_recovery(&p).unwrap().fidelity <= sol.fidelity + 1e-6);
    }
}

#[test]
fn fully_depolarized_encoding_gives_one_half() {
    // every input ends up maximally mixed on a two-dimensional support
    let choi = ChoiMatrix::new(2, 2, CMatrix::identity(4, 4) * C64::new(0.5, 0.0)).unwrap();
    let p = RecoveryProblem::from_noisy_encoding(choi, SdpSettings::default()).unwrap();
    let sdp = solve_optimal_recovery(&p).unwrap();
    let base = baseline_recovery(&p).unwrap();
    assert!((sdp.fidelity - 0.5).abs() < 1e-7, "{}", sdp.fidelity);
    assert!((base.fidelity - 0.5).abs() < 1e-10, "{}", base.fidelity);
}

#[test]
fn optimal_infidelity_grows_along_noise_slices() {
    let code = build_code(CodeFamily::Bin, 2, CodeParams::K(2), None).unwrap();
    let axis: Vec<f64> = (0..8).map(|k| 10f64.powf(-3.0 + 0.3 * k as f64)).collect();
    for slice in 0..2 {
        let mut last = 0.0;
        for &v in &axis {
            let noise = if slice == 0 { NoisePoint::new(v, 1e-2) } else { NoisePoint::new(1e-2, v) }.unwrap();
            let inf = 1.0 - evaluate_point(&code, noise).unwrap().fidelity;
            assert!(inf >= last - 1e-7, "slice {slice}: {inf:e} after {last:e} at {v:e}");
            last = inf;
        }
    }
}

#[test]
fn random_recoveries_never_beat_the_optimum() {
    let mut r = rng(8);
    for t in 0..6 {
        let ds = 2 + t;
        let choi = random_channel(2, ds, &mut r);
        let p = RecoveryProblem::from_noisy_encoding(choi, SdpSettings::default()).unwrap();
        let opt = solve_optimal_recovery(&p).unwrap().fidelity;
        for _ in 0..200 {
            let f = p.linear_fidelity(&random_channel(ds, 2, &mut r)).unwrap();
            assert!(f <= opt + 1e-6, "D_s={ds}: random {f} beats optimum {opt}");
        }
    }
}
