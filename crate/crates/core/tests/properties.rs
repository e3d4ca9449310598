mod common;

use proptest::prelude::*;

use common::{ginibre, random_channel, rng};
use rotcode::codefile::{code_from_json, code_to_json};
use rotcode::codes::{binomial_code, cat_code, simulation_cutoff, CodeFamily, CodeParams};
use rotcode::linalg::{
    expm, kron, max_abs_diff, min_eigenvalue, partial_trace, trace, unvec, vec, CMatrix, Subsystem, C64,
};
use rotcode::metrics::{choi_to_superop, superop_to_choi};
use rotcode::noise::{loss_dephasing_channel, loss_dephasing_channel_dense, NoisePoint};
use rotcode::sweep::parse_cache_line;
use rotcode::wigner::PhaseGrid;

fn density(d: usize, seed: u64) -> CMatrix {
    let g = ginibre(d, d, &mut rng(seed));
    let rho = &g * g.adjoint();
    let t = trace(&rho);
    rho / t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expm_of_anti_hermitian_is_unitary(d in 1usize..7, seed in any::<u64>(), scale in 0.01f64..4.0) {
        let g = ginibre(d, d, &mut rng(seed));
        let h = (&g + g.adjoint()) * C64::new(scale / 2.0, 0.0);
        let u = expm(&(h * C64::new(0.0, 1.0))).unwrap();
        prop_assert!(max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(d, d)) < 1e-10);
    }

    #[test]
    fn expm_inverts_with_negation(d in 1usize..6, seed in any::<u64>()) {
        let a = ginibre(d, d, &mut rng(seed)) * C64::new(0.5, 0.0);
        let prod = expm(&a).unwrap() * expm(&-a).unwrap();
        prop_assert!(max_abs_diff(&prod, &CMatrix::identity(d, d)) < 1e-9);
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), (m, n) in (1usize..4, 1usize..4)) {
        let mut r = rng(seed);
        let (a, c) = (ginibre(m, m, &mut r), ginibre(m, m, &mut r));
        let (b, d) = (ginibre(n, n, &mut r), ginibre(n, n, &mut r));
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-9);
        let e = ginibre(2, 2, &mut r);
        prop_assert!(max_abs_diff(&kron(&kron(&a, &b), &e), &kron(&a, &kron(&b, &e))) < 1e-12);
    }

    #[test]
    fn vec_round_trip(d in 1usize..8, seed in any::<u64>()) {
        let m = ginibre(d, d, &mut rng(seed));
        let v = vec(&m).unwrap();
        prop_assert_eq!(v[d - 1 + d * (d - 1)], m[(d - 1, d - 1)]);
        prop_assert_eq!(unvec(&v, d).unwrap(), m);
    }

    #[test]
    fn partial_trace_keeps_positivity(d1 in 1usize..4, d2 in 1usize..4, seed in any::<u64>()) {
        let rho = density(d1 * d2, seed);
        for keep in [Subsystem::First, Subsystem::Second] {
            let red = partial_trace(&rho, (d1, d2), keep).unwrap();
            prop_assert!((trace(&red).re - 1.0).abs() < 1e-12);
            prop_assert!(min_eigenvalue(&red) > -1e-12);
        }
    }

    #[test]
    fn noise_channel_is_cptp(d in 1usize..9, kl in 0.0f64..2.0, kphi in 0.0f64..2.0, seed in any::<u64>()) {
        let noise = NoisePoint::new(kl, kphi).unwrap();
        let fast = loss_dephasing_channel(noise, d).unwrap();
        let dense = loss_dephasing_channel_dense(noise, d).unwrap();
        prop_assert!(max_abs_diff(&fast.to_matrix(), &dense.to_matrix()) < 1e-10);
        let out = fast.apply(&density(d, seed)).unwrap();
        prop_assert!((trace(&out).re - 1.0).abs() < 1e-12);
        prop_assert!(min_eigenvalue(&out) > -1e-12);
        let choi = superop_to_choi(&fast, d, d).unwrap();
        prop_assert!(choi.tp_residual() < 1e-12);
        prop_assert!(choi.min_eigenvalue() > -1e-12);
        let back = choi_to_superop(&choi).unwrap();
        prop_assert!(max_abs_diff(&back.to_matrix(), &fast.to_matrix()) < 1e-14);
    }

    #[test]
    fn random_channels_are_cptp(d_in in 1usize..5, d_out in 1usize..5, seed in any::<u64>()) {
        let c = random_channel(d_in, d_out, &mut rng(seed));
        prop_assert!(c.tp_residual() < 1e-10);
        prop_assert!(c.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn code_files_round_trip(n in 1usize..5, k in 1usize..5, alpha in 0.3f64..3.0) {
        let bin = binomial_code(n, k, simulation_cutoff(CodeFamily::Bin, n, CodeParams::K(k)).unwrap()).unwrap();
        prop_assert_eq!(code_from_json(&code_to_json(&bin).unwrap()).unwrap(), bin);
        let dim = simulation_cutoff(CodeFamily::Cat, n, CodeParams::Alpha(alpha)).unwrap();
        let cat = cat_code(n, alpha, dim).unwrap();
        prop_assert_eq!(code_from_json(&code_to_json(&cat).unwrap()).unwrap(), cat);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parsers_never_panic(s in "\\PC{0,64}") {
        let _ = PhaseGrid::parse(&s);
        let _ = CodeParams::parse_descriptor(&s);
        let _ = code_from_json(&s);
        let _ = parse_cache_line(&s);
        let _ = rotcode::sweep::read_records(s.as_bytes());
    }

    #[test]
    fn grid_specs_round_trip(
        lo in -10.0f64..0.0, width in 0.1f64..10.0, nx in 2usize..50, np in 2usize..50,
    ) {
        let spec = format!("{lo}:{}:{nx},{lo}:{}:{np}", lo + width, lo + width);
        let g = PhaseGrid::parse(&spec).unwrap();
        prop_assert_eq!(g.x_values().len(), nx);
        prop_assert_eq!(g.p_values().len(), np);
        prop_assert_eq!(g.x_values()[0], lo);
    }
}
