//! Cross-module invariants checked with randomized inputs.

use proptest::prelude::*;

use crate::circuit::{build_generic_qqft, build_radix2_qqft, sequence_to_unitary, GateSpec, Route};
use crate::engine::{apply_noisy_sequence, gate_to_generator, Channel, NoiseGranularity, NoiseModel};
use crate::linalg::{self, c64, CMat};
use crate::poincare::{equivalence_classes, lorentz_map};
use crate::protocol::{build_protocol_unitary, composite_index, extract_spectrum, split_index, MomentumModel};
use crate::CircuitSequence;

fn arb_gate(n_sites: usize) -> impl Strategy<Value = GateSpec> {
    prop_oneof![
        (0..n_sites - 1).prop_map(|s| GateSpec::swap(s, 0)),
        (0..n_sites - 1, -4.0f64..4.0, -4.0f64..4.0).prop_map(|(s, t, p)| GateSpec::mix(s, t, p, 0)),
        (0..n_sites, -4.0f64..4.0).prop_map(|(s, l)| GateSpec::phase(s, l, 0)),
    ]
}

fn one_gate_per_step(gates: Vec<GateSpec>) -> Vec<GateSpec> {
    gates.into_iter().enumerate().map(|(i, g)| GateSpec { step: i, ..g }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_roundtrip(g in arb_gate(2)) {
        let back = gate_to_generator(&g).exp().unwrap();
        let k = back.dim();
        let full = g.dense(2).unwrap();
        let block = full.submatrix(g.site, g.site, k, k).to_owned();
        prop_assert!(linalg::max_abs_diff(back.as_mat(), &block) < 1e-10);
    }

    #[test]
    fn noisy_products_stay_unitary(
        gates in prop::collection::vec(arb_gate(6), 1..60),
        sigma in 0.0f64..0.3,
        seed in any::<u64>(),
        per_gate in any::<bool>(),
    ) {
        let seq = CircuitSequence::new(6, Route::Givens, one_gate_per_step(gates)).unwrap();
        let gran = if per_gate { NoiseGranularity::PerGate } else { NoiseGranularity::PerStep };
        let noise = NoiseModel::new(sigma, seed, 0).unwrap().with_granularity(gran);
        let u = apply_noisy_sequence(&seq, &noise, Channel::Forward(0));
        prop_assert!(u.unitarity_deviation() < 1e-10);
    }

    #[test]
    fn same_seed_same_matrix(seed in any::<u64>(), stream in any::<u64>()) {
        let seq = build_radix2_qqft(3).unwrap();
        let noise = NoiseModel::new(1e-2, seed, stream).unwrap();
        let a = apply_noisy_sequence(&seq, &noise, Channel::Forward(1));
        let b = apply_noisy_sequence(&seq, &noise, Channel::Forward(1));
        prop_assert!(a.bit_identical(&b));
    }

    #[test]
    fn partition_identity(n in 2usize..40, gamma in 2usize..6) {
        let lat = equivalence_classes(n, gamma).unwrap();
        prop_assert_eq!(lat.class_sizes().iter().sum::<usize>(), n * n);
        for class in lat.classes() {
            for &(m, s) in class {
                let (m2, s2) = lorentz_map(m, s, gamma, n);
                prop_assert_eq!(lat.class_of(m2, s2), lat.class_of(m, s));
            }
        }
    }

    #[test]
    fn layout_is_a_bijection(d in 1usize..4, grid in 2usize..6, l in 1usize..4, seed in any::<usize>()) {
        let dim = grid.pow(d as u32) * l;
        let idx = seed % dim;
        let (m, a) = split_index(idx, d, grid, l);
        prop_assert_eq!(composite_index(&m, a, grid, l), idx);
    }

    #[test]
    fn conjugation_preserves_spectrum(energies in prop::collection::vec(-3.0f64..3.0, 6)) {
        let model = MomentumModel::from_fn(1, 1, 6, 1.0, |m| {
            Ok(CMat::from_fn(1, 1, |_, _| c64::new(energies[m[0]], 0.0)))
        }).unwrap();
        let u = build_protocol_unitary(&model, &NoiseModel::noiseless()).unwrap();
        let got: Vec<f64> = extract_spectrum(&u, 1.0, 1).unwrap().energies().collect();
        let mut want = energies.clone();
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn principal_angle_range(x in -100.0f64..100.0) {
        let w = linalg::principal_angle(x);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI + 1e-15);
        prop_assert!((c64::cis(x) - c64::cis(w)).norm() < 1e-12);
    }
}

#[test]
fn every_emitted_gate_is_local() {
    for n in 1..=7 {
        let seq = build_radix2_qqft(n).unwrap();
        assert!(seq.gates().iter().all(|g| g.sites().len() <= 2 && g.sites().end <= seq.n_sites()));
    }
    for n in [2, 3, 7, 33] {
        let seq = build_generic_qqft(n).unwrap();
        assert!(seq.gates().iter().all(|g| g.sites().len() <= 2 && g.sites().end <= seq.n_sites()));
    }
}

#[test]
fn generic_depth_bound_holds_up_to_64() {
    for n in 2..=64usize {
        let seq = build_generic_qqft(n).unwrap();
        assert!(seq.depth() <= n * n, "N={n}");
        if n <= 12 {
            let err = linalg::phase_aligned_diff(&sequence_to_unitary(&seq), &linalg::dft_matrix(n));
            assert!(err < 1e-10, "N={n} err={err}");
        }
    }
}
