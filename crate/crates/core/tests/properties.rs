use std::f64::consts::PI;

use helichain::chirality::{order_parameter, reconstruct};
use helichain::gamma::{liminf_bound, transition_energy, TransitionSettings};
use helichain::io::{read_chain, read_increments, write_chain, write_increments};
use helichain::minimize::{brute_force_min, descend, Clamp, OptimizerSettings};
use helichain::spin::{
    boundary_ok, bulk_weight, energy_e, energy_ehf, energy_h, energy_hhf, min_energy_analytic, reduced_hhf,
    IncrementField, ModelParams, SpinChain,
};
use proptest::prelude::*;

fn spacing() -> impl Strategy<Value = f64> {
    (3usize..400).prop_map(|n| 1.0 / n as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn e_equals_h_minus_offset(spacing in spacing(), seed in any::<u64>(), j1 in 0.0f64..5.0) {
        let chain = SpinChain::random_periodic(spacing, seed).unwrap();
        prop_assert!(boundary_ok(&chain, 1e-9));
        let p = ModelParams::new(j1, spacing).unwrap();
        let e = energy_e(&chain, &p).unwrap();
        let h = energy_h(&chain, &p).unwrap();
        prop_assert!(h >= 0.0);
        let offset = (1.0 + j1 * j1 / 8.0) * bulk_weight(spacing).unwrap();
        prop_assert!((e - (h - offset)).abs() <= 1e-12, "{} vs {}", e, h - offset);
    }

    #[test]
    fn energies_ignore_rotation_and_reflection(
        spacing in spacing(),
        seed in any::<u64>(),
        angle in -10.0f64..10.0,
        delta in 1e-4f64..0.9,
    ) {
        let chain = SpinChain::random_periodic(spacing, seed).unwrap();
        let p = ModelParams::new(2.5, spacing).unwrap();
        for moved in [chain.rotate(angle), chain.reflect(), chain.rotate(angle).reflect()] {
            prop_assert!((energy_e(&moved, &p).unwrap() - energy_e(&chain, &p).unwrap()).abs() <= 1e-12);
            prop_assert!((energy_h(&moved, &p).unwrap() - energy_h(&chain, &p).unwrap()).abs() <= 1e-12);
            prop_assert!((energy_hhf(&moved, delta).unwrap() - energy_hhf(&chain, delta).unwrap()).abs() <= 1e-12);
            prop_assert!((energy_ehf(&moved, delta).unwrap() - energy_ehf(&chain, delta).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn reduced_form_matches_spins(
        thetas in prop::collection::vec(-PI..PI, 3..300),
        delta in 1e-6f64..0.9,
        base in -PI..PI,
    ) {
        let spacing = 1.0 / thetas.len() as f64;
        let incr = IncrementField::new(thetas, spacing).unwrap();
        let direct = energy_hhf(&SpinChain::from_increments(base, &incr), delta).unwrap();
        let reduced = reduced_hhf(&incr, delta).unwrap();
        prop_assert!((direct - reduced).abs() <= 1e-10, "{} vs {}", direct, reduced);
    }

    #[test]
    fn order_parameter_symmetries(spacing in spacing(), seed in any::<u64>(), angle in -10.0f64..10.0) {
        let delta = 0.3;
        let chain = SpinChain::random_periodic(spacing, seed).unwrap();
        let z = order_parameter(&chain, delta).unwrap();
        let flipped = order_parameter(&chain.reflect(), delta).unwrap();
        let turned = order_parameter(&chain.rotate(angle), delta).unwrap();
        let spins = chain.spins();
        for i in 0..z.len() {
            // antipodal bonds sit on the sign(0) convention, not the symmetry
            if (spins[i][0] * spins[i + 1][0] + spins[i][1] * spins[i + 1][1]) < -1.0 + 1e-9 {
                continue;
            }
            prop_assert!((flipped.z()[i] + z.z()[i]).abs() <= 1e-12);
            prop_assert!((turned.z()[i] - z.z()[i]).abs() <= 1e-12 * (2.0 / delta).sqrt());
            let dot = spins[i][0] * spins[i + 1][0] + spins[i][1] * spins[i + 1][1];
            prop_assert!((1.0 - dot - 2.0 * z.w()[i] * z.w()[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn reconstruction_inverts_order_parameter(
        z in prop::collection::vec(-1.0f64..1.0, 3..300),
        delta in 1e-6f64..0.5,
        base in -PI..PI,
    ) {
        let spacing = 1.0 / z.len() as f64;
        let field = helichain::chirality::ChiralityField::from_z(z.clone(), delta, spacing).unwrap();
        let chain = reconstruct(&field, base).unwrap();
        let back = order_parameter(&chain, delta).unwrap();
        for (a, b) in back.z().iter().zip(&z) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn csv_round_trip(spacing in spacing(), seed in any::<u64>()) {
        let chain = SpinChain::random_periodic(spacing, seed).unwrap();
        let mut buf = Vec::new();
        write_chain(&mut buf, "h", &chain).unwrap();
        prop_assert_eq!(read_chain(buf.as_slice(), spacing).unwrap(), chain);

        let incr = IncrementField::random(spacing, 0.1, seed).unwrap();
        let mut buf = Vec::new();
        write_increments(&mut buf, "h", &incr).unwrap();
        prop_assert_eq!(read_increments(buf.as_slice(), spacing).unwrap(), incr);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn brute_force_never_beats_analytic(j1 in 0.2f64..5.0, grid in 8usize..160, sites in 3usize..5) {
        let p = ModelParams::new(j1, 1.0 / (sites - 1) as f64).unwrap();
        let bf = brute_force_min(sites, &p, grid).unwrap();
        prop_assert!(bf.energy >= min_energy_analytic(&p).unwrap() - 1e-12);
    }

    #[test]
    fn descent_is_monotone_and_deterministic(n in 20usize..120, seed in any::<u64>(), delta in 0.01f64..0.2) {
        let spacing = 1.0 / n as f64;
        let start = IncrementField::random(spacing, delta, seed).unwrap();
        let settings = OptimizerSettings {
            max_iterations: 300,
            record_trace: true,
            ..OptimizerSettings::for_spacing(spacing)
        };
        let a = descend(&start, delta, &Clamp::none(), &settings).unwrap();
        for w in a.trace.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy);
        }
        let b = descend(&start, delta, &Clamp::none(), &settings).unwrap();
        prop_assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        prop_assert_eq!(a.iterations, b.iterations);
    }
}

#[test]
fn clamped_minimizers_satisfy_boundary_condition() {
    let r = transition_energy(1e-3, 1e-2, &TransitionSettings::default()).unwrap();
    assert!(boundary_ok(&r.chain().unwrap(), 1e-9));
}

#[test]
fn sharp_transition_sits_above_lower_bound() {
    for (lambda, delta) in [(1e-4, 1e-2), (1e-3, 1e-2), (1e-3, 1e-3)] {
        let r = transition_energy(lambda, delta, &TransitionSettings::default()).unwrap();
        let bound = liminf_bound(&r.field().unwrap(), 0.05).unwrap();
        assert!(
            r.scaled_energy >= bound.total() - 1e-9,
            "{lambda} {delta}: {} vs {:?}",
            r.scaled_energy,
            bound
        );
    }
}
