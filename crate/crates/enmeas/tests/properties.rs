use enmeas::bell;
use enmeas::distances::{classical_distance, quantum_distance, set_distance_epsilon};
use enmeas::linalg::HermitianMatrix;
use enmeas::povm::{degrade, validate, Povm};
use enmeas::random;
use enmeas::spectrum::ChainDecomposition;
use enmeas::tau::{tau_finite, tau_of_state, BatteryState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn qubit_povm(seed: u64, outcomes: usize, rank: usize) -> Povm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Povm::from_elements(random::povm_elements(&mut rng, 2, outcomes, rank))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ladder_tau_never_beats_the_cosine(amps in prop::collection::vec(0.01f64..1.0, 2..12)) {
        let n = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        let amps: Vec<f64> = amps.iter().map(|a| a / n).collect();
        let d = amps.len();
        let s = BatteryState::ladder_real(&amps, 1.0).unwrap();
        let t = tau_of_state(&s, &ChainDecomposition::ladder(d, 1.0)).unwrap().tau;
        prop_assert!(t <= tau_finite(d) + 1e-12);
    }

    #[test]
    fn degradation_composes(seed in 0u64..1000, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let m = qubit_povm(seed, 3, 1);
        let twice = degrade(&degrade(&m, a), b);
        let once = degrade(&m, a * b);
        for (x, y) in twice.elements.iter().zip(&once.elements) {
            prop_assert!(x.max_abs_diff(y) < 1e-14);
        }
        prop_assert!(validate(&once).is_valid());
    }

    #[test]
    fn classical_triangle_and_symmetry(s0 in 0u64..1000, s1 in 0u64..1000, s2 in 0u64..1000) {
        let (a, b, c) = (qubit_povm(s0, 3, 1), qubit_povm(s1, 3, 2), qubit_povm(s2, 3, 1));
        let ab = classical_distance(&a, &b).unwrap().value;
        let ba = classical_distance(&b, &a).unwrap().value;
        let bc = classical_distance(&b, &c).unwrap().value;
        let ac = classical_distance(&a, &c).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn degraded_povm_is_classically_close(seed in 0u64..1000, tau in 0.0f64..=1.0) {
        let m = qubit_povm(seed, 3, 1);
        let d = classical_distance(&m, &degrade(&m, tau)).unwrap().value;
        prop_assert!(d <= set_distance_epsilon(tau).0 + 1e-12);
    }

    #[test]
    fn chsh_of_product_states_is_local(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::density(&mut rng, 2).kron(&random::density(&mut rng, 3));
        let sign = |h: HermitianMatrix| enmeas::linalg::eig_hermitian(&h).map(|l| if l >= 0.0 { 1.0 } else { -1.0 });
        let a = [sign(random::hermitian(&mut rng, 2)), sign(random::hermitian(&mut rng, 2))];
        let b = [sign(random::hermitian(&mut rng, 3)), sign(random::hermitian(&mut rng, 3))];
        let s = bell::BellScenario::new(rho, (2, 3), a, b).unwrap();
        prop_assert!(bell::chsh_value(&s).unwrap().abs() <= 2.0 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quantum_distance_dominates_classical(s0 in 0u64..1000, s1 in 0u64..1000) {
        let (a, b) = (qubit_povm(s0, 3, 1), qubit_povm(s1, 3, 2));
        let c = classical_distance(&a, &b).unwrap().value;
        let q = quantum_distance(&a, &b).unwrap().value;
        prop_assert!(q >= c - 1e-6);
        prop_assert!(q <= 1.0 + 1e-6);
    }

    #[test]
    fn seesaw_history_is_nondecreasing(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::density(&mut rng, 9);
        let r = bell::optimize_chsh_seesaw(&rho, (3, 3), 3, seed).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!(r.value <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
    }
}
