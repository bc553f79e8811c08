use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use dsap::entanglement::{entropy_of, partial_trace, spin_half_dark_state, von_neumann_entropy};
use dsap::hamiltonian::{assemble_full, total_jz, HamiltonianTerms, PulseAmplitudes};
use dsap::network::{BasisState, Block, NetworkConfig, StateVector};
use dsap::oracle::{naive_partial_trace, random_state};
use dsap::propagator::evolve;
use dsap::spin::{jminus, jplus, jz, SpinMagnitude};

fn config(twice_s: u32, leaves: usize) -> NetworkConfig {
    NetworkConfig::new(SpinMagnitude::new(twice_s).unwrap(), leaves)
}

fn small_network() -> impl Strategy<Value = (u32, usize)> {
    (1u32..=3, 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn su2_algebra(twice_s in 1u32..=9) {
        let s = SpinMagnitude::new(twice_s).unwrap();
        let (z, p, m) = (jz(s).0, jplus(s).0, jminus(s).0);
        prop_assert!((&p * &m - &m * &p - 2.0 * &z).amax() < 1e-10);
        prop_assert!((&z * &p - &p * &z - &p).amax() < 1e-10);
    }

    #[test]
    fn sectors_partition_product_space((twice_s, leaves) in small_network()) {
        let c = config(twice_s, leaves);
        let total: usize = (0..=c.max_excitations())
            .map(|n| Block::sector(&c, n).unwrap().len())
            .sum();
        prop_assert_eq!(total, c.full_dim());
    }

    #[test]
    fn block_hamiltonian_is_symmetric(
        (twice_s, leaves) in small_network(),
        n_frac in 0.0f64..1.0,
        left in 0.0f64..0.05,
        right in 0.0f64..0.05,
    ) {
        let c = config(twice_s, leaves);
        let n = (n_frac * c.max_excitations() as f64).round() as usize;
        let block = Arc::new(Block::sector(&c, n).unwrap());
        let h = HamiltonianTerms::new(&c, block.clone()).unwrap().at(PulseAmplitudes { left, right });
        prop_assert_eq!(h.hermiticity_residual(), 0.0);
        prop_assert!(block.states().iter().all(|s| s.excitations(c.spin) == n));
    }

    #[test]
    fn full_hamiltonian_conserves_excitations(
        (twice_s, leaves) in small_network(),
        left in 0.0f64..0.05,
        right in 0.0f64..0.05,
    ) {
        let c = config(twice_s, leaves);
        let h = assemble_full(&c, PulseAmplitudes { left, right }).unwrap();
        let space = Block::full_space(&c, usize::MAX).unwrap();
        prop_assert!(h.commutator_with_diagonal(&total_jz(&space)) < 1e-14);
    }

    #[test]
    fn reduced_matrices_are_states(
        (twice_s, leaves) in small_network(),
        n_frac in 0.0f64..1.0,
        seed in any::<u64>(),
        keep_mask in 1u32..64,
    ) {
        let c = config(twice_s, leaves);
        let n = (n_frac * c.max_excitations() as f64).round() as usize;
        let block = Arc::new(Block::sector(&c, n).unwrap());
        let psi = random_state(block, seed);
        let keep: Vec<usize> = (0..c.sites()).filter(|s| keep_mask & (1 << s) != 0).collect();
        prop_assume!(!keep.is_empty() && keep.len() < c.sites());
        let rho = partial_trace(&psi, &keep).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(rho.hermiticity_residual() < 1e-14);
        let eig = rho.eigenvalues();
        prop_assert!(eig.iter().all(|&v| v > -1e-10 && v < 1.0 + 1e-10));

        let rest: Vec<usize> = (0..c.sites()).filter(|s| !keep.contains(s)).collect();
        let a = von_neumann_entropy(&rho).unwrap();
        let b = von_neumann_entropy(&partial_trace(&psi, &rest).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        let bound = (rho.dim() as f64).log2().min((c.spin.dim().pow(rest.len() as u32) as f64).log2());
        prop_assert!(a <= bound + 1e-9);

        let naive = naive_partial_trace(&psi, &keep).unwrap();
        let dev = (&rho.matrix - naive).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(dev < 1e-12);
    }

    #[test]
    fn entropy_of_distribution_bounds(weights in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let h = entropy_of(&p);
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).log2() + 1e-12);
    }

    #[test]
    fn labels_round_trip(twice_s in 1u32..=4, levels in prop::collection::vec(0u32..5, 1..7)) {
        let spin = SpinMagnitude::new(twice_s).unwrap();
        let state = BasisState(
            levels.iter().map(|l| -(twice_s as i32) + 2 * (*l % (twice_s + 1)) as i32).collect(),
        );
        prop_assert_eq!(&BasisState::parse(spin, &state.label(spin)).unwrap(), &state);
        prop_assert_eq!(&BasisState::parse(spin, &state.ket(spin)).unwrap(), &state);
        prop_assert_eq!(&state.flipped().flipped(), &state);
    }

    #[test]
    fn spin_flip_is_involution((twice_s, leaves) in small_network(), seed in any::<u64>()) {
        let c = config(twice_s, leaves);
        let block = Arc::new(Block::sector(&c, 1).unwrap());
        let psi = random_state(block, seed);
        let back = psi.spin_flipped(&c).unwrap().spin_flipped(&c).unwrap();
        prop_assert_eq!(back.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn closed_form_dark_state_is_null(leaves in 1usize..=6, left in 0.0f64..1.0, right in 0.0f64..1.0) {
        prop_assume!(left + right > 1e-3);
        let c = config(1, leaves);
        let amps = PulseAmplitudes { left, right };
        let d = spin_half_dark_state(&c, amps).unwrap();
        let terms = HamiltonianTerms::new(&c, d.block().clone()).unwrap();
        let hd = terms.apply(amps, d.amplitudes());
        let e = d.amplitudes().dotc(&hd).re;
        prop_assert!((hd - d.amplitudes().map(|z| z * e)).norm() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_is_unitary(
        (twice_s, leaves) in small_network(),
        seed in any::<u64>(),
        product in 5.0f64..200.0,
    ) {
        let c = config(twice_s, leaves).with_tmax_product(product);
        let n = c.max_excitations() / 2;
        let block = Arc::new(Block::sector(&c, n).unwrap());
        let a = random_state(block.clone(), seed);
        let b = random_state(block, seed ^ 0xabcdef);
        let ta = evolve(&c, &a, 11).unwrap();
        let tb = evolve(&c, &b, 11).unwrap();
        prop_assert!(ta.max_norm_drift() < 1e-9);
        let before = a.inner(&b).unwrap();
        let after = ta.final_state.inner(&tb.final_state).unwrap();
        prop_assert!((before - after).norm() < 1e-9);
    }
}

#[test]
fn superposition_evolves_linearly() {
    let c = config(2, 2).with_tmax_product(50.0);
    let block = Arc::new(Block::sector(&c, 2).unwrap());
    let a = random_state(block.clone(), 1);
    let b = random_state(block.clone(), 2);
    let mix = StateVector::new(
        block,
        (a.amplitudes() * Complex64::new(0.6, 0.0) + b.amplitudes() * Complex64::new(0.0, 0.8))
            .into_owned(),
    );
    let fa = evolve(&c, &a, 5).unwrap().final_state;
    let fb = evolve(&c, &b, 5).unwrap().final_state;
    let fm = evolve(&c, &mix.clone().normalized(), 5).unwrap().final_state;
    let combined: DVector<Complex64> =
        fa.amplitudes() * Complex64::new(0.6, 0.0) + fb.amplitudes() * Complex64::new(0.0, 0.8);
    let scale = mix.norm();
    let diff = (fm.amplitudes() * Complex64::new(scale, 0.0) - combined).norm();
    assert!(diff < 1e-10, "{diff}");
}
