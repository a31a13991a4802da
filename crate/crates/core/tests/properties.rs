use num_complex::Complex64;
use proptest::prelude::*;

use schatten_randomizer::haar::{ks_distance, sample_haar_unitary, sample_pure_state, UNITARITY_TOL};
use schatten_randomizer::linalg::{hermitian_eigen, qr_unitary};
use schatten_randomizer::net::{build_net, net_size_bound, trace_distance_pure};
use schatten_randomizer::norms::{norm_from_singular_values, schatten_norm, singular_values};
use schatten_randomizer::randomizer::randomization_threshold;
use schatten_randomizer::{ComplexMatrix, PExponent, RandomizingChannel, Seed, UnitaryEnsemble};

const EXPONENTS: [PExponent; 5] = [
    PExponent::Finite(1.0),
    PExponent::Finite(1.5),
    PExponent::Finite(2.0),
    PExponent::Finite(3.0),
    PExponent::Infinity,
];

fn matrix(rows: usize, cols: usize, real: bool) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), rows * cols).prop_map(move |v| {
        let data = v.into_iter().map(|(re, im)| Complex64::new(re, if real { 0.0 } else { im })).collect();
        ComplexMatrix::from_vec(rows, cols, data).unwrap()
    })
}

fn square() -> impl Strategy<Value = ComplexMatrix> {
    (1usize..=8, any::<bool>()).prop_flat_map(|(d, real)| matrix(d, d, real))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Convex combination of pure states.
fn mixture(d: usize, weights: &[f64], seed: u64) -> (ComplexMatrix, Vec<(f64, schatten_randomizer::PureState)>) {
    let total: f64 = weights.iter().sum();
    let mut rho = ComplexMatrix::zeros(d, d);
    let mut parts = Vec::new();
    for (k, w) in weights.iter().enumerate() {
        let q = w / total;
        let psi = sample_pure_state(d, Seed::new(seed, k as u64)).unwrap();
        rho = rho.add(&psi.projector().scale_real(q)).unwrap();
        parts.push((q, psi));
    }
    (rho, parts)
}

proptest! {
    #[test]
    fn adjoint_reverses_products(
        (a, b) in (1usize..6, 1usize..6, 1usize..6, any::<bool>())
            .prop_flat_map(|(r, k, c, real)| (matrix(r, k, real), matrix(k, c, !real)))
    ) {
        let lhs = a.matmul(&b).unwrap().adjoint();
        let rhs = b.adjoint().matmul(&a.adjoint()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * (1.0 + a.max_abs() * b.max_abs()));
    }

    #[test]
    fn spectrum_survives_unitary_conjugation(a in square(), seed in any::<u64>()) {
        let h = a.add(&a.adjoint()).unwrap();
        let g = sample_haar_unitary(h.rows(), Seed::new(seed, 0)).unwrap().add(&h).unwrap();
        let Ok((q, _)) = qr_unitary(&g) else { return Ok(()) };
        let conj = q.matmul(&h).unwrap().matmul(&q.adjoint()).unwrap().symmetrized().unwrap();
        let e1 = hermitian_eigen(&h).unwrap().eigenvalues;
        let e2 = hermitian_eigen(&conj).unwrap().eigenvalues;
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + h.max_abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn gram_trace_matches_singular_values(a in square()) {
        let direct = a.gram().trace().re;
        let summed: f64 = singular_values(&a).unwrap().iter().map(|s| s * s).sum();
        prop_assert!(rel_close(direct, summed, 1e-10), "{direct} vs {summed}");
    }

    #[test]
    fn norms_are_unitarily_invariant(a in square(), seed in any::<u64>()) {
        let d = a.rows();
        let u = sample_haar_unitary(d, Seed::new(seed, 1)).unwrap();
        let v = sample_haar_unitary(d, Seed::new(seed, 2)).unwrap();
        let b = u.matmul(&a).unwrap().matmul(&v.adjoint()).unwrap();
        for p in EXPONENTS {
            let (x, y) = (schatten_norm(&a, p).unwrap(), schatten_norm(&b, p).unwrap());
            prop_assert!(rel_close(x, y, 1e-9), "p = {p}: {x} vs {y}");
        }
    }

    #[test]
    fn p2_fast_path_matches_singular_values(a in square()) {
        let fast = schatten_norm(&a, PExponent::TWO).unwrap();
        let slow = norm_from_singular_values(&singular_values(&a).unwrap(), PExponent::TWO);
        prop_assert!(rel_close(fast, slow, 1e-9));
    }

    #[test]
    fn norms_are_homogeneous(a in square(), re in -4.0f64..4.0, im in -4.0f64..4.0) {
        let c = Complex64::new(re, im);
        for p in EXPONENTS {
            let scaled = schatten_norm(&a.scale(c), p).unwrap();
            let expected = c.norm() * schatten_norm(&a, p).unwrap();
            prop_assert!(rel_close(scaled, expected, 1e-9), "p = {p}: {scaled} vs {expected}");
        }
    }

    #[test]
    fn ensembles_are_deterministic_and_unitary(d in 1usize..6, m in 1usize..5, value in any::<u64>(), stream in any::<u64>()) {
        let seed = Seed::new(value, stream);
        let a = UnitaryEnsemble::haar(d, m, seed).unwrap();
        let b = UnitaryEnsemble::haar(d, m, seed).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert!(a.max_unitarity_residual() <= UNITARITY_TOL);
    }

    #[test]
    fn maximally_mixed_state_is_fixed(d in 1usize..6, m in 1usize..6, seed in any::<u64>()) {
        let ch = RandomizingChannel::haar(d, m, Seed::new(seed, 0)).unwrap();
        let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
        prop_assert!(ch.apply(&mixed).unwrap().max_abs_diff(&mixed).unwrap() <= 1e-12);
    }

    #[test]
    fn channel_preserves_trace_and_hermiticity(
        d in 1usize..6, m in 1usize..6, seed in any::<u64>(),
        weights in prop::collection::vec(0.01f64..1.0, 1..5)
    ) {
        let ch = RandomizingChannel::haar(d, m, Seed::new(seed, 0)).unwrap();
        let (rho, _) = mixture(d, &weights, seed ^ 1);
        let out = ch.apply(&rho).unwrap();
        prop_assert!((out.trace() - Complex64::new(1.0, 0.0)).norm() <= 1e-10);
        prop_assert!(out.hermitian_deviation().unwrap() <= 1e-10);
    }

    #[test]
    fn thresholds_decrease_in_p(eps in 0.01f64..2.0, d in 1usize..64) {
        for w in EXPONENTS.windows(2) {
            prop_assert!(randomization_threshold(eps, d, w[0]) >= randomization_threshold(eps, d, w[1]));
        }
    }

    #[test]
    fn deviation_is_covariant(d in 1usize..6, m in 1usize..6, seed in any::<u64>()) {
        let ch = RandomizingChannel::haar(d, m, Seed::new(seed, 0)).unwrap();
        let v = sample_haar_unitary(d, Seed::new(seed, 1)).unwrap();
        let rotated = RandomizingChannel::new(ch.ensemble().left_multiplied(&v).unwrap());
        let psi = sample_pure_state(d, Seed::new(seed, 2)).unwrap();
        let expected = v.matmul(&ch.apply_pure(&psi).unwrap()).unwrap().matmul(&v.adjoint()).unwrap();
        prop_assert!(rotated.apply_pure(&psi).unwrap().max_abs_diff(&expected).unwrap() <= 1e-12);
        for p in EXPONENTS {
            let (x, y) = (ch.distance_to_mixed(&psi, p).unwrap(), rotated.distance_to_mixed(&psi, p).unwrap());
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn mixed_inputs_deviate_no_more_than_their_parts(
        d in 2usize..6, m in 1usize..6, seed in any::<u64>(),
        weights in prop::collection::vec(0.01f64..1.0, 1..5)
    ) {
        let ch = RandomizingChannel::haar(d, m, Seed::new(seed, 0)).unwrap();
        let (rho, parts) = mixture(d, &weights, seed ^ 2);
        let centered = ch.apply(&rho).unwrap().shift_diagonal(1.0 / d as f64).unwrap();
        for p in EXPONENTS {
            let lhs = schatten_norm(&centered, p).unwrap();
            let rhs: f64 = parts.iter().map(|(q, psi)| q * ch.distance_to_mixed(psi, p).unwrap()).sum();
            prop_assert!(lhs <= rhs + 1e-9, "p = {p}: {lhs} > {rhs}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn norms_decrease_along_p(a in square()) {
        let norms: Vec<f64> = EXPONENTS.iter().map(|&p| schatten_norm(&a, p).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{norms:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nets_pack_and_respect_volume_bound(d in 1usize..=3, eta in 0.8f64..2.0, seed in any::<u64>()) {
        let net = build_net(d, eta, 300, Seed::new(seed, 0)).unwrap();
        prop_assert!(net.len() as f64 <= net_size_bound(d, eta).ceil());
        for (i, a) in net.points().iter().enumerate() {
            for b in &net.points()[i + 1..] {
                prop_assert!(trace_distance_pure(a, b).unwrap() > eta / 2.0 - 1e-9);
            }
        }
    }

    #[test]
    fn net_reduction_is_sound(d in 2usize..=3, m in 1usize..8, seed in any::<u64>()) {
        let net = build_net(d, 1.0, 300, Seed::new(seed, 0)).unwrap();
        let ch = RandomizingChannel::haar(d, m, Seed::new(seed, 1)).unwrap();
        for k in 0..20 {
            let probe = sample_pure_state(d, Seed::new(seed, 100 + k)).unwrap();
            let (idx, dist) = net.nearest(&probe).unwrap();
            let diff = ch.apply_pure(&probe).unwrap().sub(&ch.apply_pure(&net.points()[idx]).unwrap()).unwrap();
            for p in EXPONENTS {
                prop_assert!(schatten_norm(&diff, p).unwrap() <= dist + 1e-9);
            }
        }
    }
}

#[test]
fn left_multiplication_preserves_entry_distribution() {
    let d = 4;
    let v = sample_haar_unitary(d, Seed::new(2024, 0)).unwrap();
    let (plain, rotated): (Vec<f64>, Vec<f64>) = (0..10_000u64)
        .map(|k| {
            let u = sample_haar_unitary(d, Seed::new(2024, 1).split(k)).unwrap();
            let vu = v.matmul(&u).unwrap();
            (u.get(0, 0).norm_sqr(), vu.get(0, 0).norm_sqr())
        })
        .unzip();
    let ks = ks_distance(&plain, &rotated);
    assert!(ks <= 0.02, "KS distance {ks}");
}
