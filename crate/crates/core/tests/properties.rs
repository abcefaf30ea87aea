use hybrid_dynamics::cli::{read_hybrid, write_hybrid};
use hybrid_dynamics::collapse::collapse_project;
use hybrid_dynamics::hybrid::{pointwise_min_eigenvalue, product_state, quantum_marginal, HybridState};
use hybrid_dynamics::phase_space::{mean_observable, ClassicalDensity, ClassicalHamiltonian, PhaseGrid};
use hybrid_dynamics::quantum::{eig2, min_eigenvalue, pure_from_amplitudes, von_neumann_entropy, CMatrix, QuantumDensity};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> PhaseGrid {
    PhaseGrid::new(-2.0, 2.0, -1.5, 1.5, 12, 10).unwrap()
}

fn density() -> impl Strategy<Value = ClassicalDensity> {
    prop::collection::vec(0.0f64..1.0, 120).prop_map(|v| {
        let mut v = v;
        v[0] += 0.1;
        ClassicalDensity::normalized(grid(), v).unwrap()
    })
}

fn amplitudes(d: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d).prop_filter_map("zero vector", |v| {
        let n = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        (n > 1e-3).then(|| v.iter().map(|(a, b)| Complex64::new(a / n, b / n)).collect())
    })
}

/// Random mixed hybrid state: a few pure branches, each with its own
/// classical density.
fn hybrid_state(d: usize) -> impl Strategy<Value = HybridState> {
    prop::collection::vec((amplitudes(d), density(), 0.1f64..1.0), 1..4).prop_map(move |parts| {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let mut blocks = vec![vec![Complex64::default(); grid().len()]; d * d];
        for (c, rho, w) in &parts {
            let s = product_state(&pure_from_amplitudes(c).unwrap(), rho, 1.0).unwrap();
            for i in 0..d {
                for j in 0..d {
                    for (b, x) in blocks[i * d + j].iter_mut().zip(s.block(i, j)) {
                        *b += x * (w / total);
                    }
                }
            }
        }
        for i in 0..d {
            for z in blocks[i * d + i].iter_mut() {
                z.im = 0.0;
            }
        }
        HybridState::new(grid(), d, 1.0, blocks).unwrap()
    })
}

fn unitary(d: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d).prop_map(move |v| {
        let m = CMatrix::from_fn(d, d, |i, j| Complex64::new(v[i * d + j].0, v[i * d + j].1) + if i == j { 2.0 } else { 0.0 });
        m.qr().q()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mean_is_linear(rho in density(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = ClassicalHamiltonian::harmonic();
        let g = ClassicalHamiltonian::polynomial([(1, 1, 1.0), (0, 3, 0.5)]).unwrap();
        let lhs = mean_observable(&f.linear_combination(a, &g, b), &rho).unwrap();
        let rhs = a * mean_observable(&f, &rho).unwrap() + b * mean_observable(&g, &rho).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn two_by_two_psd_criterion(a in 0.0f64..2.0, b in 0.0f64..2.0, x in 0.0f64..2.0, phase in 0.0f64..6.3) {
        let (lo, hi) = eig2(a, b, x);
        prop_assert!(lo <= hi);
        prop_assert!((lo + hi - a - b).abs() < 1e-12);
        // |x|² ≤ ab exactly when the smaller eigenvalue is non-negative
        let det = a * b - x * x;
        if det.abs() > 1e-9 {
            prop_assert_eq!(lo >= 0.0, det >= 0.0);
        }
        let z = Complex64::from_polar(x, phase);
        let m = CMatrix::from_row_slice(2, 2, &[Complex64::new(a, 0.0), z, z.conj(), Complex64::new(b, 0.0)]);
        prop_assert!((min_eigenvalue(&m).unwrap() - lo).abs() < 1e-10);
    }

    #[test]
    fn entropy_is_unitarily_invariant(w in prop::collection::vec(0.01f64..1.0, 3), u in unitary(3)) {
        let t: f64 = w.iter().sum();
        let rho = QuantumDensity::diagonal(&w.iter().map(|x| x / t).collect::<Vec<_>>()).unwrap();
        let s0 = von_neumann_entropy(&rho).unwrap();
        let s1 = von_neumann_entropy(&rho.conjugate_by(&u).unwrap()).unwrap();
        prop_assert!((s0 - s1).abs() < 1e-10);
    }

    #[test]
    fn snapshot_round_trip(state in hybrid_state(2), t in 0.0f64..10.0) {
        let mut buf = Vec::new();
        write_hybrid(&mut buf, &state, t).unwrap();
        let (back, t_back) = read_hybrid(buf.as_slice(), 1.0).unwrap();
        prop_assert_eq!(t_back, t);
        prop_assert_eq!(back, state);
    }

    #[test]
    fn collapse_is_idempotent_and_positive(state in hybrid_state(3)) {
        let once = collapse_project(&state).unwrap();
        let twice = collapse_project(&once).unwrap();
        // idempotent up to the trace renormalization
        for i in 0..3 {
            for j in 0..3 {
                for (a, b) in once.block(i, j).iter().zip(twice.block(i, j)) {
                    prop_assert!((a - b).norm() <= 1e-14 * (1.0 + a.norm()));
                }
            }
        }
        prop_assert!(pointwise_min_eigenvalue(&once).raw >= -1e-12);
        let (m0, m1) = (quantum_marginal(&state), quantum_marginal(&once));
        for i in 0..3 {
            prop_assert!((m0.entry(i, i) - m1.entry(i, i)).norm() < 1e-12);
        }
    }

    #[test]
    fn mixed_states_are_pointwise_positive(state in hybrid_state(2)) {
        // convex combinations of product states stay PSD at every node
        prop_assert!(pointwise_min_eigenvalue(&state).raw >= -1e-12);
    }
}
