use homogenizer::channels::QubitChannel;
use homogenizer::entanglement::{concurrence, concurrence_of_assistance};
use homogenizer::{choi, herm_eig, kron, partial_trace, sqrt_psd, DensityMatrix, FactorShape, Operator};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn op_from(dim: usize, raw: &[f64]) -> Operator {
    let data = raw.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
    Operator::from_vec(dim, data).unwrap()
}

fn matrix(dim: usize) -> impl Strategy<Value = Operator> {
    proptest::collection::vec(-1.0..1.0f64, 2 * dim * dim).prop_map(move |raw| op_from(dim, &raw))
}

/// `G G^dagger / tr` for a Gaussian `G`; full rank almost surely.
fn random_state(rng: &mut impl Rng, dim: usize, rank: usize) -> DensityMatrix {
    let mut g = Operator::zeros(dim);
    for i in 0..dim {
        for j in 0..rank {
            g.set(i, j, Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        }
    }
    let p = &g * &g.adjoint();
    let tr = p.trace().re;
    DensityMatrix::from_qubits(p.scale_real(1.0 / tr)).unwrap()
}

fn random_su2(rng: &mut impl Rng) -> Operator {
    let v: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(v[0] / n, v[1] / n);
    let b = Complex64::new(v[2] / n, v[3] / n);
    Operator::from_vec(2, vec![a, -b.conj(), b, a.conj()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(a in matrix(2), b in matrix(2), c in matrix(2)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn tracing_out_everything_leaves_the_trace(m in matrix(8)) {
        let scalar = partial_trace(&m, &FactorShape::qubits(3), &[]).unwrap();
        prop_assert_eq!(scalar.dim(), 1);
        prop_assert!((scalar.get(0, 0) - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn sqrt_of_square_is_identity_on_psd(g in matrix(4)) {
        let p = &g * &g.adjoint();
        let square = &p * &p;
        prop_assert!(sqrt_psd(&square).unwrap().max_abs_diff(&p) < 1e-8);
    }

    #[test]
    fn eigenvalues_sum_to_trace(g in matrix(8)) {
        let h = &g + &g.adjoint();
        let sum: f64 = herm_eig(&h).unwrap().values.iter().sum();
        prop_assert!((sum - h.trace().re).abs() < 1e-10);
    }

    #[test]
    fn choi_is_linear_under_mixing(p in 0.0..=1.0f64, bx in -0.5..0.5f64, bz in -0.5..0.5f64) {
        let env = DensityMatrix::from_bloch([bx, 0.0, bz]).unwrap();
        let a = QubitChannel::dilation(env, vec![(std::sync::Arc::new(homogenizer::partial_swap(0.8).unwrap()), vec![0, 1])], 0).unwrap();
        let b = QubitChannel::depolarizing();
        let mixed = choi(&QubitChannel::mixture(p, &a, &b)).unwrap();
        let expected = &choi(&a).unwrap().op().scale_real(p) + &choi(&b).unwrap().op().scale_real(1.0 - p);
        prop_assert!(mixed.op().max_abs_diff(&expected) < 1e-12);
    }
}

#[test]
fn monotones_are_ordered_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..10_000 {
        let rank = 1 + k % 4;
        let rho = random_state(&mut rng, 4, rank);
        let c = concurrence(&rho).unwrap();
        let ca = concurrence_of_assistance(&rho).unwrap();
        assert!(c >= 0.0 && c <= ca + 1e-12 && ca <= 1.0, "rank {rank}: C = {c}, C# = {ca}");
    }
}

#[test]
fn monotones_survive_random_local_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let rho = random_state(&mut rng, 4, 2);
        let u = kron(&random_su2(&mut rng), &random_su2(&mut rng));
        let rotated = DensityMatrix::from_qubits(rho.op().conjugate_by(&u).unwrap()).unwrap();
        assert!((concurrence(&rho).unwrap() - concurrence(&rotated).unwrap()).abs() < 1e-9);
        assert!((concurrence_of_assistance(&rho).unwrap() - concurrence_of_assistance(&rotated).unwrap()).abs() < 1e-9);
    }
}
