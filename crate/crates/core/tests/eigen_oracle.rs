//! Eigenvalues from the eigensolver against roots of the characteristic
//! polynomial (Faddeev-LeVerrier coefficients, Durand-Kerner roots).

use homogenizer::{herm_eig, Operator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut impl Rng, dim: usize) -> Operator {
    let mut h = Operator::zeros(dim);
    for i in 0..dim {
        h.set(i, i, Complex64::new(rng.random_range(-2.0..2.0), 0.0));
        for j in i + 1..dim {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h.set(i, j, z);
            h.set(j, i, z.conj());
        }
    }
    h
}

/// Coefficients `c[0..=n]` of `det(x I - A) = sum c[k] x^k`.
fn char_poly(a: &Operator) -> Vec<Complex64> {
    let n = a.dim();
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[n] = Complex64::new(1.0, 0.0);
    let mut m = Operator::zeros(n);
    for k in 1..=n {
        m = &(a * &m) + &Operator::identity(n).scale(c[n - k + 1]);
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

fn eval(c: &[Complex64], x: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * x + k)
}

fn durand_kerner(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * 3.0).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(c, roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

#[test]
fn eigenvalues_match_characteristic_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in 2..=6 {
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, dim);
            let mut roots: Vec<f64> = durand_kerner(&char_poly(&h))
                .into_iter()
                .map(|z| {
                    assert!(z.im.abs() < 1e-6, "complex root {z}");
                    z.re
                })
                .collect();
            roots.sort_by(|a, b| b.total_cmp(a));
            let eig = herm_eig(&h).unwrap();
            for (a, b) in eig.values.iter().zip(&roots) {
                assert!((a - b).abs() < 1e-7, "dim {dim}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn char_poly_of_diagonal_matrix() {
    let d = Operator::diag(&[1.0, 2.0, 3.0]);
    let c = char_poly(&d);
    let expected = [-6.0, 11.0, -6.0, 1.0];
    for (got, want) in c.iter().zip(expected) {
        assert!((got - Complex64::new(want, 0.0)).norm() < 1e-12);
    }
}
