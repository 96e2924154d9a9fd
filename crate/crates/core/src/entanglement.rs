//! Two-qubit entanglement monotones.
//!
//! `concurrence` is Wootters' alternating sum over the spectrum of
//! `sqrt(rho) rho~ sqrt(rho)` (square-rooted); the concurrence of assistance is the
//! plain sum of the same spectrum. [`eoa_search`] maximizes the average
//! concurrence over explicit pure-state decompositions and serves as an
//! independent check on the closed form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::states::DensityMatrix;
use crate::tensor::{herm_eig, Operator, HERMITIAN_TOL, ZERO};

/// Eigenvalues of a state below this are treated as zero when computing rank.
pub const RANK_TOL: f64 = 1e-12;

fn check_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    Ok(())
}

/// Eigenvalues of a state below this fraction of its trace are round-off.
const SPECTRUM_FLOOR: f64 = 1e-14;

/// Descending `lambda_i`: square roots of the eigenvalues of `rho rho~`.
///
/// Computed as the singular values of the symmetric matrix
/// `W^T (sigma_y (x) sigma_y) W` with `W = V sqrt(mu)` built from the
/// eigenpairs of `rho`. This avoids taking square roots of round-off for
/// rank-deficient states.
pub fn wootters_spectrum(rho: &DensityMatrix) -> Result<[f64; 4]> {
    check_two_qubit(rho)?;
    let eig = herm_eig(rho.op())?;
    if let Some(&min) = eig.values.last() {
        if min < -HERMITIAN_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    let floor = SPECTRUM_FLOOR * rho.op().trace().re.abs().max(1.0);
    let cols: Vec<Vec<Complex64>> = (0..4)
        .filter(|&k| eig.values[k] > floor)
        .map(|k| eig.vector(k).iter().map(|z| z * eig.values[k].sqrt()).collect())
        .collect();
    let mut out = [0.0; 4];
    if cols.is_empty() {
        return Ok(out);
    }
    // (sigma_y (x) sigma_y) |w> reverses the components with signs (-, +, +, -).
    let flip = |w: &[Complex64]| [-w[3], w[2], w[1], -w[0]];
    let r = cols.len();
    let tau = DMatrix::from_fn(r, r, |i, j| {
        let fj = flip(&cols[j]);
        cols[i].iter().zip(fj.iter()).map(|(a, b)| a * b).sum::<Complex64>()
    });
    let mut sv: Vec<f64> = tau.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    for (o, v) in out.iter_mut().zip(sv) {
        *o = v;
    }
    Ok(out)
}

pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let l = wootters_spectrum(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// Closed form of the concurrence of assistance, `tr sqrt(sqrt(rho) rho~ sqrt(rho))`.
pub fn concurrence_of_assistance(rho: &DensityMatrix) -> Result<f64> {
    let l = wootters_spectrum(rho)?;
    Ok(l.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// `2|ad - bc|` for an unnormalized ket `(a, b, c, d)`; scales with the
/// squared norm.
#[inline]
pub fn pure_concurrence(ket: &[Complex64]) -> f64 {
    2.0 * (ket[0] * ket[3] - ket[1] * ket[2]).norm()
}

pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Entanglement of formation from the concurrence.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy((1.0 + (1.0 - c * c).max(0.0).sqrt()) / 2.0)
}

pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}

/// A pure-state ensemble `{p_k, |psi_k>}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub members: Vec<(f64, Vec<Complex64>)>,
}

impl Decomposition {
    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|(p, _)| p).sum()
    }

    /// `sum_k p_k |psi_k><psi_k|`.
    pub fn reconstruct(&self) -> Operator {
        let dim = self.members.first().map_or(1, |(_, v)| v.len());
        self.members.iter().fold(Operator::zeros(dim), |acc, (p, v)| &acc + &Operator::outer(v).scale_real(*p))
    }

    pub fn average_concurrence(&self) -> f64 {
        self.members.iter().map(|(p, v)| p * pure_concurrence(v)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

/// Controls the local search inside [`decomposition_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub ensemble_size: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl SearchParams {
    pub fn new(ensemble_size: usize, restarts: usize, seed: u64) -> Self {
        Self { ensemble_size, restarts, seed, max_iterations: 6000, initial_step: 0.6, min_step: 1e-7 }
    }
}

/// Average-concurrence extremum over `m`-member decompositions.
///
/// Every decomposition of `rho = sum_i mu_i |e_i><e_i|` has the form
/// `|psi~_k> = sum_i U_ki sqrt(mu_i) |e_i>` for an `m x rank` isometry `U`.
/// Each restart draws a random isometry and hill-climbs with random Givens
/// rotations between pairs of members, which keep `U` an isometry.
pub fn decomposition_search(rho: &DensityMatrix, params: SearchParams, sense: Extremum) -> Result<(f64, Decomposition)> {
    check_two_qubit(rho)?;
    let eig = herm_eig(rho.op())?;
    let weighted: Vec<Vec<Complex64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &mu)| mu > RANK_TOL)
        .map(|(k, &mu)| eig.vector(k).into_iter().map(|z| z * mu.sqrt()).collect())
        .collect();
    let rank = weighted.len();
    let m = params.ensemble_size;
    if m < rank {
        return Err(Error::EnsembleTooSmall { ensemble: m, rank });
    }
    if rank == 1 {
        let norm = weighted[0].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ket: Vec<Complex64> = weighted[0].iter().map(|z| z / norm).collect();
        let value = pure_concurrence(&ket);
        return Ok((value, Decomposition { members: vec![(1.0, ket)] }));
    }

    let runs: Vec<(f64, Vec<Vec<Complex64>>)> = (0..params.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(restart as u64);
            climb(&weighted, m, &params, sense, &mut rng)
        })
        .collect();

    // Deterministic reduction: first best restart wins ties.
    let better = |a: f64, b: f64| match sense {
        Extremum::Max => a > b,
        Extremum::Min => a < b,
    };
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if better(run.0, runs[best].0) {
            best = i;
        }
    }
    let (value, members) = runs.into_iter().nth(best).expect("at least one restart");
    let members = members
        .into_iter()
        .filter_map(|v| {
            let p: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            (p > 1e-300).then(|| (p, v.iter().map(|z| z / p.sqrt()).collect()))
        })
        .collect();
    Ok((value, Decomposition { members }))
}

fn random_isometry(rng: &mut ChaCha8Rng, m: usize, r: usize) -> Vec<Vec<Complex64>> {
    // Columns of a complex Gaussian m x r matrix, orthonormalized.
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(r);
    while cols.len() < r {
        let mut v: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        for c in &cols {
            let proj: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(c) {
                *x -= proj * a;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    // Row k of U is (cols[0][k], ..., cols[r-1][k]).
    (0..m).map(|k| cols.iter().map(|c| c[k]).collect()).collect()
}

fn climb(
    weighted: &[Vec<Complex64>],
    m: usize,
    params: &SearchParams,
    sense: Extremum,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<Vec<Complex64>>) {
    let u = random_isometry(rng, m, weighted.len());
    let mut members: Vec<Vec<Complex64>> = u
        .iter()
        .map(|row| {
            let mut v = vec![ZERO; 4];
            for (coef, w) in row.iter().zip(weighted) {
                for (x, y) in v.iter_mut().zip(w) {
                    *x += coef * y;
                }
            }
            v
        })
        .collect();
    let mut scores: Vec<f64> = members.iter().map(|v| pure_concurrence(v)).collect();
    let sign = match sense {
        Extremum::Max => 1.0,
        Extremum::Min => -1.0,
    };

    let mut step = params.initial_step;
    let mut failures = 0usize;
    for _ in 0..params.max_iterations {
        if step < params.min_step {
            break;
        }
        let k = rng.random_range(0..m);
        let mut l = rng.random_range(0..m - 1);
        if l >= k {
            l += 1;
        }
        let theta = step * rng.sample::<f64, _>(StandardNormal);
        let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let (s, c) = theta.sin_cos();
        let new_k: Vec<Complex64> = members[k].iter().zip(&members[l]).map(|(a, b)| a * c - phase * b * s).collect();
        let new_l: Vec<Complex64> = members[k].iter().zip(&members[l]).map(|(a, b)| phase.conj() * a * s + b * c).collect();
        let (sk, sl) = (pure_concurrence(&new_k), pure_concurrence(&new_l));
        if sign * (sk + sl - scores[k] - scores[l]) > 1e-15 {
            members[k] = new_k;
            members[l] = new_l;
            scores[k] = sk;
            scores[l] = sl;
            failures = 0;
        } else {
            failures += 1;
            if failures >= 40 {
                step *= 0.5;
                failures = 0;
            }
        }
    }
    (scores.iter().sum(), members)
}

/// Brute-force concurrence of assistance: best average concurrence found over
/// random-isometry decompositions with `ensemble_size` members.
pub fn eoa_search(rho: &DensityMatrix, ensemble_size: usize, restarts: usize, seed: u64) -> Result<(f64, Decomposition)> {
    decomposition_search(rho, SearchParams::new(ensemble_size, restarts, seed), Extremum::Max)
}
