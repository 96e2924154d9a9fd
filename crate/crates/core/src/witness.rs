//! Two-step memory witness.
//!
//! Step 1 is the reduced map of one composite step, `U_{S,1}` followed by the
//! Fredkin `C(1; 2, 3)`. Step 2 is a partial SWAP between the system and
//! ancilla 3, with the reservoir in the state it was left in by step 1 run on
//! a fiducial system input. The witness compares the concurrence of
//! assistance of step 1's Choi state with the concurrence of step 2's; a
//! negative difference means the dynamics cannot be reproduced with a
//! classical memory.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::channels::{apply_unitary, choi, QubitChannel};
use crate::dynamics::GATES;
use crate::entanglement::{concurrence, concurrence_of_assistance};
use crate::error::{Error, Result};
use crate::fmt_float;
use crate::states::{build_reservoir, DensityMatrix, ReservoirInit};
use crate::tensor::{partial_trace, FactorShape};

/// Gaps inside `[-ZERO_BAND, ZERO_BAND]` count as zero when looking for sign
/// changes.
pub const ZERO_BAND: f64 = 1e-9;
/// Width of the bracket left by crossing refinement.
pub const CROSSING_TOL: f64 = 1e-4;
pub const DEFAULT_GRID_POINTS: usize = 60;

/// Ancilla the system meets at the second step.
const SECOND_TARGET: usize = 3;

fn reservoir_for_witness(init: &ReservoirInit) -> Result<DensityMatrix> {
    if init.n_qubits < 3 {
        return Err(Error::ReservoirTooSmall { required: 3, available: init.n_qubits });
    }
    build_reservoir(init)
}

/// Reduced map of the first composite step.
pub fn step1_channel(init: &ReservoirInit, eta: f64) -> Result<QubitChannel> {
    let reservoir = reservoir_for_witness(init)?;
    let circuit = vec![(GATES.partial_swap(eta)?, vec![0, 1]), (GATES.fredkin(), vec![1, 2, 3])];
    QubitChannel::dilation(reservoir, circuit, 0)
}

/// Reservoir after step 1 has acted on `fiducial`.
pub fn reservoir_after_step1(init: &ReservoirInit, eta: f64, fiducial: &DensityMatrix) -> Result<DensityMatrix> {
    if fiducial.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: fiducial.dim() });
    }
    let reservoir = reservoir_for_witness(init)?;
    let n = reservoir.n_qubits() + 1;
    let mut joint = fiducial.tensor(&reservoir).into_op();
    joint = apply_unitary(&joint, n, GATES.partial_swap(eta)?.op(), &[0, 1])?;
    joint = apply_unitary(&joint, n, GATES.fredkin().op(), &[1, 2, 3])?;
    let ancillas: Vec<usize> = (1..n).collect();
    let op = partial_trace(&joint, &FactorShape::qubits(n), &ancillas)?;
    DensityMatrix::new(op, FactorShape::qubits(n - 1))
}

/// Second-step map: a partial SWAP with ancilla 3 of the post-step-1
/// reservoir; no second Fredkin.
pub fn step2_channel(init: &ReservoirInit, eta: f64, fiducial: &DensityMatrix) -> Result<QubitChannel> {
    let env = reservoir_after_step1(init, eta, fiducial)?;
    QubitChannel::dilation(env, vec![(GATES.partial_swap(eta)?, vec![0, SECOND_TARGET])], 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub eta: f64,
    /// Concurrence of assistance of the step-1 Choi state.
    pub c_assist: f64,
    /// Concurrence of the step-2 Choi state.
    pub c_form: f64,
    pub gap: f64,
}

impl GapSample {
    pub fn requires_quantum_memory(&self) -> bool {
        self.gap < -ZERO_BAND
    }
}

/// Both Choi states, validated as density matrices.
pub fn witness_choi_states(init: &ReservoirInit, eta: f64, fiducial: &DensityMatrix) -> Result<(DensityMatrix, DensityMatrix)> {
    let first = choi(&step1_channel(init, eta)?)?;
    let second = choi(&step2_channel(init, eta, fiducial)?)?;
    let first = DensityMatrix::new(first.into_op(), FactorShape::qubits(2))?;
    let second = DensityMatrix::new(second.into_op(), FactorShape::qubits(2))?;
    Ok((first, second))
}

pub fn memory_gap(init: &ReservoirInit, eta: f64, fiducial: &DensityMatrix) -> Result<GapSample> {
    let (first, second) = witness_choi_states(init, eta, fiducial)?;
    let c_assist = concurrence_of_assistance(&first)?;
    let c_form = concurrence(&second)?;
    Ok(GapSample { eta, c_assist, c_form, gap: c_assist - c_form })
}

/// Maximally mixed fiducial input.
pub fn default_fiducial() -> DensityMatrix {
    DensityMatrix::maximally_mixed(1)
}

/// `points` evenly spaced couplings covering `[0, pi/2]`.
pub fn default_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|i| FRAC_PI_2 * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub init: ReservoirInit,
    pub fiducial: DensityMatrix,
    pub samples: Vec<GapSample>,
    pub crossing: Option<f64>,
}

pub const GAP_CSV_HEADER: &str = "eta,c_assist_step1,c_form_step2,gap";

impl GapCurve {
    pub fn min_gap(&self) -> f64 {
        self.samples.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min)
    }

    pub fn has_negative_region(&self) -> bool {
        self.samples.iter().any(GapSample::requires_quantum_memory)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(GAP_CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{}", fmt_float(s.eta), fmt_float(s.c_assist), fmt_float(s.c_form), fmt_float(s.gap));
        }
        out
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    for &eta in grid {
        if !(0.0..=FRAC_PI_2).contains(&eta) {
            return Err(Error::OutOfRange { name: "eta", value: eta, lo: 0.0, hi: FRAC_PI_2 });
        }
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSubsystems("eta grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Gap at every grid point (evaluated in parallel, kept in grid order) plus
/// the refined first sign change.
pub fn gap_curve(init: &ReservoirInit, eta_grid: &[f64], fiducial: &DensityMatrix) -> Result<GapCurve> {
    check_grid(eta_grid)?;
    let samples = eta_grid.par_iter().map(|&eta| memory_gap(init, eta, fiducial)).collect::<Result<Vec<_>>>()?;
    let mut curve = GapCurve { init: init.clone(), fiducial: fiducial.clone(), samples, crossing: None };
    curve.crossing = find_crossing(&curve)?;
    Ok(curve)
}

/// First sign change of the curve, refined by bisection on [`memory_gap`].
pub fn find_crossing(curve: &GapCurve) -> Result<Option<f64>> {
    let points: Vec<(f64, f64)> = curve.samples.iter().map(|s| (s.eta, s.gap)).collect();
    find_crossing_by(&points, |eta| Ok(memory_gap(&curve.init, eta, &curve.fiducial)?.gap))
}

fn sign(g: f64) -> i8 {
    if g > ZERO_BAND {
        1
    } else if g < -ZERO_BAND {
        -1
    } else {
        0
    }
}

/// Smallest `eta` where the sampled function changes sign. Samples inside
/// the zero band are skipped; the bracketing pair is bisected with `f` down
/// to [`CROSSING_TOL`].
pub fn find_crossing_by(points: &[(f64, f64)], mut f: impl FnMut(f64) -> Result<f64>) -> Result<Option<f64>> {
    let mut last: Option<(f64, i8)> = None;
    for &(eta, g) in points {
        let s = sign(g);
        if s == 0 {
            continue;
        }
        match last {
            Some((prev_eta, prev_sign)) if prev_sign != s => {
                let (mut lo, mut hi) = (prev_eta, eta);
                while hi - lo > CROSSING_TOL {
                    let mid = 0.5 * (lo + hi);
                    if sign(f(mid)?) == prev_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(0.5 * (lo + hi)));
            }
            _ => last = Some((eta, s)),
        }
    }
    Ok(None)
}

/// Pure fiducial inputs spread over the Bloch sphere (Fibonacci lattice).
pub fn pure_fiducials(count: usize) -> Vec<DensityMatrix> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = if count == 1 { 1.0 } else { 1.0 - 2.0 * i as f64 / (count - 1) as f64 };
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            DensityMatrix::from_bloch([r * phi.cos(), r * phi.sin(), z]).expect("unit Bloch vector")
        })
        .collect()
}
