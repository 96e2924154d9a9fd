//! Non-Markovian quantum homogenizer.
//!
//! A qubit collides with reservoir ancillas through partial SWAPs while
//! Fredkin gates inside the reservoir route what it wrote into later
//! ancillas. The crate simulates those dynamics with dense density matrices
//! and evaluates a Choi-state entanglement witness that separates dynamics
//! realizable with classical memory from dynamics that need quantum memory.
//!
//! Qubit registers are ordered big-endian: wire 0 is the most significant
//! tensor factor. In joint system-reservoir states the system is wire 0 and
//! ancilla `k` (numbered from 1) is wire `k`.

pub mod channels;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod states;
pub mod tensor;
pub mod witness;

pub use channels::{apply_gate, choi, fredkin, is_cptp, partial_swap, swap, CptpReport, Gate, GateCache, QubitChannel};
pub use dynamics::{
    evolve_composite, homogenize, interpolation_sweep, operator_sum_evolution, CollisionPlan, EtaKind, EtaSchedule,
    Trajectory,
};
pub use entanglement::{
    concurrence, concurrence_of_assistance, entanglement_of_formation, eoa_search, Decomposition,
};
pub use error::{Error, Result};
pub use states::{build_reservoir, spin_flip, validate, DensityMatrix, ReservoirInit, ReservoirKind, ValidationReport};
pub use tensor::{herm_eig, kron, l2_distance, partial_trace, sqrt_psd, FactorShape, Operator};
pub use witness::{find_crossing, gap_curve, memory_gap, step1_channel, step2_channel, GapCurve, GapSample};

/// Round-trippable text form of a float: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}
