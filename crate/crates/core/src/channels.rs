//! Gates, their application to selected wires, and single-qubit channels.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::states::{validate, DensityMatrix};
use crate::tensor::{kron, partial_trace, FactorShape, Operator, I, ONE, ZERO};

/// Unitarity is checked at this tolerance.
pub const UNITARY_TOL: f64 = 1e-10;
/// Choi positivity and trace preservation are certified at this tolerance.
pub const CPTP_TOL: f64 = 1e-9;

/// A unitary acting on `arity` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    op: Operator,
    arity: usize,
}

impl Gate {
    pub fn new(op: Operator) -> Result<Self> {
        let dim = op.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidSubsystems(format!("gate dimension {dim}")));
        }
        let defect = (&op.adjoint() * &op).max_abs_diff(&Operator::identity(dim));
        if defect > UNITARY_TOL {
            return Err(Error::InvalidState(format!("gate is not unitary (defect {defect:e})")));
        }
        Ok(Self { arity: dim.trailing_zeros() as usize, op })
    }

    pub fn identity(arity: usize) -> Self {
        Self { op: Operator::identity(1 << arity), arity }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

fn swap_op() -> Operator {
    let mut s = Operator::zeros(4);
    s.set(0, 0, ONE);
    s.set(1, 2, ONE);
    s.set(2, 1, ONE);
    s.set(3, 3, ONE);
    s
}

pub fn swap() -> Gate {
    Gate { op: swap_op(), arity: 2 }
}

/// `cos(eta) I + i sin(eta) SWAP` for a coupling strength in `[0, pi/2]`.
pub fn partial_swap(eta: f64) -> Result<Gate> {
    if !(0.0..=FRAC_PI_2).contains(&eta) {
        return Err(Error::OutOfRange { name: "eta", value: eta, lo: 0.0, hi: FRAC_PI_2 });
    }
    let (s, c) = eta.sin_cos();
    let op = &Operator::identity(4).scale_real(c) + &swap_op().scale(I * s);
    Ok(Gate { op, arity: 2 })
}

/// Controlled-SWAP with the control on the first wire.
pub fn fredkin() -> Gate {
    let p0 = Operator::diag(&[1.0, 0.0]);
    let p1 = Operator::diag(&[0.0, 1.0]);
    let op = &kron(&p0, &Operator::identity(4)) + &kron(&p1, &swap_op());
    Gate { op, arity: 3 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum GateKey {
    PartialSwap(i64),
    Fredkin,
}

/// Thread-safe memo of the gates used by the simulators, keyed by kind and
/// coupling strength rounded to 1e-12.
#[derive(Debug, Default)]
pub struct GateCache {
    gates: RwLock<HashMap<GateKey, Arc<Gate>>>,
}

impl GateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn partial_swap(&self, eta: f64) -> Result<Arc<Gate>> {
        let key = GateKey::PartialSwap((eta * 1e12).round() as i64);
        self.get_or_insert(key, || partial_swap(eta))
    }

    pub fn fredkin(&self) -> Arc<Gate> {
        self.get_or_insert(GateKey::Fredkin, || Ok(fredkin())).expect("fredkin is infallible")
    }

    pub fn len(&self) -> usize {
        self.gates.read().expect("gate cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_insert(&self, key: GateKey, build: impl FnOnce() -> Result<Gate>) -> Result<Arc<Gate>> {
        if let Some(g) = self.gates.read().expect("gate cache poisoned").get(&key) {
            return Ok(Arc::clone(g));
        }
        let gate = Arc::new(build()?);
        let mut map = self.gates.write().expect("gate cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(gate)))
    }
}

fn check_wires(n_qubits: usize, arity: usize, wires: &[usize]) -> Result<()> {
    if wires.len() != arity {
        return Err(Error::ArityMismatch { arity, wires: wires.len() });
    }
    for (i, &w) in wires.iter().enumerate() {
        if w >= n_qubits {
            return Err(Error::WireOutOfRange { wire: w, n_qubits });
        }
        if wires[..i].contains(&w) {
            return Err(Error::WireCollision(w));
        }
    }
    Ok(())
}

/// Index offsets of the gate's basis states inside the full register, and
/// the base indices with every gate wire cleared.
fn wire_offsets(n_qubits: usize, wires: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let k = wires.len();
    let masks: Vec<usize> = wires.iter().map(|&w| 1usize << (n_qubits - 1 - w)).collect();
    let offsets = (0..1usize << k)
        .map(|a| (0..k).filter(|&b| a >> (k - 1 - b) & 1 == 1).map(|b| masks[b]).sum())
        .collect();
    let all: usize = masks.iter().sum();
    let bases = (0..1usize << n_qubits).filter(|i| i & all == 0).collect();
    (offsets, bases)
}

/// `U rho U^dagger` with `U` embedded on `wires` of an `n_qubits` register.
/// The first wire is the gate's most significant qubit.
pub fn apply_unitary(rho: &Operator, n_qubits: usize, u: &Operator, wires: &[usize]) -> Result<Operator> {
    let arity = u.dim().trailing_zeros() as usize;
    check_wires(n_qubits, arity, wires)?;
    if rho.dim() != 1 << n_qubits {
        return Err(Error::DimensionMismatch { expected: 1 << n_qubits, found: rho.dim() });
    }
    let (offsets, bases) = wire_offsets(n_qubits, wires);
    let dim = rho.dim();
    let g = offsets.len();
    let mut buf = vec![ZERO; g];

    // Rows: rho <- U rho.
    let mut left = rho.clone();
    for col in 0..dim {
        for &b in &bases {
            for (a, &off) in offsets.iter().enumerate() {
                buf[a] = rho.get(b + off, col);
            }
            for (a, &off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (bb, v) in buf.iter().enumerate() {
                    acc += u.get(a, bb) * v;
                }
                left.set(b + off, col, acc);
            }
        }
    }
    // Columns: rho <- rho U^dagger.
    let mut out = left.clone();
    for row in 0..dim {
        for &b in &bases {
            for (a, &off) in offsets.iter().enumerate() {
                buf[a] = left.get(row, b + off);
            }
            for (a, &off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (bb, v) in buf.iter().enumerate() {
                    acc += v * u.get(a, bb).conj();
                }
                out.set(row, b + off, acc);
            }
        }
    }
    Ok(out)
}

pub fn apply_gate(state: &DensityMatrix, gate: &Gate, wires: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    if state.shape().factors().iter().any(|&d| d != 2) {
        return Err(Error::InvalidSubsystems("gates act on qubit registers only".into()));
    }
    let op = apply_unitary(state.op(), n, gate.op(), wires)?;
    Ok(DensityMatrix::from_trusted(op, state.shape().clone()))
}

type LinearMap = Arc<dyn Fn(&Operator) -> Operator + Send + Sync>;

#[derive(Clone)]
enum Repr {
    /// System on wire 0, environment on wires 1.., gates applied in order,
    /// output read from `output_wire`.
    Dilation { env: DensityMatrix, circuit: Vec<(Arc<Gate>, Vec<usize>)>, output_wire: usize },
    Linear(LinearMap),
}

/// A linear map on single-qubit operators.
#[derive(Clone)]
pub struct QubitChannel {
    repr: Repr,
}

impl fmt::Debug for QubitChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Dilation { env, circuit, output_wire } => f
                .debug_struct("QubitChannel::Dilation")
                .field("env_qubits", &env.n_qubits())
                .field("gates", &circuit.len())
                .field("output_wire", output_wire)
                .finish(),
            Repr::Linear(_) => f.write_str("QubitChannel::Linear"),
        }
    }
}

impl QubitChannel {
    /// Stinespring form: `rho -> tr_{all but output}[ G_n ... G_1 (rho (x) env) ]`.
    pub fn dilation(env: DensityMatrix, circuit: Vec<(Arc<Gate>, Vec<usize>)>, output_wire: usize) -> Result<Self> {
        let n = env.n_qubits() + 1;
        for (gate, wires) in &circuit {
            check_wires(n, gate.arity(), wires)?;
        }
        if output_wire >= n {
            return Err(Error::WireOutOfRange { wire: output_wire, n_qubits: n });
        }
        Ok(Self { repr: Repr::Dilation { env, circuit, output_wire } })
    }

    /// Any linear map on 2x2 matrices. Nothing is assumed about positivity.
    pub fn from_fn(f: impl Fn(&Operator) -> Operator + Send + Sync + 'static) -> Self {
        Self { repr: Repr::Linear(Arc::new(f)) }
    }

    pub fn identity() -> Self {
        Self::from_fn(|rho| rho.clone())
    }

    /// `rho -> tr(rho) I/2`.
    pub fn depolarizing() -> Self {
        Self::from_fn(|rho| Operator::identity(2).scale(rho.trace() * 0.5))
    }

    /// Transposition: positive but not completely positive.
    pub fn transpose() -> Self {
        Self::from_fn(|rho| rho.transpose())
    }

    /// `p a + (1 - p) b`.
    pub fn mixture(p: f64, a: &QubitChannel, b: &QubitChannel) -> Self {
        let (a, b) = (a.clone(), b.clone());
        Self::from_fn(move |rho| &a.apply_op(rho).scale_real(p) + &b.apply_op(rho).scale_real(1.0 - p))
    }

    /// Applies the map to an arbitrary 2x2 operator.
    pub fn apply_op(&self, rho: &Operator) -> Operator {
        match &self.repr {
            Repr::Linear(f) => f(rho),
            Repr::Dilation { env, circuit, output_wire } => {
                let n = env.n_qubits() + 1;
                let mut joint = kron(rho, env.op());
                for (gate, wires) in circuit {
                    joint = apply_unitary(&joint, n, gate.op(), wires).expect("wires checked at construction");
                }
                partial_trace(&joint, &FactorShape::qubits(n), &[*output_wire]).expect("shape is consistent")
            }
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
        }
        DensityMatrix::new(self.apply_op(rho.op()), FactorShape::qubits(1))
    }

    /// Largest deviation of `tr(L(|i><j|))` from `delta_ij`.
    pub fn trace_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let tr = self.apply_op(&Operator::basis_element(2, i, j)).trace();
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((tr - target).norm());
            }
        }
        worst
    }

    fn choi_op(&self) -> Operator {
        let mut out = Operator::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                let e = Operator::basis_element(2, i, j);
                out = &out + &kron(&self.apply_op(&e), &e);
            }
        }
        out.scale_real(0.5)
    }
}

/// Choi state `(L (x) id)|phi+><phi+|`, normalized to unit trace. The
/// channel acts on factor 0.
pub fn choi(channel: &QubitChannel) -> Result<DensityMatrix> {
    let deviation = channel.trace_deviation();
    if deviation > CPTP_TOL {
        return Err(Error::NotTracePreserving { deviation });
    }
    let op = channel.choi_op();
    let report = validate(&op);
    if report.hermiticity_deviation > CPTP_TOL {
        return Err(Error::InvalidState(format!("Choi matrix is not Hermitian ({:e})", report.hermiticity_deviation)));
    }
    // Not validated for positivity: a non-CP map still has a (non-PSD) Choi matrix.
    Ok(DensityMatrix::from_trusted(op, FactorShape::qubits(2)))
}

/// Result of [`is_cptp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    pub cptp: bool,
    pub min_choi_eigenvalue: f64,
    /// Max entry of `|tr_out(Choi) - I/2|`.
    pub trace_deviation: f64,
}

pub fn is_cptp(channel: &QubitChannel) -> CptpReport {
    let op = channel.choi_op();
    let report = validate(&op);
    let reduced = partial_trace(&op, &FactorShape::qubits(2), &[1]).expect("Choi matrix is 4x4");
    let trace_deviation = reduced.max_abs_diff(&Operator::identity(2).scale_real(0.5));
    let min_choi_eigenvalue = report.min_eigenvalue;
    let cptp = report.hermiticity_deviation <= CPTP_TOL
        && min_choi_eigenvalue >= -CPTP_TOL
        && trace_deviation <= CPTP_TOL;
    CptpReport { cptp, min_choi_eigenvalue, trace_deviation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::basis_ket;
    use num_complex::Complex64;
    use crate::tensor::herm_eig;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn phi_plus() -> Operator {
        let s = c(FRAC_1_SQRT_2, 0.0);
        Operator::outer(&[s, ZERO, ZERO, s])
    }

    fn unitarity_defect(g: &Gate) -> f64 {
        (&g.op().adjoint() * g.op()).max_abs_diff(&Operator::identity(g.op().dim()))
    }

    #[test]
    fn partial_swap_limits() {
        assert_eq!(partial_swap(0.0).unwrap().op(), &Operator::identity(4));
        let full = partial_swap(FRAC_PI_2).unwrap();
        assert!(full.op().max_abs_diff(&swap_op().scale(I)) < 1e-15);
        assert!(partial_swap(-0.1).is_err());
        assert!(partial_swap(FRAC_PI_2 + 1e-9).is_err());
        for eta in [0.1, 0.7, 1.3] {
            assert!(unitarity_defect(&partial_swap(eta).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn partial_swap_quarter_on_01() {
        let g = partial_swap(FRAC_PI_4).unwrap();
        let out = g.op().apply(&basis_ket("01").unwrap()).unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = [ZERO, c(s, 0.0), c(0.0, s), ZERO];
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-15);
        }
        let rho = DensityMatrix::pure(&out).unwrap();
        for keep in [0, 1] {
            let m = rho.marginal(&[keep]).unwrap();
            assert!(m.op().max_abs_diff(&Operator::diag(&[0.5, 0.5])) < 1e-15);
        }
    }

    #[test]
    fn fredkin_truth_table() {
        let f = fredkin();
        assert!(unitarity_defect(&f) < 1e-12);
        for bits in ["000", "001", "010", "011"] {
            let out = f.op().apply(&basis_ket(bits).unwrap()).unwrap();
            assert_eq!(out, basis_ket(bits).unwrap());
        }
        let out = f.op().apply(&basis_ket("101").unwrap()).unwrap();
        assert_eq!(out, basis_ket("110").unwrap());
    }

    #[test]
    fn fredkin_commutes_with_control_projectors() {
        let f = fredkin();
        let p0 = kron(&Operator::diag(&[1.0, 0.0]), &Operator::identity(4));
        let p1 = kron(&Operator::diag(&[0.0, 1.0]), &Operator::identity(4));
        let split = &(&(&p0 * f.op()) * &p0) + &(&(&p1 * f.op()) * &p1);
        assert!(split.max_abs_diff(f.op()) < 1e-15);
    }

    #[test]
    fn apply_gate_examples() {
        let rho = DensityMatrix::basis("011").unwrap();
        let same = apply_gate(&rho, &Gate::identity(2), &[2, 0]).unwrap();
        assert_eq!(same, rho);

        let out = apply_gate(&DensityMatrix::basis("01").unwrap(), &swap(), &[0, 1]).unwrap();
        assert_eq!(out.op(), DensityMatrix::basis("10").unwrap().op());
    }

    #[test]
    fn apply_gate_on_distant_wires_matches_permutation_oracle() {
        let ket = [
            c(0.1, 0.2),
            c(-0.3, 0.1),
            c(0.4, 0.0),
            c(0.2, -0.2),
            c(0.0, 0.3),
            c(-0.1, -0.1),
            c(0.3, 0.2),
            c(0.25, 0.0),
        ];
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ket: Vec<_> = ket.iter().map(|z| z / norm).collect();
        let rho = DensityMatrix::pure(&ket).unwrap();
        let g = partial_swap(0.63).unwrap();
        let out = apply_gate(&rho, &g, &[0, 2]).unwrap();

        // Oracle: swap qubits 1 and 2, act on (0, 1) with the full Kronecker
        // embedding, swap back.
        let perm = kron(&Operator::identity(2), &swap_op());
        let embedded = kron(g.op(), &Operator::identity(2));
        let full = &(&perm * &embedded) * &perm;
        let expected = rho.op().conjugate_by(&full).unwrap();
        assert!(out.op().max_abs_diff(&expected) < 1e-14);
        assert!(out.validate().passed());
    }

    #[test]
    fn apply_gate_rejects_bad_wires() {
        let rho = DensityMatrix::basis("000").unwrap();
        assert!(matches!(apply_gate(&rho, &swap(), &[1, 1]), Err(Error::WireCollision(1))));
        assert!(matches!(apply_gate(&rho, &swap(), &[0]), Err(Error::ArityMismatch { .. })));
        assert!(matches!(apply_gate(&rho, &fredkin(), &[0, 1, 3]), Err(Error::WireOutOfRange { .. })));
    }

    #[test]
    fn choi_of_reference_channels() {
        let id = choi(&QubitChannel::identity()).unwrap();
        assert!(id.op().max_abs_diff(&phi_plus()) < 1e-15);
        let dep = choi(&QubitChannel::depolarizing()).unwrap();
        assert!(dep.op().max_abs_diff(&Operator::identity(4).scale_real(0.25)) < 1e-15);
        let not_tp = QubitChannel::from_fn(|rho| rho.scale_real(0.5));
        assert!(matches!(choi(&not_tp), Err(Error::NotTracePreserving { .. })));
    }

    #[test]
    fn choi_of_partial_swap_channel_matches_kraus_oracle() {
        let eta = FRAC_PI_4;
        let env = DensityMatrix::basis("0").unwrap();
        let ch = QubitChannel::dilation(env, vec![(Arc::new(partial_swap(eta).unwrap()), vec![0, 1])], 0).unwrap();
        let out = choi(&ch).unwrap();
        assert!(out.validate().passed());

        // Kraus operators from <k|_E U |0>_E:
        //   K0 = diag(cos + i sin, cos),  K1 = i sin |0><1|.
        let (s, co) = eta.sin_cos();
        let k0 = Operator::from_vec(2, vec![c(co, s), ZERO, ZERO, c(co, 0.0)]).unwrap();
        let k1 = Operator::from_vec(2, vec![ZERO, c(0.0, s), ZERO, ZERO]).unwrap();
        let mut expected = Operator::zeros(4);
        for k in [&k0, &k1] {
            let kk = kron(k, &Operator::identity(2));
            expected = &expected + &phi_plus().conjugate_by(&kk).unwrap();
        }
        assert!(out.op().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn cptp_certification() {
        let ok = is_cptp(&QubitChannel::identity());
        assert!(ok.cptp);
        let t = is_cptp(&QubitChannel::transpose());
        assert!(!t.cptp);
        assert!((t.min_choi_eigenvalue + 0.5).abs() < 1e-12);
        assert!(t.trace_deviation < 1e-15);
    }

    #[test]
    fn choi_is_linear_in_the_channel() {
        let env = DensityMatrix::from_bloch([0.2, 0.4, -0.1]).unwrap();
        let a = QubitChannel::dilation(env, vec![(Arc::new(partial_swap(0.9).unwrap()), vec![0, 1])], 0).unwrap();
        let b = QubitChannel::depolarizing();
        for p in [0.0, 0.25, 0.6, 1.0] {
            let mixed = choi(&QubitChannel::mixture(p, &a, &b)).unwrap();
            let expected = &choi(&a).unwrap().op().scale_real(p) + &choi(&b).unwrap().op().scale_real(1.0 - p);
            assert!(mixed.op().max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn partial_swap_fixes_the_reservoir_state() {
        let xi = DensityMatrix::from_bloch([0.3, -0.5, 0.6]).unwrap();
        for eta in [0.2, 0.8, 1.4] {
            let g = Arc::new(partial_swap(eta).unwrap());
            let ch = QubitChannel::dilation(xi.clone(), vec![(g, vec![0, 1])], 0).unwrap();
            assert!(ch.apply(&xi).unwrap().op().max_abs_diff(xi.op()) < 1e-14);
        }
    }

    #[test]
    fn gate_cache_reuses_entries() {
        let cache = GateCache::new();
        let a = cache.partial_swap(0.5).unwrap();
        let b = cache.partial_swap(0.5 + 1e-14).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let _ = cache.partial_swap(0.6).unwrap();
        let _ = cache.fredkin();
        assert_eq!(cache.len(), 3);
        assert!(cache.partial_swap(2.0).is_err());
    }

    #[test]
    fn choi_eigenvalues_of_transpose() {
        let op = QubitChannel::transpose().choi_op();
        let eig = herm_eig(&op).unwrap();
        assert!((eig.values[0] - 0.5).abs() < 1e-12);
        assert!((eig.values[3] + 0.5).abs() < 1e-12);
    }
}
