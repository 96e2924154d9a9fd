//! Density matrices, reservoir initializations and the Wootters spin flip.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{herm_eig, kron, kron_vec, partial_trace, FactorShape, Operator, HERMITIAN_TOL, ONE, ZERO};

/// A Hermitian, unit-trace, positive semidefinite operator on a register of
/// qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    shape: FactorShape,
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub hermiticity_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.hermiticity_deviation <= HERMITIAN_TOL
            && self.trace_deviation <= HERMITIAN_TOL
            && self.min_eigenvalue >= -HERMITIAN_TOL
    }
}

/// Reports how far `op` is from being a valid density matrix. Never fails.
pub fn validate(op: &Operator) -> ValidationReport {
    let hermiticity_deviation = op.hermiticity_deviation();
    let trace = op.trace();
    let trace_deviation = (trace - ONE).norm();
    // Eigenvalues of the Hermitian part; the deviation above reports the rest.
    let herm = (op + &op.adjoint()).scale_real(0.5);
    let min_eigenvalue = herm_eig(&herm).map(|e| *e.values.last().unwrap_or(&0.0)).unwrap_or(f64::NAN);
    ValidationReport { hermiticity_deviation, trace_deviation, min_eigenvalue }
}

impl DensityMatrix {
    /// Wraps `op` after checking it against the density-matrix invariants.
    pub fn new(op: Operator, shape: FactorShape) -> Result<Self> {
        shape.check(&op)?;
        let report = validate(&op);
        if !report.passed() {
            return Err(Error::InvalidState(format!(
                "hermiticity deviation {:e}, trace deviation {:e}, min eigenvalue {:e}",
                report.hermiticity_deviation, report.trace_deviation, report.min_eigenvalue
            )));
        }
        Ok(Self { op, shape })
    }

    pub fn from_qubits(op: Operator) -> Result<Self> {
        let n = qubit_count(op.dim())?;
        Self::new(op, FactorShape::qubits(n))
    }

    /// Skips validation. Callers guarantee the invariants (unitary
    /// conjugation, partial traces and convex mixtures of valid states).
    pub(crate) fn from_trusted(op: Operator, shape: FactorShape) -> Self {
        debug_assert_eq!(shape.total_dim(), op.dim());
        Self { op, shape }
    }

    /// `|psi><psi|` for a normalized qubit-register ket.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let n = qubit_count(ket.len())?;
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("ket norm squared {norm}")));
        }
        Ok(Self::from_trusted(Operator::outer(ket), FactorShape::qubits(n)))
    }

    /// Computational basis state, e.g. `basis("101")`.
    pub fn basis(bits: &str) -> Result<Self> {
        Self::pure(&basis_ket(bits)?)
    }

    /// Single-qubit state `(I + r.sigma) / 2` with `|r| <= 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len > 1.0 + 1e-12 {
            return Err(Error::OutOfRange { name: "bloch vector length", value: len, lo: 0.0, hi: 1.0 });
        }
        let op = Operator::from_vec(
            2,
            vec![
                Complex64::new((1.0 + r[2]) / 2.0, 0.0),
                Complex64::new(r[0] / 2.0, -r[1] / 2.0),
                Complex64::new(r[0] / 2.0, r[1] / 2.0),
                Complex64::new((1.0 - r[2]) / 2.0, 0.0),
            ],
        )?;
        Ok(Self::from_trusted(op, FactorShape::qubits(1)))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self::from_trusted(Operator::identity(dim).scale_real(1.0 / dim as f64), FactorShape::qubits(n_qubits))
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn shape(&self) -> &FactorShape {
        &self.shape
    }

    pub fn n_qubits(&self) -> usize {
        self.shape.len()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.op)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let factors = self.shape.factors().iter().chain(other.shape.factors()).copied().collect();
        Self::from_trusted(kron(&self.op, &other.op), FactorShape::new(factors).expect("valid factors"))
    }

    /// Reduced state on the listed subsystems (ascending order).
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let op = partial_trace(&self.op, &self.shape, keep)?;
        Ok(Self::from_trusted(op, self.shape.select(keep)))
    }

    /// Bloch vector of a single-qubit state.
    pub fn bloch(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.dim() });
        }
        let off = self.op.get(1, 0);
        Ok([2.0 * off.re, 2.0 * off.im, (self.op.get(0, 0) - self.op.get(1, 1)).re])
    }
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn basis_ket(bits: &str) -> Result<Vec<Complex64>> {
    let n = bits.len();
    let idx = usize::from_str_radix(bits, 2).map_err(|_| Error::InvalidState(format!("bad basis label {bits:?}")))?;
    let mut ket = vec![ZERO; 1 << n];
    ket[idx] = ONE;
    Ok(ket)
}

fn superpose(terms: &[(f64, &[Complex64])]) -> Vec<Complex64> {
    let mut out = vec![ZERO; terms[0].1.len()];
    for (w, ket) in terms {
        for (o, k) in out.iter_mut().zip(ket.iter()) {
            *o += k * *w;
        }
    }
    let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    out.iter().map(|z| z / norm).collect()
}

fn ghz_ket(n: usize) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut ket = vec![ZERO; 1 << n];
    ket[0] = Complex64::new(s, 0.0);
    ket[(1 << n) - 1] = Complex64::new(s, 0.0);
    ket
}

/// Pads a ket on `k` qubits with `|0>` ancillas up to `n` qubits.
fn pad_zeros(ket: Vec<Complex64>, k: usize, n: usize) -> Vec<Complex64> {
    if n == k {
        return ket;
    }
    kron_vec(&ket, &basis_ket(&"0".repeat(n - k)).expect("zero label"))
}

/// Reservoir preparations.
#[derive(Debug, Clone, PartialEq)]
pub enum ReservoirKind {
    /// Every ancilla in the same single-qubit state.
    Product(DensityMatrix),
    /// `(|00> + |11>)/sqrt(2)` on ancillas 1 and 2, the rest in `|0>`.
    Bell,
    /// `(|0...0> + |1...1>)/sqrt(2)` over all ancillas.
    Ghz,
    /// `(|000> + |101>)/sqrt(2)` on ancillas 1..3, the rest in `|0>`.
    AsymGhz,
    /// Normalized `sqrt(a)|100> + sqrt(1 - a) GHZ_3`, the rest in `|0>`.
    PerturbedGhz { alpha: f64 },
    /// GHZ with a bit flip on `site` (ancillas are numbered from 1).
    XErrorGhz { site: usize },
}

impl ReservoirKind {
    /// Short label used in file names and summaries.
    pub fn label(&self) -> String {
        match self {
            ReservoirKind::Product(_) => "product".into(),
            ReservoirKind::Bell => "bell".into(),
            ReservoirKind::Ghz => "ghz".into(),
            ReservoirKind::AsymGhz => "asym-ghz".into(),
            ReservoirKind::PerturbedGhz { alpha } => format!("perturbed-ghz-{alpha}"),
            ReservoirKind::XErrorGhz { site } => format!("x-error-ghz-{site}"),
        }
    }

    fn min_qubits(&self) -> usize {
        match self {
            ReservoirKind::Product(_) => 1,
            ReservoirKind::Bell => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirInit {
    pub kind: ReservoirKind,
    pub n_qubits: usize,
}

impl ReservoirInit {
    pub fn new(kind: ReservoirKind, n_qubits: usize) -> Self {
        Self { kind, n_qubits }
    }

    pub fn product(xi: DensityMatrix, n_qubits: usize) -> Self {
        Self::new(ReservoirKind::Product(xi), n_qubits)
    }

    /// Ancillas are i.i.d. and may be extended with fresh copies of `xi`.
    pub fn product_state(&self) -> Option<&DensityMatrix> {
        match &self.kind {
            ReservoirKind::Product(xi) => Some(xi),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        self.kind.label()
    }
}

/// Joint state of the reservoir ancillas (ancilla 1 is factor 0).
pub fn build_reservoir(init: &ReservoirInit) -> Result<DensityMatrix> {
    let n = init.n_qubits;
    let min = init.kind.min_qubits();
    if n < min {
        return Err(Error::ReservoirTooSmall { required: min, available: n });
    }
    let ket = match &init.kind {
        ReservoirKind::Product(xi) => {
            if xi.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: xi.dim() });
            }
            let mut state = xi.clone();
            for _ in 1..n {
                state = state.tensor(xi);
            }
            return Ok(state);
        }
        ReservoirKind::Bell => {
            let bell = superpose(&[(1.0, &basis_ket("00")?), (1.0, &basis_ket("11")?)]);
            pad_zeros(bell, 2, n)
        }
        ReservoirKind::Ghz => ghz_ket(n),
        ReservoirKind::AsymGhz => {
            let asym = superpose(&[(1.0, &basis_ket("101")?), (1.0, &basis_ket("000")?)]);
            pad_zeros(asym, 3, n)
        }
        ReservoirKind::PerturbedGhz { alpha } => {
            let alpha = *alpha;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::OutOfRange { name: "alpha", value: alpha, lo: 0.0, hi: 1.0 });
            }
            // |100> is orthogonal to GHZ_3, renormalizing is a no-op up to round-off.
            let ket = superpose(&[(alpha.sqrt(), &basis_ket("100")?), ((1.0 - alpha).sqrt(), &ghz_ket(3))]);
            pad_zeros(ket, 3, n)
        }
        ReservoirKind::XErrorGhz { site } => {
            if *site == 0 || *site > n {
                return Err(Error::OutOfRange { name: "site", value: *site as f64, lo: 1.0, hi: n as f64 });
            }
            let flip = 1usize << (n - site);
            let ghz = ghz_ket(n);
            let mut ket = vec![ZERO; ghz.len()];
            for (i, amp) in ghz.iter().enumerate() {
                ket[i ^ flip] = *amp;
            }
            ket
        }
    };
    DensityMatrix::pure(&ket)
}

fn sigma_y_y() -> Operator {
    // sigma_y (x) sigma_y is real: anti-diagonal (-1, 1, 1, -1).
    let mut yy = Operator::zeros(4);
    yy.set(0, 3, Complex64::new(-1.0, 0.0));
    yy.set(1, 2, ONE);
    yy.set(2, 1, ONE);
    yy.set(3, 0, Complex64::new(-1.0, 0.0));
    yy
}

/// `(sigma_y (x) sigma_y) rho* (sigma_y (x) sigma_y)`.
pub fn spin_flip_op(rho: &Operator) -> Result<Operator> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let yy = sigma_y_y();
    rho.conj().conjugate_by(&yy)
}

pub fn spin_flip(rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(spin_flip_op(rho.op())?, FactorShape::qubits(2)))
}
