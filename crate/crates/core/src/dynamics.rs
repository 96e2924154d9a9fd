//! Markovian and Fredkin-mediated (composite) homogenizer dynamics, plus the
//! reduced operator-sum regimes that interpolate between them.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::sync::{Arc, LazyLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::channels::{apply_unitary, GateCache, QubitChannel};
use crate::error::{Error, Result};
use crate::states::{build_reservoir, DensityMatrix, ReservoirInit};
use crate::tensor::{kron, l2_distance, partial_trace, FactorShape, Operator};
use crate::fmt_float;

pub(crate) static GATES: LazyLock<GateCache> = LazyLock::new(GateCache::new);

/// Default Gaussian spread when only a mean coupling is given.
pub const DEFAULT_GAUSSIAN_STDDEV: f64 = 0.1 * FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaKind {
    Fixed(f64),
    /// Uniform on `[0, pi/2]`.
    UniformRandom { seed: u64 },
    /// Normal draws clamped to `[0, pi/2]`.
    GaussianRandom { mean: f64, stddev: f64, seed: u64 },
}

/// Per-step coupling strengths.
///
/// Random schedules draw from ChaCha8 seeded with `seed` on stream `stream`,
/// so trajectory `i` of a batch uses stream `i` and draws never depend on how
/// the batch is scheduled across threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSchedule {
    pub kind: EtaKind,
    pub length: usize,
    pub stream: u64,
}

impl EtaSchedule {
    pub fn fixed(eta: f64, length: usize) -> Self {
        Self { kind: EtaKind::Fixed(eta), length, stream: 0 }
    }

    pub fn uniform(seed: u64, length: usize) -> Self {
        Self { kind: EtaKind::UniformRandom { seed }, length, stream: 0 }
    }

    pub fn gaussian(mean: f64, stddev: f64, seed: u64, length: usize) -> Self {
        Self { kind: EtaKind::GaussianRandom { mean, stddev, seed }, length, stream: 0 }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn realize(&self) -> Result<Vec<f64>> {
        let rng = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(self.stream);
            rng
        };
        match self.kind {
            EtaKind::Fixed(eta) => {
                if !(0.0..=FRAC_PI_2).contains(&eta) {
                    return Err(Error::OutOfRange { name: "eta", value: eta, lo: 0.0, hi: FRAC_PI_2 });
                }
                Ok(vec![eta; self.length])
            }
            EtaKind::UniformRandom { seed } => {
                let mut rng = rng(seed);
                Ok((0..self.length).map(|_| rng.random_range(0.0..=FRAC_PI_2)).collect())
            }
            EtaKind::GaussianRandom { mean, stddev, seed } => {
                if !(0.0..=FRAC_PI_2).contains(&mean) {
                    return Err(Error::OutOfRange { name: "eta mean", value: mean, lo: 0.0, hi: FRAC_PI_2 });
                }
                if !(stddev >= 0.0 && stddev.is_finite()) {
                    return Err(Error::OutOfRange { name: "eta stddev", value: stddev, lo: 0.0, hi: f64::INFINITY });
                }
                let normal = Normal::new(mean, stddev).map_err(|_| Error::OutOfRange {
                    name: "eta stddev",
                    value: stddev,
                    lo: 0.0,
                    hi: f64::INFINITY,
                })?;
                let mut rng = rng(seed);
                Ok((0..self.length).map(|_| normal.sample(&mut rng).clamp(0.0, FRAC_PI_2)).collect())
            }
        }
    }
}

/// Which ancilla the system meets at each step, and which Fredkin (control,
/// target, target) follows. Ancillas are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionPlan {
    pub system_targets: Vec<usize>,
    pub fredkin_triples: Vec<Option<(usize, usize, usize)>>,
}

impl CollisionPlan {
    /// The system meets ancillas 1, 3, 5, ...; after meeting ancilla `t` a
    /// Fredkin controlled by `t` acts on `t + 1, t + 2`. With a finite
    /// reservoir, Fredkins whose targets fall outside it are dropped.
    pub fn odd_targets(n_steps: usize, reservoir_size: Option<usize>) -> Self {
        let system_targets: Vec<usize> = (0..n_steps).map(|k| 2 * k + 1).collect();
        let fredkin_triples = system_targets
            .iter()
            .map(|&t| match reservoir_size {
                Some(size) if t + 2 > size => None,
                _ => Some((t, t + 1, t + 2)),
            })
            .collect();
        Self { system_targets, fredkin_triples }
    }

    pub fn len(&self) -> usize {
        self.system_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system_targets.is_empty()
    }

    /// Highest ancilla label the plan touches.
    pub fn max_ancilla(&self) -> usize {
        let targets = self.system_targets.iter().copied();
        let fredkins = self.fredkin_triples.iter().flatten().flat_map(|&(c, a, b)| [c, a, b]);
        targets.chain(fredkins).max().unwrap_or(0)
    }

    pub fn check(&self) -> Result<()> {
        if self.system_targets.len() != self.fredkin_triples.len() {
            return Err(Error::PlanMismatch("targets and Fredkin lists differ in length".into()));
        }
        if self.system_targets.first().is_some_and(|&t| t == 0) {
            return Err(Error::PlanMismatch("ancillas are numbered from 1".into()));
        }
        if self.system_targets.windows(2).any(|w| w[1] != w[0] + 2) {
            return Err(Error::PlanMismatch("system targets must advance by 2".into()));
        }
        for (&t, triple) in self.system_targets.iter().zip(&self.fredkin_triples) {
            if let Some((c, a, b)) = *triple {
                if c != t {
                    return Err(Error::PlanMismatch(format!("Fredkin control {c} is not the collided ancilla {t}")));
                }
                if a == b || a == c || b == c || a == 0 || b == 0 {
                    return Err(Error::PlanMismatch(format!("bad Fredkin wires ({c}, {a}, {b})")));
                }
                if a <= t || b <= t {
                    return Err(Error::PlanMismatch(format!("Fredkin targets ({a}, {b}) are already spent")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub step: usize,
    pub eta: f64,
    pub state: DensityMatrix,
    pub distance: f64,
}

/// Reduced system states after each collision and their distance to the
/// homogenization target.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub target: DensityMatrix,
    pub steps: Vec<TrajectoryStep>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "step,eta,dist_l2,rho00_re,rho01_re,rho01_im,rho11_re";

pub(crate) fn state_columns(rho: &DensityMatrix) -> [f64; 4] {
    let op = rho.op();
    [op.get(0, 0).re, op.get(0, 1).re, op.get(0, 1).im, op.get(1, 1).re]
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.steps.last().map(|s| &s.state)
    }

    pub fn distances(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.distance).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_CSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            let [r00, r01re, r01im, r11] = state_columns(&s.state);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.step,
                fmt_float(s.eta),
                fmt_float(s.distance),
                fmt_float(r00),
                fmt_float(r01re),
                fmt_float(r01im),
                fmt_float(r11)
            );
        }
        out
    }
}

fn check_single_qubit(rho: &DensityMatrix, what: &'static str) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Error::InvalidState(format!("{what} must be a single-qubit state (dimension {})", rho.dim())));
    }
    Ok(())
}

fn record(step: usize, eta: f64, state: DensityMatrix, target: &DensityMatrix) -> Result<TrajectoryStep> {
    let distance = l2_distance(state.op(), target.op())?;
    Ok(TrajectoryStep { step, eta, state, distance })
}

/// Memoryless homogenizer: the system meets a fresh copy of `xi` at every
/// step through a partial SWAP, and the ancilla is discarded afterwards.
pub fn homogenize(rho_s: &DensityMatrix, xi: &DensityMatrix, n: usize, schedule: &EtaSchedule) -> Result<Trajectory> {
    check_single_qubit(rho_s, "system state")?;
    check_single_qubit(xi, "reservoir state")?;
    if n == 0 {
        return Err(Error::OutOfRange { name: "steps", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    let etas = schedule_for(schedule, n)?;
    let shape = FactorShape::qubits(2);
    let mut rho = rho_s.op().clone();
    let mut steps = Vec::with_capacity(n);
    for (k, &eta) in etas.iter().enumerate() {
        let gate = GATES.partial_swap(eta)?;
        let joint = apply_unitary(&kron(&rho, xi.op()), 2, gate.op(), &[0, 1])?;
        rho = partial_trace(&joint, &shape, &[0])?;
        let state = DensityMatrix::from_trusted(rho.clone(), FactorShape::qubits(1));
        steps.push(record(k + 1, eta, state, xi)?);
    }
    Ok(Trajectory { target: xi.clone(), steps })
}

fn schedule_for(schedule: &EtaSchedule, n: usize) -> Result<Vec<f64>> {
    let etas = schedule.realize()?;
    if etas.len() < n {
        return Err(Error::PlanMismatch(format!("schedule has {} couplings for {n} steps", etas.len())));
    }
    for &eta in &etas[..n] {
        if !(0.0..=FRAC_PI_2).contains(&eta) {
            return Err(Error::OutOfRange { name: "eta", value: eta, lo: 0.0, hi: FRAC_PI_2 });
        }
    }
    Ok(etas[..n].to_vec())
}

/// Joint state of the system and the ancillas that are still in play.
struct Register {
    joint: Operator,
    /// Ancilla labels of wires 1.. (wire 0 is the system).
    live: Vec<usize>,
    fresh: Option<DensityMatrix>,
}

impl Register {
    fn n_qubits(&self) -> usize {
        self.live.len() + 1
    }

    fn wire(&mut self, label: usize) -> Result<usize> {
        if label == 0 {
            return Ok(0);
        }
        if let Some(pos) = self.live.iter().position(|&l| l == label) {
            return Ok(pos + 1);
        }
        let xi = self.fresh.as_ref().ok_or(Error::ReservoirTooSmall { required: label, available: self.live.len() })?;
        self.joint = kron(&self.joint, xi.op());
        self.live.push(label);
        Ok(self.live.len())
    }

    fn apply(&mut self, gate: &Arc<crate::channels::Gate>, labels: &[usize]) -> Result<()> {
        let wires = labels.iter().map(|&l| self.wire(l)).collect::<Result<Vec<_>>>()?;
        self.joint = apply_unitary(&self.joint, self.n_qubits(), gate.op(), &wires)?;
        Ok(())
    }

    fn system(&self) -> Result<DensityMatrix> {
        let op = partial_trace(&self.joint, &FactorShape::qubits(self.n_qubits()), &[0])?;
        Ok(DensityMatrix::from_trusted(op, FactorShape::qubits(1)))
    }

    /// Traces out every ancilla labelled `<= last`.
    fn discard_through(&mut self, last: usize) -> Result<()> {
        if self.live.iter().all(|&l| l > last) {
            return Ok(());
        }
        let keep: Vec<usize> =
            std::iter::once(0).chain(self.live.iter().enumerate().filter(|(_, &l)| l > last).map(|(i, _)| i + 1)).collect();
        self.joint = partial_trace(&self.joint, &FactorShape::qubits(self.n_qubits()), &keep)?;
        self.live.retain(|&l| l > last);
        Ok(())
    }

    fn snapshot(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.joint.clone(), FactorShape::qubits(self.n_qubits()))
    }
}

/// Composite dynamics: at each step a partial SWAP between the system and
/// the planned ancilla, then the planned Fredkin inside the reservoir.
///
/// Product reservoirs are extended with fresh copies of their ancilla state
/// on demand; correlated reservoirs must contain every ancilla the plan
/// touches. Spent ancillas are traced out as soon as the plan no longer
/// needs them.
pub fn evolve_composite(
    rho_s: &DensityMatrix,
    init: &ReservoirInit,
    n: usize,
    schedule: &EtaSchedule,
    plan: &CollisionPlan,
) -> Result<Trajectory> {
    evolve_composite_observed(rho_s, init, n, schedule, plan, |_, _| {})
}

/// [`evolve_composite`] with a callback receiving the in-flight joint state
/// (system first) after every step.
pub fn evolve_composite_observed(
    rho_s: &DensityMatrix,
    init: &ReservoirInit,
    n: usize,
    schedule: &EtaSchedule,
    plan: &CollisionPlan,
    mut observe: impl FnMut(usize, &DensityMatrix),
) -> Result<Trajectory> {
    check_single_qubit(rho_s, "system state")?;
    if n == 0 {
        return Err(Error::OutOfRange { name: "steps", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    plan.check()?;
    if plan.len() != n {
        return Err(Error::PlanMismatch(format!("plan has {} steps, run has {n}", plan.len())));
    }
    let etas = schedule_for(schedule, n)?;

    let (mut reg, target) = match init.product_state() {
        Some(xi) => {
            check_single_qubit(xi, "reservoir state")?;
            (Register { joint: rho_s.op().clone(), live: vec![], fresh: Some(xi.clone()) }, xi.clone())
        }
        None => {
            let required = plan.max_ancilla();
            if required > init.n_qubits {
                return Err(Error::ReservoirTooSmall { required, available: init.n_qubits });
            }
            let reservoir = build_reservoir(init)?;
            let target = reservoir.marginal(&[0])?;
            let reg = Register {
                joint: kron(rho_s.op(), reservoir.op()),
                live: (1..=init.n_qubits).collect(),
                fresh: None,
            };
            (reg, target)
        }
    };

    let fredkin = GATES.fredkin();
    let mut steps = Vec::with_capacity(n);
    for (k, &eta) in etas.iter().enumerate() {
        let t = plan.system_targets[k];
        reg.apply(&GATES.partial_swap(eta)?, &[0, t])?;
        if let Some((c, a, b)) = plan.fredkin_triples[k] {
            reg.apply(&fredkin, &[c, a, b])?;
        }
        observe(k + 1, &reg.snapshot());
        steps.push(record(k + 1, eta, reg.system()?, &target)?);
        // Ancillas up to t + 1 are never touched again.
        reg.discard_through(t + 1)?;
    }
    Ok(Trajectory { target, steps })
}

/// Coupling strength whose swap probability `sin^2(eta)` equals `p`.
pub fn eta_for_probability(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p, lo: 0.0, hi: 1.0 });
    }
    Ok(p.sqrt().asin())
}

/// All states `rho^(0), ..., rho^(n)` of the reduced operator-sum recursion
///
/// `rho^(N) = (1-p) sum_{k=1}^{N-1} p^(k-1) M[rho^(N-k)] + p^(N-1) M[rho^(0)]`
///
/// where `M` is one partial-SWAP collision with a fresh `xi` at
/// `eta = asin(sqrt(p))`.
pub fn operator_sum_trajectory(rho_s: &DensityMatrix, xi: &DensityMatrix, p: f64, n: usize) -> Result<Vec<DensityMatrix>> {
    check_single_qubit(rho_s, "system state")?;
    check_single_qubit(xi, "reservoir state")?;
    let eta = eta_for_probability(p)?;
    let collision = QubitChannel::dilation(xi.clone(), vec![(GATES.partial_swap(eta)?, vec![0, 1])], 0)?;
    let mut images: Vec<Operator> = vec![collision.apply_op(rho_s.op())];
    let mut states = vec![rho_s.clone()];
    for big_n in 1..=n {
        let mut acc = images[0].scale_real(p.powi(big_n as i32 - 1));
        for k in 1..big_n {
            let w = (1.0 - p) * p.powi(k as i32 - 1);
            if w != 0.0 {
                acc = &acc + &images[big_n - k].scale_real(w);
            }
        }
        let state = DensityMatrix::from_trusted(acc, FactorShape::qubits(1));
        images.push(collision.apply_op(state.op()));
        states.push(state);
    }
    Ok(states)
}

pub fn operator_sum_evolution(rho_s: &DensityMatrix, xi: &DensityMatrix, p: f64, n: usize) -> Result<DensityMatrix> {
    Ok(operator_sum_trajectory(rho_s, xi, p, n)?.pop().expect("initial state is always present"))
}

/// One row of [`interpolation_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeTrajectory {
    pub p: f64,
    pub eta: f64,
    pub target: DensityMatrix,
    /// `rho^(0)` through `rho^(n)`.
    pub states: Vec<DensityMatrix>,
}

pub const REGIMES_CSV_HEADER: &str = "p,step,eta,dist_l2,rho00_re,rho01_re,rho01_im,rho11_re";

pub fn interpolation_sweep(
    p_grid: &[f64],
    n: usize,
    rho_s: &DensityMatrix,
    xi: &DensityMatrix,
) -> Result<Vec<RegimeTrajectory>> {
    p_grid
        .iter()
        .map(|&p| {
            Ok(RegimeTrajectory {
                p,
                eta: eta_for_probability(p)?,
                target: xi.clone(),
                states: operator_sum_trajectory(rho_s, xi, p, n)?,
            })
        })
        .collect()
}

pub fn regimes_to_csv(table: &[RegimeTrajectory]) -> Result<String> {
    let mut out = String::from(REGIMES_CSV_HEADER);
    out.push('\n');
    for row in table {
        for (step, state) in row.states.iter().enumerate().skip(1) {
            let d = l2_distance(state.op(), row.target.op())?;
            let [r00, r01re, r01im, r11] = state_columns(state);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_float(row.p),
                step,
                fmt_float(row.eta),
                fmt_float(d),
                fmt_float(r00),
                fmt_float(r01re),
                fmt_float(r01im),
                fmt_float(r11)
            );
        }
    }
    Ok(out)
}
