//! Statevector simulation, probe reduction, Pauli readout, seeded shot
//! sampling and phase extraction.
//!
//! Shots are drawn i.i.d. from the terminal Born distribution using
//! `ChaCha8Rng` (from `rand_chacha`) seeded with `seed_from_u64`. ChaCha output
//! is specified bit-for-bit, so identical `(state, shots, seed)` produce
//! identical counts on every platform.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::circuit::{self, Circuit, Gate, GateKind, MeasureBasis, PROBE};
use crate::error::{Error, Result};
use crate::model;
use crate::numkit::{c, re, ComplexMatrix, ComplexVector, C64};

/// Shot count used when none is given.
pub const DEFAULT_SHOTS: u64 = 8192;
const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: ComplexVector,
}

impl StateVector {
    /// |0…0⟩
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            amplitudes: ComplexVector::basis(1 << n_qubits, 0),
        }
    }

    pub fn new(n_qubits: usize, amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.dim() != 1 << n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n_qubits} qubits",
                amplitudes.dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm before validating.
    pub fn normalized(n_qubits: usize, amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.norm() == 0.0 {
            return Err(Error::InvalidParameter("zero vector cannot be normalized".into()));
        }
        Self::new(n_qubits, amplitudes.normalized())
    }

    /// |probe⟩ ⊗ |system⟩ with the probe as qubit 0.
    pub fn product(probe: &ComplexVector, system: &ComplexVector) -> Result<Self> {
        if probe.dim() != 2 || system.dim() != 2 {
            return Err(Error::DimensionMismatch("product state needs two qubit vectors".into()));
        }
        let amps = ComplexVector::new(
            (0..4).map(|i| probe[i >> 1] * system[i & 1]).collect(),
        )?;
        Self::normalized(2, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    fn bit(&self, qubit: usize) -> usize {
        self.n_qubits - 1 - qubit
    }
}

fn check_qubit(s: &StateVector, q: usize) -> Result<()> {
    if q >= s.n_qubits {
        return Err(Error::QubitOutOfRange {
            qubit: q,
            n_qubits: s.n_qubits,
        });
    }
    Ok(())
}

/// Applies one non-measurement gate.
pub fn apply_gate(s: &StateVector, gate: &Gate) -> Result<StateVector> {
    for &q in &gate.targets {
        check_qubit(s, q)?;
    }
    let Some(u) = gate.matrix() else {
        return Err(Error::UnsupportedGate("measurement cannot be applied as a unitary".into()));
    };
    let (control, target) = match gate.kind {
        GateKind::ControlledU { .. } => (Some(gate.targets[0]), gate.targets[1]),
        _ => (None, gate.targets[0]),
    };
    if control == Some(target) {
        return Err(Error::InvalidCircuit("control and target coincide".into()));
    }
    let tmask = 1usize << s.bit(target);
    let cmask = control.map(|q| 1usize << s.bit(q));
    let old = s.amplitudes.as_slice();
    let mut new = old.to_vec();
    for i in 0..old.len() {
        if i & tmask != 0 || cmask.is_some_and(|m| i & m == 0) {
            continue;
        }
        let (a0, a1) = (old[i], old[i | tmask]);
        new[i] = u.get(0, 0) * a0 + u.get(0, 1) * a1;
        new[i | tmask] = u.get(1, 0) * a0 + u.get(1, 1) * a1;
    }
    Ok(StateVector {
        n_qubits: s.n_qubits,
        amplitudes: ComplexVector::new(new)?,
    })
}

/// Applies every unitary gate in order. Measurements are deferred: the
/// returned state is the pre-measurement state.
pub fn run(circuit: &Circuit, initial: &StateVector) -> Result<StateVector> {
    if initial.n_qubits != circuit.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit circuit on a {}-qubit state",
            circuit.n_qubits(),
            initial.n_qubits
        )));
    }
    circuit
        .gates()
        .iter()
        .filter(|g| !g.is_measure())
        .try_fold(initial.clone(), |s, g| apply_gate(&s, g))
}

/// [`run`] followed by sampling the circuit's measured qubits.
pub fn run_sampled(circuit: &Circuit, initial: &StateVector, shots: u64, seed: u64) -> Result<(StateVector, ShotResult)> {
    let state = run(circuit, initial)?;
    let mut measured: Vec<(usize, usize)> = circuit.measurements();
    measured.sort_by_key(|&(_, clbit)| clbit);
    let qubits: Vec<usize> = measured.into_iter().map(|(q, _)| q).collect();
    let result = sample_counts(&state, &qubits, shots, seed)?;
    Ok((state, result))
}

/// Full unitary of the circuit's non-measurement gates.
pub fn circuit_unitary(circuit: &Circuit) -> Result<ComplexMatrix> {
    let dim = 1usize << circuit.n_qubits();
    let columns = (0..dim)
        .map(|j| {
            let basis = StateVector {
                n_qubits: circuit.n_qubits(),
                amplitudes: ComplexVector::basis(dim, j),
            };
            run(circuit, &basis)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| columns[j].amplitudes[i]))
}

/// |tr(A†B)| / dim, equal to 1 exactly when A and B agree up to global phase.
pub fn unitary_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap: C64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.conj() * y)
        .sum();
    overlap.norm() / a.rows() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: ComplexMatrix) -> Result<Self> {
        if !entries.is_hermitian(1e-12) {
            return Err(Error::NotHermitian(entries.hermiticity_defect()));
        }
        let tr = entries.trace();
        if (tr - re(1.0)).norm() > 1e-12 {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr}")));
        }
        let min = crate::numkit::eig_hermitian(&entries)?.eigenvalues[0];
        if min < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min}"
            )));
        }
        Ok(Self { entries })
    }

    /// ½(I + x·σx + y·σy + z·σz)
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(
            ComplexMatrix::new(
                2,
                2,
                vec![re(0.5 * (1.0 + z)), c(0.5 * x, -0.5 * y), c(0.5 * x, 0.5 * y), re(0.5 * (1.0 - z))],
            )?,
        )
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    /// (1 − p)·ρ + p·I/d
    pub fn depolarize(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("depolarizing probability {p} outside [0, 1]")));
        }
        let d = self.dim();
        let mixed = ComplexMatrix::identity(d).scale(re(p / d as f64));
        Ok(Self {
            entries: self.entries.scale(re(1.0 - p)).add(&mixed)?,
        })
    }
}

/// Reduced state of `probe_qubit` in a two-qubit pure state.
pub fn reduce_probe(s: &StateVector, probe_qubit: usize) -> Result<DensityMatrix> {
    if s.n_qubits != 2 {
        return Err(Error::DimensionMismatch(format!(
            "probe reduction needs a 2-qubit state, got {}",
            s.n_qubits
        )));
    }
    check_qubit(s, probe_qubit)?;
    let pmask = 1usize << s.bit(probe_qubit);
    let amps = s.amplitudes.as_slice();
    let mut rho = [[C64::default(); 2]; 2];
    for i in 0..4 {
        for j in 0..4 {
            // same value of the traced-out qubit
            if (i & !pmask) == (j & !pmask) {
                let (a, b) = (usize::from(i & pmask != 0), usize::from(j & pmask != 0));
                rho[a][b] += amps[i] * amps[j].conj();
            }
        }
    }
    // exact Hermitian symmetry
    let off = 0.5 * (rho[0][1] + rho[1][0].conj());
    let entries = ComplexMatrix::new(2, 2, vec![re(rho[0][0].re), off, off.conj(), re(rho[1][1].re)])?;
    Ok(DensityMatrix { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// tr(ρ·σ)
pub fn pauli_expectation(rho: &DensityMatrix, axis: Pauli) -> f64 {
    let e = &rho.entries;
    match axis {
        Pauli::X => 2.0 * e.get(0, 1).re,
        Pauli::Y => -2.0 * e.get(0, 1).im,
        Pauli::Z => (e.get(0, 0) - e.get(1, 1)).re,
    }
}

/// Normalizes an angle to (−π, π], mapping −π (and −0 carried through atan2)
/// to +π.
pub fn normalize_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Returns `(phase_arg, phase_unwrapped)`: `atan2(σy, σx)` in (−π, π] and
/// `arccos(σx)` in [0, π].
pub fn extract_phase(sigma_x: f64, sigma_y: f64) -> Result<(f64, f64)> {
    if sigma_x == 0.0 && sigma_y == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    if !(sigma_x.is_finite() && sigma_y.is_finite()) {
        return Err(Error::InvalidParameter("non-finite expectation value".into()));
    }
    let r2 = sigma_x * sigma_x + sigma_y * sigma_y;
    if r2 > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "Bloch vector length² {r2} exceeds 1"
        )));
    }
    // +0 so that a real negative overlap gives +π
    let sigma_y = if sigma_y == 0.0 { 0.0 } else { sigma_y };
    let arg = sigma_y.atan2(sigma_x);
    let arg = if arg == -PI { PI } else { arg };
    Ok((arg, sigma_x.clamp(-1.0, 1.0).acos()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShotResult {
    /// Outcome bitstring (one character per measured qubit) to count.
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotResult {
    pub fn count(&self, outcome: &str) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }
}

fn draw(outcomes: &[(String, f64)], shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
    let mut cumulative = Vec::with_capacity(outcomes.len());
    let mut acc = 0.0;
    for (_, p) in outcomes {
        acc += p / total;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = vec![0u64; outcomes.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        // the last nonzero outcome absorbs rounding in the cumulative sum
        let k = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| outcomes.iter().rposition(|(_, p)| *p > 0.0).unwrap_or(0));
        tally[k] += 1;
    }
    let counts = outcomes
        .iter()
        .zip(tally)
        .filter(|(_, n)| *n > 0)
        .map(|((label, _), n)| (label.clone(), n))
        .collect();
    Ok(ShotResult { counts, shots, seed })
}

/// Draws `shots` i.i.d. outcomes of the listed qubits from the Born rule.
pub fn sample_counts(s: &StateVector, measured_qubits: &[usize], shots: u64, seed: u64) -> Result<ShotResult> {
    for &q in measured_qubits {
        check_qubit(s, q)?;
    }
    let k = measured_qubits.len();
    let mut probs = vec![0.0; 1 << k];
    for (i, a) in s.amplitudes.as_slice().iter().enumerate() {
        let mut outcome = 0;
        for &q in measured_qubits {
            outcome = (outcome << 1) | ((i >> s.bit(q)) & 1);
        }
        probs[outcome] += a.norm_sqr();
    }
    let outcomes: Vec<(String, f64)> = probs
        .into_iter()
        .enumerate()
        .map(|(o, p)| (format!("{o:0k$b}"), p))
        .collect();
    draw(&outcomes, shots, seed)
}

/// Samples a single-qubit density matrix in the computational basis.
pub fn sample_density(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<ShotResult> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch("single-qubit density matrix expected".into()));
    }
    let p0 = rho.entries.get(0, 0).re.clamp(0.0, 1.0);
    draw(&[("0".into(), p0), ("1".into(), 1.0 - p0)], shots, seed)
}

/// (count₀ − count₁) / shots for a single measured bit.
pub fn estimate_expectation(r: &ShotResult) -> Result<f64> {
    if r.counts.keys().any(|k| k.len() != 1) {
        return Err(Error::InvalidParameter("expectation estimate needs a single measured bit".into()));
    }
    if r.shots == 0 {
        return Err(Error::InvalidParameter("no shots".into()));
    }
    Ok((r.count("0") as f64 - r.count("1") as f64) / r.shots as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotCount {
    Exact,
    Shots(u64),
}

impl Serialize for ShotCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ShotCount::Exact => s.serialize_str("exact"),
            ShotCount::Shots(n) => s.serialize_u64(*n),
        }
    }
}

/// One protocol result. `overlap_*` is the model value ⟨0|M(φ)|0⟩; the
/// `sigma_*` fields are what the probe readout produced. `phase_arg` is NaN
/// when the Bloch vector vanishes exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRecord {
    #[serde(rename = "phi_rad")]
    pub phi: f64,
    pub overlap_re: f64,
    pub overlap_im: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    #[serde(rename = "phase_arg_rad")]
    pub phase_arg: f64,
    #[serde(rename = "phase_unwrapped_rad")]
    pub phase_unwrapped: f64,
    pub shots: ShotCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Exact,
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub phi_total: f64,
    pub n_steps: usize,
    pub readout: Readout,
    /// Depolarizing probability applied to the probe before readout.
    pub noise_p: Option<f64>,
}

impl ProtocolConfig {
    pub fn exact(phi_total: f64, n_steps: usize) -> Self {
        Self {
            phi_total,
            n_steps,
            readout: Readout::Exact,
            noise_p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub record: PhaseRecord,
    pub x_counts: Option<ShotResult>,
    pub y_counts: Option<ShotResult>,
}

/// Runs the σx and σy protocol circuits from |0⟩_P|0⟩_S and combines them.
///
/// In shot mode the σx circuit uses `seed` and the σy circuit `seed + 1`.
pub fn measure_phase(cfg: &ProtocolConfig) -> Result<ProtocolOutcome> {
    if cfg.n_steps == 0 {
        return Err(Error::InvalidParameter("at least one step is required".into()));
    }
    let steps = circuit::uniform_steps(cfg.phi_total, cfg.n_steps);
    let initial = StateVector::zero(2);

    let mut readouts = Vec::with_capacity(2);
    for (basis, seed_offset) in [(MeasureBasis::X, 0u64), (MeasureBasis::Y, 1)] {
        let circuit = circuit::build_protocol(&steps, basis)?;
        let state = run(&circuit, &initial)?;
        let mut rho = reduce_probe(&state, PROBE)?;
        if let Some(p) = cfg.noise_p {
            rho = rho.depolarize(p)?;
        }
        readouts.push(match cfg.readout {
            Readout::Exact => (pauli_expectation(&rho, Pauli::Z), None),
            Readout::Shots { shots, seed } => {
                let seed = seed.wrapping_add(seed_offset);
                let counts = if cfg.noise_p.is_some() {
                    sample_density(&rho, shots, seed)?
                } else {
                    sample_counts(&state, &[PROBE], shots, seed)?
                };
                (estimate_expectation(&counts)?, Some(counts))
            }
        });
    }
    let (y, y_counts) = readouts.pop().expect("two readouts");
    let (x, x_counts) = readouts.pop().expect("two readouts");

    // independent estimates can leave the unit disk; the σx estimate is kept
    // and σy is clamped to the chord at that σx
    let sigma_x = x;
    let chord = (1.0 - x * x).max(0.0).sqrt();
    let sigma_y = y.clamp(-chord, chord);
    let (phase_arg, phase_unwrapped) = match extract_phase(sigma_x, sigma_y) {
        Ok(p) => p,
        Err(Error::UndefinedPhase) => (f64::NAN, sigma_x.clamp(-1.0, 1.0).acos()),
        Err(e) => return Err(e),
    };
    let overlap = model::evolution(cfg.phi_total).get(0, 0);
    Ok(ProtocolOutcome {
        record: PhaseRecord {
            phi: cfg.phi_total,
            overlap_re: overlap.re,
            overlap_im: overlap.im,
            sigma_x,
            sigma_y,
            phase_arg,
            phase_unwrapped,
            shots: match cfg.readout {
                Readout::Exact => ShotCount::Exact,
                Readout::Shots { shots, .. } => ShotCount::Shots(shots),
            },
        },
        x_counts,
        y_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_protocol, build_protocol_core, SYSTEM};
    use crate::numkit::matmul;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_6, TAU};

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
        let v = ComplexVector::new(
            (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        StateVector::normalized(n, v).unwrap()
    }

    fn amps(v: &[C64]) -> StateVector {
        StateVector::new(2, ComplexVector::new(v.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(&StateVector::zero(1), &Gate::h(0)).unwrap();
        assert_eq!(s.amplitudes().as_slice(), &[re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]);
    }

    #[test]
    fn controlled_minus_identity_flips_the_probe_one_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = random_state(&mut rng, 2);
        let g = Gate::controlled(PROBE, SYSTEM, model::evolution(TAU), "M").unwrap();
        let out = apply_gate(&s, &g).unwrap();
        let (a, b) = (s.amplitudes().as_slice(), out.amplitudes().as_slice());
        assert_eq!(a[0], b[0]);
        assert_eq!(a[1], b[1]);
        assert!((a[2] + b[2]).norm() < 1e-15);
        assert!((a[3] + b[3]).norm() < 1e-15);
    }

    #[test]
    fn single_step_state_before_basis_change() {
        let core = build_protocol_core(&[TAU]).unwrap();
        let s = run(&core, &StateVector::zero(2)).unwrap();
        let expected = [re(FRAC_1_SQRT_2), re(0.0), re(-FRAC_1_SQRT_2), re(0.0)];
        for (x, y) in s.amplitudes().as_slice().iter().zip(expected) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_and_measure_rejected() {
        let s = StateVector::zero(1);
        assert!(matches!(apply_gate(&s, &Gate::h(1)), Err(Error::QubitOutOfRange { .. })));
        assert!(apply_gate(&s, &Gate::measure(0, 0)).is_err());
        let c = Circuit::new(2, 0);
        assert!(matches!(run(&c, &s), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn empty_circuit_leaves_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let s = random_state(&mut rng, 2);
        assert_eq!(run(&Circuit::new(2, 0), &s).unwrap(), s);
    }

    #[test]
    fn protocol_readouts() {
        let core = build_protocol_core(&[TAU]).unwrap();
        let rho = reduce_probe(&run(&core, &StateVector::zero(2)).unwrap(), PROBE).unwrap();
        assert!((pauli_expectation(&rho, Pauli::X) + 1.0).abs() < 1e-15);

        let core = build_protocol_core(&[FRAC_PI_3]).unwrap();
        let rho = reduce_probe(&run(&core, &StateVector::zero(2)).unwrap(), PROBE).unwrap();
        assert!((pauli_expectation(&rho, Pauli::X) - 3f64.sqrt() / 2.0).abs() < 1e-15);

        // the full X-basis circuit moves σx onto σz
        let full = build_protocol(&[FRAC_PI_3], MeasureBasis::X).unwrap();
        let rho = reduce_probe(&run(&full, &StateVector::zero(2)).unwrap(), PROBE).unwrap();
        assert!((pauli_expectation(&rho, Pauli::Z) - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn reduce_examples() {
        let h = FRAC_1_SQRT_2;
        let bell = amps(&[re(h), re(0.0), re(0.0), re(h)]);
        let rho = reduce_probe(&bell, PROBE).unwrap();
        assert!(rho.entries().distance(&ComplexMatrix::identity(2).scale(re(0.5))) < 1e-15);

        let flipped = amps(&[re(h), re(0.0), re(-h), re(0.0)]);
        let rho = reduce_probe(&flipped, PROBE).unwrap();
        let expected = DensityMatrix::from_bloch(-1.0, 0.0, 0.0).unwrap();
        assert!(rho.entries().distance(expected.entries()) < 1e-15);

        let plus = StateVector::product(&ComplexVector::from_real(&[h, h]), &ComplexVector::basis(2, 0)).unwrap();
        let rho = reduce_probe(&plus, PROBE).unwrap();
        assert!(rho.entries().distance(DensityMatrix::from_bloch(1.0, 0.0, 0.0).unwrap().entries()) < 1e-15);

        assert!(reduce_probe(&StateVector::zero(3), 0).is_err());
    }

    #[test]
    fn reduce_system_qubit() {
        let plus = StateVector::product(&ComplexVector::basis(2, 1), &ComplexVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])).unwrap();
        let rho = reduce_probe(&plus, SYSTEM).unwrap();
        assert!((pauli_expectation(&rho, Pauli::X) - 1.0).abs() < 1e-15);
        let rho = reduce_probe(&plus, PROBE).unwrap();
        assert!((pauli_expectation(&rho, Pauli::Z) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_examples() {
        let minus = DensityMatrix::from_bloch(-1.0, 0.0, 0.0).unwrap();
        assert_eq!(pauli_expectation(&minus, Pauli::X), -1.0);
        let mixed = DensityMatrix::from_bloch(0.0, 0.0, 0.0).unwrap();
        for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
            assert_eq!(pauli_expectation(&mixed, axis), 0.0);
        }
        let plus = DensityMatrix::from_bloch(1.0, 0.0, 0.0).unwrap();
        assert_eq!(pauli_expectation(&plus, Pauli::X), 1.0);
        let y = DensityMatrix::from_bloch(0.0, 0.6, 0.8).unwrap();
        assert!((pauli_expectation(&y, Pauli::Y) - 0.6).abs() < 1e-15);
        assert!((pauli_expectation(&y, Pauli::Z) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_bloch(1.0, 1.0, 0.0).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        let rho = DensityMatrix::from_bloch(0.0, 0.0, 1.0).unwrap();
        let noisy = rho.depolarize(0.2).unwrap();
        assert!((pauli_expectation(&noisy, Pauli::Z) - 0.8).abs() < 1e-15);
        assert!(rho.depolarize(1.5).is_err());
    }

    #[test]
    fn phase_examples() {
        assert_eq!(extract_phase(-1.0, 0.0).unwrap(), (PI, PI));
        assert_eq!(extract_phase(-1.0, -0.0).unwrap(), (PI, PI));
        assert_eq!(extract_phase(1.0, 0.0).unwrap(), (0.0, 0.0));
        let (arg, unwrapped) = extract_phase((PI / 12.0).cos(), 0.0).unwrap();
        assert_eq!(arg, 0.0);
        assert!((unwrapped - PI / 12.0).abs() < 1e-15);
        assert_eq!(extract_phase(0.0, 0.0), Err(Error::UndefinedPhase));
        assert!(extract_phase(1.0, 0.5).is_err());
    }

    #[test]
    fn normalize_angle_prefers_plus_pi() {
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((normalize_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn deterministic_outcome_sampling() {
        let one = StateVector::new(1, ComplexVector::basis(2, 1)).unwrap();
        let r = sample_counts(&one, &[0], 1000, 5).unwrap();
        assert_eq!(r.counts, BTreeMap::from([("1".to_string(), 1000)]));
        assert_eq!(estimate_expectation(&r).unwrap(), -1.0);

        let circuit = build_protocol(&[TAU], MeasureBasis::X).unwrap();
        for seed in 0..20 {
            let (_, r) = run_sampled(&circuit, &StateVector::zero(2), 8192, seed).unwrap();
            assert_eq!(r.count("1"), 8192);
        }
    }

    #[test]
    fn plus_state_sampling_concentrates() {
        let plus = apply_gate(&StateVector::zero(1), &Gate::h(0)).unwrap();
        for seed in 0..50 {
            let r = sample_counts(&plus, &[0], 4000, seed).unwrap();
            assert_eq!(r.counts.values().sum::<u64>(), 4000);
            let p0 = r.count("0") as f64 / 4000.0;
            assert!((p0 - 0.5).abs() <= 5.0 * (0.25f64 / 4000.0).sqrt());
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = random_state(&mut rng, 2);
        let a = sample_counts(&s, &[0, 1], 5000, 42).unwrap();
        let b = sample_counts(&s, &[0, 1], 5000, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_counts(&s, &[0, 1], 5000, 43).unwrap());
        assert!(a.counts.keys().all(|k| k.len() == 2));
        assert!(sample_counts(&s, &[0], 0, 1).is_err());
    }

    #[test]
    fn expectation_estimates() {
        let r = |pairs: &[(&str, u64)]| ShotResult {
            counts: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            shots: pairs.iter().map(|p| p.1).sum(),
            seed: 0,
        };
        assert_eq!(estimate_expectation(&r(&[("0", 1000)])).unwrap(), 1.0);
        assert_eq!(estimate_expectation(&r(&[("1", 8192)])).unwrap(), -1.0);
        assert_eq!(estimate_expectation(&r(&[("0", 500), ("1", 500)])).unwrap(), 0.0);
        assert!(estimate_expectation(&r(&[("01", 5)])).is_err());
    }

    #[test]
    fn exact_phase_law_on_the_pi_over_six_grid() {
        for k in 0..=12 {
            let phi = k as f64 * FRAC_PI_6;
            if k == 0 {
                // zero angle is outside the step domain; overlap is 1
                assert_eq!(extract_phase(1.0, 0.0).unwrap().1, 0.0);
                continue;
            }
            let rec = measure_phase(&ProtocolConfig::exact(phi, 1)).unwrap().record;
            assert!((rec.phase_unwrapped - phi / 2.0).abs() <= 1e-12, "k={k}");
            if k < 6 {
                assert!(rec.phase_arg.abs() <= 1e-12);
            }
            if k == 12 {
                assert!((rec.phase_arg - PI).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn stepped_and_single_step_agree() {
        for n in [1, 2, 3, 12] {
            let rec = measure_phase(&ProtocolConfig::exact(TAU, n)).unwrap().record;
            assert!((rec.sigma_x + 1.0).abs() < 1e-12);
            assert!((rec.phase_arg - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn shot_mode_record() {
        let cfg = ProtocolConfig {
            phi_total: TAU,
            n_steps: 1,
            readout: Readout::Shots { shots: 8192, seed: 7 },
            noise_p: None,
        };
        let out = measure_phase(&cfg).unwrap();
        assert_eq!(out.x_counts.as_ref().unwrap().count("1"), 8192);
        assert_eq!(out.record.shots, ShotCount::Shots(8192));
        assert!(out.record.sigma_x.hypot(out.record.sigma_y) <= 1.0 + 1e-9);
        assert_eq!(out.record.sigma_x, -1.0);
        assert_eq!(out.record.phase_arg, PI);
    }

    #[test]
    fn shot_estimates_stay_in_the_disk() {
        for seed in 0..50 {
            for phi in [FRAC_PI_6, PI, 5.0 * FRAC_PI_3, TAU] {
                let cfg = ProtocolConfig {
                    phi_total: phi,
                    n_steps: 1,
                    readout: Readout::Shots { shots: 64, seed },
                    noise_p: None,
                };
                let out = measure_phase(&cfg).unwrap();
                let r = &out.record;
                assert!(r.sigma_x.hypot(r.sigma_y) <= 1.0 + 1e-9);
                assert_eq!(r.sigma_x, estimate_expectation(out.x_counts.as_ref().unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn noise_shrinks_the_bloch_vector() {
        let mut cfg = ProtocolConfig::exact(FRAC_PI_3, 1);
        cfg.noise_p = Some(0.5);
        let rec = measure_phase(&cfg).unwrap().record;
        assert!((rec.sigma_x - 0.5 * (FRAC_PI_6).cos()).abs() < 1e-12);
        cfg.readout = Readout::Shots { shots: 8192, seed: 3 };
        let rec = measure_phase(&cfg).unwrap().record;
        assert!((rec.sigma_x - 0.5 * (FRAC_PI_6).cos()).abs() < 5.0 / 8192f64.sqrt());
    }

    #[test]
    fn unitary_of_known_circuit() {
        let mut c = Circuit::new(2, 0);
        c.push(Gate::h(0)).unwrap();
        c.push(Gate::cx(0, 1)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let h = Gate::h(0).matrix().unwrap().kron(&ComplexMatrix::identity(2));
        let cx = ComplexMatrix::from_real(
            4,
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.],
        )
        .unwrap();
        assert!(u.distance(&matmul(&cx, &h).unwrap()) < 1e-15);
        assert!((unitary_fidelity(&u, &u.scale(C64::from_polar(1.0, 0.7))) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gates_preserve_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..200 {
            let mut s = random_state(&mut rng, 2);
            let gates = [
                Gate::h(rng.gen_range(0..2)),
                Gate::s_dag(rng.gen_range(0..2)),
                Gate::u3(rng.gen_range(0..2), rng.gen(), rng.gen(), rng.gen()),
                Gate::controlled(0, 1, model::evolution(rng.gen_range(-10.0..10.0)), "M").unwrap(),
                Gate::cx(1, 0),
            ];
            for g in &gates {
                s = apply_gate(&s, g).unwrap();
                assert!((s.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn random_reductions_are_valid_density_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..200 {
            let s = random_state(&mut rng, 2);
            for q in [PROBE, SYSTEM] {
                let rho = reduce_probe(&s, q).unwrap();
                DensityMatrix::new(rho.entries().clone()).unwrap();
            }
        }
    }
}
