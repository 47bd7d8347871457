//! Gate-level circuits for the probe-qubit protocol, a transpiler to the
//! `{u3, cx}` basis and OpenQASM 2.0 emission.
//!
//! Qubit 0 is the probe and qubit 1 the system. Basis-state indices put qubit 0
//! in the most significant position, so |p s⟩ has index `2·p + s`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model;
use crate::numkit::{c, matmul, re, ComplexMatrix, C64};

pub const PROBE: usize = 0;
pub const SYSTEM: usize = 1;

const UNITARY_TOL: f64 = 1e-10;
const MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    SDag,
    U3 { theta: f64, phi: f64, lambda: f64 },
    /// Single-qubit unitary on the target, conditioned on the control.
    ControlledU { unitary: ComplexMatrix, label: String },
    Measure { clbit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// Control first for `ControlledU`.
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, targets: vec![q] }
    }

    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::X, targets: vec![q] }
    }

    pub fn s_dag(q: usize) -> Self {
        Self { kind: GateKind::SDag, targets: vec![q] }
    }

    pub fn u3(q: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Self {
            kind: GateKind::U3 { theta, phi, lambda },
            targets: vec![q],
        }
    }

    /// Ry(θ) written as U3(θ, 0, 0).
    pub fn ry(q: usize, theta: f64) -> Self {
        Self::u3(q, theta, 0.0, 0.0)
    }

    /// Diagonal phase diag(1, e^{iλ}) written as U3(0, 0, λ).
    pub fn phase(q: usize, lambda: f64) -> Self {
        Self::u3(q, 0.0, 0.0, lambda)
    }

    pub fn controlled(control: usize, target: usize, unitary: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        if unitary.rows() != 2 || unitary.cols() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "controlled payload must be 2×2, got {}×{}",
                unitary.rows(),
                unitary.cols()
            )));
        }
        let defect = unitary.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self {
            kind: GateKind::ControlledU {
                unitary,
                label: label.into(),
            },
            targets: vec![control, target],
        })
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::controlled(control, target, pauli_x(), "cx").expect("X is unitary")
    }

    pub fn measure(q: usize, clbit: usize) -> Self {
        Self {
            kind: GateKind::Measure { clbit },
            targets: vec![q],
        }
    }

    pub fn is_measure(&self) -> bool {
        matches!(self.kind, GateKind::Measure { .. })
    }

    pub fn is_cx(&self) -> bool {
        matches!(&self.kind, GateKind::ControlledU { unitary, label } if label == "cx" && unitary.distance(&pauli_x()) <= MATCH_TOL)
    }

    /// The single-qubit matrix this gate applies to its (last) target: the
    /// payload for controlled gates, `None` for measurements.
    pub fn matrix(&self) -> Option<ComplexMatrix> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match &self.kind {
            GateKind::H => Some(ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).expect("2×2")),
            GateKind::X => Some(pauli_x()),
            GateKind::SDag => Some(
                ComplexMatrix::new(2, 2, vec![re(1.0), C64::default(), C64::default(), c(0.0, -1.0)])
                    .expect("2×2"),
            ),
            GateKind::U3 { theta, phi, lambda } => Some(u3_matrix(*theta, *phi, *lambda)),
            GateKind::ControlledU { unitary, .. } => Some(unitary.clone()),
            GateKind::Measure { .. } => None,
        }
    }
}

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("2×2")
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> ComplexMatrix {
    let (s, co) = (0.5 * theta).sin_cos();
    ComplexMatrix::new(
        2,
        2,
        vec![
            re(co),
            -C64::from_polar(s, lambda),
            C64::from_polar(s, phi),
            C64::from_polar(co, phi + lambda),
        ],
    )
    .expect("2×2")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureBasis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_clbits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Self {
        Self {
            n_qubits,
            n_clbits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clbits(&self) -> usize {
        self.n_clbits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Appends `gate` after checking targets, classical indices and that no
    /// target has already been measured.
    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        let arity = match gate.kind {
            GateKind::ControlledU { .. } => 2,
            _ => 1,
        };
        if gate.targets.len() != arity {
            return Err(Error::InvalidCircuit(format!(
                "gate {:?} expects {arity} target(s), got {}",
                gate.kind,
                gate.targets.len()
            )));
        }
        for &q in &gate.targets {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        if arity == 2 && gate.targets[0] == gate.targets[1] {
            return Err(Error::InvalidCircuit("control and target coincide".into()));
        }
        if let GateKind::Measure { clbit } = gate.kind {
            if clbit >= self.n_clbits {
                return Err(Error::InvalidCircuit(format!(
                    "classical bit {clbit} out of range for {} bits",
                    self.n_clbits
                )));
            }
        }
        let measured = self
            .gates
            .iter()
            .filter(|g| g.is_measure())
            .any(|g| gate.targets.contains(&g.targets[0]));
        if measured {
            return Err(Error::InvalidCircuit(format!(
                "gate on qubit(s) {:?} follows a measurement",
                gate.targets
            )));
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Number of non-measurement gates.
    pub fn unitary_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_measure()).count()
    }

    /// (qubit, clbit) pairs of the measurements, in circuit order.
    pub fn measurements(&self) -> Vec<(usize, usize)> {
        self.gates
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::Measure { clbit } => Some((g.targets[0], clbit)),
                _ => None,
            })
            .collect()
    }
}

/// Cumulative angles `phi_total·k/n_steps` for `k = 1..=n_steps`.
pub fn uniform_steps(phi_total: f64, n_steps: usize) -> Vec<f64> {
    (1..=n_steps)
        .map(|k| if k == n_steps { phi_total } else { phi_total * k as f64 / n_steps as f64 })
        .collect()
}

fn validate_steps(steps: &[f64]) -> Result<()> {
    if steps.is_empty() {
        return Err(Error::InvalidParameter("step list is empty".into()));
    }
    let mut prev = 0.0;
    for &s in steps {
        if !s.is_finite() || s <= prev {
            return Err(Error::InvalidParameter(format!(
                "step angles must be strictly increasing from 0, got {s} after {prev}"
            )));
        }
        if s > TAU * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::InvalidParameter(format!("step angle {s} exceeds 2π")));
        }
        prev = s;
    }
    Ok(())
}

/// The interferometric core: H on the probe, then one controlled increment
/// M(φₖ − φₖ₋₁) per step, starting from φ₀ = 0. No basis change, no
/// measurement.
pub fn build_protocol_core(steps: &[f64]) -> Result<Circuit> {
    validate_steps(steps)?;
    let mut circuit = Circuit::new(2, 1);
    circuit.push(Gate::h(PROBE))?;
    let mut prev = 0.0;
    for &next in steps {
        let increment = model::evolution(next - prev);
        let label = format!("M({next}-{prev})");
        circuit.push(Gate::controlled(PROBE, SYSTEM, increment, label)?)?;
        prev = next;
    }
    Ok(circuit)
}

/// Full protocol circuit: the core, a basis change on the probe (H for σx,
/// S†·H for σy) and a measurement of the probe into classical bit 0.
pub fn build_protocol(steps: &[f64], basis: MeasureBasis) -> Result<Circuit> {
    let mut circuit = build_protocol_core(steps)?;
    if basis == MeasureBasis::Y {
        circuit.push(Gate::s_dag(PROBE))?;
    }
    circuit.push(Gate::h(PROBE))?;
    circuit.push(Gate::measure(PROBE, 0))?;
    Ok(circuit)
}

/// Single-qubit matrix as e^{iα}·U3(θ, φ, λ); returns (α, θ, φ, λ).
pub fn u3_angles(u: &ComplexMatrix) -> (f64, f64, f64, f64) {
    let (a, b, cc, d) = (u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1));
    let theta = 2.0 * cc.norm().atan2(a.norm());
    let alpha = if a.norm() > MATCH_TOL { a.arg() } else { cc.arg() };
    let unphase = C64::from_polar(1.0, -alpha);
    let (b, cc, d) = (b * unphase, cc * unphase, d * unphase);
    let (phi, lambda) = if cc.norm() > MATCH_TOL && b.norm() > MATCH_TOL {
        (cc.arg(), (-b).arg())
    } else if cc.norm() > MATCH_TOL {
        (cc.arg(), d.arg() - cc.arg())
    } else {
        (0.0, d.arg())
    };
    (alpha, theta, phi, lambda)
}

fn is_scalar_multiple_of_identity(u: &ComplexMatrix) -> Option<C64> {
    let z = u.get(0, 0);
    (u.get(0, 1).norm() <= MATCH_TOL && u.get(1, 0).norm() <= MATCH_TOL && (u.get(1, 1) - z).norm() <= MATCH_TOL)
        .then_some(z)
}

/// Angle δ with `u == Ry(δ)`, if `u` is a real rotation.
fn real_rotation_angle(u: &ComplexMatrix) -> Option<f64> {
    let real = u.as_slice().iter().all(|z| z.im.abs() <= MATCH_TOL);
    let (a, b, cc, d) = (u.get(0, 0).re, u.get(0, 1).re, u.get(1, 0).re, u.get(1, 1).re);
    (real && (a - d).abs() <= MATCH_TOL && (b + cc).abs() <= MATCH_TOL).then(|| 2.0 * cc.atan2(a))
}

fn decompose_controlled(control: usize, target: usize, u: &ComplexMatrix, out: &mut Vec<Gate>) {
    if let Some(z) = is_scalar_multiple_of_identity(u) {
        // controlled global phase is a phase gate on the control; −I gives Z
        let angle = z.arg();
        if angle.abs() > MATCH_TOL {
            out.push(Gate::phase(control, angle));
        }
        return;
    }
    if u.distance(&pauli_x()) <= MATCH_TOL {
        out.push(Gate::cx(control, target));
        return;
    }
    if let Some(delta) = real_rotation_angle(u) {
        out.push(Gate::ry(target, 0.5 * delta));
        out.push(Gate::cx(control, target));
        out.push(Gate::ry(target, -0.5 * delta));
        out.push(Gate::cx(control, target));
        return;
    }
    // general case: controlled e^{iα}·U3(θ, φ, λ)
    let (alpha, theta, phi, lambda) = u3_angles(u);
    out.push(Gate::phase(control, 0.5 * (lambda + phi) + alpha));
    out.push(Gate::phase(target, 0.5 * (lambda - phi)));
    out.push(Gate::cx(control, target));
    out.push(Gate::u3(target, -0.5 * theta, 0.0, -0.5 * (phi + lambda)));
    out.push(Gate::cx(control, target));
    out.push(Gate::u3(target, 0.5 * theta, phi, 0.0));
}

/// Rewrites a circuit into U3, CX and measurements. Every rewrite is exact as
/// a matrix identity, so the transpiled unitary carries no global phase.
pub fn transpile(circuit: &Circuit) -> Result<Circuit> {
    let mut gates = Vec::new();
    for gate in circuit.gates() {
        let q = gate.targets[0];
        match &gate.kind {
            GateKind::H => gates.push(Gate::u3(q, FRAC_PI_2, 0.0, PI)),
            GateKind::X => gates.push(Gate::u3(q, PI, 0.0, PI)),
            GateKind::SDag => gates.push(Gate::phase(q, -FRAC_PI_2)),
            GateKind::U3 { .. } | GateKind::Measure { .. } => gates.push(gate.clone()),
            GateKind::ControlledU { unitary, .. } => {
                decompose_controlled(gate.targets[0], gate.targets[1], unitary, &mut gates)
            }
        }
    }
    let mut out = Circuit::new(circuit.n_qubits, circuit.n_clbits);
    for g in gates {
        out.push(g)?;
    }
    Ok(out)
}

fn fmt_angle(x: f64) -> String {
    // shortest representation that round-trips; at most 17 significant digits
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Emits OpenQASM 2.0 for a transpiled circuit.
pub fn to_qasm(circuit: &Circuit) -> Result<String> {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits);
    let _ = writeln!(out, "creg c[{}];", circuit.n_clbits);
    for gate in circuit.gates() {
        match &gate.kind {
            GateKind::U3 { theta, phi, lambda } => {
                let _ = writeln!(
                    out,
                    "u3({},{},{}) q[{}];",
                    fmt_angle(*theta),
                    fmt_angle(*phi),
                    fmt_angle(*lambda),
                    gate.targets[0]
                );
            }
            GateKind::ControlledU { .. } if gate.is_cx() => {
                let _ = writeln!(out, "cx q[{}],q[{}];", gate.targets[0], gate.targets[1]);
            }
            GateKind::Measure { clbit } => {
                let _ = writeln!(out, "measure q[{}] -> c[{clbit}];", gate.targets[0]);
            }
            other => {
                return Err(Error::UnsupportedGate(format!(
                    "{other:?} is not in the transpiled basis"
                )))
            }
        }
    }
    Ok(out)
}

/// Product of a sequence of 2×2 matrices, applied left to right in time.
pub fn compose(ops: &[ComplexMatrix]) -> ComplexMatrix {
    ops.iter()
        .fold(ComplexMatrix::identity(2), |acc, m| matmul(m, &acc).expect("2×2"))
}
