//! The real two-state model near a conical intersection and its
//! first-order vibronic generalization.
//!
//! Angles are never reduced modulo 2π here. The eigenbranches are the literal
//! half-angle formulas, so `eigenbranches(phi + 2π)` is the negative of
//! `eigenbranches(phi)`; that sign is the effect the rest of the crate measures.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numkit::{self, re, ComplexMatrix, ComplexVector, C64, HERMITIAN_TOL};

/// Parameters of the two-state model.
///
/// `energy_scale` and `phi` parameterize the Hamiltonian; `alpha`, `beta` and
/// `off_diagonal` are the linear coefficients of the cone around the
/// intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub energy_scale: f64,
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub off_diagonal: f64,
}

impl ModelParams {
    pub fn new(energy_scale: f64, phi: f64) -> Result<Self> {
        Self::with_cone(energy_scale, phi, 1.0, 1.0, 1.0)
    }

    pub fn with_cone(energy_scale: f64, phi: f64, alpha: f64, beta: f64, off_diagonal: f64) -> Result<Self> {
        if !(energy_scale.is_finite() && energy_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy scale must be finite and non-negative, got {energy_scale}"
            )));
        }
        for (name, x) in [("phi", phi), ("alpha", alpha), ("beta", beta), ("b", off_diagonal)] {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")));
            }
        }
        Ok(Self {
            energy_scale,
            phi,
            alpha,
            beta,
            off_diagonal,
        })
    }
}

/// K·[[cos φ, sin φ], [sin φ, −cos φ]]
pub fn traceless_hamiltonian(p: &ModelParams) -> ComplexMatrix {
    let (s, c) = p.phi.sin_cos();
    let k = p.energy_scale;
    ComplexMatrix::from_real(2, 2, &[k * c, k * s, k * s, -k * c]).expect("2×2")
}

/// K·I + K·[[cos φ, sin φ], [sin φ, −cos φ]]
pub fn hamiltonian(p: &ModelParams) -> ComplexMatrix {
    let k = p.energy_scale;
    ComplexMatrix::identity(2)
        .scale(re(k))
        .add(&traceless_hamiltonian(p))
        .expect("2×2")
}

/// The two real eigenbranches, `[cos(φ/2), sin(φ/2)]` and
/// `[−sin(φ/2), cos(φ/2)]`, with no re-phasing.
pub fn eigenbranches(phi: f64) -> (ComplexVector, ComplexVector) {
    let (s, c) = (0.5 * phi).sin_cos();
    (
        ComplexVector::from_real(&[c, s]),
        ComplexVector::from_real(&[-s, c]),
    )
}

/// Upper and lower sheet of the double cone, `±√((αx + βy)² + (b·y)²)`.
pub fn cone_energies(p: &ModelParams, x: f64, y: f64) -> (f64, f64) {
    let diagonal = p.alpha * x + p.beta * y;
    let coupling = p.off_diagonal * y;
    let e = diagonal.hypot(coupling);
    (e, -e)
}

/// M(φ) = [[cos(φ/2), −sin(φ/2)], [sin(φ/2), cos(φ/2)]]
pub fn evolution(phi: f64) -> ComplexMatrix {
    let (s, c) = (0.5 * phi).sin_cos();
    ComplexMatrix::from_real(2, 2, &[c, -s, s, c]).expect("2×2")
}

/// Operator carrying the initial state to the angle `phi + delta_phi`.
pub fn evolution_step(phi: f64, delta_phi: f64) -> ComplexMatrix {
    evolution(phi + delta_phi)
}

/// Σₖ |outputₖ⟩⟨inputₖ|, with the inputs required to be orthonormal.
pub fn outer_product_operator(inputs: &[ComplexVector], outputs: &[ComplexVector]) -> Result<ComplexMatrix> {
    if inputs.len() != outputs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs but {} outputs",
            inputs.len(),
            outputs.len()
        )));
    }
    let Some(first_in) = inputs.first() else {
        return Err(Error::InvalidParameter("empty input/output lists".into()));
    };
    let in_dim = first_in.dim();
    let out_dim = outputs[0].dim();
    if inputs.iter().any(|v| v.dim() != in_dim) || outputs.iter().any(|v| v.dim() != out_dim) {
        return Err(Error::DimensionMismatch("vectors of unequal dimension".into()));
    }

    let mut worst: f64 = 0.0;
    for (i, u) in inputs.iter().enumerate() {
        for (j, v) in inputs.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((u.inner(v)? - re(expected)).norm());
        }
    }
    if worst > 1e-10 {
        return Err(Error::NotOrthonormal(worst));
    }

    let mut m = ComplexMatrix::zeros(out_dim, in_dim);
    for (u, v) in inputs.iter().zip(outputs) {
        m = m.add(&v.outer(u))?;
    }
    Ok(m)
}

/// Degenerate electronic manifold of order `m` coupled linearly to a set of
/// normal modes. `couplings[k]` holds ⟨Φᵢ|V̂ₖ|Φⱼ⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct VibronicSystem {
    m: usize,
    couplings: Vec<ComplexMatrix>,
    mode_labels: Vec<String>,
}

impl VibronicSystem {
    pub fn new(m: usize, couplings: Vec<ComplexMatrix>, mode_labels: Vec<String>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("degeneracy order must be at least 1".into()));
        }
        if couplings.len() != mode_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coupling matrices but {} mode labels",
                couplings.len(),
                mode_labels.len()
            )));
        }
        for (v, label) in couplings.iter().zip(&mode_labels) {
            if v.rows() != m || v.cols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "coupling for mode {label} is {}×{}, expected {m}×{m}",
                    v.rows(),
                    v.cols()
                )));
            }
            if !v.is_hermitian(HERMITIAN_TOL) {
                return Err(Error::NotHermitian(v.hermiticity_defect()));
            }
        }
        Ok(Self {
            m,
            couplings,
            mode_labels,
        })
    }

    /// Linear E⊗e system: couplings σz and σx, so that
    /// q = (K cos φ, K sin φ) gives the traceless model Hamiltonian.
    pub fn e_cross_e() -> Self {
        let sigma_z = ComplexMatrix::diagonal(&[1.0, -1.0]);
        let sigma_x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("2×2");
        Self::new(2, vec![sigma_z, sigma_x], vec!["Qx".into(), "Qy".into()]).expect("valid")
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn couplings(&self) -> &[ComplexMatrix] {
        &self.couplings
    }

    pub fn mode_labels(&self) -> &[String] {
        &self.mode_labels
    }

    /// First-order secular matrix Σₖ qₖ·Vₖ.
    pub fn secular(&self, q: &[f64]) -> Result<ComplexMatrix> {
        if q.len() != self.couplings.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} normal coordinates for {} modes",
                q.len(),
                self.couplings.len()
            )));
        }
        if let Some(i) = q.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut v = ComplexMatrix::zeros(self.m, self.m);
        for (qk, coupling) in q.iter().zip(&self.couplings) {
            v = v.add(&coupling.scale(re(*qk)))?;
        }
        Ok(v)
    }

    /// The m first-order levels, ascending.
    pub fn split_levels(&self, q: &[f64]) -> Result<Vec<f64>> {
        let v = self.secular(q)?;
        Ok(numkit::eig_hermitian(&v)?.eigenvalues)
    }
}

pub fn vibronic_secular(sys: &VibronicSystem, q: &[f64]) -> Result<ComplexMatrix> {
    sys.secular(q)
}

pub fn split_levels(sys: &VibronicSystem, q: &[f64]) -> Result<Vec<f64>> {
    sys.split_levels(q)
}

/// Reads the plain-text vibronic model format:
///
/// ```text
/// # comment
/// m 2
/// Qx
/// 1,0   0,0
/// 0,0  -1,0
/// Qy
/// 0,0   1,0
/// 1,0   0,0
/// ```
///
/// Blank lines and everything after `#` are ignored. The first content line is
/// `m <order>`. Each mode is a label line followed by `m` rows of `m`
/// whitespace-separated `re,im` entries.
impl FromStr for VibronicSystem {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty model file".into(),
        })?;
        let m = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["m", n] => n.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("invalid degeneracy order '{n}'"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 'm <order>', found '{header}'"),
                })
            }
        };

        let mut couplings = Vec::new();
        let mut labels = Vec::new();
        while let Some((label_line, label)) = lines.next() {
            if label.contains(',') {
                return Err(Error::Parse {
                    line: label_line,
                    message: format!("expected a mode label, found matrix row '{label}'"),
                });
            }
            let mut entries = Vec::with_capacity(m * m);
            for row in 0..m {
                let (row_line, text) = lines.next().ok_or_else(|| Error::Parse {
                    line: label_line,
                    message: format!("mode '{label}' ends after {row} of {m} rows"),
                })?;
                let tokens: Vec<&str> = text.split_whitespace().collect();
                if tokens.len() != m {
                    return Err(Error::Parse {
                        line: row_line,
                        message: format!("expected {m} entries, found {}", tokens.len()),
                    });
                }
                for token in tokens {
                    entries.push(parse_entry(token).ok_or_else(|| Error::Parse {
                        line: row_line,
                        message: format!("malformed complex entry '{token}' (expected re,im)"),
                    })?);
                }
            }
            let matrix = ComplexMatrix::new(m, m, entries).map_err(|e| Error::Parse {
                line: label_line,
                message: e.to_string(),
            })?;
            if !matrix.is_hermitian(HERMITIAN_TOL) {
                return Err(Error::Parse {
                    line: label_line,
                    message: format!(
                        "coupling for mode '{label}' is not Hermitian (defect {:e})",
                        matrix.hermiticity_defect()
                    ),
                });
            }
            couplings.push(matrix);
            labels.push(label.to_string());
        }
        Self::new(m, couplings, labels)
    }
}

fn parse_entry(token: &str) -> Option<C64> {
    let (a, b) = token.split_once(',')?;
    let z = C64::new(a.trim().parse().ok()?, b.trim().parse().ok()?);
    z.is_finite().then_some(z)
}
