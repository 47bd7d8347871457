//! Geometric-phase oracles that do not go through the circuit simulator.
//!
//! A [`Branch`] is a black-box map φ ↦ |χ(φ)⟩. The connection
//! A(φ) = (1/i)⟨χ|∂φχ⟩ is taken by central differences, and the closed-loop
//! phase is the discrete Pancharatnam product
//! Φ = −arg Πₖ ⟨χ(φₖ)|χ(φₖ₊₁)⟩, closed at the same point φ₀ = 0. For a
//! single-valued smooth branch Φ → −∮A dφ (mod 2π) as the loop is refined.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::engine::normalize_angle;
use crate::error::{Error, Result};
use crate::model;
use crate::numkit::{ComplexVector, C64};

type Evaluator = Arc<dyn Fn(f64) -> ComplexVector + Send + Sync>;
type GaugeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const NORM_TOL: f64 = 1e-10;
const MIN_OVERLAP: f64 = 1e-9;

#[derive(Clone)]
pub struct Branch {
    evaluator: Evaluator,
    label: String,
    gauge: Option<GaugeFn>,
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("label", &self.label)
            .field("gauged", &self.gauge.is_some())
            .finish()
    }
}

impl Branch {
    pub fn new(label: impl Into<String>, evaluator: impl Fn(f64) -> ComplexVector + Send + Sync + 'static) -> Self {
        Self {
            evaluator: Arc::new(evaluator),
            label: label.into(),
            gauge: None,
        }
    }

    /// First (upper) eigenbranch of the two-state model, `[cos(φ/2), sin(φ/2)]`.
    pub fn model_upper() -> Self {
        Self::new("upper", |phi| model::eigenbranches(phi).0)
    }

    /// Second eigenbranch, `[−sin(φ/2), cos(φ/2)]`.
    pub fn model_lower() -> Self {
        Self::new("lower", |phi| model::eigenbranches(phi).1)
    }

    pub fn constant(v: ComplexVector) -> Self {
        Self::new("constant", move |_| v.clone())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gauge(&self, phi: f64) -> f64 {
        self.gauge.as_ref().map_or(0.0, |f| f(phi))
    }

    /// e^{i f(φ)}·χ(φ)
    pub fn eval(&self, phi: f64) -> ComplexVector {
        let v = (self.evaluator)(phi);
        match &self.gauge {
            Some(f) => v.scale(C64::from_polar(1.0, f(phi))),
            None => v,
        }
    }

    fn eval_checked(&self, phi: f64) -> Result<ComplexVector> {
        let v = self.eval(phi);
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NormViolation { phi, norm });
        }
        Ok(v)
    }

    /// Checks unit norm at `samples` points of [0, 2π] and returns the largest
    /// observed ‖χ(φ+h) − χ(φ)‖ / h with h = 1e-6, a continuity estimate.
    pub fn validate(&self, samples: usize) -> Result<f64> {
        let h = 1e-6;
        let mut lipschitz: f64 = 0.0;
        for k in 0..samples.max(2) {
            let phi = TAU * k as f64 / samples.max(2) as f64;
            let a = self.eval_checked(phi)?;
            let b = self.eval_checked(phi + h)?;
            lipschitz = lipschitz.max(b.sub(&a)?.norm() / h);
        }
        Ok(lipschitz)
    }
}

/// New branch φ ↦ e^{i f(φ)}·χ(φ); gauges compose additively.
pub fn gauge_transform(b: &Branch, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Branch {
    let gauge: GaugeFn = match &b.gauge {
        Some(old) => {
            let old = old.clone();
            Arc::new(move |phi| old(phi) + f(phi))
        }
        None => Arc::new(f),
    };
    Branch {
        evaluator: b.evaluator.clone(),
        label: format!("{}+gauge", b.label),
        gauge: Some(gauge),
    }
}

/// Central-difference estimate of A(φ) = (1/i)⟨χ(φ)|χ′(φ)⟩.
pub fn connection(b: &Branch, phi: f64, h: f64) -> Result<f64> {
    if !(1e-8..=1e-3).contains(&h) {
        return Err(Error::InvalidParameter(format!("finite-difference step {h} outside [1e-8, 1e-3]")));
    }
    let centre = b.eval_checked(phi)?;
    let ahead = b.eval_checked(phi + h)?;
    let behind = b.eval_checked(phi - h)?;
    let derivative = ahead.sub(&behind)?.scale(C64::new(0.5 / h, 0.0));
    let z = centre.inner(&derivative)?;
    // (1/i)·z = z.im − i·z.re
    let residue = -z.re;
    if residue.abs() > 10.0 * h {
        return Err(Error::ComplexConnection { phi, residue });
    }
    Ok(z.im)
}

/// Samples of A(φ) at `n` evenly spaced points of [0, 2π).
pub fn connection_samples(b: &Branch, n: usize, h: f64) -> Result<Vec<(f64, f64)>> {
    (0..n)
        .map(|k| {
            let phi = TAU * k as f64 / n as f64;
            connection(b, phi, h).map(|a| (phi, a))
        })
        .collect()
}

/// ∮A dφ over [0, 2π] by the periodic trapezoid rule on `n` points.
pub fn connection_integral(b: &Branch, n: usize, h: f64) -> Result<f64> {
    let samples = connection_samples(b, n, h)?;
    Ok(samples.iter().map(|(_, a)| a).sum::<f64>() * TAU / n as f64)
}

/// Discrete closed-loop phase over `n_steps` points φₖ = 2πk/N, normalized
/// to (−π, π] with +π preferred.
pub fn pancharatnam_phase(b: &Branch, n_steps: usize) -> Result<f64> {
    if n_steps < 3 {
        return Err(Error::InvalidParameter(format!("loop needs at least 3 points, got {n_steps}")));
    }
    let states = (0..n_steps)
        .map(|k| b.eval_checked(TAU * k as f64 / n_steps as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut product = C64::new(1.0, 0.0);
    for k in 0..n_steps {
        // the last factor closes onto φ₀ itself, not onto χ(2π)
        let overlap = states[k].inner(&states[(k + 1) % n_steps])?;
        let magnitude = overlap.norm();
        if magnitude < MIN_OVERLAP {
            return Err(Error::IllConditioned { index: k, magnitude });
        }
        product *= overlap / magnitude;
    }
    // +0 imaginary part keeps a negative real product at +π
    let im = if product.im == 0.0 { 0.0 } else { product.im };
    Ok(normalize_angle(-im.atan2(product.re)))
}

/// Sign of ⟨0|M(φ)|0⟩ = cos(φ/2): 1, −1, or 0 when |cos(φ/2)| ≤ 1e-12.
pub fn holonomy_check(phi_total: f64) -> i8 {
    let overlap = model::evolution(phi_total).get(0, 0).re;
    if overlap.abs() <= 1e-12 {
        0
    } else if overlap > 0.0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::c;
    use std::f64::consts::PI;

    fn coherent_loop(theta: f64) -> Branch {
        let (s, co) = (0.5 * theta).sin_cos();
        Branch::new("cone", move |phi| {
            ComplexVector::new(vec![c(co, 0.0), C64::from_polar(s, phi)]).unwrap()
        })
    }

    #[test]
    fn upper_branch_is_parallel_transported() {
        let b = Branch::model_upper();
        for k in 0..64 {
            let phi = TAU * k as f64 / 64.0;
            assert!(connection(&b, phi, 1e-5).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn half_angle_gauge_shifts_connection() {
        let b = gauge_transform(&Branch::model_upper(), |phi| 0.5 * phi);
        for phi in [0.0, 1.0, 3.0, 5.5] {
            assert!((connection(&b, phi, 1e-5).unwrap() - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_branch_has_zero_connection() {
        let b = Branch::constant(ComplexVector::basis(2, 0));
        assert_eq!(connection(&b, 1.3, 1e-5).unwrap(), 0.0);
        assert_eq!(pancharatnam_phase(&b, 7).unwrap(), 0.0);
    }

    #[test]
    fn connection_rejects_bad_inputs() {
        let b = Branch::model_upper();
        assert!(connection(&b, 0.0, 1e-2).is_err());
        assert!(connection(&b, 0.0, 1e-9).is_err());
        let unnormalized = Branch::new("bad", |_| ComplexVector::from_real(&[1.0, 1.0]));
        assert!(matches!(connection(&unnormalized, 0.0, 1e-5), Err(Error::NormViolation { .. })));
        assert!(unnormalized.validate(8).is_err());
    }

    #[test]
    fn zero_gauge_is_identity() {
        let b = Branch::model_upper();
        let g = gauge_transform(&b, |_| 0.0);
        for phi in [0.0, 0.4, 2.0] {
            assert_eq!(g.eval(phi), b.eval(phi));
        }
    }

    #[test]
    fn half_angle_gauge_makes_branch_single_valued() {
        let raw = Branch::model_upper();
        assert!(raw.eval(TAU).sub(&raw.eval(0.0)).unwrap().norm() > 1.9);
        let g = gauge_transform(&raw, |phi| 0.5 * phi);
        assert!(g.eval(TAU).sub(&g.eval(0.0)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn gauge_law_for_smooth_gauges() {
        let h = 1e-5;
        let b = Branch::model_lower();
        let sin_gauge = gauge_transform(&b, f64::sin);
        let composed = gauge_transform(&gauge_transform(&b, |p| 0.5 * p), f64::sin);
        for k in 0..16 {
            let phi = TAU * k as f64 / 16.0;
            let base = connection(&b, phi, h).unwrap();
            assert!((connection(&sin_gauge, phi, h).unwrap() - base - phi.cos()).abs() <= 10.0 * h);
            assert!((connection(&composed, phi, h).unwrap() - base - 0.5 - phi.cos()).abs() <= 10.0 * h);
        }
    }

    #[test]
    fn loop_phase_of_the_model_branch_is_pi() {
        for n in [3, 4, 12, 48, 360] {
            assert!((pancharatnam_phase(&Branch::model_upper(), n).unwrap() - PI).abs() <= 1e-9, "n={n}");
            assert!((pancharatnam_phase(&Branch::model_lower(), n).unwrap() - PI).abs() <= 1e-9);
        }
    }

    #[test]
    fn loop_phase_is_gauge_invariant() {
        let b = Branch::model_upper();
        for g in [
            gauge_transform(&b, |p| 0.5 * p),
            gauge_transform(&b, |p| p.sin() + 0.3 * (2.0 * p).cos()),
        ] {
            for n in [12, 48] {
                let d = normalize_angle(pancharatnam_phase(&g, n).unwrap() - PI);
                assert!(d.abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn loop_phase_converges_to_connection_integral() {
        let b = coherent_loop(1.0);
        let integral = connection_integral(&b, 4096, 1e-5).unwrap();
        // analytic value for this loop: 2π sin²(θ/2)
        assert!((integral - TAU * (0.5f64).sin().powi(2)).abs() < 1e-8);
        let errors: Vec<f64> = [24, 48, 96]
            .iter()
            .map(|&n| normalize_angle(pancharatnam_phase(&b, n).unwrap() + integral).abs())
            .collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
        assert!(errors[2] < 1e-2);
    }

    #[test]
    fn ill_conditioned_loop_rejected() {
        // antipodal consecutive states
        let b = Branch::new("flip", |phi| ComplexVector::from_real(&[phi.cos(), phi.sin()]));
        assert!(matches!(pancharatnam_phase(&b, 4), Err(Error::IllConditioned { .. })));
        assert!(pancharatnam_phase(&Branch::model_upper(), 2).is_err());
    }

    #[test]
    fn holonomy_examples() {
        assert_eq!(holonomy_check(TAU), -1);
        assert_eq!(holonomy_check(0.0), 1);
        assert_eq!(holonomy_check(PI), 0);
        assert_eq!(holonomy_check(-3.0 * PI / 2.0), -1);
    }

    #[test]
    fn model_branch_is_continuous() {
        let l = Branch::model_upper().validate(64).unwrap();
        assert!((l - 0.5).abs() < 1e-3);
    }
}
