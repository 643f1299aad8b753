//! Gaussian flat-top drive envelopes with DRAG quadrature correction, and
//! virtual-Z frame bookkeeping.
//!
//! The in-phase control on the rising edge (0 ≤ t < t_rise) is
//!
//!   g_x(t) = [exp(−(t − t_rise)²/2σ²) − exp(−t_rise²/2σ²)] / N ,
//!
//! normalized so the plateau value is 1 and g_x(0) = 0 exactly; the falling
//! edge mirrors it. The quadrature control is g_y(t) = α_DRAG · dg_x/dt with
//! the derivative taken analytically.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, C64};

pub const SQRT_TAU: f64 = 2.5066282746310002; // √(2π)

/// Which qubit a frame phase or pulse refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QubitId {
    A,
    B,
}

/// Drive pulse description: frequency, timing, amplitudes, and the per-qubit
/// virtual-Z frame phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseProgram {
    /// Drive frequency (GHz).
    pub f_d: f64,
    /// Rising/falling edge duration (ns).
    pub t_rise: f64,
    /// Plateau duration (ns).
    pub t_flat: f64,
    /// Gaussian width (ns); default t_rise/√(2π).
    pub sigma: f64,
    /// Peak ε_A scale (GHz); ε_B = eps_ratio · amplitude.
    pub amplitude: f64,
    /// DRAG coefficient (ns).
    pub drag_coeff: f64,
    /// ε_B / ε_A.
    pub eps_ratio: f64,
    /// Accumulated virtual-Z phases (radians), [A, B].
    pub frame_phases: [f64; 2],
}

impl PulseProgram {
    pub fn new(f_d: f64, t_rise: f64, t_flat: f64, amplitude: f64) -> Result<Self> {
        let p = PulseProgram {
            f_d,
            t_rise,
            t_flat,
            sigma: t_rise / SQRT_TAU,
            amplitude,
            drag_coeff: 0.0,
            eps_ratio: 1.0,
            frame_phases: [0.0, 0.0],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_drag(mut self, drag_coeff: f64) -> Self {
        self.drag_coeff = drag_coeff;
        self
    }

    pub fn with_eps_ratio(mut self, eps_ratio: f64) -> Self {
        self.eps_ratio = eps_ratio;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_rise > 0.0) {
            return Err(Error::invalid("t_rise", "must be > 0"));
        }
        if !(self.t_flat >= 0.0) {
            return Err(Error::invalid("t_flat", "must be >= 0"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be > 0"));
        }
        for (name, v) in [
            ("f_d", self.f_d),
            ("amplitude", self.amplitude),
            ("drag_coeff", self.drag_coeff),
            ("eps_ratio", self.eps_ratio),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid("pulse", format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Total gate duration 2 t_rise + t_flat (ns).
    pub fn t_gate(&self) -> f64 {
        2.0 * self.t_rise + self.t_flat
    }

    /// ε_A drive coupling (GHz).
    pub fn eps_a(&self) -> f64 {
        self.amplitude
    }

    /// ε_B drive coupling (GHz).
    pub fn eps_b(&self) -> f64 {
        self.amplitude * self.eps_ratio
    }

    /// Envelope quadratures (g_x, g_y) at time t ∈ [0, t_gate].
    pub fn sample_envelope(&self, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.t_gate()).contains(&t) {
            return Err(Error::invalid(
                "t",
                format!("{t} ns outside [0, {}] ns", self.t_gate()),
            ));
        }
        Ok(self.envelope_unchecked(t))
    }

    /// Envelope without the range check, for integrator inner loops. Outside
    /// [0, t_gate] the envelope is 0.
    #[inline]
    pub fn envelope_unchecked(&self, t: f64) -> (f64, f64) {
        let t_gate = self.t_gate();
        if !(0.0..=t_gate).contains(&t) {
            return (0.0, 0.0);
        }
        let plateau_end = self.t_rise + self.t_flat;
        if t < self.t_rise {
            self.edge(t, 1.0)
        } else if t <= plateau_end {
            (1.0, 0.0)
        } else {
            self.edge(t_gate - t, -1.0)
        }
    }

    /// Rising-edge value and slope-sign-adjusted DRAG quadrature at local
    /// time u ∈ [0, t_rise).
    #[inline]
    fn edge(&self, u: f64, direction: f64) -> (f64, f64) {
        let s2 = self.sigma * self.sigma;
        let floor = (-self.t_rise * self.t_rise / (2.0 * s2)).exp();
        let norm = 1.0 - floor;
        let gauss = (-(u - self.t_rise) * (u - self.t_rise) / (2.0 * s2)).exp();
        let g_x = (gauss - floor) / norm;
        let dg_dt = direction * (self.t_rise - u) / s2 * gauss / norm;
        (g_x, self.drag_coeff * dg_dt)
    }

    /// `envelope_unchecked` with the x-quadrature only.
    #[inline]
    pub fn g_x(&self, t: f64) -> f64 {
        self.envelope_unchecked(t).0
    }

    /// Record a virtual-Z rotation on one qubit; zero duration.
    pub fn apply_virtual_z(&self, qubit: QubitId, phase: f64) -> PulseProgram {
        let mut next = self.clone();
        let idx = match qubit {
            QubitId::A => 0,
            QubitId::B => 1,
        };
        next.frame_phases[idx] =
            (next.frame_phases[idx] + phase).rem_euclid(std::f64::consts::TAU);
        next
    }
}

/// 2×2 unitary of an X/Y rotation whose drive phase is offset by the
/// accumulated virtual-Z frame phase:
/// R(θ, φ) = exp[−i θ/2 (cos φ X + sin φ Y)].
pub fn rotation_unitary(angle: f64, phase: f64) -> Matrix2<C64> {
    let half = 0.5 * angle;
    let (sin, cos) = half.sin_cos();
    // exp[−i θ/2 (cos φ X + sin φ Y)] = cos(θ/2) I − i sin(θ/2)(cos φ X + sin φ Y)
    Matrix2::new(
        c(cos, 0.0),
        c(-sin * phase.sin(), -sin * phase.cos()),
        c(sin * phase.sin(), -sin * phase.cos()),
        c(cos, 0.0),
    )
}
