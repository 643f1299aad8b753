//! Single-fluxonium diagonalization: transition frequencies and charge matrix
//! elements from the circuit energies (E_C, E_L, E_J) and external flux.
//!
//! The Hamiltonian H/h = 4 E_C n̂² + ½ E_L φ̂² − E_J cos(φ̂ − φ_ext) is built in
//! the number basis of the (E_C, E_L) harmonic oscillator. In that basis the
//! flux operator φ̂ is real tridiagonal; cos/sin of it are evaluated through
//! its eigendecomposition, and the full Hamiltonian is real symmetric. The
//! charge operator n̂ is purely imaginary, so charge matrix elements come out
//! as i times a real antisymmetric matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, sym_eigen_sorted, C64};

/// Circuit energies (GHz) and external flux phase (radians) of one fluxonium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxoniumSpec {
    pub e_c: f64,
    pub e_l: f64,
    pub e_j: f64,
    pub phi_ext: f64,
}

impl FluxoniumSpec {
    pub fn new(e_c: f64, e_l: f64, e_j: f64, phi_ext: f64) -> Result<Self> {
        let spec = FluxoniumSpec { e_c, e_l, e_j, phi_ext };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_c > 0.0) || !self.e_c.is_finite() {
            return Err(Error::invalid("e_c", format!("must be > 0, got {}", self.e_c)));
        }
        if !(self.e_l > 0.0) || !self.e_l.is_finite() {
            return Err(Error::invalid("e_l", format!("must be > 0, got {}", self.e_l)));
        }
        if !(self.e_j >= 0.0) || !self.e_j.is_finite() {
            return Err(Error::invalid("e_j", format!("must be >= 0, got {}", self.e_j)));
        }
        if !self.phi_ext.is_finite() {
            return Err(Error::invalid("phi_ext", "must be finite"));
        }
        Ok(())
    }

    /// Plasma frequency √(8 E_C E_L) of the bare oscillator (GHz).
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.e_c * self.e_l).sqrt()
    }

    /// Zero-point charge fluctuation (E_L / 32 E_C)^{1/4}.
    pub fn charge_zpf(&self) -> f64 {
        (self.e_l / (32.0 * self.e_c)).powf(0.25)
    }

    /// Zero-point flux fluctuation (2 E_C / E_L)^{1/4}.
    pub fn flux_zpf(&self) -> f64 {
        (2.0 * self.e_c / self.e_l).powf(0.25)
    }
}

/// Eigenenergies and charge matrix elements of one diagonalized fluxonium.
#[derive(Debug, Clone)]
pub struct QubitEigenSystem {
    energies: Vec<f64>,
    charge: DMatrix<C64>,
    n_levels: usize,
    basis_dim: usize,
}

impl QubitEigenSystem {
    /// Eigenenergies (GHz), ascending, referenced to the ground state.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Charge operator n̂ in the retained eigenbasis (purely imaginary entries).
    pub fn charge(&self) -> &DMatrix<C64> {
        &self.charge
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    /// Oscillator-basis truncation at which convergence was reached.
    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    /// f_kl = E_l − E_k for k < l (GHz).
    pub fn transition_frequency(&self, k: usize, l: usize) -> Result<f64> {
        if k >= l {
            return Err(Error::IndexOutOfRange(format!("transition ({k},{l}) requires k < l")));
        }
        if l >= self.n_levels {
            return Err(Error::IndexOutOfRange(format!(
                "level {l} out of range (n_levels = {})",
                self.n_levels
            )));
        }
        Ok(self.energies[l] - self.energies[k])
    }

    /// |⟨k|n̂|l⟩|, symmetric in (k, l).
    pub fn charge_matrix_element(&self, k: usize, l: usize) -> Result<f64> {
        if k >= self.n_levels || l >= self.n_levels {
            return Err(Error::IndexOutOfRange(format!(
                "levels ({k},{l}) out of range (n_levels = {})",
                self.n_levels
            )));
        }
        Ok(self.charge[(k, l)].norm())
    }
}

/// Flux operator φ̂ in the number basis (real symmetric tridiagonal).
fn flux_operator(spec: &FluxoniumSpec, dim: usize) -> DMatrix<f64> {
    let zpf = spec.flux_zpf();
    let mut phi = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim - 1 {
        let v = zpf * ((j + 1) as f64).sqrt();
        phi[(j, j + 1)] = v;
        phi[(j + 1, j)] = v;
    }
    phi
}

/// Imaginary part of the charge operator: n̂ = i η with η real antisymmetric.
fn charge_imag_part(spec: &FluxoniumSpec, dim: usize) -> DMatrix<f64> {
    let zpf = spec.charge_zpf();
    let mut eta = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim - 1 {
        // n̂ = i n_zpf (a† − a): entry (j+1, j) = i n_zpf √(j+1).
        let v = zpf * ((j + 1) as f64).sqrt();
        eta[(j + 1, j)] = v;
        eta[(j, j + 1)] = -v;
    }
    eta
}

/// Full Hamiltonian (real symmetric) in the number basis.
pub(crate) fn hamiltonian_matrix(spec: &FluxoniumSpec, dim: usize) -> DMatrix<f64> {
    let f_p = spec.plasma_frequency();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        h[(j, j)] = f_p * (j as f64 + 0.5);
    }
    if spec.e_j != 0.0 {
        let phi = flux_operator(spec, dim);
        let (vals, vecs) = sym_eigen_sorted(&phi);
        // cos(φ̂ − φ_ext) = V cos(D − φ_ext) Vᵀ, exact within the truncation.
        let mut cosd = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..dim {
            cosd[(j, j)] = (vals[j] - spec.phi_ext).cos();
        }
        let cos_op = &vecs * cosd * vecs.transpose();
        h -= spec.e_j * cos_op;
    }
    h
}

fn eigensolve(spec: &FluxoniumSpec, n_levels: usize, dim: usize) -> (Vec<f64>, DMatrix<f64>) {
    let h = hamiltonian_matrix(spec, dim);
    let (vals, vecs) = sym_eigen_sorted(&h);
    let energies: Vec<f64> = vals[..n_levels].to_vec();
    let retained = DMatrix::from_fn(dim, n_levels, |i, j| vecs[(i, j)]);
    (energies, retained)
}

/// Convergence requirement: retained energies move by less than this (GHz)
/// when the oscillator basis grows by 20 states.
pub const CONVERGENCE_TOL_GHZ: f64 = 1e-6;

/// Basis-size increments allowed past the requested `basis_dim` before the
/// diagonalization reports non-convergence.
const MAX_GROWTH_STEPS: usize = 8;

/// Diagonalize one fluxonium, keeping `n_levels` eigenstates.
///
/// Runs at `basis_dim` and `basis_dim + 20` and accepts when every retained
/// energy agrees to [`CONVERGENCE_TOL_GHZ`]; otherwise the basis keeps growing
/// by 20 until convergence or the growth limit.
pub fn diagonalize(spec: &FluxoniumSpec, n_levels: usize, basis_dim: usize) -> Result<QubitEigenSystem> {
    spec.validate()?;
    if n_levels == 0 {
        return Err(Error::invalid("n_levels", "must be >= 1"));
    }
    if basis_dim < 20 {
        return Err(Error::invalid("basis_dim", format!("must be >= 20, got {basis_dim}")));
    }
    if n_levels > basis_dim {
        return Err(Error::invalid("n_levels", format!("{n_levels} exceeds basis_dim {basis_dim}")));
    }

    let (mut energies, _) = eigensolve(spec, n_levels, basis_dim);
    let mut dim = basis_dim;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_GROWTH_STEPS {
        let next_dim = dim + 20;
        let (next_energies, vecs) = eigensolve(spec, n_levels, next_dim);
        residual = energies
            .iter()
            .zip(&next_energies)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < CONVERGENCE_TOL_GHZ {
            let eta = charge_imag_part(spec, next_dim);
            let eta_eig = vecs.transpose() * eta * &vecs;
            let charge = DMatrix::from_fn(n_levels, n_levels, |i, j| c(0.0, eta_eig[(i, j)]));
            let ground = next_energies[0];
            return Ok(QubitEigenSystem {
                energies: next_energies.iter().map(|e| e - ground).collect(),
                charge,
                n_levels,
                basis_dim: next_dim,
            });
        }
        energies = next_energies;
        dim = next_dim;
    }
    Err(Error::NonConvergence { basis_dim: dim, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Table of the main device (qubit A, qubit B).
    pub(crate) fn qubit_a() -> FluxoniumSpec {
        FluxoniumSpec::new(1.051, 0.753, 5.263, std::f64::consts::PI).unwrap()
    }

    pub(crate) fn qubit_b() -> FluxoniumSpec {
        FluxoniumSpec::new(1.069, 0.771, 3.870, std::f64::consts::PI).unwrap()
    }

    #[test]
    fn main_device_transition_frequencies() {
        let sys_a = diagonalize(&qubit_a(), 6, 80).unwrap();
        assert_abs_diff_eq!(sys_a.transition_frequency(0, 1).unwrap(), 0.217, epsilon = 1e-3);
        assert_abs_diff_eq!(sys_a.transition_frequency(1, 2).unwrap(), 4.489, epsilon = 1e-3);

        let sys_b = diagonalize(&qubit_b(), 6, 80).unwrap();
        assert_abs_diff_eq!(sys_b.transition_frequency(0, 1).unwrap(), 0.489, epsilon = 1e-3);
        assert_abs_diff_eq!(sys_b.transition_frequency(1, 2).unwrap(), 3.510, epsilon = 1e-3);
    }

    #[test]
    fn main_device_charge_elements() {
        let sys_a = diagonalize(&qubit_a(), 6, 80).unwrap();
        assert_abs_diff_eq!(sys_a.charge_matrix_element(0, 1).unwrap(), 0.066, epsilon = 2e-3);
        assert_abs_diff_eq!(sys_a.charge_matrix_element(1, 2).unwrap(), 0.576, epsilon = 2e-3);

        let sys_b = diagonalize(&qubit_b(), 6, 80).unwrap();
        assert_abs_diff_eq!(sys_b.charge_matrix_element(0, 1).unwrap(), 0.131, epsilon = 2e-3);
        assert_abs_diff_eq!(sys_b.charge_matrix_element(1, 2).unwrap(), 0.559, epsilon = 2e-3);
    }

    #[test]
    fn harmonic_limit_spectrum_and_charge() {
        let spec = FluxoniumSpec::new(1.0, 1.0, 0.0, 0.3).unwrap();
        let sys = diagonalize(&spec, 6, 40).unwrap();
        let spacing = (8.0_f64).sqrt();
        for m in 0..6 {
            assert_abs_diff_eq!(sys.energies()[m], spacing * m as f64, epsilon = 1e-8);
        }
        // zero-point charge fluctuation (E_L / 32 E_C)^{1/4}
        assert_abs_diff_eq!(sys.charge_matrix_element(0, 1).unwrap(), (1.0_f64 / 32.0).powf(0.25), epsilon = 1e-8);
        // harmonic ladder: ⟨0|n̂|2⟩ = 0
        assert!(sys.charge_matrix_element(0, 2).unwrap() < 1e-10);
    }

    #[test]
    fn parity_selection_at_sweet_spot() {
        let sys = diagonalize(&qubit_a(), 6, 80).unwrap();
        for k in 0..6_usize {
            for l in 0..6_usize {
                if l.abs_diff(k) % 2 == 0 && k != l {
                    assert!(
                        sys.charge_matrix_element(k, l).unwrap() < 1e-8,
                        "parity-forbidden element ({k},{l}) = {}",
                        sys.charge_matrix_element(k, l).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn truncation_stability() {
        let base = diagonalize(&qubit_a(), 6, 80).unwrap();
        let bigger = diagonalize(&qubit_a(), 6, base.basis_dim() + 20).unwrap();
        for k in 0..6 {
            assert!((base.energies()[k] - bigger.energies()[k]).abs() < 1e-6);
            for l in 0..6 {
                let a = base.charge_matrix_element(k, l).unwrap();
                let b = bigger.charge_matrix_element(k, l).unwrap();
                assert!((a - b).abs() < 1e-6, "|n_{k}{l}| moved by {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn charge_is_hermitian_consistent() {
        let sys = diagonalize(&qubit_b(), 5, 80).unwrap();
        for k in 0..5 {
            for l in 0..5 {
                let d = (sys.charge()[(k, l)] - sys.charge()[(l, k)].conj()).norm();
                assert!(d < 1e-12);
            }
        }
    }

    #[test]
    fn eigenbasis_orthonormal() {
        // Orthonormality of the retained eigenvectors, via the charge-free
        // reconstruction: diagonalize twice and compare overlap matrix.
        let spec = qubit_a();
        let h = hamiltonian_matrix(&spec, 60);
        let (_, vecs) = sym_eigen_sorted(&h);
        let overlap = vecs.transpose() * &vecs;
        let mut defect = 0.0_f64;
        for i in 0..60 {
            for j in 0..60 {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((overlap[(i, j)] - target).abs());
            }
        }
        assert!(defect < 1e-10);
    }

    #[test]
    fn rejects_invalid_specs_and_indices() {
        assert!(FluxoniumSpec::new(-1.0, 1.0, 1.0, 0.0).is_err());
        assert!(FluxoniumSpec::new(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(FluxoniumSpec::new(1.0, 1.0, -0.1, 0.0).is_err());
        assert!(FluxoniumSpec::new(1.0, 1.0, 1.0, f64::NAN).is_err());

        let sys = diagonalize(&qubit_a(), 4, 60).unwrap();
        assert!(sys.transition_frequency(1, 1).is_err());
        assert!(sys.transition_frequency(2, 1).is_err());
        assert!(sys.transition_frequency(0, 4).is_err());
        assert!(sys.charge_matrix_element(0, 4).is_err());

        assert!(diagonalize(&qubit_a(), 30, 19).is_err());
        assert!(diagonalize(&qubit_a(), 30, 25).is_err());
    }
}
