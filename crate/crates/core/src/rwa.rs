//! Rotating-frame few-level model of the driven doublets, coherence rates,
//! and the collapse operators of the open-system simulation.
//!
//! The base model keeps six levels {00, 01, 10, 11, 20, 21} in a frame
//! rotating at the coupled computational transition frequencies and the drive
//! frequency, so its Hamiltonian (GHz) is
//!
//!   H = ξ_static |11⟩⟨11| − δ |20⟩⟨20| + (ξ_static − (δ − Δ)) |21⟩⟨21|
//!       + ½ g_x(t) [Ω_l (|10⟩⟨20| + h.c.) + Ω_u (|11⟩⟨21| + h.c.)]
//!       − ½ i g_y(t) [Ω_l (|10⟩⟨20| − h.c.) + Ω_u (|11⟩⟨21| − h.c.)] .
//!
//! With ξ_static = 0 this is exactly the six-level rotating-wave model of the
//! driven system; the ξ_static diagonal keeps the static ZZ phase visible for
//! Ramsey-style protocols. Additional leakage doublets (e.g. |01⟩−|02⟩ and
//! |11⟩−|12⟩ for devices where those transitions sit close by) can be
//! appended with their own detunings and Rabi rates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupled::{label, LabeledSpectrum, StateLabel};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};

/// Order of the four computational states in every model built here.
pub const COMPUTATIONAL: [StateLabel; 4] =
    [StateLabel { a: 0, b: 0 }, StateLabel { a: 0, b: 1 }, StateLabel { a: 1, b: 0 }, StateLabel { a: 1, b: 1 }];

/// One driven leakage transition |comp⟩ − |leak⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakTransition {
    pub comp: StateLabel,
    pub leak: StateLabel,
    /// Drive detuning f_d − f(comp − leak) (GHz).
    pub detuning: f64,
    /// On-resonance Rabi rate at unit envelope (GHz).
    pub omega: f64,
}

/// Rotating-frame model: four computational states plus driven leakage levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaModel {
    labels: Vec<StateLabel>,
    diag: Vec<f64>,
    /// (computational index, leakage index, Ω) triples.
    couplings: Vec<(usize, usize, f64)>,
    zz_static: f64,
}

impl RwaModel {
    /// The paper's six-level model: doublet Ω_10−20 at detuning δ and
    /// Ω_11−21 at δ − Δ, with an optional static-ZZ diagonal.
    pub fn six_level(
        delta: f64,
        splitting: f64,
        omega_upper: f64,
        omega_lower: f64,
        zz_static: f64,
    ) -> Self {
        let mut model = RwaModel {
            labels: COMPUTATIONAL.to_vec(),
            diag: vec![0.0, 0.0, 0.0, zz_static],
            couplings: Vec::new(),
            zz_static,
        };
        model.push_leak(LeakTransition {
            comp: label(1, 0),
            leak: label(2, 0),
            detuning: delta,
            omega: omega_lower,
        });
        model.push_leak(LeakTransition {
            comp: label(1, 1),
            leak: label(2, 1),
            detuning: delta - splitting,
            omega: omega_upper,
        });
        model
    }

    /// Build the six-level model from a labeled spectrum, a drive frequency,
    /// and drive couplings (ε_A, ε_B); detunings, Rabi rates, and the static
    /// ZZ all come from the spectrum.
    pub fn from_spectrum(spec: &LabeledSpectrum, f_d: f64, eps_a: f64, eps_b: f64) -> Result<Self> {
        let f_lower = spec.transition(label(1, 0), label(2, 0))?;
        let f_upper = spec.transition(label(1, 1), label(2, 1))?;
        let delta = f_d - f_lower;
        let splitting = f_upper - f_lower;
        let omega_lower = spec.rabi_frequency(eps_a, eps_b, label(1, 0), label(2, 0))?;
        let omega_upper = spec.rabi_frequency(eps_a, eps_b, label(1, 1), label(2, 1))?;
        Ok(Self::six_level(delta, splitting, omega_upper, omega_lower, spec.static_zz()?))
    }

    /// Append a driven leakage transition (second-device |02⟩ / |12⟩ levels).
    pub fn with_extra_leak(mut self, leak: LeakTransition) -> Result<Self> {
        if self.labels.contains(&leak.leak) {
            return Err(Error::invalid("leak", format!("level |{}> already present", leak.leak)));
        }
        self.push_leak(leak);
        Ok(self)
    }

    fn push_leak(&mut self, leak: LeakTransition) {
        let comp_idx = self
            .labels
            .iter()
            .position(|&l| l == leak.comp)
            .expect("leak transitions must start from a computational state");
        self.labels.push(leak.leak);
        self.diag.push(self.diag[comp_idx] - leak.detuning);
        self.couplings.push((comp_idx, self.labels.len() - 1, leak.omega));
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[StateLabel] {
        &self.labels
    }

    /// Indices of |00⟩, |01⟩, |10⟩, |11⟩ (always 0..4 by construction).
    pub fn comp_indices(&self) -> [usize; 4] {
        [0, 1, 2, 3]
    }

    pub fn zz_static(&self) -> f64 {
        self.zz_static
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Largest frequency scale in the model (GHz), used for step-size choices.
    pub fn frequency_scale(&self) -> f64 {
        let diag_max = self.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let omega_max = self.couplings.iter().fold(0.0_f64, |m, &(_, _, o)| m.max(o.abs()));
        diag_max.max(omega_max).max(1e-6)
    }

    /// Hamiltonian at envelope values (g_x, g_y), scaled by `amp`.
    pub fn hamiltonian(&self, g_x: f64, g_y: f64, amp: f64) -> DMatrix<C64> {
        let n = self.dim();
        let mut h = DMatrix::<C64>::zeros(n, n);
        for (i, &d) in self.diag.iter().enumerate() {
            h[(i, i)] = c(d, 0.0);
        }
        for &(i, j, omega) in &self.couplings {
            // entry (comp, leak) = Ω/2 (g_x − i g_y)
            let v = c(0.5 * amp * omega * g_x, -0.5 * amp * omega * g_y);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
        h
    }

    /// Embed a 4-component computational state into the model dimension.
    pub fn embed_computational(&self, psi4: &[C64; 4]) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::<C64>::zeros(self.dim());
        for (i, &x) in psi4.iter().enumerate() {
            v[i] = x;
        }
        v
    }

    /// Embed simultaneous single-qubit gates (u_a on qubit A's 0−1 subspace,
    /// u_b on qubit B's) into the model's level set; |2⟩-levels of either
    /// qubit are untouched by that qubit's gate.
    pub fn embed_gate_pair(
        &self,
        u_a: &nalgebra::Matrix2<C64>,
        u_b: &nalgebra::Matrix2<C64>,
    ) -> DMatrix<C64> {
        let ext = |u: &nalgebra::Matrix2<C64>, i: usize, j: usize| -> C64 {
            if i < 2 && j < 2 {
                u[(i, j)]
            } else if i == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        };
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, cidx| {
            let (li, lj) = (self.labels[r], self.labels[cidx]);
            ext(u_a, li.a, lj.a) * ext(u_b, li.b, lj.b)
        })
    }
}

/// Per-transition relaxation and echo coherence times (μs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTable {
    /// |00⟩−|10⟩ (qubit A).
    pub t1_a_us: f64,
    pub t2e_a_us: f64,
    /// |00⟩−|01⟩ (qubit B).
    pub t1_b_us: f64,
    pub t2e_b_us: f64,
    /// |11⟩−|21⟩ (the 1−2 transition of qubit A).
    pub t1_12a_us: f64,
    pub t2e_12a_us: f64,
    /// Optional 1−2 transition of qubit B (extended models only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_12b_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2e_12b_us: Option<f64>,
}

/// Tolerance on Γ_φ = 1/T2E − 1/(2 T1): measured T2E can marginally exceed
/// 2 T1; anything below −1e-6 GHz is an error, small negatives clip to 0.
const GAMMA_PHI_CLIP_TOL: f64 = 1e-6;

impl CoherenceTable {
    /// Main-device averages over the ranges in the paper's coherence table.
    pub fn main_device_average() -> Self {
        CoherenceTable {
            t1_a_us: 182.5,
            t2e_a_us: 14.5,
            t1_b_us: 128.5,
            t2e_b_us: 22.5,
            t1_12a_us: 5.55,
            t2e_12a_us: 3.3,
            t1_12b_us: None,
            t2e_12b_us: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("qubit A", self.t1_a_us, self.t2e_a_us),
            ("qubit B", self.t1_b_us, self.t2e_b_us),
            ("A 1-2", self.t1_12a_us, self.t2e_12a_us),
        ];
        for (name, t1, t2e) in pairs {
            check_pair(name, t1, t2e)?;
        }
        match (self.t1_12b_us, self.t2e_12b_us) {
            (Some(t1), Some(t2e)) => check_pair("B 1-2", t1, t2e)?,
            (None, None) => {}
            _ => {
                return Err(Error::invalid(
                    "coherence",
                    "t1_12b_us and t2e_12b_us must be given together",
                ))
            }
        }
        Ok(())
    }

    /// Γ_1 = 1/T_1 in 1/ns.
    pub fn gamma1(t1_us: f64) -> f64 {
        if t1_us.is_infinite() {
            0.0
        } else {
            1e-3 / t1_us
        }
    }

    /// Γ_φ = 1/T_2E − 1/(2 T_1) in 1/ns, clipped at zero within tolerance.
    pub fn gamma_phi(t1_us: f64, t2e_us: f64) -> Result<f64> {
        let g = if t2e_us.is_infinite() { 0.0 } else { 1e-3 / t2e_us } - 0.5 * Self::gamma1(t1_us);
        if g < -GAMMA_PHI_CLIP_TOL {
            return Err(Error::invalid(
                "coherence",
                format!("negative dephasing rate {g:.3e} 1/ns (T2E > 2 T1 beyond tolerance)"),
            ));
        }
        Ok(g.max(0.0))
    }
}

fn check_pair(name: &str, t1: f64, t2e: f64) -> Result<()> {
    if !(t1 > 0.0) || !(t2e > 0.0) {
        return Err(Error::invalid("coherence", format!("{name}: T1 and T2E must be positive")));
    }
    CoherenceTable::gamma_phi(t1, t2e).map(|_| ())
}

/// Build the collapse operators of the Lindblad model on `model`'s level set.
///
/// Single-qubit collapse operators are continued into the interacting states
/// as tensor products with the identity on the partner qubit, restricted to
/// the levels present. On the base six-level set this yields exactly six
/// operators:
///
///   L1_A  = √Γ1_A (|00⟩⟨10| + |01⟩⟨11|)
///   L1_B  = √Γ1_B (|00⟩⟨01| + |10⟩⟨11| + |20⟩⟨21|)
///   Lφ_A  = √(2Γφ_A) (|00⟩⟨00| + |01⟩⟨01|)
///   Lφ_B  = √(2Γφ_B) (|00⟩⟨00| + |10⟩⟨10| + |20⟩⟨20|)
///   L1_12A = √Γ1_12A (|10⟩⟨20| + |11⟩⟨21|)
///   Lφ_12A = √(2Γφ_12A) (|20⟩⟨20| + |21⟩⟨21|)
///
/// Rates are in 1/ns. Zero-rate operators are returned as zero matrices so
/// the operator list structure is stable.
pub fn build_collapse_operators(t: &CoherenceTable, model: &RwaModel) -> Result<Vec<DMatrix<C64>>> {
    t.validate()?;
    let n = model.dim();
    let labels = model.labels();
    let idx = |a: usize, b: usize| labels.iter().position(|&l| l == label(a, b));

    let mut ops = Vec::new();

    // (rate, list of (bra-state, ket-state) as label pairs), one operator each.
    let mut add = |rate: f64, pairs: Vec<(Option<usize>, Option<usize>)>| {
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (to, from) in pairs.into_iter().flat_map(|(t, f)| t.zip(f)) {
            m[(to, from)] = c(rate.sqrt(), 0.0);
        }
        ops.push(m);
    };

    let g1a = CoherenceTable::gamma1(t.t1_a_us);
    let gpa = CoherenceTable::gamma_phi(t.t1_a_us, t.t2e_a_us)?;
    let g1b = CoherenceTable::gamma1(t.t1_b_us);
    let gpb = CoherenceTable::gamma_phi(t.t1_b_us, t.t2e_b_us)?;
    let g1_12a = CoherenceTable::gamma1(t.t1_12a_us);
    let gp_12a = CoherenceTable::gamma_phi(t.t1_12a_us, t.t2e_12a_us)?;

    let b_levels: Vec<usize> = (0..3).collect();
    let a_levels: Vec<usize> = (0..3).collect();

    // A relaxation |0⟩⟨1|_A ⊗ 1_B and dephasing |0⟩⟨0|_A ⊗ 1_B.
    add(g1a, b_levels.iter().map(|&b| (idx(0, b), idx(1, b))).collect());
    // B relaxation and dephasing.
    add(g1b, a_levels.iter().map(|&a| (idx(a, 0), idx(a, 1))).collect());
    add(2.0 * gpa, b_levels.iter().map(|&b| (idx(0, b), idx(0, b))).collect());
    add(2.0 * gpb, a_levels.iter().map(|&a| (idx(a, 0), idx(a, 0))).collect());
    // A 1−2 relaxation |1⟩⟨2|_A ⊗ 1_B and dephasing |2⟩⟨2|_A ⊗ 1_B.
    add(g1_12a, b_levels.iter().map(|&b| (idx(1, b), idx(2, b))).collect());
    add(2.0 * gp_12a, b_levels.iter().map(|&b| (idx(2, b), idx(2, b))).collect());

    // B 1−2 channels, only meaningful when |x2⟩ levels are in the model.
    if let (Some(t1), Some(t2e)) = (t.t1_12b_us, t.t2e_12b_us) {
        let g1_12b = CoherenceTable::gamma1(t1);
        let gp_12b = CoherenceTable::gamma_phi(t1, t2e)?;
        add(g1_12b, a_levels.iter().map(|&a| (idx(a, 1), idx(a, 2))).collect());
        add(2.0 * gp_12b, a_levels.iter().map(|&a| (idx(a, 2), idx(a, 2))).collect());
    }

    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_level_layout() {
        let m = RwaModel::six_level(0.057, 0.008, 0.0524, 0.047, -294.7e-6);
        assert_eq!(m.dim(), 6);
        assert_eq!(m.labels()[4], label(2, 0));
        assert_eq!(m.labels()[5], label(2, 1));
        let h = m.hamiltonian(1.0, 0.0, 1.0);
        assert!((h[(4, 4)].re + 0.057).abs() < 1e-15);
        // |21⟩ diagonal carries the static ZZ offset along with −(δ − Δ).
        assert!((h[(5, 5)].re - (-294.7e-6 - 0.049)).abs() < 1e-12);
        assert!((h[(2, 4)].re - 0.5 * 0.047).abs() < 1e-15);
        assert!((h[(3, 5)].re - 0.5 * 0.0524).abs() < 1e-15);
        // DRAG quadrature enters as the imaginary part.
        let h = m.hamiltonian(0.0, 1.0, 1.0);
        assert!((h[(3, 5)] - c(0.0, -0.5 * 0.0524)).norm() < 1e-15);
        assert!((h[(5, 3)] - c(0.0, 0.5 * 0.0524)).norm() < 1e-15);
    }

    #[test]
    fn collapse_operators_match_paper_structure() {
        let t = CoherenceTable::main_device_average();
        let m = RwaModel::six_level(0.057, 0.008, 0.0524, 0.047, 0.0);
        let ops = build_collapse_operators(&t, &m).unwrap();
        assert_eq!(ops.len(), 6);

        let g1a: f64 = 1e-3 / 182.5;
        // L1_A = √Γ1_A (|00⟩⟨10| + |01⟩⟨11|): entries (0,2) and (1,3).
        assert!((ops[0][(0, 2)].re - g1a.sqrt()).abs() < 1e-12);
        assert!((ops[0][(1, 3)].re - g1a.sqrt()).abs() < 1e-12);
        assert_eq!(ops[0].iter().filter(|x| x.norm() > 0.0).count(), 2);

        // L1_B has three entries including |20⟩⟨21|.
        assert_eq!(ops[1].iter().filter(|x| x.norm() > 0.0).count(), 3);
        let g1b: f64 = 1e-3 / 128.5;
        assert!((ops[1][(4, 5)].re - g1b.sqrt()).abs() < 1e-12);

        // Lφ_A projects onto |00⟩, |01⟩.
        let gpa: f64 = 1e-3 / 14.5 - 0.5 * g1a;
        assert!((ops[2][(0, 0)].re - (2.0 * gpa).sqrt()).abs() < 1e-12);
        assert!((ops[2][(1, 1)].re - (2.0 * gpa).sqrt()).abs() < 1e-12);
        assert_eq!(ops[2].iter().filter(|x| x.norm() > 0.0).count(), 2);

        // Lφ_B projects onto |00⟩, |10⟩, |20⟩.
        assert_eq!(ops[3].iter().filter(|x| x.norm() > 0.0).count(), 3);
        assert!(ops[3][(4, 4)].norm() > 0.0);

        // A 1−2 relaxation |10⟩⟨20| + |11⟩⟨21|.
        let g112: f64 = 1e-3 / 5.55;
        assert!((ops[4][(2, 4)].re - g112.sqrt()).abs() < 1e-12);
        assert!((ops[4][(3, 5)].re - g112.sqrt()).abs() < 1e-12);
        assert_eq!(ops[4].iter().filter(|x| x.norm() > 0.0).count(), 2);

        // A 1−2 dephasing projects onto |20⟩, |21⟩.
        assert!(ops[5][(4, 4)].norm() > 0.0);
        assert!(ops[5][(5, 5)].norm() > 0.0);
        assert_eq!(ops[5].iter().filter(|x| x.norm() > 0.0).count(), 2);
    }

    #[test]
    fn infinite_coherence_gives_zero_operators() {
        let t = CoherenceTable {
            t1_a_us: f64::INFINITY,
            t2e_a_us: f64::INFINITY,
            t1_b_us: f64::INFINITY,
            t2e_b_us: f64::INFINITY,
            t1_12a_us: f64::INFINITY,
            t2e_12a_us: f64::INFINITY,
            t1_12b_us: None,
            t2e_12b_us: None,
        };
        let m = RwaModel::six_level(0.057, 0.008, 0.05, 0.045, 0.0);
        let ops = build_collapse_operators(&t, &m).unwrap();
        for op in ops {
            assert!(op.iter().all(|x| x.norm() == 0.0));
        }
    }

    #[test]
    fn only_a_decay_gives_single_operator() {
        let t = CoherenceTable {
            t1_a_us: 100.0,
            t2e_a_us: 200.0, // Γφ = 0 exactly
            t1_b_us: f64::INFINITY,
            t2e_b_us: f64::INFINITY,
            t1_12a_us: f64::INFINITY,
            t2e_12a_us: f64::INFINITY,
            t1_12b_us: None,
            t2e_12b_us: None,
        };
        let m = RwaModel::six_level(0.057, 0.008, 0.05, 0.045, 0.0);
        let ops = build_collapse_operators(&t, &m).unwrap();
        let nonzero: Vec<_> = ops.iter().filter(|op| op.iter().any(|x| x.norm() > 0.0)).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].iter().filter(|x| x.norm() > 0.0).count(), 2);
    }

    #[test]
    fn gamma_phi_clipping_and_errors() {
        // Slightly over 2 T1: clipped.
        assert_eq!(CoherenceTable::gamma_phi(100.0, 200.0000001).unwrap(), 0.0);
        // Far over: error.
        assert!(CoherenceTable::gamma_phi(100.0, 1e9).is_err());
    }

    #[test]
    fn extended_model_adds_b_channels() {
        let t = CoherenceTable {
            t1_12b_us: Some(0.7),
            t2e_12b_us: Some(1.3),
            ..CoherenceTable::main_device_average()
        };
        let m = RwaModel::six_level(0.057, 0.008, 0.05, 0.045, 0.0)
            .with_extra_leak(LeakTransition {
                comp: label(0, 1),
                leak: label(0, 2),
                detuning: 0.15,
                omega: 0.04,
            })
            .unwrap()
            .with_extra_leak(LeakTransition {
                comp: label(1, 1),
                leak: label(1, 2),
                detuning: 0.14,
                omega: 0.045,
            })
            .unwrap();
        assert_eq!(m.dim(), 8);
        let ops = build_collapse_operators(&t, &m).unwrap();
        assert_eq!(ops.len(), 8);
        // B 1−2 relaxation now connects |02⟩→|01⟩ and |12⟩→|11⟩.
        let l12b = &ops[6];
        assert_eq!(l12b.iter().filter(|x| x.norm() > 0.0).count(), 2);
    }
}
