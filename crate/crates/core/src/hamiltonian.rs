//! Hamiltonians of the cavity-magnon-qubit system and its reductions.
//!
//! All builders return angular frequencies in rad/µs on the space described
//! by a [`HilbertSpec`] (magnon ⊗ qubit). The three-mode builder alone adds a
//! cavity factor in front.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, C64};
use crate::ops::{annihilation, embed, number, pauli, HilbertSpec, Pauli, Slot};
use crate::params::{angular, DerivedParams, SystemParams};

/// Default cap on the dimension of the static three-mode matrix.
pub const THREE_MODE_DIM_CAP: usize = 2048;

/// Scalar time dependence of a Hamiltonian term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    Constant(C64),
    /// `amplitude · exp(i(frequency·t − phase))`, frequency in rad/µs.
    Phasor {
        amplitude: C64,
        frequency: f64,
        phase: f64,
    },
}

impl Coefficient {
    #[inline]
    pub fn eval(&self, t: f64) -> C64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Phasor {
                amplitude,
                frequency,
                phase,
            } => amplitude * C64::from_polar(1.0, frequency * t - phase),
        }
    }

    /// The coefficient whose value is the complex conjugate at every t.
    pub fn conj(&self) -> Coefficient {
        match *self {
            Coefficient::Constant(c) => Coefficient::Constant(c.conj()),
            Coefficient::Phasor {
                amplitude,
                frequency,
                phase,
            } => Coefficient::Phasor {
                amplitude: amplitude.conj(),
                frequency: -frequency,
                phase: -phase,
            },
        }
    }

    /// Angular frequency (rad/µs) of the oscillation, 0 for constants.
    pub fn frequency(&self) -> f64 {
        match *self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Phasor { frequency, .. } => frequency.abs(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DriveTerm {
    pub matrix: ComplexMatrix,
    pub coefficient: Coefficient,
}

/// `H(t) = static_part + Σ_k c_k(t)·M_k`.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    pub static_part: ComplexMatrix,
    pub drive_terms: Vec<DriveTerm>,
}

impl TimeDependentHamiltonian {
    pub fn from_static(static_part: ComplexMatrix) -> Self {
        TimeDependentHamiltonian {
            static_part,
            drive_terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.static_part.rows()
    }

    pub fn is_static(&self) -> bool {
        self.drive_terms.is_empty()
    }

    /// Adds `c(t)·M + c*(t)·M†`, which keeps H(t) Hermitian.
    pub fn push_hermitian_pair(&mut self, matrix: ComplexMatrix, coefficient: Coefficient) {
        let adjoint = matrix.adjoint();
        self.drive_terms.push(DriveTerm {
            matrix,
            coefficient,
        });
        self.drive_terms.push(DriveTerm {
            matrix: adjoint,
            coefficient: coefficient.conj(),
        });
    }

    pub fn at(&self, t: f64) -> ComplexMatrix {
        let mut h = self.static_part.clone();
        for term in &self.drive_terms {
            h += &term.matrix.scale(term.coefficient.eval(t));
        }
        h
    }

    /// Largest coefficient frequency in rad/µs (0 for a static Hamiltonian).
    pub fn max_frequency(&self) -> f64 {
        self.drive_terms
            .iter()
            .map(|d| d.coefficient.frequency())
            .fold(0.0, f64::max)
    }
}

fn require_qubit(spec: &HilbertSpec, what: &str) -> Result<()> {
    if !spec.qubit_present() {
        return Err(Error::InvalidArgument(format!(
            "{what} needs a magnon ⊗ qubit space"
        )));
    }
    Ok(())
}

/// Static three-mode Hamiltonian on cavity ⊗ magnon ⊗ qubit:
/// `ω_c c†c + (ω_Q/2)σ_z + ω_M m†m + g_cq(cσ₊ + c†σ₋) + g_cm(cm† + c†m)`.
pub fn build_three_mode(
    params: &SystemParams,
    cavity_dim: usize,
    magnon_dim: usize,
    dim_cap: usize,
) -> Result<ComplexMatrix> {
    if cavity_dim < 2 || magnon_dim < 2 {
        return Err(Error::InvalidArgument(
            "cavity and magnon truncations must be at least 2".into(),
        ));
    }
    let dim = cavity_dim * magnon_dim * 2;
    if dim > dim_cap {
        return Err(Error::InvalidArgument(format!(
            "three-mode dimension {dim} exceeds the cap {dim_cap}"
        )));
    }
    let ic = ComplexMatrix::identity(cavity_dim);
    let im = ComplexMatrix::identity(magnon_dim);
    let iq = ComplexMatrix::identity(2);
    let c = annihilation(cavity_dim)?.kron(&im).kron(&iq);
    let m = ic.kron(&annihilation(magnon_dim)?).kron(&iq);
    let sz = ic.kron(&im).kron(&pauli(Pauli::Z));
    let sp = ic.kron(&im).kron(&pauli(Pauli::Plus));
    let (cd, md, sm) = (c.adjoint(), m.adjoint(), sp.adjoint());

    let mut h = (&cd * &c).scale_real(angular(params.nu_c));
    h += &sz.scale_real(angular(params.nu_qubit) / 2.0);
    h += &(&md * &m).scale_real(angular(params.nu_magnon));
    h += &(&(&c * &sp) + &(&cd * &sm)).scale_real(angular(params.g_cq));
    h += &(&(&c * &md) + &(&cd * &m)).scale_real(angular(params.g_cm));
    Ok(h)
}

/// Energies of the one-excitation states `|1,0,g⟩, |0,1,g⟩, |0,0,e⟩` of the
/// three-mode Hamiltonian, measured from the vacuum `|0,0,g⟩`.
///
/// Returns the 3×3 block in that order; the block is exactly decoupled from
/// the rest because the three-mode Hamiltonian conserves excitation number.
pub fn single_excitation_block(h: &ComplexMatrix, magnon_dim: usize) -> ComplexMatrix {
    // index = (c·N_m + m)·2 + s
    let idx = [2 * magnon_dim, 2, 1];
    let vacuum = h[(0, 0)];
    let mut block = h.select(&idx);
    for i in 0..3 {
        block[(i, i)] -= vacuum;
    }
    block
}

/// Driven JC Hamiltonian in the frame rotating at the first drive:
/// static `δ_m m†m + (δ_q/2)σ_z + G(σ₊m + σ₋m†) + E₁(σ₊ + σ₋)` plus
/// `E₂σ₊e^{i(Δ₁₂t − δφ)}` and its adjoint.
pub fn build_driven_jc(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<TimeDependentHamiltonian> {
    require_qubit(spec, "driven JC Hamiltonian")?;
    let n = spec.fock_dim();
    let m = embed(&annihilation(n)?, Slot::Magnon, spec)?;
    let num = embed(&number(n)?, Slot::Magnon, spec)?;
    let sz = embed(&pauli(Pauli::Z), Slot::Qubit, spec)?;
    let sp = embed(&pauli(Pauli::Plus), Slot::Qubit, spec)?;
    let sx = embed(&pauli(Pauli::X), Slot::Qubit, spec)?;

    let jc = &sp * &m;
    let mut h = num.scale_real(angular(derived.delta_m));
    h += &sz.scale_real(angular(derived.delta_q) / 2.0);
    h += &(&jc + &jc.adjoint()).scale_real(angular(derived.jc_coupling));
    h += &sx.scale_real(angular(params.e1));

    let mut ham = TimeDependentHamiltonian::from_static(h);
    ham.push_hermitian_pair(
        sp,
        Coefficient::Phasor {
            amplitude: c64(angular(params.e2), 0.0),
            frequency: angular(derived.delta_12),
            phase: params.delta_phi,
        },
    );
    Ok(ham)
}

/// Quantum Rabi model `δ_m m†m + (E₂/2)σ_z + g(m + m†)σ_x`.
pub fn build_rabi(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<ComplexMatrix> {
    require_qubit(spec, "Rabi Hamiltonian")?;
    let n = spec.fock_dim();
    let a = annihilation(n)?;
    let q = &a + &a.adjoint();
    let mut h = embed(&number(n)?, Slot::Magnon, spec)?.scale_real(angular(derived.delta_m));
    h += &embed(&pauli(Pauli::Z), Slot::Qubit, spec)?.scale_real(angular(params.e2) / 2.0);
    h += &q
        .kron(&pauli(Pauli::X))
        .scale_real(angular(derived.rabi_coupling));
    Ok(h)
}

/// `(m + m†)²` squared as truncated matrices.
fn position_squared(n: usize) -> Result<ComplexMatrix> {
    let a = annihilation(n)?;
    let q = &a + &a.adjoint();
    Ok(&q * &q)
}

/// Normal-phase effective Hamiltonian
/// `δ_m m†m + (E₂/2)σ_z + (δ_m g_c²/4)(m† + m)²σ_z`.
pub fn build_effective_np(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<ComplexMatrix> {
    require_qubit(spec, "effective normal-phase Hamiltonian")?;
    let n = spec.fock_dim();
    let dm = angular(derived.delta_m);
    let mut h = embed(&number(n)?, Slot::Magnon, spec)?.scale_real(dm);
    h += &embed(&pauli(Pauli::Z), Slot::Qubit, spec)?.scale_real(angular(params.e2) / 2.0);
    h += &position_squared(n)?
        .kron(&pauli(Pauli::Z))
        .scale_real(dm * derived.g_c * derived.g_c / 4.0);
    Ok(h)
}

/// Two-magnon Hamiltonian `δ_m m†m − (δ_m g_c²/4)(m† + m)²`, the qubit-ground
/// projection of [`build_effective_np`] with its constant dropped.
pub fn build_quadratic_magnon(
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<ComplexMatrix> {
    if spec.qubit_present() {
        return Err(Error::InvalidArgument(
            "quadratic magnon Hamiltonian lives on a magnon-only space".into(),
        ));
    }
    let n = spec.fock_dim();
    let dm = angular(derived.delta_m);
    let mut h = number(n)?.scale_real(dm);
    h -= &position_squared(n)?.scale_real(dm * derived.g_c * derived.g_c / 4.0);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::covariance;
    use crate::ops::{parity, GROUND};
    use crate::params::derive;

    fn operating_point() -> (SystemParams, DerivedParams) {
        let p = SystemParams::operating_point();
        let d = derive(&p).unwrap();
        (p, d)
    }

    fn ground_state(h: &ComplexMatrix) -> ComplexMatrix {
        let (_, vecs) = h.eig_hermitian().unwrap();
        let v = vecs.block(0, 0, h.rows(), 1);
        &v * &v.adjoint()
    }

    #[test]
    fn three_mode_decoupled_spectrum() {
        let p = SystemParams {
            g_cq: 0.0,
            g_cm: 0.0,
            ..SystemParams::operating_point()
        };
        let h = build_three_mode(&p, 3, 3, THREE_MODE_DIM_CAP).unwrap();
        assert_eq!(h.hermiticity_residual(), 0.0);
        let block = single_excitation_block(&h, 3);
        let (vals, _) = block.eig_hermitian().unwrap();
        let mut want = [angular(p.nu_c), angular(p.nu_magnon), angular(p.nu_qubit)];
        want.sort_by(f64::total_cmp);
        for (v, w) in vals.iter().zip(want) {
            assert!((v - w).abs() < 1e-9 * w);
        }
    }

    #[test]
    fn three_mode_dispersive_shifts() {
        let (p, d) = operating_point();
        let h = build_three_mode(&p, 5, 4, THREE_MODE_DIM_CAP).unwrap();
        assert_eq!(h.hermiticity_residual(), 0.0);
        let block = single_excitation_block(&h, 4);
        // block is decoupled: no other entry of its rows is nonzero
        for &i in &[8usize, 2, 1] {
            for j in 0..h.cols() {
                if ![8usize, 2, 1].contains(&j) {
                    assert_eq!(h[(i, j)], c64(0.0, 0.0));
                }
            }
        }
        let (vals, _) = block.eig_hermitian().unwrap();
        let nearest = |target: f64| {
            vals.iter()
                .copied()
                .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
                .unwrap()
        };
        // second-order elimination of the cavity, keeping the induced
        // qubit-magnon exchange; residual is fourth order in g/Δ
        let sw = ComplexMatrix::from_real_rows(&[
            &[
                p.nu_qubit - p.g_cq * p.g_cq / d.delta_cq,
                -d.jc_coupling_formula,
            ],
            &[
                -d.jc_coupling_formula,
                p.nu_magnon - p.g_cm * p.g_cm / d.delta_cm,
            ],
        ]);
        let (sw_vals, _) = sw.eig_hermitian().unwrap();
        let tol = angular(1.5);
        assert!((nearest(angular(p.nu_qubit)) - angular(sw_vals[0])).abs() < tol);
        assert!((nearest(angular(p.nu_magnon)) - angular(sw_vals[1])).abs() < tol);
        // exact dressing pushes both modes below the cavity, opposite to the
        // +g²/Δ shift carried by derive()
        assert!(nearest(angular(p.nu_magnon)) < angular(p.nu_magnon));
        assert!(d.nu_m > p.nu_magnon);
    }

    #[test]
    fn three_mode_cap() {
        let (p, _) = operating_point();
        assert!(build_three_mode(&p, 10, 10, 100).is_err());
        assert!(build_three_mode(&p, 1, 10, 1000).is_err());
    }

    #[test]
    fn driven_jc_at_zero() {
        let (p, d) = operating_point();
        let spec = HilbertSpec::magnon_qubit(6).unwrap();
        let h = build_driven_jc(&p, &d, &spec).unwrap();
        let sx = embed(&pauli(Pauli::X), Slot::Qubit, &spec).unwrap();
        let want = &h.static_part + &sx.scale_real(angular(p.e2));
        assert!(h.at(0.0).approx_eq(&want, 1e-12));
        assert!((h.max_frequency() - angular(1000.0)).abs() < 1e-9);
    }

    #[test]
    fn driven_jc_hermitian_at_sampled_times() {
        let (mut p, d) = operating_point();
        p.delta_phi = 0.7;
        let spec = HilbertSpec::magnon_qubit(8).unwrap();
        let h = build_driven_jc(&p, &d, &spec).unwrap();
        for k in 0..100 {
            // deterministic pseudo-random sample of [0, 1] µs
            let t = ((k as f64) * 0.618_033_988_75).fract();
            assert!(h.at(t).hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn phase_enters_only_the_drive() {
        let (p, d) = operating_point();
        let spec = HilbertSpec::magnon_qubit(5).unwrap();
        let h0 = build_driven_jc(&p, &d, &spec).unwrap();
        let h1 = build_driven_jc(
            &SystemParams {
                delta_phi: 1.3,
                ..p.clone()
            },
            &d,
            &spec,
        )
        .unwrap();
        assert_eq!(h0.static_part, h1.static_part);
        let t = 0.123;
        let sp = embed(&pauli(Pauli::Plus), Slot::Qubit, &spec).unwrap();
        let diff = &h1.at(t) - &h0.at(t);
        let e2 = angular(p.e2);
        let w = angular(d.delta_12) * t;
        let c = C64::from_polar(e2, w - 1.3) - C64::from_polar(e2, w);
        let want = &sp.scale(c) + &sp.adjoint().scale(c.conj());
        assert!(diff.approx_eq(&want, 1e-9));
    }

    #[test]
    fn undriven_jc_splitting() {
        let (p, d) = operating_point();
        let p = SystemParams {
            e1: 0.0,
            e2: 0.0,
            ..p
        };
        let spec = HilbertSpec::magnon_qubit(4).unwrap();
        let h = build_driven_jc(&p, &d, &spec).unwrap();
        // one-excitation block: |1,g⟩ (index 2) and |0,e⟩ (index 1)
        let block = h.at(0.3).select(&[2, 1]);
        let (vals, _) = block.eig_hermitian().unwrap();
        let g = angular(d.jc_coupling);
        let half = angular(d.delta_q - d.delta_m) / 2.0;
        let want = 2.0 * (g * g + half * half).sqrt();
        assert!((vals[1] - vals[0] - want).abs() < 1e-9 * want);
    }

    #[test]
    fn rabi_uncoupled_ground_energy() {
        let (p, mut d) = operating_point();
        d.rabi_coupling = 0.0;
        let spec = HilbertSpec::magnon_qubit(10).unwrap();
        let h = build_rabi(&p, &d, &spec).unwrap();
        let (vals, _) = h.eig_hermitian().unwrap();
        assert!((vals[0] + angular(p.e2) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn rabi_parity_symmetry() {
        let (p, d) = operating_point();
        let spec = HilbertSpec::magnon_qubit(30).unwrap();
        let h = build_rabi(&p, &d, &spec).unwrap();
        assert!(h.hermiticity_residual() < 1e-12);
        let pi = parity(30).unwrap().kron(&pauli(Pauli::Z));
        assert!(h.commutator(&pi).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn rabi_ground_state_is_amplified_near_criticality() {
        let (p, d) = operating_point();
        assert!((d.g_c - 0.9988).abs() < 1e-4);
        let spec = HilbertSpec::magnon_qubit(60).unwrap();
        let h = build_rabi(&p, &d, &spec).unwrap();
        let rho = ground_state(&h);
        let stats =
            covariance(&crate::observables::partial_trace_qubit(&rho, &spec).unwrap()).unwrap();
        assert!(stats.v11 > 0.5, "V(X1) = {}", stats.v11);
    }

    #[test]
    fn effective_np_limits() {
        let (p, mut d) = operating_point();
        let spec = HilbertSpec::magnon_qubit(12).unwrap();
        let h = build_effective_np(&p, &d, &spec).unwrap();
        assert!(h.hermiticity_residual() < 1e-12);
        let sz = embed(&pauli(Pauli::Z), Slot::Qubit, &spec).unwrap();
        assert!(h.commutator(&sz).unwrap().max_abs() < 1e-12);

        d.g_c = 0.0;
        let h0 = build_effective_np(&p, &d, &spec).unwrap();
        let want = &embed(&number(12).unwrap(), Slot::Magnon, &spec)
            .unwrap()
            .scale_real(angular(d.delta_m))
            + &sz.scale_real(angular(p.e2) / 2.0);
        assert!(h0.approx_eq(&want, 1e-12));
    }

    #[test]
    fn quadratic_is_ground_projection() {
        let (p, d) = operating_point();
        let n = 15;
        let full = build_effective_np(&p, &d, &HilbertSpec::magnon_qubit(n).unwrap()).unwrap();
        let quad = build_quadratic_magnon(&d, &HilbertSpec::magnon_only(n).unwrap()).unwrap();
        let ground_idx: Vec<usize> = (0..n).map(|k| 2 * k + GROUND).collect();
        let mut block = full.select(&ground_idx);
        // ⟨g|(E₂/2)σ_z|g⟩ is the dropped constant
        let offset = angular(p.e2) / 2.0;
        for i in 0..n {
            block[(i, i)] += c64(offset, 0.0);
        }
        assert!(block.approx_eq(&quad, 1e-9));

        let mut d0 = d.clone();
        d0.g_c = 0.0;
        let h0 = build_quadratic_magnon(&d0, &HilbertSpec::magnon_only(n).unwrap()).unwrap();
        assert_eq!(h0, number(n).unwrap().scale_real(angular(d.delta_m)));
    }

    #[test]
    fn quadratic_normal_mode_frequency() {
        // H = (δ_m/2)[(1 − g_c²)X₁² + X₂²] − δ_m/2 has level spacing δ_m√(1 − g_c²)
        let (_, mut d) = operating_point();
        d.g_c = 0.6;
        let n = 80;
        let h = build_quadratic_magnon(&d, &HilbertSpec::magnon_only(n).unwrap()).unwrap();
        let (vals, _) = h.eig_hermitian().unwrap();
        let want = angular(d.delta_m) * (1.0f64 - 0.36).sqrt();
        for k in 0..4 {
            assert!((vals[k + 1] - vals[k] - want).abs() < 1e-8 * want);
        }
    }

    #[test]
    fn quadratic_ground_state_is_squeezed_vacuum() {
        let (_, mut d) = operating_point();
        for gc in [0.5, 0.9] {
            d.g_c = gc;
            let h = build_quadratic_magnon(&d, &HilbertSpec::magnon_only(60).unwrap()).unwrap();
            let stats = covariance(&ground_state(&h)).unwrap();
            let vmin = stats.min_variance().0;
            let want = 0.5 * (1.0f64 - gc * gc).sqrt();
            assert!((vmin - want).abs() < 1e-4, "g_c = {gc}: {vmin} vs {want}");
        }
    }

    /// Lowest five eigenvalues of the Rabi and normal-phase models at fixed
    /// g_c; returns max |difference| / δ_m.
    fn rabi_vs_effective_gap(gc: f64, zeta: f64, n: usize) -> f64 {
        let (p, d) = operating_point();
        let e2 = d.delta_m / zeta;
        let p = SystemParams { e2, ..p };
        let mut d = d;
        d.zeta = zeta;
        d.g_c = gc;
        d.rabi_coupling = gc * (e2 * d.delta_m).sqrt() / 2.0;
        let spec = HilbertSpec::magnon_qubit(n).unwrap();
        let r = build_rabi(&p, &d, &spec)
            .unwrap()
            .eigvals_hermitian()
            .unwrap();
        let e = build_effective_np(&p, &d, &spec)
            .unwrap()
            .eigvals_hermitian()
            .unwrap();
        (0..5).map(|k| (r[k] - e[k]).abs()).fold(0.0, f64::max) / angular(d.delta_m)
    }

    #[test]
    fn rabi_and_effective_converge_as_zeta_shrinks() {
        let coarse = rabi_vs_effective_gap(0.5, 0.05, 60);
        let fine = rabi_vs_effective_gap(0.5, 0.005, 60);
        assert!(coarse / fine >= 5.0, "{coarse} -> {fine}");
        // relative error of the low spectrum is O(ζ)
        assert!(fine < 0.01);
    }
}
