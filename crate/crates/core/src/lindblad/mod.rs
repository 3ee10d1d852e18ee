//! Lindblad master equations and their time integration.
//!
//! A [`CollapseTerm`] with rate `r` contributes `(r/2)·L[o]ρ` where
//! `L[o]ρ = 2oρo† − o†oρ − ρo†o`, so the thermal factors and the printed
//! prefactors are folded into `r` by the builders.

mod engine;
mod evolve;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_driven_jc, build_effective_np, build_quadratic_magnon, build_rabi,
    TimeDependentHamiltonian,
};
use crate::linalg::ComplexMatrix;
use crate::ops::{
    annihilation, basis_state, embed, pauli, product_state, thermal_state, BasisKind, HilbertSpec,
    Pauli, Slot,
};
use crate::params::{angular, DerivedParams, SystemParams};

pub use engine::CompiledModel;
pub use evolve::{evolve, IntegratorControl, IntegratorStats, Record, Trajectory};

/// Trace drift beyond which a run is declared failed.
pub const TRACE_FAIL_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct CollapseTerm {
    pub label: String,
    pub operator: ComplexMatrix,
    /// Rate in rad/µs, thermal factors included.
    pub rate: f64,
}

impl CollapseTerm {
    pub fn new(label: impl Into<String>, operator: ComplexMatrix, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "collapse rate must be finite and non-negative, got {rate}"
            )));
        }
        if !operator.is_square() {
            return Err(Error::NotSquare {
                op: "CollapseTerm::new",
                rows: operator.rows(),
                cols: operator.cols(),
            });
        }
        Ok(CollapseTerm {
            label: label.into(),
            operator,
            rate,
        })
    }

    /// Coefficient in front of `L[o]ρ`.
    pub fn prefactor(&self) -> f64 {
        self.rate / 2.0
    }
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub hamiltonian: TimeDependentHamiltonian,
    pub collapse: Vec<CollapseTerm>,
    pub spec: HilbertSpec,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: TimeDependentHamiltonian,
        collapse: Vec<CollapseTerm>,
        spec: HilbertSpec,
    ) -> Result<Self> {
        let d = spec.dim();
        let check = |op: &'static str, m: &ComplexMatrix| {
            if m.shape() != (d, d) {
                Err(Error::DimensionMismatch {
                    op,
                    left: m.shape(),
                    right: (d, d),
                })
            } else {
                Ok(())
            }
        };
        check("LindbladModel: hamiltonian", &hamiltonian.static_part)?;
        for term in &hamiltonian.drive_terms {
            check("LindbladModel: drive term", &term.matrix)?;
        }
        for c in &collapse {
            check("LindbladModel: collapse operator", &c.operator)?;
        }
        Ok(LindbladModel {
            hamiltonian,
            collapse,
            spec,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// True when every collapse rate is zero.
    pub fn is_closed(&self) -> bool {
        self.collapse.iter().all(|c| c.rate == 0.0)
    }

    /// Dense reference right-hand side
    /// `−i[H(t), ρ] + Σ_k (r_k/2)(2o_kρo_k† − o_k†o_kρ − ρo_k†o_k)`.
    pub fn rhs(&self, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        let d = self.dim();
        if rho.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                op: "rhs",
                left: rho.shape(),
                right: (d, d),
            });
        }
        let h = self.hamiltonian.at(t);
        let mut out = h.commutator(rho)?.scale(crate::linalg::c64(0.0, -1.0));
        for c in &self.collapse {
            if c.rate == 0.0 {
                continue;
            }
            let o = &c.operator;
            let od = o.adjoint();
            let odo = &od * o;
            let mut l = (&(o * rho) * &od).scale_real(2.0);
            l -= &(&odo * rho);
            l -= &(rho * &odo);
            out += &l.scale_real(c.prefactor());
        }
        Ok(out)
    }
}

/// Which Hamiltonian and dissipator pair to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Driven JC Hamiltonian with the lab-frame dissipators.
    Full,
    /// Quantum Rabi model with the rotating-frame dissipators.
    Rabi,
    /// Normal-phase effective Hamiltonian with the rotating-frame dissipators.
    Effective,
    /// Magnon-only two-magnon Hamiltonian with magnon damping.
    Quadratic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Full,
        ModelKind::Rabi,
        ModelKind::Effective,
        ModelKind::Quadratic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Rabi => "rabi",
            ModelKind::Effective => "effective",
            ModelKind::Quadratic => "quadratic",
        }
    }

    pub fn has_qubit(&self) -> bool {
        !matches!(self, ModelKind::Quadratic)
    }

    pub fn spec(&self, fock_dim: usize) -> Result<HilbertSpec> {
        HilbertSpec::new(fock_dim, self.has_qubit())
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown model '{s}' (expected full, rabi, effective or quadratic)"
                ))
            })
    }
}

fn magnon_terms(
    derived: &DerivedParams,
    kappa: f64,
    spec: &HilbertSpec,
) -> Result<Vec<CollapseTerm>> {
    let m = embed(&annihilation(spec.fock_dim())?, Slot::Magnon, spec)?;
    let k = angular(kappa);
    Ok(vec![
        CollapseTerm::new("m", m.clone(), k * (derived.nbar_m + 1.0))?,
        CollapseTerm::new("m_dag", m.adjoint(), k * derived.nbar_m)?,
    ])
}

/// Rotating-frame qubit term `(γ/4)(2n̄_q + 1)L[σ_x]`.
fn sigma_x_term(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<CollapseTerm> {
    let sx = embed(&pauli(Pauli::X), Slot::Qubit, spec)?;
    CollapseTerm::new(
        "sigma_x",
        sx,
        angular(params.gamma) * (2.0 * derived.nbar_q + 1.0) / 2.0,
    )
}

/// Driven JC Hamiltonian with `κ/2(n̄_m+1)L[m]`, `κ/2·n̄_m L[m†]`,
/// `γ/2(n̄_q+1)L[σ₋]`, `γ/2·n̄_q L[σ₊]` and `γ_φ/4·L[σ_z]` (the last only
/// when γ_φ > 0).
pub fn build_full_master(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<LindbladModel> {
    let h = build_driven_jc(params, derived, spec)?;
    let mut collapse = magnon_terms(derived, params.kappa, spec)?;
    let g = angular(params.gamma);
    let sm = embed(&pauli(Pauli::Minus), Slot::Qubit, spec)?;
    collapse.push(CollapseTerm::new(
        "sigma_minus",
        sm.clone(),
        g * (derived.nbar_q + 1.0),
    )?);
    collapse.push(CollapseTerm::new(
        "sigma_plus",
        sm.adjoint(),
        g * derived.nbar_q,
    )?);
    if params.gamma_phi > 0.0 {
        let sz = embed(&pauli(Pauli::Z), Slot::Qubit, spec)?;
        collapse.push(CollapseTerm::new(
            "sigma_z",
            sz,
            angular(params.gamma_phi) / 2.0,
        )?);
    }
    LindbladModel::new(h, collapse, *spec)
}

/// Rabi model with `κ/2(n̄_m+1)L[m]`, `κ/2·n̄_m L[m†]` and
/// `γ/4(2n̄_q+1)L[σ_x]`; always three terms.
pub fn build_rabi_master(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<LindbladModel> {
    let h = build_rabi(params, derived, spec)?;
    let mut collapse = magnon_terms(derived, params.kappa, spec)?;
    collapse.push(sigma_x_term(params, derived, spec)?);
    LindbladModel::new(TimeDependentHamiltonian::from_static(h), collapse, *spec)
}

/// Normal-phase effective Hamiltonian with the same dissipators as
/// [`build_rabi_master`].
pub fn build_effective_master(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<LindbladModel> {
    let h = build_effective_np(params, derived, spec)?;
    let mut collapse = magnon_terms(derived, params.kappa, spec)?;
    collapse.push(sigma_x_term(params, derived, spec)?);
    LindbladModel::new(TimeDependentHamiltonian::from_static(h), collapse, *spec)
}

/// Magnon-only two-magnon Hamiltonian with the magnon dissipators.
pub fn build_quadratic_master(
    params: &SystemParams,
    derived: &DerivedParams,
    spec: &HilbertSpec,
) -> Result<LindbladModel> {
    let h = build_quadratic_magnon(derived, spec)?;
    let collapse = magnon_terms(derived, params.kappa, spec)?;
    LindbladModel::new(TimeDependentHamiltonian::from_static(h), collapse, *spec)
}

pub fn build_master(
    kind: ModelKind,
    params: &SystemParams,
    derived: &DerivedParams,
    fock_dim: usize,
) -> Result<LindbladModel> {
    let spec = kind.spec(fock_dim)?;
    match kind {
        ModelKind::Full => build_full_master(params, derived, &spec),
        ModelKind::Rabi => build_rabi_master(params, derived, &spec),
        ModelKind::Effective => build_effective_master(params, derived, &spec),
        ModelKind::Quadratic => build_quadratic_master(params, derived, &spec),
    }
}

/// Thermal magnon at `n̄_m` times the qubit ground state (magnon alone for
/// magnon-only specs).
pub fn initial_state(derived: &DerivedParams, spec: &HilbertSpec) -> Result<ComplexMatrix> {
    let magnon = thermal_state(derived.nbar_m, spec.fock_dim())?;
    if spec.qubit_present() {
        let g = basis_state(BasisKind::QubitGround, spec)?;
        product_state(&magnon, Some(&g), spec)
    } else {
        product_state(&magnon, None, spec)
    }
}

#[cfg(test)]
mod tests;
