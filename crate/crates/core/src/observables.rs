//! Squeezing observables of the magnon mode.
//!
//! Quadratures are `X₁ = (m + m†)/√2` and `X₂ = i(m† − m)/√2`, with vacuum
//! variance [`V_VAC`] = 1/2. Everything here takes the magnon reduced state;
//! [`partial_trace_qubit`] produces it from a magnon ⊗ qubit state.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, C64, ZERO};
use crate::ops::{displacement, HilbertSpec, DISPLACEMENT_PAD};

/// Vacuum quadrature variance.
pub const V_VAC: f64 = 0.5;

/// Trace tolerance for accepting a density matrix.
pub const STATE_TRACE_TOL: f64 = 1e-6;

/// Hermiticity tolerance for accepting a density matrix.
pub const STATE_HERMITIAN_TOL: f64 = 1e-8;

/// Means and symmetrized covariance of (X₁, X₂).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    pub mean1: f64,
    pub mean2: f64,
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
}

impl Covariance {
    pub fn min_variance(&self) -> (f64, f64) {
        min_variance(self.v11, self.v22, self.v12)
    }

    pub fn det(&self) -> f64 {
        self.v11 * self.v22 - self.v12 * self.v12
    }

    pub fn stats(&self) -> Result<QuadratureStats> {
        let (v_min, theta_opt) = self.min_variance();
        Ok(QuadratureStats {
            mean1: self.mean1,
            mean2: self.mean2,
            v11: self.v11,
            v22: self.v22,
            v12: self.v12,
            v_min,
            theta_opt,
            s_db: squeezing_db(v_min)?,
        })
    }
}

/// Full per-state squeezing summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub mean1: f64,
    pub mean2: f64,
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
    pub v_min: f64,
    /// Optimal squeezing angle in [0, π).
    pub theta_opt: f64,
    pub s_db: f64,
}

fn check_state(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidState(format!(
            "density matrix must be square, got {:?}",
            rho.shape()
        )));
    }
    let tr = rho.trace()?;
    if (tr - c64(1.0, 0.0)).norm() > STATE_TRACE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    let h = rho.hermiticity_residual();
    if h > STATE_HERMITIAN_TOL {
        return Err(Error::InvalidState(format!(
            "density matrix not Hermitian (residual {h:.2e})"
        )));
    }
    Ok(())
}

/// Traces out the qubit of a magnon ⊗ qubit state. A magnon-only state is
/// returned unchanged.
pub fn partial_trace_qubit(rho: &ComplexMatrix, spec: &HilbertSpec) -> Result<ComplexMatrix> {
    let d = spec.dim();
    if rho.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            op: "partial_trace_qubit",
            left: rho.shape(),
            right: (d, d),
        });
    }
    if !spec.qubit_present() {
        return Ok(rho.clone());
    }
    let n = spec.fock_dim();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        rho[(2 * i, 2 * j)] + rho[(2 * i + 1, 2 * j + 1)]
    }))
}

/// Ladder-operator moments ⟨m⟩, ⟨m²⟩, ⟨m†m⟩, ⟨mm†⟩ with the truncated
/// operators (so ⟨mm†⟩ misses the top level, exactly as the matrix product
/// of truncated operators does).
fn ladder_moments(rho: &ComplexMatrix) -> (C64, C64, f64, f64) {
    let n = rho.rows();
    let mut a1 = ZERO;
    let mut a2 = ZERO;
    let mut ada = 0.0;
    let mut aad = 0.0;
    for k in 0..n {
        let p = rho[(k, k)].re;
        ada += k as f64 * p;
        if k + 1 < n {
            aad += (k + 1) as f64 * p;
        }
        if k >= 1 {
            a1 += (k as f64).sqrt() * rho[(k, k - 1)];
        }
        if k >= 2 {
            a2 += ((k * (k - 1)) as f64).sqrt() * rho[(k, k - 2)];
        }
    }
    (a1, a2, ada, aad)
}

/// Quadrature means and covariance of a magnon state.
pub fn covariance(rho_magnon: &ComplexMatrix) -> Result<Covariance> {
    check_state(rho_magnon)?;
    let (a1, a2, ada, aad) = ladder_moments(rho_magnon);
    let mean1 = SQRT_2 * a1.re;
    let mean2 = SQRT_2 * a1.im;
    let sym = 0.5 * (ada + aad);
    let x1x1 = a2.re + sym;
    let x2x2 = -a2.re + sym;
    let x1x2 = a2.im;
    Ok(Covariance {
        mean1,
        mean2,
        v11: x1x1 - mean1 * mean1,
        v22: x2x2 - mean2 * mean2,
        v12: x1x2 - mean1 * mean2,
    })
}

/// Covariance plus minimum variance, optimal angle and squeezing in dB.
pub fn quadrature_stats(rho_magnon: &ComplexMatrix) -> Result<QuadratureStats> {
    covariance(rho_magnon)?.stats()
}

/// Minimum of `V(θ) = (V₁₁+V₂₂)/2 + ((V₁₁−V₂₂)/2)cos2θ + V₁₂ sin2θ` and the
/// angle in [0, π) where it is reached. Isotropic states report θ = 0.
pub fn min_variance(v11: f64, v22: f64, v12: f64) -> (f64, f64) {
    let mean = 0.5 * (v11 + v22);
    let half_diff = 0.5 * (v11 - v22);
    let radius = half_diff.hypot(v12);
    let v_min = mean - radius;
    if radius <= 1e-14 * mean.abs().max(f64::MIN_POSITIVE) {
        return (v_min, 0.0);
    }
    let mut theta = 0.5 * (-v12).atan2(-half_diff);
    if theta < 0.0 {
        theta += PI;
    }
    if theta >= PI {
        theta -= PI;
    }
    (v_min, theta)
}

/// `S = −10 log₁₀(V_min / V_vac)`; positive means squeezed.
pub fn squeezing_db(v_min: f64) -> Result<f64> {
    if !(v_min > 0.0) {
        return Err(Error::InvalidState(format!(
            "minimum variance must be positive, got {v_min}"
        )));
    }
    Ok(-10.0 * (v_min / V_VAC).log10())
}

/// `⟨m†m⟩` of a magnon state.
pub fn mean_occupation(rho_magnon: &ComplexMatrix) -> Result<f64> {
    if !rho_magnon.is_square() {
        return Err(Error::NotSquare {
            op: "mean_occupation",
            rows: rho_magnon.rows(),
            cols: rho_magnon.cols(),
        });
    }
    let mut acc = ZERO;
    for k in 0..rho_magnon.rows() {
        acc += rho_magnon[(k, k)] * k as f64;
    }
    if acc.im.abs() >= 1e-10 {
        return Err(Error::InvalidState(format!(
            "⟨m†m⟩ has imaginary part {:.2e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Phase-space grid for Wigner evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Points per axis.
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            re_min: -3.0,
            re_max: 3.0,
            im_min: -3.0,
            im_max: 3.0,
            points: 121,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::config(
                "scenario.wigner.points",
                "need at least 2 points per axis",
            ));
        }
        if !(self.re_max > self.re_min) || !(self.im_max > self.im_min) {
            return Err(Error::config(
                "scenario.wigner",
                "grid bounds must be increasing",
            ));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_min, self.re_max, self.points)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_min, self.im_max, self.points)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WignerGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// `values[i_re * im_axis.len() + i_im]`
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl WignerGrid {
    pub fn value(&self, i_re: usize, i_im: usize) -> f64 {
        self.values[i_re * self.im_axis.len() + i_im]
    }

    fn cell_area(&self) -> f64 {
        let d_re = self.re_axis[1] - self.re_axis[0];
        let d_im = self.im_axis[1] - self.im_axis[0];
        d_re * d_im
    }

    /// `Σ W ΔRe ΔIm`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// Quadrature moments of the grid, with `X₁ = √2 Re α`, `X₂ = √2 Im α`.
    ///
    /// The displacement convention `D(α)ρD†(α)` mirrors the plane, so means
    /// come out with the opposite sign of [`covariance`]; second moments agree.
    pub fn moment_covariance(&self) -> Covariance {
        let area = self.cell_area();
        let norm = self.integral();
        let (mut m1, mut m2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &re) in self.re_axis.iter().enumerate() {
            for (j, &im) in self.im_axis.iter().enumerate() {
                let w = self.value(i, j) * area / norm;
                let (x1, x2) = (SQRT_2 * re, SQRT_2 * im);
                m1 += w * x1;
                m2 += w * x2;
                s11 += w * x1 * x1;
                s22 += w * x2 * x2;
                s12 += w * x1 * x2;
            }
        }
        Covariance {
            mean1: m1,
            mean2: m2,
            v11: s11 - m1 * m1,
            v22: s22 - m2 * m2,
            v12: s12 - m1 * m2,
        }
    }
}

/// Wigner value at one point: `(2/π) Tr[P D(α) ρ D†(α)]`.
///
/// `ρ` is embedded in `N + DISPLACEMENT_PAD` levels so population displaced
/// above the working ceiling still enters the parity trace.
pub fn wigner_point(rho_magnon: &ComplexMatrix, alpha: C64) -> Result<f64> {
    wigner_point_padded(rho_magnon, alpha, DISPLACEMENT_PAD)
}

/// [`wigner_point`] with an explicit number of padding levels.
pub fn wigner_point_padded(rho_magnon: &ComplexMatrix, alpha: C64, pad: usize) -> Result<f64> {
    let n = rho_magnon.rows();
    let big = n + pad;
    let d = displacement(alpha, big)?.block(0, 0, big, n);
    let t = d.matmul(rho_magnon)?;
    let mut acc = ZERO;
    for k in 0..big {
        let mut diag = ZERO;
        for j in 0..n {
            diag += t[(k, j)] * d[(k, j)].conj();
        }
        if k % 2 == 0 {
            acc += diag;
        } else {
            acc -= diag;
        }
    }
    if acc.im.abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "Wigner value at {alpha} has imaginary part {:.2e}",
            acc.im
        )));
    }
    Ok(2.0 / PI * acc.re)
}

/// Evaluates the Wigner function of a magnon state on a grid.
///
/// Points beyond `|α| = √N/2` are outside where the truncation is trusted;
/// they are still evaluated, and a warning is attached.
pub fn wigner(rho_magnon: &ComplexMatrix, grid: &GridSpec) -> Result<WignerGrid> {
    check_state(rho_magnon)?;
    grid.validate()?;
    let re_axis = grid.re_axis();
    let im_axis = grid.im_axis();
    let n = rho_magnon.rows();
    let limit = (n as f64).sqrt() / 2.0;
    let extent = re_axis
        .iter()
        .flat_map(|&x| im_axis.iter().map(move |&y| x.hypot(y)))
        .fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if extent > limit {
        warnings.push(format!(
            "grid reaches |alpha| = {extent:.3}, beyond the truncation validity sqrt(N)/2 = {limit:.3}"
        ));
    }
    // D(x + iy) = e^{ixy} D(x) D(iy); the phase cancels in D ρ D†, so
    // W = (2/π) Tr[Π(x) R(y)] with Π(x) = D†(x) P D(x), R(y) = D(iy) ρ D†(iy)
    // the factored form is more sensitive to the ceiling than the direct
    // formula, so both factors get extra levels
    let big = n + 2 * DISPLACEMENT_PAD;
    let huge = big + 2 * DISPLACEMENT_PAD;
    let parity_diag: Vec<f64> = (0..huge)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let parity = ComplexMatrix::from_real_diag(&parity_diag);
    let displaced_parity = re_axis
        .par_iter()
        .map(|&x| {
            let d = displacement(c64(x, 0.0), huge)?.block(0, 0, huge, big);
            d.adjoint().matmul(&parity)?.matmul(&d)
        })
        .collect::<Result<Vec<_>>>()?;
    let displaced_states = im_axis
        .par_iter()
        .map(|&y| {
            let d = displacement(c64(0.0, y), big)?.block(0, 0, big, n);
            d.matmul(rho_magnon)?.matmul(&d.adjoint())
        })
        .collect::<Result<Vec<_>>>()?;
    let values = displaced_parity
        .par_iter()
        .flat_map_iter(|pi| {
            displaced_states.iter().map(move |r| {
                let (a, b) = (pi.as_slice(), r.as_slice());
                let mut acc = ZERO;
                for j in 0..big {
                    for l in 0..big {
                        acc += a[j * big + l] * b[l * big + j];
                    }
                }
                acc
            })
        })
        .map(|acc| {
            if acc.im.abs() > 1e-9 {
                return Err(Error::InvalidState(format!(
                    "Wigner value has imaginary part {:.2e}",
                    acc.im
                )));
            }
            Ok(2.0 / PI * acc.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WignerGrid {
        re_axis,
        im_axis,
        values,
        warnings,
    })
}

/// Explicit quadrature operators, used to cross-check the moment formulas.
pub fn quadrature_operators(n: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let a = crate::ops::annihilation(n)?;
    let ad = a.adjoint();
    let x1 = (&a + &ad).scale_real(FRAC_1_SQRT_2);
    let x2 = (&ad - &a).scale(c64(0.0, FRAC_1_SQRT_2));
    Ok((x1, x2))
}
