//! First and second moments of the two-magnon model, used as an oracle for
//! the Lindblad engine.
//!
//! In quadratures the two-magnon Hamiltonian reads
//! `(δ_m/2)[(1 − g_c²)X₁² + X₂²]`, so `Ẋ₁ = δ_m X₂` and
//! `Ẋ₂ = −δ_m(1 − g_c²)X₁`. Magnon damping adds `−κ/2` to the drift and
//! `κ(n̄ + ½)` to the diffusion. Moments obey `ṙ = A r` and
//! `V̇ = AV + VAᵀ + D`.

use nalgebra::{Matrix2, Matrix4, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::Trajectory;
use crate::observables::{min_variance, Covariance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceState {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl CovarianceState {
    pub fn vacuum() -> Self {
        Self::thermal(0.0)
    }

    pub fn thermal(nbar: f64) -> Self {
        CovarianceState {
            mean: Vector2::zeros(),
            cov: Matrix2::identity() * (nbar + 0.5),
        }
    }

    pub fn from_covariance(c: &Covariance) -> Self {
        CovarianceState {
            mean: Vector2::new(c.mean1, c.mean2),
            cov: Matrix2::new(c.v11, c.v12, c.v12, c.v22),
        }
    }

    pub fn to_covariance(&self) -> Covariance {
        Covariance {
            mean1: self.mean[0],
            mean2: self.mean[1],
            v11: self.cov[(0, 0)],
            v22: self.cov[(1, 1)],
            v12: 0.5 * (self.cov[(0, 1)] + self.cov[(1, 0)]),
        }
    }

    pub fn det(&self) -> f64 {
        self.cov.determinant()
    }

    pub fn v_min(&self) -> f64 {
        min_variance(self.cov[(0, 0)], self.cov[(1, 1)], self.cov[(0, 1)]).0
    }

    /// Largest principal variance.
    pub fn v_max(&self) -> f64 {
        let v11 = self.cov[(0, 0)];
        let v22 = self.cov[(1, 1)];
        v11 + v22 - self.v_min()
    }

    /// Symmetric, positive definite and within the uncertainty bound.
    pub fn is_physical(&self) -> bool {
        let sym = (self.cov[(0, 1)] - self.cov[(1, 0)]).abs() < 1e-12;
        sym && self.cov[(0, 0)] > 0.0 && self.det() >= 0.25 - 1e-9
    }
}

/// Drift and diffusion matrices; `delta_m` and `kappa` in rad/µs.
pub fn drift_matrices(
    delta_m: f64,
    g_c: f64,
    kappa: f64,
    nbar: f64,
) -> (Matrix2<f64>, Matrix2<f64>) {
    let a = Matrix2::new(
        -kappa / 2.0,
        delta_m,
        -delta_m * (1.0 - g_c * g_c),
        -kappa / 2.0,
    );
    let d = Matrix2::identity() * (kappa * (nbar + 0.5));
    (a, d)
}

/// Exact moments at each time (µs) for constant `A` and `D`.
///
/// The diffusion integral `∫₀ᵗ e^{As} D e^{Aᵀs} ds` comes from the block
/// exponential of `[[−A, D], [0, Aᵀ]]·t`.
pub fn evolve_covariance(
    a: &Matrix2<f64>,
    d: &Matrix2<f64>,
    state0: &CovarianceState,
    times_us: &[f64],
) -> Result<Vec<CovarianceState>> {
    if !state0.is_physical() {
        return Err(Error::InvalidState(format!(
            "initial covariance {:?} is not a physical state",
            state0.cov
        )));
    }
    let mut out = Vec::with_capacity(times_us.len());
    for &t in times_us {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-a * t));
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&(d * t));
        m.fixed_view_mut::<2, 2>(2, 2)
            .copy_from(&(a.transpose() * t));
        let e = m.exp();
        let f12: Matrix2<f64> = e.fixed_view::<2, 2>(0, 2).into();
        let eat_t: Matrix2<f64> = e.fixed_view::<2, 2>(2, 2).into();
        let eat = eat_t.transpose();
        let q = eat * f12;
        let cov = eat * state0.cov * eat_t + 0.5 * (q + q.transpose());
        out.push(CovarianceState {
            mean: eat * state0.mean,
            cov: 0.5 * (cov + cov.transpose()),
        });
    }
    Ok(out)
}

/// Closed-form vacuum evolution at κ = 0 for `g_c < 1`:
/// `(V₁₁, V₂₂, V₁₂)` with `r = √(1 − g_c²)` and `ω = δ_m r`.
pub fn closed_form_vacuum(delta_m: f64, g_c: f64, t_us: f64) -> (f64, f64, f64) {
    let r = (1.0 - g_c * g_c).sqrt();
    let (s, c) = (delta_m * r * t_us).sin_cos();
    let v11 = 0.5 * (c * c + s * s / (r * r));
    let v22 = 0.5 * (c * c + r * r * s * s);
    let v12 = 0.5 * s * c * (1.0 / r - r);
    (v11, v22, v12)
}

/// Largest principal variance, per Fock level, that an N-level run still
/// reproduces to 1e-3.
pub const TRUNCATION_TRUST: f64 = 0.1;

/// Per-field maximum deviation between an engine run and the oracle.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CompareReport {
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
    pub mean1: f64,
    pub mean2: f64,
    pub points: usize,
    /// Last compared time, ns.
    pub window_end_ns: f64,
    /// True when the window stopped early because the oracle's largest
    /// variance exceeded [`TRUNCATION_TRUST`]`·N`.
    pub capped: bool,
}

impl CompareReport {
    pub fn max_second_moment(&self) -> f64 {
        self.v11.max(self.v22).max(self.v12)
    }
}

/// Compares an engine trajectory with oracle states on the same grid,
/// stopping where the oracle's largest variance exceeds
/// [`TRUNCATION_TRUST`]`·fock_dim`.
pub fn compare(
    engine: &Trajectory,
    oracle: &[CovarianceState],
    times_ns: &[f64],
) -> Result<CompareReport> {
    if engine.records.len() != oracle.len() || oracle.len() != times_ns.len() {
        return Err(Error::InvalidArgument(format!(
            "grid mismatch: {} engine records, {} oracle states, {} times",
            engine.records.len(),
            oracle.len(),
            times_ns.len()
        )));
    }
    let cap = TRUNCATION_TRUST * engine.spec.fock_dim() as f64;
    let mut report = CompareReport::default();
    for ((rec, o), &t) in engine.records.iter().zip(oracle).zip(times_ns) {
        if (rec.t_ns - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "grid mismatch at {} ns vs {t} ns",
                rec.t_ns
            )));
        }
        if o.v_max() > cap {
            report.capped = true;
            break;
        }
        let c = o.to_covariance();
        let s = &rec.stats;
        report.v11 = report.v11.max((s.v11 - c.v11).abs());
        report.v22 = report.v22.max((s.v22 - c.v22).abs());
        report.v12 = report.v12.max((s.v12 - c.v12).abs());
        report.mean1 = report.mean1.max((s.mean1 - c.mean1).abs());
        report.mean2 = report.mean2.max((s.mean2 - c.mean2).abs());
        report.points += 1;
        report.window_end_ns = t;
    }
    Ok(report)
}
