use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, C64, ZERO};
use crate::observables::{covariance, mean_occupation, partial_trace_qubit, QuadratureStats};
use crate::ops::HilbertSpec;

use super::engine::CompiledModel;
use super::{LindbladModel, TRACE_FAIL_TOL};

/// Smallest step (µs) before the adaptive controller gives up.
const MIN_STEP_US: f64 = 1e-12;

/// Fraction of the fastest drive period allowed per step.
const STEPS_PER_DRIVE_PERIOD: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorControl {
    pub rtol: f64,
    pub atol: f64,
    /// Classic RK4 with this step (ns) instead of the adaptive method.
    pub fixed_step_ns: Option<f64>,
    /// Caps the adaptive step (ns); the drive-frequency cap applies anyway.
    pub max_step_ns: Option<f64>,
    pub max_steps: u64,
    /// Records the smallest eigenvalue of ρ at every output time.
    pub check_positivity: bool,
    /// Keeps the reduced magnon state at every output time.
    pub keep_reduced: bool,
    #[serde(skip)]
    pub(crate) flip_jump_sign: bool,
}

impl Default for IntegratorControl {
    fn default() -> Self {
        IntegratorControl {
            rtol: 1e-8,
            atol: 1e-10,
            fixed_step_ns: None,
            max_step_ns: None,
            max_steps: 50_000_000,
            check_positivity: true,
            keep_reduced: false,
            flip_jump_sign: false,
        }
    }
}

impl IntegratorControl {
    pub fn fixed(step_ns: f64) -> Self {
        IntegratorControl {
            fixed_step_ns: Some(step_ns),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::config(
                "numerics.rtol",
                "tolerances must be positive",
            ));
        }
        if let Some(h) = self.fixed_step_ns {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::config("numerics.fixed_step_ns", "must be positive"));
            }
        }
        if let Some(h) = self.max_step_ns {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::config("numerics.max_step_ns", "must be positive"));
            }
        }
        Ok(())
    }

    pub(crate) fn with_flipped_jump_sign(mut self) -> Self {
        self.flip_jump_sign = true;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub method: String,
    pub steps: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
    pub max_step_ns: f64,
}

/// Observables at one output time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub t_ns: f64,
    pub stats: QuadratureStats,
    pub mean_occ: f64,
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: Option<f64>,
    pub purity: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spec: HilbertSpec,
    pub records: Vec<Record>,
    pub stats: IntegratorStats,
    /// Reduced magnon states per record, when requested.
    pub reduced_states: Vec<ComplexMatrix>,
    pub final_state: ComplexMatrix,
}

impl Trajectory {
    pub fn times_ns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t_ns).collect()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.trace_error)
            .fold(0.0, f64::max)
    }

    pub fn max_hermiticity(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.hermiticity)
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.min_eigenvalue)
            .reduce(f64::min)
    }

    pub fn max_purity_drift(&self) -> f64 {
        let p0 = self.records.first().map_or(0.0, |r| r.purity);
        self.records
            .iter()
            .map(|r| (r.purity - p0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_initial(rho0: &ComplexMatrix, d: usize) -> Result<()> {
    if rho0.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            op: "evolve",
            left: rho0.shape(),
            right: (d, d),
        });
    }
    let tr = rho0.trace()?;
    if (tr - c64(1.0, 0.0)).norm() > TRACE_FAIL_TOL {
        return Err(Error::InvalidState(format!("initial trace {tr} is not 1")));
    }
    let h = rho0.hermiticity_residual();
    if h > 1e-10 {
        return Err(Error::InvalidState(format!(
            "initial state not Hermitian (residual {h:.2e})"
        )));
    }
    Ok(())
}

/// Number of output intervals; the horizon must be a multiple of the spacing.
fn output_count(horizon_ns: f64, output_dt_ns: f64) -> Result<usize> {
    if !(output_dt_ns > 0.0) || !(horizon_ns > 0.0) {
        return Err(Error::config(
            "numerics.horizon_ns",
            "horizon and output spacing must be positive",
        ));
    }
    let n = (horizon_ns / output_dt_ns).round();
    if (n * output_dt_ns - horizon_ns).abs() > 1e-9 * horizon_ns {
        return Err(Error::config(
            "numerics.output_dt_ns",
            format!(
                "horizon {horizon_ns} ns is not a multiple of the output spacing {output_dt_ns} ns"
            ),
        ));
    }
    Ok(n as usize)
}

fn hermitize(y: &mut [C64], d: usize) {
    for i in 0..d {
        y[i * d + i].im = 0.0;
        for j in i + 1..d {
            let a = y[i * d + j];
            let b = y[j * d + i];
            let s = (a + b.conj()) * 0.5;
            y[i * d + j] = s;
            y[j * d + i] = s.conj();
        }
    }
}

struct Recorder<'a> {
    spec: &'a HilbertSpec,
    control: &'a IntegratorControl,
    records: Vec<Record>,
    reduced: Vec<ComplexMatrix>,
}

impl Recorder<'_> {
    fn push(&mut self, t_ns: f64, y: &[C64]) -> Result<()> {
        let d = self.spec.dim();
        let t_us = t_ns * 1e-3;
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::IntegrationFailed {
                t_us,
                reason: "state became non-finite".into(),
            });
        }
        let rho = ComplexMatrix::from_vec(d, d, y.to_vec())?;
        let tr = rho.trace()?;
        let trace_error = (tr - c64(1.0, 0.0)).norm();
        if trace_error > TRACE_FAIL_TOL {
            return Err(Error::IntegrationFailed {
                t_us,
                reason: format!("trace drift {trace_error:.3e} exceeds {TRACE_FAIL_TOL:e}"),
            });
        }
        let purity = y.iter().map(|z| z.norm_sqr()).sum();
        let hermiticity = rho.hermiticity_residual();
        let min_eigenvalue = if self.control.check_positivity {
            Some(rho.eigvals_hermitian_tol(1e-6)?[0])
        } else {
            None
        };
        let reduced = partial_trace_qubit(&rho, self.spec)?;
        let stats =
            covariance(&reduced)
                .and_then(|c| c.stats())
                .map_err(|e| Error::IntegrationFailed {
                    t_us,
                    reason: e.to_string(),
                })?;
        let mean_occ = mean_occupation(&reduced)?;
        self.records.push(Record {
            t_ns,
            stats,
            mean_occ,
            trace_error,
            hermiticity,
            min_eigenvalue,
            purity,
        });
        if self.control.keep_reduced {
            self.reduced.push(reduced);
        }
        Ok(())
    }
}

/// Integrates `model` from `rho0` over `[0, horizon_ns]`, recording
/// observables every `output_dt_ns`.
pub fn evolve(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    horizon_ns: f64,
    output_dt_ns: f64,
    control: &IntegratorControl,
) -> Result<Trajectory> {
    control.validate()?;
    let d = model.dim();
    check_initial(rho0, d)?;
    let n_out = output_count(horizon_ns, output_dt_ns)?;
    let mut f = CompiledModel::new(model)?;
    if control.flip_jump_sign {
        f.flip_jump_sign();
    }

    let mut y = rho0.as_slice().to_vec();
    hermitize(&mut y, d);
    let mut rec = Recorder {
        spec: &model.spec,
        control,
        records: Vec::with_capacity(n_out + 1),
        reduced: Vec::new(),
    };
    rec.push(0.0, &y)?;

    let out_time_us = |k: usize| k as f64 * output_dt_ns * 1e-3;
    let stats = match control.fixed_step_ns {
        Some(step_ns) => {
            let mut stepper = Rk4::new(d * d);
            let dt_us = output_dt_ns * 1e-3;
            let per_interval = ((dt_us / (step_ns * 1e-3)) - 1e-9).ceil().max(1.0) as usize;
            let h = dt_us / per_interval as f64;
            let mut stats = IntegratorStats {
                method: "rk4".into(),
                max_step_ns: h * 1e3,
                ..IntegratorStats::default()
            };
            for k in 1..=n_out {
                let t0 = out_time_us(k - 1);
                for j in 0..per_interval {
                    let t = t0 + j as f64 * h;
                    stepper.step(&mut f, t, h, &mut y);
                    hermitize(&mut y, d);
                    stats.steps += 1;
                    stats.rhs_evals += 4;
                    if stats.steps > control.max_steps {
                        return Err(Error::IntegrationFailed {
                            t_us: t,
                            reason: format!("exceeded {} steps", control.max_steps),
                        });
                    }
                }
                rec.push(k as f64 * output_dt_ns, &y)?;
            }
            stats
        }
        None => {
            let f_max = model.hamiltonian.max_frequency() / (2.0 * std::f64::consts::PI);
            let mut h_max = out_time_us(1);
            if f_max > 0.0 {
                h_max = h_max.min(1.0 / (STEPS_PER_DRIVE_PERIOD * f_max));
            }
            if let Some(cap) = control.max_step_ns {
                h_max = h_max.min(cap * 1e-3);
            }
            let mut dp = DormandPrince::new(d * d, control.rtol, control.atol, h_max);
            let mut stats = IntegratorStats {
                method: "dopri5".into(),
                max_step_ns: h_max * 1e3,
                ..IntegratorStats::default()
            };
            dp.start(&mut f, 0.0, &y, &mut stats);
            let mut t = 0.0;
            for k in 1..=n_out {
                let target = out_time_us(k);
                dp.advance_to(&mut f, &mut t, target, &mut y, d, control, &mut stats)?;
                rec.push(k as f64 * output_dt_ns, &y)?;
            }
            stats
        }
    };

    let final_state = ComplexMatrix::from_vec(d, d, y)?;
    Ok(Trajectory {
        spec: model.spec,
        records: rec.records,
        stats,
        reduced_states: rec.reduced,
        final_state,
    })
}

struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![ZERO; n],
            k2: vec![ZERO; n],
            k3: vec![ZERO; n],
            k4: vec![ZERO; n],
            tmp: vec![ZERO; n],
        }
    }

    fn step(&mut self, f: &mut CompiledModel, t: f64, h: f64, y: &mut [C64]) {
        f.eval(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * h);
        }
        f.eval(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k2[i] * (0.5 * h);
        }
        f.eval(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        f.eval(t + h, &self.tmp, &mut self.k4);
        let h6 = h / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * h6;
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct DormandPrince {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    rtol: f64,
    atol: f64,
    h_max: f64,
    h: f64,
    err_old: f64,
}

impl DormandPrince {
    fn new(n: usize, rtol: f64, atol: f64, h_max: f64) -> Self {
        DormandPrince {
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
            y_new: vec![ZERO; n],
            rtol,
            atol,
            h_max,
            h: 0.0,
            err_old: 1e-4,
        }
    }

    fn scaled_norm(&self, v: &[C64], y: &[C64]) -> f64 {
        v.iter()
            .zip(y)
            .map(|(e, x)| e.norm() / (self.atol + self.rtol * x.norm()))
            .fold(0.0, f64::max)
    }

    /// Evaluates the first stage and picks the initial step.
    fn start(&mut self, f: &mut CompiledModel, t: f64, y: &[C64], stats: &mut IntegratorStats) {
        f.eval(t, y, &mut self.k[0]);
        stats.rhs_evals += 1;
        let d0 = self.scaled_norm(y, y);
        let d1 = self.scaled_norm(&self.k[0], y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
        .min(self.h_max);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k[0][i] * h0;
        }
        f.eval(t + h0, &self.tmp, &mut self.k[1]);
        stats.rhs_evals += 1;
        let diff: Vec<C64> = self.k[1]
            .iter()
            .zip(&self.k[0])
            .map(|(a, b)| a - b)
            .collect();
        let d2 = self.scaled_norm(&diff, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        self.h = (100.0 * h0).min(h1).min(self.h_max);
    }

    fn stage(&mut self, f: &mut CompiledModel, t: f64, h: f64, y: &[C64], s: usize, a: &[f64]) {
        for i in 0..y.len() {
            let mut acc = y[i];
            for (j, &aj) in a.iter().enumerate() {
                if aj != 0.0 {
                    acc += self.k[j][i] * (h * aj);
                }
            }
            self.tmp[i] = acc;
        }
        f.eval(t + C[s] * h, &self.tmp, &mut self.k[s]);
    }

    #[allow(clippy::too_many_arguments)]
    fn advance_to(
        &mut self,
        f: &mut CompiledModel,
        t: &mut f64,
        target: f64,
        y: &mut [C64],
        d: usize,
        control: &IntegratorControl,
        stats: &mut IntegratorStats,
    ) -> Result<()> {
        while *t < target {
            let mut h = self.h.min(self.h_max);
            let remaining = target - *t;
            let clipped = h >= remaining * (1.0 - 1e-12);
            if clipped {
                h = remaining;
            }
            if h < MIN_STEP_US {
                return Err(Error::IntegrationFailed {
                    t_us: *t,
                    reason: format!("step size underflow (h = {h:.3e} µs)"),
                });
            }
            self.stage(f, *t, h, y, 1, &A2);
            self.stage(f, *t, h, y, 2, &A3);
            self.stage(f, *t, h, y, 3, &A4);
            self.stage(f, *t, h, y, 4, &A5);
            self.stage(f, *t, h, y, 5, &A6);
            for i in 0..y.len() {
                let mut acc = y[i];
                for (j, &bj) in B.iter().enumerate() {
                    if bj != 0.0 {
                        acc += self.k[j][i] * (h * bj);
                    }
                }
                self.y_new[i] = acc;
            }
            f.eval(*t + h, &self.y_new, &mut self.k[6]);
            stats.rhs_evals += 6;

            // max norm: the few large entries of ρ must not be diluted by
            // the many entries below atol
            let mut err: f64 = 0.0;
            for i in 0..y.len() {
                let mut e = ZERO;
                for (j, &ej) in E.iter().enumerate() {
                    if ej != 0.0 {
                        e += self.k[j][i] * (h * ej);
                    }
                }
                let sc = self.atol + self.rtol * y[i].norm().max(self.y_new[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::IntegrationFailed {
                    t_us: *t,
                    reason: "non-finite error estimate".into(),
                });
            }

            let fac11 = err.powf(EXPO);
            if err <= 1.0 {
                let fac =
                    (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let h_new = h / fac;
                self.err_old = err.max(1e-4);
                *t = if clipped { target } else { *t + h };
                y.copy_from_slice(&self.y_new);
                hermitize(y, d);
                self.k.swap(0, 6);
                self.h = if clipped { h_new.max(self.h) } else { h_new }.min(self.h_max);
                stats.steps += 1;
                if stats.steps > control.max_steps {
                    return Err(Error::IntegrationFailed {
                        t_us: *t,
                        reason: format!("exceeded {} steps", control.max_steps),
                    });
                }
            } else {
                self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                stats.rejected += 1;
            }
        }
        Ok(())
    }
}
