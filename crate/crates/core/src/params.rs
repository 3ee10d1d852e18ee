//! Physical parameters and everything derived from them.
//!
//! Every frequency, coupling, drive amplitude and rate is stored as an
//! ordinary frequency ν = ω/2π in MHz. Dynamics run in microseconds with
//! angular frequencies, so [`angular`] (×2π) is applied exactly once, when a
//! Hamiltonian or collapse operator is built.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 Planck constant, J·s (exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// CODATA 2018 reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// CODATA 2018 Boltzmann constant, J/K (exact).
pub const BOLTZMANN_K: f64 = 1.380_649e-23;

/// Drive matching |Δ₁₂ − 2E₁| is flagged above this many MHz.
pub const DRIVE_MATCH_TOL_MHZ: f64 = 0.1;

/// MHz → rad/µs.
#[inline]
pub fn angular(nu_mhz: f64) -> f64 {
    2.0 * PI * nu_mhz
}

/// Raw physical inputs. Frequencies and rates in MHz (ω/2π), temperature in
/// kelvin, phase in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Cavity frequency.
    pub nu_c: f64,
    /// Bare qubit transition frequency.
    #[serde(rename = "nu_Q")]
    pub nu_qubit: f64,
    /// Bare magnon (Kittel mode) frequency.
    #[serde(rename = "nu_M")]
    pub nu_magnon: f64,
    pub g_cq: f64,
    pub g_cm: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    pub nu_1: f64,
    pub nu_2: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(default)]
    pub delta_phi: f64,
    /// Pins the effective magnon-qubit coupling G instead of evaluating the
    /// dispersive formula. `null` means "use the formula".
    #[serde(rename = "G_override", default)]
    pub jc_coupling_override: Option<f64>,
}

impl SystemParams {
    /// The operating point of the squeezing protocol: dispersive cavity,
    /// drives at E₁/2π = 500 MHz and E₂/2π = 60 MHz, κ/2π = 0.5 MHz,
    /// γ/2π = γ_φ/2π = 3 kHz, T = 10 mK. G is pinned to its quoted value
    /// 13.4 MHz, which puts the Rabi coupling at g_c ≈ 0.9988.
    pub fn operating_point() -> Self {
        SystemParams {
            jc_coupling_override: Some(13.4),
            ..Self::operating_point_unpinned()
        }
    }

    /// Same as [`SystemParams::operating_point`] but with G taken from the dispersive
    /// formula (13.423 MHz, g_c ≈ 1.0005).
    pub fn operating_point_unpinned() -> Self {
        SystemParams {
            nu_c: 6218.0,
            nu_qubit: 5844.7,
            nu_magnon: 5920.5,
            g_cq: 74.7,
            g_cm: 59.5,
            e1: 500.0,
            e2: 60.0,
            nu_1: 5929.4,
            nu_2: 4929.4,
            kappa: 0.5,
            gamma: 0.003,
            gamma_phi: 0.003,
            temperature: 0.010,
            delta_phi: 0.0,
            jc_coupling_override: None,
        }
    }

    /// Multiplies every frequency, coupling, drive amplitude and rate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        SystemParams {
            nu_c: self.nu_c * s,
            nu_qubit: self.nu_qubit * s,
            nu_magnon: self.nu_magnon * s,
            g_cq: self.g_cq * s,
            g_cm: self.g_cm * s,
            e1: self.e1 * s,
            e2: self.e2 * s,
            nu_1: self.nu_1 * s,
            nu_2: self.nu_2 * s,
            kappa: self.kappa * s,
            gamma: self.gamma * s,
            gamma_phi: self.gamma_phi * s,
            temperature: self.temperature,
            delta_phi: self.delta_phi,
            jc_coupling_override: self.jc_coupling_override.map(|g| g * s),
        }
    }

    /// Rejects negative or non-finite inputs.
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("nu_c", self.nu_c),
            ("nu_Q", self.nu_qubit),
            ("nu_M", self.nu_magnon),
            ("g_cq", self.g_cq),
            ("g_cm", self.g_cm),
            ("E1", self.e1),
            ("E2", self.e2),
            ("nu_1", self.nu_1),
            ("nu_2", self.nu_2),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_phi", self.gamma_phi),
            ("T", self.temperature),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(
                    format!("system.{name}"),
                    format!("must be finite and non-negative, got {v}"),
                ));
            }
        }
        if !self.delta_phi.is_finite() {
            return Err(Error::config("system.delta_phi", "must be finite"));
        }
        if let Some(g) = self.jc_coupling_override {
            if !g.is_finite() {
                return Err(Error::config("system.G_override", "must be finite"));
            }
        }
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::operating_point()
    }
}

/// Quantities derived from [`SystemParams`]. Frequencies in MHz (ω/2π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Δ_q = ν_c − ν_Q
    #[serde(rename = "Delta_q")]
    pub delta_cq: f64,
    /// Δ_m = ν_c − ν_M
    #[serde(rename = "Delta_m")]
    pub delta_cm: f64,
    /// Dispersively shifted qubit frequency.
    pub nu_q: f64,
    /// Dispersively shifted magnon frequency.
    pub nu_m: f64,
    /// Effective magnon-qubit JC coupling G actually used.
    #[serde(rename = "G")]
    pub jc_coupling: f64,
    /// G from the dispersive formula, whether or not it is overridden.
    #[serde(rename = "G_formula")]
    pub jc_coupling_formula: f64,
    /// Rabi coupling g = G/2.
    #[serde(rename = "g")]
    pub rabi_coupling: f64,
    /// δ_m = ν_m − ν_1
    pub delta_m: f64,
    /// δ_q = ν_q − ν_1
    pub delta_q: f64,
    /// Δ₁₂ = ν_1 − ν_2
    #[serde(rename = "Delta_12")]
    pub delta_12: f64,
    /// Dimensionless coupling g_c = 2g/√(E₂δ_m).
    pub g_c: f64,
    /// ζ = δ_m/E₂
    pub zeta: f64,
    pub nbar_m: f64,
    pub nbar_q: f64,
}

/// Computes every derived quantity.
pub fn derive(p: &SystemParams) -> Result<DerivedParams> {
    p.validate()?;
    let delta_cq = p.nu_c - p.nu_qubit;
    let delta_cm = p.nu_c - p.nu_magnon;
    if delta_cq == 0.0 {
        return Err(Error::ZeroDetuning { symbol: "Delta_q" });
    }
    if delta_cm == 0.0 {
        return Err(Error::ZeroDetuning { symbol: "Delta_m" });
    }
    let nu_m = p.nu_magnon + p.g_cm * p.g_cm / delta_cm;
    let nu_q = p.nu_qubit + p.g_cq * p.g_cq / delta_cq;
    let jc_coupling_formula = 0.5 * p.g_cq * p.g_cm * (1.0 / delta_cm + 1.0 / delta_cq);
    let jc_coupling = p.jc_coupling_override.unwrap_or(jc_coupling_formula);
    let rabi_coupling = jc_coupling / 2.0;
    let delta_m = nu_m - p.nu_1;
    let delta_q = nu_q - p.nu_1;
    let delta_12 = p.nu_1 - p.nu_2;
    if p.e2 <= 0.0 {
        return Err(Error::CriticalCouplingUndefined(format!(
            "E2 must be positive, got {}",
            p.e2
        )));
    }
    if delta_m <= 0.0 {
        return Err(Error::CriticalCouplingUndefined(format!(
            "delta_m = nu_m - nu_1 must be positive, got {delta_m}"
        )));
    }
    let g_c = 2.0 * rabi_coupling.abs() / (p.e2 * delta_m).sqrt();
    let zeta = delta_m / p.e2;
    let nbar_m = thermal_occupation(nu_m, p.temperature)?;
    let nbar_q = thermal_occupation(nu_q, p.temperature)?;
    Ok(DerivedParams {
        delta_cq,
        delta_cm,
        nu_q,
        nu_m,
        jc_coupling,
        jc_coupling_formula,
        rabi_coupling,
        delta_m,
        delta_q,
        delta_12,
        g_c,
        zeta,
        nbar_m,
        nbar_q,
    })
}

/// Bose-Einstein occupation `1/(exp(hν/k_BT) − 1)`, exactly 0 at T = 0.
pub fn thermal_occupation(nu_mhz: f64, temperature: f64) -> Result<f64> {
    if !(nu_mhz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "thermal occupation needs a positive frequency, got {nu_mhz} MHz"
        )));
    }
    if !(temperature >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be non-negative, got {temperature} K"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = PLANCK_H * nu_mhz * 1e6 / (BOLTZMANN_K * temperature);
    Ok(1.0 / x.exp_m1())
}

/// A violated validity condition of the effective description.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeWarning {
    /// Δ₁₂ ≠ 2E₁: the second drive is not resonant with the dressed qubit.
    DriveMismatch { delta_12: f64, two_e1: f64 },
    /// Δ₁₂/E₂ < 10: rotating-wave approximation doubtful.
    RwaDrive { ratio: f64 },
    /// Δ₁₂/G < 10: rotating-wave approximation doubtful.
    RwaCoupling { ratio: f64 },
    /// Δ_q/g_cq < 3: cavity not dispersive for the qubit.
    DispersiveQubit { ratio: f64 },
    /// Δ_m/g_cm < 3: cavity not dispersive for the magnon.
    DispersiveMagnon { ratio: f64 },
    /// ζ > 0.1: too far from the ζ → 0 limit.
    LargeZeta { zeta: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeWarning::DriveMismatch { delta_12, two_e1 } => write!(
                f,
                "drive mismatch: Delta_12 = {delta_12:.3} MHz but 2*E1 = {two_e1:.3} MHz"
            ),
            RegimeWarning::RwaDrive { ratio } => {
                write!(f, "RWA: Delta_12/E2 = {ratio:.2} < 10")
            }
            RegimeWarning::RwaCoupling { ratio } => {
                write!(f, "RWA: Delta_12/G = {ratio:.2} < 10")
            }
            RegimeWarning::DispersiveQubit { ratio } => {
                write!(f, "dispersive: Delta_q/g_cq = {ratio:.2} < 3")
            }
            RegimeWarning::DispersiveMagnon { ratio } => {
                write!(f, "dispersive: Delta_m/g_cm = {ratio:.2} < 3")
            }
            RegimeWarning::LargeZeta { zeta } => write!(f, "zeta = {zeta:.4} > 0.1"),
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num.abs() / den.abs()
    }
}

/// Lists every violated validity condition; never fails.
pub fn check_regime(derived: &DerivedParams, params: &SystemParams) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    let two_e1 = 2.0 * params.e1;
    if (derived.delta_12 - two_e1).abs() > DRIVE_MATCH_TOL_MHZ {
        out.push(RegimeWarning::DriveMismatch {
            delta_12: derived.delta_12,
            two_e1,
        });
    }
    let r = ratio(derived.delta_12, params.e2);
    if r < 10.0 {
        out.push(RegimeWarning::RwaDrive { ratio: r });
    }
    let r = ratio(derived.delta_12, derived.jc_coupling);
    if r < 10.0 {
        out.push(RegimeWarning::RwaCoupling { ratio: r });
    }
    let r = ratio(derived.delta_cq, params.g_cq);
    if r < 3.0 {
        out.push(RegimeWarning::DispersiveQubit { ratio: r });
    }
    let r = ratio(derived.delta_cm, params.g_cm);
    if r < 3.0 {
        out.push(RegimeWarning::DispersiveMagnon { ratio: r });
    }
    if derived.zeta > 0.1 {
        out.push(RegimeWarning::LargeZeta { zeta: derived.zeta });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn operating_point_values() {
        let d = derive(&SystemParams::operating_point_unpinned()).unwrap();
        assert!((d.delta_cq - 373.3).abs() < 0.1);
        assert!((d.delta_cm - 297.5).abs() < 0.1);
        assert!((d.nu_q - 5859.6).abs() < 0.1);
        assert!((d.nu_m - 5932.4).abs() < 0.1);
        assert!((d.jc_coupling - 13.4).abs() < 0.1);
        assert!((d.delta_m - 3.0).abs() < 1e-9);
    }

    #[test]
    fn pinned_coupling_places_near_criticality() {
        let d = derive(&SystemParams::operating_point()).unwrap();
        assert_eq!(d.jc_coupling, 13.4);
        assert_eq!(d.rabi_coupling, 6.7);
        let want = 13.4 / 180f64.sqrt();
        assert!((d.g_c - want).abs() < 1e-9);
        assert!((d.g_c - 0.9988).abs() < 1e-4);
        assert!((d.zeta - 0.05).abs() < 1e-9);
        // the formula value is still reported
        assert!((d.jc_coupling_formula - 13.4232).abs() < 1e-3);
    }

    #[test]
    fn decoupled_limit() {
        let p = SystemParams {
            g_cq: 0.0,
            g_cm: 0.0,
            nu_1: 5910.0,
            nu_2: 4910.0,
            jc_coupling_override: None,
            ..SystemParams::operating_point()
        };
        let d = derive(&p).unwrap();
        assert_eq!((d.jc_coupling, d.rabi_coupling, d.g_c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_detuning_names_symbol() {
        let p = SystemParams {
            nu_c: 5920.5,
            ..SystemParams::operating_point()
        };
        match derive(&p) {
            Err(Error::ZeroDetuning { symbol }) => assert_eq!(symbol, "Delta_m"),
            other => panic!("unexpected {other:?}"),
        }
        let p = SystemParams {
            nu_c: 5844.7,
            ..SystemParams::operating_point()
        };
        assert!(matches!(
            derive(&p),
            Err(Error::ZeroDetuning { symbol: "Delta_q" })
        ));
    }

    #[test]
    fn negative_drive_detuning_rejected() {
        let p = SystemParams {
            nu_1: 5940.0,
            ..SystemParams::operating_point()
        };
        assert!(matches!(
            derive(&p),
            Err(Error::CriticalCouplingUndefined(_))
        ));
    }

    #[test]
    fn thermal_occupation_values() {
        assert_eq!(thermal_occupation(5932.4, 0.0).unwrap(), 0.0);
        let cold = thermal_occupation(5932.4, 0.010).unwrap();
        assert!((cold / 4.3e-13 - 1.0).abs() < 0.05, "{cold}");
        let warm = thermal_occupation(5932.4, 0.100).unwrap();
        assert!((warm - 0.062).abs() < 1e-3, "{warm}");
        assert!(thermal_occupation(0.0, 0.1).is_err());
        assert!(thermal_occupation(-1.0, 0.1).is_err());
    }

    #[test]
    fn operating_point_is_in_regime() {
        let p = SystemParams::operating_point();
        let d = derive(&p).unwrap();
        assert!(
            check_regime(&d, &p).is_empty(),
            "{:?}",
            check_regime(&d, &p)
        );
        assert!((d.delta_12 / p.e2 - 16.67).abs() < 0.01);
    }

    #[test]
    fn drive_mismatch_flagged() {
        let p = SystemParams {
            e1: 400.0,
            ..SystemParams::operating_point()
        };
        let d = derive(&p).unwrap();
        let w = check_regime(&d, &p);
        assert!(w
            .iter()
            .any(|w| matches!(w, RegimeWarning::DriveMismatch { .. })));
    }

    #[test]
    fn dispersive_violation_flagged() {
        let p = SystemParams {
            g_cq: 200.0,
            ..SystemParams::operating_point()
        };
        let d = derive(&p).unwrap();
        let w = check_regime(&d, &p);
        assert!(w
            .iter()
            .any(|w| matches!(w, RegimeWarning::DispersiveQubit { .. })));
    }

    #[test]
    fn json_field_names() {
        let v = serde_json::to_value(SystemParams::operating_point()).unwrap();
        for key in [
            "nu_c",
            "nu_Q",
            "nu_M",
            "E1",
            "E2",
            "T",
            "G_override",
            "delta_phi",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let d = serde_json::to_value(derive(&SystemParams::operating_point()).unwrap()).unwrap();
        for key in ["Delta_q", "Delta_m", "G", "g", "g_c", "zeta", "Delta_12"] {
            assert!(d.get(key).is_some(), "missing {key}");
        }
    }

    proptest! {
        #[test]
        fn derive_is_scale_consistent(s in 0.1f64..10.0) {
            let p = SystemParams::operating_point_unpinned();
            let a = derive(&p).unwrap();
            let b = derive(&p.scaled(s)).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
            prop_assert!(close(b.delta_cq, s * a.delta_cq));
            prop_assert!(close(b.delta_cm, s * a.delta_cm));
            prop_assert!(close(b.nu_q, s * a.nu_q));
            prop_assert!(close(b.nu_m, s * a.nu_m));
            prop_assert!(close(b.jc_coupling, s * a.jc_coupling));
            prop_assert!(close(b.delta_m, s * a.delta_m));
            prop_assert!(close(b.delta_q, s * a.delta_q));
            prop_assert!(close(b.delta_12, s * a.delta_12));
            prop_assert!(close(b.g_c, a.g_c));
            prop_assert!(close(b.zeta, a.zeta));
        }

        #[test]
        fn occupation_monotone(nu in 100.0f64..20000.0, t in 0.001f64..1.0, f in 1.01f64..3.0) {
            let base = thermal_occupation(nu, t).unwrap();
            prop_assert!(thermal_occupation(nu, t * f).unwrap() >= base);
            prop_assert!(thermal_occupation(nu * f, t).unwrap() <= base);
        }
    }
}
