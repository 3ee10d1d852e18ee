//! Run configuration: one JSON document with `system`, `scenario`,
//! `numerics` and `output_dir`, plus dotted-path overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lindblad::{IntegratorControl, ModelKind};
use crate::observables::GridSpec;
use crate::params::SystemParams;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MAGNON_OUTPUT_DIR";

/// Output directory used when neither the config, the CLI nor the
/// environment names one.
pub const DEFAULT_OUTPUT_DIR: &str = "magnon-out";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Thermal magnon at n̄_m, qubit in |g⟩.
    #[default]
    Thermal,
    /// Magnon vacuum, qubit in |g⟩.
    Vacuum,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fig3Axis {
    Kappa,
    Temperature,
    #[default]
    Both,
}

fn default_model() -> ModelKind {
    ModelKind::Rabi
}

fn default_fig2_models() -> Vec<ModelKind> {
    vec![ModelKind::Full, ModelKind::Rabi]
}

fn default_kappas() -> Vec<f64> {
    vec![0.1, 0.5, 1.0, 2.0]
}

fn default_temperatures() -> Vec<f64> {
    vec![0.010, 0.050, 0.100, 0.200]
}

fn default_gammas() -> Vec<f64> {
    vec![0.0, 0.003, 0.03, 0.3]
}

fn default_phase_points() -> usize {
    25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Scenario {
    /// One trajectory of one model.
    Single {
        #[serde(default = "default_model")]
        model: ModelKind,
    },
    /// Full and Rabi branches from the same initial state.
    Fig2 {
        #[serde(default = "default_fig2_models")]
        models: Vec<ModelKind>,
    },
    /// S(t) families over magnon damping and bath temperature.
    Fig3 {
        #[serde(default = "default_model")]
        model: ModelKind,
        #[serde(default)]
        axis: Fig3Axis,
        /// κ/2π in MHz.
        #[serde(default = "default_kappas")]
        kappas: Vec<f64>,
        /// Kelvin.
        #[serde(default = "default_temperatures")]
        temperatures: Vec<f64>,
    },
    /// Maximum squeezing over a κ × γ grid plus the Wigner function of the
    /// operating-point cell.
    Fig4 {
        #[serde(default = "default_model")]
        model: ModelKind,
        #[serde(default = "default_kappas")]
        kappas: Vec<f64>,
        /// γ/2π in MHz.
        #[serde(default = "default_gammas")]
        gammas: Vec<f64>,
        #[serde(default)]
        wigner: GridSpec,
    },
    /// S(t, δφ) on the full model.
    Fig5 {
        #[serde(default = "default_phase_points")]
        phase_points: usize,
        /// Explicit δφ values (radians); replaces the uniform grid.
        #[serde(default)]
        phases: Option<Vec<f64>>,
    },
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::Single {
            model: default_model(),
        }
    }
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Single { .. } => "single",
            Scenario::Fig2 { .. } => "fig2",
            Scenario::Fig3 { .. } => "fig3",
            Scenario::Fig4 { .. } => "fig4",
            Scenario::Fig5 { .. } => "fig5",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_empty = |key: &str, v: &[f64]| {
            if v.is_empty() {
                return Err(Error::config(
                    format!("scenario.{key}"),
                    "sweep list must be non-empty",
                ));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::config(
                    format!("scenario.{key}"),
                    "values must be finite and non-negative",
                ));
            }
            Ok(())
        };
        match self {
            Scenario::Single { .. } => Ok(()),
            Scenario::Fig2 { models } => {
                if models.is_empty() {
                    return Err(Error::config("scenario.models", "must be non-empty"));
                }
                Ok(())
            }
            Scenario::Fig3 {
                kappas,
                temperatures,
                ..
            } => {
                non_empty("kappas", kappas)?;
                non_empty("temperatures", temperatures)
            }
            Scenario::Fig4 {
                kappas,
                gammas,
                wigner,
                ..
            } => {
                non_empty("kappas", kappas)?;
                non_empty("gammas", gammas)?;
                wigner.validate()
            }
            Scenario::Fig5 {
                phase_points,
                phases,
            } => match phases {
                Some(p) if p.is_empty() => {
                    Err(Error::config("scenario.phases", "must be non-empty"))
                }
                Some(p) if p.iter().any(|x| !x.is_finite()) => {
                    Err(Error::config("scenario.phases", "must be finite"))
                }
                Some(_) => Ok(()),
                None if *phase_points < 2 => Err(Error::config(
                    "scenario.phase_points",
                    "need at least 2 points",
                )),
                None => Ok(()),
            },
        }
    }
}

fn default_n() -> usize {
    40
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Magnon Fock truncation.
    #[serde(rename = "N", default = "default_n")]
    pub fock_dim: usize,
    pub horizon_ns: f64,
    pub output_dt_ns: f64,
    pub rtol: f64,
    pub atol: f64,
    #[serde(default)]
    pub fixed_step_ns: Option<f64>,
    #[serde(default)]
    pub max_step_ns: Option<f64>,
    #[serde(default)]
    pub initial_state: InitialState,
    /// Smallest-eigenvalue check at every output time.
    #[serde(default = "default_true")]
    pub check_positivity: bool,
}

fn default_true() -> bool {
    true
}

impl Default for Numerics {
    fn default() -> Self {
        let c = IntegratorControl::default();
        Numerics {
            fock_dim: default_n(),
            horizon_ns: 3000.0,
            output_dt_ns: 5.0,
            rtol: c.rtol,
            atol: c.atol,
            fixed_step_ns: None,
            max_step_ns: None,
            initial_state: InitialState::Thermal,
            check_positivity: true,
        }
    }
}

impl Numerics {
    pub fn control(&self) -> IntegratorControl {
        IntegratorControl {
            rtol: self.rtol,
            atol: self.atol,
            fixed_step_ns: self.fixed_step_ns,
            max_step_ns: self.max_step_ns,
            check_positivity: self.check_positivity,
            ..IntegratorControl::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fock_dim < 2 {
            return Err(Error::config("numerics.N", "truncation must be at least 2"));
        }
        if !(self.horizon_ns > 0.0) || !(self.output_dt_ns > 0.0) {
            return Err(Error::config(
                "numerics.horizon_ns",
                "horizon and output spacing must be positive",
            ));
        }
        self.control().validate()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemParams,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.scenario.validate()?;
        self.numerics.validate()
    }

    /// Parses a JSON document, fills missing `system` and `numerics` fields
    /// from the defaults, then applies `key=value` overrides.
    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::config("<document>", format!("invalid JSON: {e}")))?;
        Self::from_value(doc, overrides)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("<config>", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text, overrides)
    }

    pub fn from_value(mut doc: Value, overrides: &[String]) -> Result<Self> {
        let Value::Object(map) = &mut doc else {
            return Err(Error::config(
                "<document>",
                "top level must be a JSON object",
            ));
        };
        let defaults =
            serde_json::to_value(RunConfig::default()).expect("default config serializes");
        for section in ["system", "numerics"] {
            let mut base = defaults[section].clone();
            if let Some(given) = map.remove(section) {
                if !given.is_object() {
                    return Err(Error::config(section, "must be a JSON object"));
                }
                merge(&mut base, given);
            }
            map.insert(section.to_string(), base);
        }
        if !map.contains_key("scenario") {
            map.insert("scenario".into(), defaults["scenario"].clone());
        }
        for ov in overrides {
            apply_override(&mut doc, ov)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// CLI flag, then config, then `MAGNON_OUTPUT_DIR`, then the default.
    pub fn resolve_output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output_dir {
            return p.clone();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
        }
    }
}

fn merge(base: &mut Value, given: Value) {
    match (base, given) {
        (Value::Object(b), Value::Object(g)) => {
            for (k, v) in g {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, g) => *b = g,
    }
}

/// Applies `dotted.path=value`. The value is read as JSON when it parses
/// (numbers, booleans, arrays, null) and as a plain string otherwise; type
/// checking happens when the document is deserialized.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        Error::config(assignment, "override must have the form dotted.path=value")
    })?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::config(path, "empty segment in override path"));
    }
    let value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(Error::config(
                segments[..i].join("."),
                "cannot descend into a non-object value",
            ));
        };
        if i + 1 == segments.len() {
            map.insert((*seg).to_string(), value);
            return Ok(());
        }
        node = map
            .entry((*seg).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last segment")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_operating_point() {
        let cfg = RunConfig::from_json_str("{}", &[]).unwrap();
        assert_eq!(cfg.system, SystemParams::operating_point());
        assert_eq!(cfg.numerics, Numerics::default());
        assert_eq!(cfg.scenario, Scenario::default());
    }

    #[test]
    fn partial_sections_merge() {
        let cfg = RunConfig::from_json_str(
            r#"{"system": {"kappa": 1.0}, "numerics": {"N": 20}, "scenario": {"kind": "fig3", "axis": "kappa"}}"#,
            &[],
        )
        .unwrap();
        assert_eq!(cfg.system.kappa, 1.0);
        assert_eq!(cfg.system.e2, 60.0);
        assert_eq!(cfg.numerics.fock_dim, 20);
        match cfg.scenario {
            Scenario::Fig3 { axis, kappas, .. } => {
                assert_eq!(axis, Fig3Axis::Kappa);
                assert_eq!(kappas, vec![0.1, 0.5, 1.0, 2.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_name_the_path() {
        let err = RunConfig::from_json_str(r#"{"system": {"kapa": 1.0}}"#, &[]).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("kapa"), "{err}");
        let err = RunConfig::from_json_str(r#"{"extra": 1}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn overrides_are_typed() {
        let ov = |s: &str| vec![s.to_string()];
        let cfg = RunConfig::from_json_str("{}", &ov("system.kappa=0.25")).unwrap();
        assert_eq!(cfg.system.kappa, 0.25);
        let cfg = RunConfig::from_json_str("{}", &ov("numerics.N=12")).unwrap();
        assert_eq!(cfg.numerics.fock_dim, 12);
        let cfg = RunConfig::from_json_str("{}", &ov("scenario.model=full")).unwrap();
        assert_eq!(
            cfg.scenario,
            Scenario::Single {
                model: ModelKind::Full
            }
        );
        let cfg = RunConfig::from_json_str(
            "{}",
            &[
                "scenario={\"kind\":\"fig3\"}".to_string(),
                "scenario.kappas=[0.2,0.4]".to_string(),
            ],
        )
        .unwrap();
        assert!(
            matches!(cfg.scenario, Scenario::Fig3 { ref kappas, .. } if kappas == &vec![0.2, 0.4])
        );

        let err = RunConfig::from_json_str("{}", &ov("system.kappa=abc")).unwrap_err();
        assert!(err.to_string().contains("system.kappa"), "{err}");
        let err = RunConfig::from_json_str("{}", &ov("system.nope=1")).unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");
        assert!(RunConfig::from_json_str("{}", &ov("novalue")).is_err());
        assert!(RunConfig::from_json_str("{}", &ov("system..kappa=1")).is_err());
    }

    #[test]
    fn validation_errors_are_config_errors() {
        let err = RunConfig::from_json_str(r#"{"system": {"kappa": -1}}"#, &[]).unwrap_err();
        assert!(err.is_config_error());
        let err = RunConfig::from_json_str(r#"{"scenario": {"kind": "fig3", "kappas": []}}"#, &[])
            .unwrap_err();
        assert!(
            err.is_config_error() && err.to_string().contains("kappas"),
            "{err}"
        );
        assert!(RunConfig::from_json_str("[1]", &[]).is_err());
        assert!(RunConfig::from_json_str("{", &[])
            .unwrap_err()
            .is_config_error());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig {
            scenario: Scenario::Fig4 {
                model: ModelKind::Rabi,
                kappas: vec![0.5],
                gammas: vec![0.003],
                wigner: GridSpec::default(),
            },
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json_str(&text, &[]).unwrap(), cfg);
    }

    #[test]
    fn output_dir_precedence() {
        let mut cfg = RunConfig::default();
        assert_eq!(
            cfg.resolve_output_dir(Some(Path::new("cli"))),
            PathBuf::from("cli")
        );
        cfg.output_dir = Some(PathBuf::from("cfg"));
        assert_eq!(cfg.resolve_output_dir(None), PathBuf::from("cfg"));
    }
}
