//! Scenario configuration files and their resolution into concrete run settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bbm::BbmVariant;
use crate::error::{Error, Result};
use crate::svaerd_kalisch::{sk_parameter_set, SkParameterSet, SkSetName, SkVariant};
use crate::time::{ButcherTableau, IntegratorConfig, RelaxationConfig, RelaxationMode, Stepping};

/// `[α̃, β̃, γ̃]` of the Svärd–Kalisch convergence test: the β̃, γ̃ of `set3` and
/// a tiny α̃ that switches on the dissipation of the upwind α terms. With
/// `α̃ = 0` the upwind variant has no dissipation, and grid-scale noise from the
/// nearly critical flow (depth down to 0.28) spoils the rates at `p = 2, 3`.
/// Larger α̃ makes the third-derivative terms stiff (`Δt ∝ Δx³/α̃`).
pub const MANUFACTURED_SK_COEFFICIENTS: [f64; 3] = [1e-7, 0.27946992481203003, 0.0521077694235589];

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "DISPERSIVE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Soliton,
    Manufactured,
    ManufacturedReflecting,
    LakeAtRest,
    ReflectingBump,
    TravelingWave,
    Dingemans,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Soliton => "soliton",
            Self::Manufactured => "manufactured",
            Self::ManufacturedReflecting => "manufactured_reflecting",
            Self::LakeAtRest => "lake_at_rest",
            Self::ReflectingBump => "reflecting_bump",
            Self::TravelingWave => "traveling_wave",
            Self::Dingemans => "dingemans",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        parse_enum(s, "scenario")
    }

    pub fn supports_eoc(self) -> bool {
        matches!(self, Self::Soliton | Self::Manufactured | Self::ManufacturedReflecting)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BbmBbm,
    SvaerdKalisch,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        parse_enum(s, "model")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    Dp5,
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match toml::Value::try_from(v) {
        Ok(toml::Value::String(s)) => s,
        _ => unreachable!("unit variants serialize to strings"),
    }
}

/// Deserializes a snake_case unit variant from a plain string.
fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str, what: &str) -> Result<T> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s))
        .map_err(|e| Error::Config(format!("invalid {what} '{s}': {e}")))
}

/// Contents of a configuration file. Every key except `scenario` and `model`
/// is optional; missing values take scenario-specific defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub model: ModelKind,
    /// Model-specific variant name, e.g. `upwind` or `periodic_central_split`.
    pub variant: Option<String>,
    /// Svärd–Kalisch parameter set `set1` … `set5`.
    pub parameter_set: Option<String>,
    /// Custom `[alpha, beta, gamma]`; overrides `parameter_set`.
    pub coefficients: Option<[f64; 3]>,
    pub order: Option<usize>,
    pub n: Option<usize>,
    pub t_end: Option<f64>,
    pub method: Option<Method>,
    /// Fixed time step; adaptive stepping when absent.
    pub dt: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub relaxation: bool,
    /// Replace split nonlinear terms by plain conservative ones (Svärd–Kalisch).
    #[serde(default)]
    pub naive: bool,
    /// Exchange the roles of `D₊` and `D₋` (BBM-BBM upwind variants).
    #[serde(default)]
    pub swap_upwind: bool,
    pub boundary: Option<Boundary>,
    pub g: Option<f64>,
    /// Wavenumber of the traveling wave.
    pub wavenumber: Option<f64>,
    #[serde(default)]
    pub gauges: Vec<f64>,
    /// Time between gauge samples.
    pub sample_interval: Option<f64>,
    /// Measured gauge data with columns `gauge_id, t, eta`.
    pub experimental_data: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub snapshot: Option<bool>,
    #[serde(default)]
    pub eoc: bool,
    pub eoc_n: Option<Vec<usize>>,
    pub orders: Option<Vec<usize>>,
    /// Accepted for reproducibility bookkeeping; all scenarios are deterministic.
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind, model: ModelKind) -> Self {
        Self {
            scenario,
            model,
            variant: None,
            parameter_set: None,
            coefficients: None,
            order: None,
            n: None,
            t_end: None,
            method: None,
            dt: None,
            abs_tol: None,
            rel_tol: None,
            relaxation: false,
            naive: false,
            swap_upwind: false,
            boundary: None,
            g: None,
            wavenumber: None,
            gauges: Vec::new(),
            sample_interval: None,
            experimental_data: None,
            output_dir: None,
            snapshot: None,
            eoc: false,
            eoc_n: None,
            orders: None,
            seed: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Output directory after applying the environment override.
    pub fn effective_output_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
            _ => self.output_dir.clone(),
        }
    }

    /// Fills in defaults and validates every setting.
    pub fn resolve(&self) -> Result<RunSpec> {
        RunSpec::from_config(self)
    }

    /// The same run with every default written out.
    pub fn resolved(&self) -> Result<Self> {
        let spec = self.resolve()?;
        let mut c = self.clone();
        match spec.model {
            ModelChoice::Bbm(v) => c.variant = Some(enum_name(&v)),
            ModelChoice::Sk(v, params) => {
                c.variant = Some(enum_name(&v));
                if params.name == SkSetName::Custom {
                    c.coefficients = Some([params.alpha_tilde, params.beta_tilde, params.gamma_tilde]);
                } else {
                    c.parameter_set = Some(enum_name(&params.name));
                    c.coefficients = None;
                }
            }
        }
        c.order = Some(spec.order);
        c.n = Some(spec.n);
        c.t_end = Some(spec.t_end);
        c.method = Some(spec.method);
        c.dt = spec.dt;
        c.abs_tol = Some(spec.abs_tol);
        c.rel_tol = Some(spec.rel_tol);
        c.boundary = Some(if spec.is_reflecting() {
            Boundary::Reflecting
        } else {
            Boundary::Periodic
        });
        c.g = Some(spec.g);
        c.wavenumber = spec.wavenumber;
        c.sample_interval = Some(spec.sample_interval);
        c.snapshot = Some(spec.snapshot);
        c.eoc_n = Some(spec.eoc_n);
        c.orders = Some(spec.orders);
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelChoice {
    Bbm(BbmVariant),
    Sk(SkVariant, SkParameterSet),
}

impl ModelChoice {
    pub fn is_reflecting(&self) -> bool {
        match self {
            Self::Bbm(v) => v.is_reflecting(),
            Self::Sk(v, _) => v.is_reflecting(),
        }
    }

    pub fn uses_upwind(&self) -> bool {
        matches!(
            self,
            Self::Bbm(BbmVariant::Upwind | BbmVariant::ReflectingUpwind) | Self::Sk(SkVariant::PeriodicUpwind, _)
        )
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: ScenarioKind,
    pub model: ModelChoice,
    pub order: usize,
    pub n: usize,
    pub t_end: f64,
    pub g: f64,
    pub method: Method,
    pub dt: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub relaxation: bool,
    pub naive: bool,
    pub swap_upwind: bool,
    pub wavenumber: Option<f64>,
    pub gauges: Vec<f64>,
    pub sample_interval: f64,
    pub experimental_data: Option<PathBuf>,
    pub snapshot: bool,
    pub eoc: bool,
    pub eoc_n: Vec<usize>,
    pub orders: Vec<usize>,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Traveling-wave end times used for the three reference wavenumbers.
fn traveling_wave_t_end(k: f64) -> f64 {
    if (k - 0.8).abs() < 1e-12 {
        50.0
    } else if (k - 5.0).abs() < 1e-12 {
        1.0
    } else if (k - 15.0).abs() < 1e-12 {
        0.75
    } else {
        10.0 * 2.0 * std::f64::consts::PI / (k * (9.81f64 * 0.8).sqrt())
    }
}

impl RunSpec {
    fn from_config(c: &ScenarioConfig) -> Result<Self> {
        use ScenarioKind as S;
        let reflecting = match c.scenario {
            S::ManufacturedReflecting | S::ReflectingBump => {
                if c.boundary == Some(Boundary::Periodic) {
                    return Err(Error::Config(format!(
                        "{} needs reflecting boundaries",
                        c.scenario.name()
                    )));
                }
                true
            }
            S::LakeAtRest => c.boundary == Some(Boundary::Reflecting),
            _ => {
                if c.boundary == Some(Boundary::Reflecting) {
                    return Err(Error::Config(format!("{} is a periodic scenario", c.scenario.name())));
                }
                false
            }
        };
        if c.scenario == S::Soliton && c.model != ModelKind::BbmBbm {
            return Err(Error::Config(
                "the soliton scenario has an exact solution only for bbm_bbm".into(),
            ));
        }
        if c.eoc && !c.scenario.supports_eoc() {
            return Err(Error::Config(format!(
                "no exact solution for an EOC study of {}",
                c.scenario.name()
            )));
        }

        let model = match c.model {
            ModelKind::BbmBbm => {
                if c.parameter_set.is_some() || c.coefficients.is_some() || c.naive {
                    return Err(Error::Config(
                        "parameter_set, coefficients and naive apply only to svaerd_kalisch".into(),
                    ));
                }
                let variant = match &c.variant {
                    Some(v) => parse_enum::<BbmVariant>(v, "bbm_bbm variant")?,
                    None => match c.scenario {
                        S::Soliton => BbmVariant::ConstantNarrow,
                        S::Manufactured => BbmVariant::Upwind,
                        _ if reflecting => BbmVariant::ReflectingCentral,
                        _ => BbmVariant::CentralWide,
                    },
                };
                ModelChoice::Bbm(variant)
            }
            ModelKind::SvaerdKalisch => {
                let variant = match &c.variant {
                    Some(v) => parse_enum::<SkVariant>(v, "svaerd_kalisch variant")?,
                    None => match c.scenario {
                        S::Manufactured => SkVariant::PeriodicUpwind,
                        _ if reflecting => SkVariant::ReflectingBetaOnly,
                        _ => SkVariant::PeriodicCentralSplit,
                    },
                };
                let params = match (c.coefficients, &c.parameter_set) {
                    (Some([a, b, g]), _) => SkParameterSet::custom(a, b, g),
                    (None, Some(name)) => sk_parameter_set(name)?,
                    (None, None) => match c.scenario {
                        _ if variant.is_reflecting() => sk_parameter_set("set5")?,
                        S::Manufactured => {
                            let [a, b, g] = MANUFACTURED_SK_COEFFICIENTS;
                            SkParameterSet::custom(a, b, g)
                        }
                        _ => sk_parameter_set("set2")?,
                    },
                };
                ModelChoice::Sk(variant, params)
            }
        };
        if model.is_reflecting() != reflecting {
            return Err(Error::Config(format!(
                "variant {model:?} does not match the {} boundaries of {}",
                if reflecting { "reflecting" } else { "periodic" },
                c.scenario.name()
            )));
        }

        let order = c.order.unwrap_or(match c.scenario {
            S::Manufactured | S::ManufacturedReflecting | S::LakeAtRest => 2,
            _ => 4,
        });
        let orders = match &c.orders {
            Some(o) if o.is_empty() => return Err(Error::Config("orders must not be empty".into())),
            Some(o) => o.clone(),
            None => vec![order],
        };
        let eoc_n = match &c.eoc_n {
            Some(v) => v.clone(),
            None => match c.scenario {
                S::Soliton => vec![128, 256, 512],
                S::Manufactured => vec![64, 128, 256],
                _ => vec![33, 65, 129],
            },
        };
        if c.eoc && (eoc_n.len() < 2 || eoc_n.windows(2).any(|w| w[1] <= w[0])) {
            return Err(Error::Config(format!(
                "eoc_n must be at least two increasing sizes, got {eoc_n:?}"
            )));
        }
        let n = c.n.unwrap_or(match c.scenario {
            S::Manufactured => 128,
            S::ManufacturedReflecting => 65,
            S::LakeAtRest => 200,
            _ => 512,
        });
        let wavenumber = match c.scenario {
            S::TravelingWave => Some(positive("wavenumber", c.wavenumber.unwrap_or(0.8))?),
            _ => {
                if c.wavenumber.is_some() {
                    return Err(Error::Config("wavenumber applies only to traveling_wave".into()));
                }
                None
            }
        };
        let t_end = match c.t_end {
            Some(t) => t,
            None => match c.scenario {
                S::Soliton if c.eoc => 1.0,
                S::Soliton => 5.0 * super::soliton_period(),
                S::Manufactured | S::ReflectingBump => 1.0,
                // The wall solution has negative depth at x = ±1 once e^{2t} > 7.
                S::ManufacturedReflecting => 0.5,
                S::LakeAtRest => 10.0,
                S::TravelingWave => traveling_wave_t_end(wavenumber.unwrap()),
                S::Dingemans => 70.0,
            },
        };
        positive("t_end", t_end)?;
        let lake_dt = match model {
            ModelChoice::Bbm(_) => 0.5,
            ModelChoice::Sk(..) => 2e-4,
        };
        let dt = match (c.dt, c.scenario) {
            (Some(dt), _) => Some(positive("dt", dt)?),
            (None, S::LakeAtRest) => Some(lake_dt),
            (None, _) => None,
        };
        let method = c.method.unwrap_or(if dt.is_some() { Method::Rk4 } else { Method::Dp5 });
        if method == Method::Rk4 && dt.is_none() {
            return Err(Error::Config("rk4 has no error estimate and needs a fixed dt".into()));
        }
        let default_tol = if c.eoc || matches!(c.scenario, S::Manufactured | S::ManufacturedReflecting) {
            1e-14
        } else {
            1e-7
        };
        let abs_tol = positive("abs_tol", c.abs_tol.unwrap_or(default_tol))?;
        let rel_tol = positive("rel_tol", c.rel_tol.unwrap_or(default_tol))?;
        let g = positive("g", c.g.unwrap_or(9.81))?;
        for &x in &c.gauges {
            if !x.is_finite() {
                return Err(Error::Config(format!("gauge position {x} is not finite")));
            }
        }
        if c.experimental_data.is_some() && c.gauges.is_empty() {
            return Err(Error::Config("experimental_data needs gauge positions".into()));
        }
        let sample_interval = positive("sample_interval", c.sample_interval.unwrap_or(0.05))?;
        Ok(Self {
            scenario: c.scenario,
            model,
            order,
            n,
            t_end,
            g,
            method,
            dt,
            abs_tol,
            rel_tol,
            relaxation: c.relaxation,
            naive: c.naive,
            swap_upwind: c.swap_upwind,
            wavenumber,
            gauges: c.gauges.clone(),
            sample_interval,
            experimental_data: c.experimental_data.clone(),
            snapshot: c.snapshot.unwrap_or(true),
            eoc: c.eoc,
            eoc_n,
            orders,
        })
    }

    pub fn is_reflecting(&self) -> bool {
        self.model.is_reflecting()
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let tableau = match self.method {
            Method::Rk4 => ButcherTableau::rk4(),
            Method::Dp5 => ButcherTableau::dormand_prince(),
        };
        let stepping = match self.dt {
            Some(dt) => Stepping::Fixed { dt },
            None => Stepping::adaptive(self.abs_tol, self.rel_tol),
        };
        IntegratorConfig {
            tableau,
            stepping,
            relaxation: None,
            max_steps: 10_000_000,
        }
    }

    /// Relaxation settings for a model that conserves (or only dissipates) its functional.
    pub fn relaxation_config(&self, dissipative: bool) -> Option<RelaxationConfig> {
        self.relaxation.then(|| RelaxationConfig {
            mode: if dissipative {
                RelaxationMode::Dissipative
            } else {
                RelaxationMode::Conservative
            },
            ..RelaxationConfig::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_config_round_trips() {
        for (scenario, model) in [
            (ScenarioKind::Dingemans, ModelKind::SvaerdKalisch),
            (ScenarioKind::Manufactured, ModelKind::SvaerdKalisch),
            (ScenarioKind::ReflectingBump, ModelKind::BbmBbm),
            (ScenarioKind::TravelingWave, ModelKind::BbmBbm),
        ] {
            let c = ScenarioConfig::new(scenario, model);
            let full = c.resolved().unwrap();
            let text = full.to_toml_string();
            let back = ScenarioConfig::from_toml_str(&text).unwrap();
            assert_eq!(back.resolve().unwrap(), c.resolve().unwrap(), "{text}");
            assert!(text.contains("order = ") && text.contains("variant = "), "{text}");
        }
    }

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let c = ScenarioConfig::from_toml_str("scenario = \"dingemans\"\nmodel = \"svaerd_kalisch\"\n").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.n, 512);
        assert_eq!(r.order, 4);
        assert_eq!(r.t_end, 70.0);
        assert_eq!(r.method, Method::Dp5);
        assert!(
            matches!(r.model, ModelChoice::Sk(SkVariant::PeriodicCentralSplit, p) if p == sk_parameter_set("set2").unwrap())
        );
        let lake = ScenarioConfig::new(ScenarioKind::LakeAtRest, ModelKind::SvaerdKalisch)
            .resolve()
            .unwrap();
        assert_eq!((lake.dt, lake.method), (Some(2e-4), Method::Rk4));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e =
            ScenarioConfig::from_toml_str("scenario = \"soliton\"\nmodel = \"bbm_bbm\"\nresolution = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("resolution")), "{e}");
        assert!(ScenarioConfig::from_toml_str("scenario = \"tsunami\"\nmodel = \"bbm_bbm\"\n").is_err());
    }

    #[test]
    fn inconsistent_settings_are_rejected() {
        let mut c = ScenarioConfig::new(ScenarioKind::Soliton, ModelKind::SvaerdKalisch);
        assert!(c.resolve().is_err());
        c.model = ModelKind::BbmBbm;
        c.variant = Some("reflecting_central".into());
        assert!(c.resolve().is_err());
        c.variant = Some("sideways".into());
        assert!(c.resolve().is_err());
        c.variant = None;
        c.method = Some(Method::Rk4);
        assert!(c.resolve().is_err());
        let mut r = ScenarioConfig::new(ScenarioKind::ReflectingBump, ModelKind::SvaerdKalisch);
        r.parameter_set = Some("set2".into());
        assert!(
            r.resolve().is_ok(),
            "reflecting parameter checks happen at model construction"
        );
        r.boundary = Some(Boundary::Periodic);
        assert!(r.resolve().is_err());
        let mut e = ScenarioConfig::new(ScenarioKind::Dingemans, ModelKind::BbmBbm);
        e.eoc = true;
        assert!(e.resolve().is_err());
        let mut t = ScenarioConfig::new(ScenarioKind::Dingemans, ModelKind::BbmBbm);
        t.t_end = Some(-1.0);
        assert!(t.resolve().is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let mut c = ScenarioConfig::new(ScenarioKind::TravelingWave, ModelKind::SvaerdKalisch);
        c.wavenumber = Some(5.0);
        c.gauges = vec![1.0, 2.5];
        c.parameter_set = Some("set3".into());
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.resolve().unwrap().t_end, 1.0);
    }
}
