//! JSON simulation configuration.
//!
//! Documents use engineering units (Hz, ns, m, degrees). Loading applies
//! defaults and validates; [`SimulationConfig`] is the fully resolved form,
//! and serializing it produces a document that loads back to an identical
//! value. Conversion to SI happens only when building a [`Scenario`] or an
//! [`AxisSpec`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array_factor::{GatingMode, Scenario, DEFAULT_FLOOR_DB};
use crate::grid::{AxisKind, AxisSpec};
use crate::model::{
    ArrayGeometry, ExcitationWindow, FocusSpec, OffsetModel, DEFAULT_POLE_EPSILON, SPEED_OF_LIGHT,
};

/// Modulation window used when a naive or causal variant is derived from a
/// config that does not set `model.T_ns`.
pub const DEFAULT_WINDOW_NS: f64 = 30.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Constant,
    Naive,
    Causal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatingConfig {
    #[default]
    None,
    Emission,
    Observation,
}

impl From<GatingConfig> for GatingMode {
    fn from(g: GatingConfig) -> Self {
        match g {
            GatingConfig::None => GatingMode::None,
            GatingConfig::Emission => GatingMode::EmissionTime,
            GatingConfig::Observation => GatingMode::ObservationTime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayConfig {
    pub n_half: usize,
    pub f0_hz: f64,
    pub d_m: f64,
    pub phi_deg: Vec<f64>,
    pub c_m_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocusConfig {
    pub theta0_deg: f64,
    pub g: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_m_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    #[serde(rename = "T_ns", skip_serializing_if = "Option::is_none")]
    pub window_ns: Option<f64>,
    pub pole_epsilon_s: f64,
}

/// Absent bounds mean the excitation is unbounded on that side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcitationConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_start_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end_ns: Option<f64>,
    pub gating: GatingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub t_ns: AxisConfig,
    pub r_m: AxisConfig,
    pub theta_deg: AxisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderConfig {
    pub floor_db: f64,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub array: ArrayConfig,
    pub focus: FocusConfig,
    pub model: ModelConfig,
    pub excitation: ExcitationConfig,
    pub grid: GridConfig,
    pub render: RenderConfig,
    pub seed: u64,
}

// Raw document shapes: everything optional so that missing fields become
// validation errors with a path instead of serde messages.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    array: Option<RawArray>,
    focus: Option<RawFocus>,
    model: Option<RawModel>,
    excitation: Option<RawExcitation>,
    grid: Option<RawGrid>,
    render: Option<RawRender>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArray {
    n_half: Option<usize>,
    f0_hz: Option<f64>,
    d_m: Option<f64>,
    phi_deg: Option<Vec<f64>>,
    c_m_per_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFocus {
    theta0_deg: Option<f64>,
    g: Option<Vec<f64>>,
    r1_m: Option<f64>,
    t_m_ns: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "type")]
    kind: Option<ModelKind>,
    #[serde(rename = "T_ns")]
    window_ns: Option<f64>,
    pole_epsilon_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExcitation {
    t_start_ns: Option<f64>,
    t_end_ns: Option<f64>,
    gating: Option<GatingConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    t_ns: Option<AxisConfig>,
    r_m: Option<AxisConfig>,
    theta_deg: Option<AxisConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRender {
    floor_db: Option<f64>,
}

fn required<T>(value: Option<T>, path: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| invalid(path, "required field is missing"))
}

fn positive(value: f64, path: &str) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(
            path,
            format!("must be a finite positive number, got {value}"),
        ))
    }
}

fn finite(value: f64, path: &str) -> Result<f64, ConfigError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(path, format!("must be finite, got {value}")))
    }
}

fn check_axis(axis: AxisConfig, path: &str, lower: Option<f64>) -> Result<AxisConfig, ConfigError> {
    if !(axis.min.is_finite() && axis.max.is_finite() && axis.min < axis.max) {
        return Err(invalid(
            path,
            format!("need finite min < max, got [{}, {}]", axis.min, axis.max),
        ));
    }
    if axis.count < 2 {
        return Err(invalid(
            path,
            format!("count must be >= 2, got {}", axis.count),
        ));
    }
    if let Some(lo) = lower {
        if axis.min < lo {
            return Err(invalid(
                path,
                format!("min must be >= {lo}, got {}", axis.min),
            ));
        }
    }
    Ok(axis)
}

/// Parses, validates and resolves a JSON config document.
pub fn load_config(document: &str) -> Result<SimulationConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(document)?;
    resolve(raw)
}

/// Reads and loads a config file.
pub fn load_config_file(path: &std::path::Path) -> Result<SimulationConfig, ConfigError> {
    load_config(&std::fs::read_to_string(path)?)
}

fn resolve(raw: RawConfig) -> Result<SimulationConfig, ConfigError> {
    let a = required(raw.array, "array")?;
    let n_half = required(a.n_half, "array.n_half")?;
    let f0_hz = positive(required(a.f0_hz, "array.f0_hz")?, "array.f0_hz")?;
    let c_m_per_s = positive(a.c_m_per_s.unwrap_or(SPEED_OF_LIGHT), "array.c_m_per_s")?;
    let d_m = positive(a.d_m.unwrap_or(c_m_per_s / (2.0 * f0_hz)), "array.d_m")?;
    let phi_deg = a.phi_deg.unwrap_or_else(|| vec![0.0; 2 * n_half + 1]);
    if phi_deg.len() != 2 * n_half + 1 {
        return Err(invalid(
            "array.phi_deg",
            format!(
                "needs 2N+1 = {} entries, got {}",
                2 * n_half + 1,
                phi_deg.len()
            ),
        ));
    }
    for v in &phi_deg {
        finite(*v, "array.phi_deg")?;
    }

    let f = required(raw.focus, "focus")?;
    let theta0_deg = finite(
        required(f.theta0_deg, "focus.theta0_deg")?,
        "focus.theta0_deg",
    )?;
    if theta0_deg.abs() > 90.0 {
        return Err(invalid(
            "focus.theta0_deg",
            format!("must lie in [-90, 90], got {theta0_deg}"),
        ));
    }
    let g = required(f.g, "focus.g")?;
    if g.len() != n_half {
        return Err(invalid(
            "focus.g",
            format!("needs N = {n_half} entries, got {}", g.len()),
        ));
    }
    for v in &g {
        finite(*v, "focus.g")?;
    }
    if let Some(r1) = f.r1_m {
        if !(r1.is_finite() && r1 >= 0.0) {
            return Err(invalid("focus.r1_m", format!("must be >= 0, got {r1}")));
        }
    }
    if let Some(t_m) = f.t_m_ns {
        finite(t_m, "focus.t_m_ns")?;
    }

    let m = required(raw.model, "model")?;
    let kind = required(m.kind, "model.type")?;
    if let Some(w) = m.window_ns {
        positive(w, "model.T_ns")?;
    }
    match kind {
        ModelKind::Constant => {
            required(f.t_m_ns, "focus.t_m_ns")?;
        }
        ModelKind::Naive | ModelKind::Causal => {
            required(f.r1_m, "focus.r1_m")?;
            required(m.window_ns, "model.T_ns")?;
        }
    }
    let pole_epsilon_s = positive(
        m.pole_epsilon_s.unwrap_or(DEFAULT_POLE_EPSILON),
        "model.pole_epsilon_s",
    )?;

    let e = raw.excitation.unwrap_or_default();
    if let Some(t) = e.t_start_ns {
        finite(t, "excitation.t_start_ns")?;
    }
    if let Some(t) = e.t_end_ns {
        finite(t, "excitation.t_end_ns")?;
    }
    if let (Some(s), Some(end)) = (e.t_start_ns, e.t_end_ns) {
        if s >= end {
            return Err(invalid(
                "excitation",
                format!("t_start_ns {s} must be < t_end_ns {end}"),
            ));
        }
    }

    let gr = raw.grid.unwrap_or_default();
    let grid = GridConfig {
        t_ns: check_axis(
            gr.t_ns.unwrap_or(AxisConfig {
                min: -100.0,
                max: 50.0,
                count: 601,
            }),
            "grid.t_ns",
            None,
        )?,
        r_m: check_axis(
            gr.r_m.unwrap_or(AxisConfig {
                min: 0.0,
                max: 30.0,
                count: 601,
            }),
            "grid.r_m",
            Some(0.0),
        )?,
        theta_deg: check_axis(
            gr.theta_deg.unwrap_or(AxisConfig {
                min: -90.0,
                max: 90.0,
                count: 361,
            }),
            "grid.theta_deg",
            None,
        )?,
    };

    let floor_db = raw
        .render
        .and_then(|r| r.floor_db)
        .unwrap_or(DEFAULT_FLOOR_DB);
    if !(floor_db.is_finite() && floor_db < 0.0) {
        return Err(invalid(
            "render.floor_db",
            format!("must be negative, got {floor_db}"),
        ));
    }

    Ok(SimulationConfig {
        array: ArrayConfig {
            n_half,
            f0_hz,
            d_m,
            phi_deg,
            c_m_per_s,
        },
        focus: FocusConfig {
            theta0_deg,
            g,
            r1_m: f.r1_m,
            t_m_ns: f.t_m_ns,
        },
        model: ModelConfig {
            kind,
            window_ns: m.window_ns,
            pole_epsilon_s,
        },
        excitation: ExcitationConfig {
            t_start_ns: e.t_start_ns,
            t_end_ns: e.t_end_ns,
            gating: e.gating.unwrap_or_default(),
        },
        grid,
        render: RenderConfig { floor_db },
        seed: raw.seed.unwrap_or(0),
    })
}

fn ns(v: f64) -> f64 {
    v / 1e9
}

impl SimulationConfig {
    /// Single-line JSON echo of the resolved config.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn geometry(&self) -> Result<ArrayGeometry, ConfigError> {
        let phi = self.array.phi_deg.iter().map(|d| d.to_radians()).collect();
        ArrayGeometry::new(
            self.array.n_half,
            self.array.f0_hz,
            Some(self.array.d_m),
            Some(phi),
            Some(self.array.c_m_per_s),
        )
        .map_err(|e| invalid("array", e.to_string()))
    }

    pub fn focus_spec(&self) -> Result<FocusSpec, ConfigError> {
        FocusSpec::new(self.focus.theta0_deg.to_radians(), self.focus.g.clone())
            .map_err(|e| invalid("focus", e.to_string()))
    }

    pub fn theta0(&self) -> f64 {
        self.focus.theta0_deg.to_radians()
    }

    /// Focus range for the time-modulated laws: `focus.r1_m`, or `−c·t_m`
    /// when only a non-positive `t_m` is given.
    pub fn focus_range(&self) -> Result<f64, ConfigError> {
        match (self.focus.r1_m, self.focus.t_m_ns) {
            (Some(r1), _) => Ok(r1),
            (None, Some(t_m)) if t_m <= 0.0 => Ok(-self.array.c_m_per_s * ns(t_m)),
            _ => Err(invalid(
                "focus.r1_m",
                "required to derive the naive/causal variants (t_m_ns > 0 gives no focus range)",
            )),
        }
    }

    /// Emission-time parameter for the constant law: `focus.t_m_ns`, or
    /// `−r₁/c`.
    pub fn emission_parameter(&self) -> Result<f64, ConfigError> {
        match (self.focus.t_m_ns, self.focus.r1_m) {
            (Some(t_m), _) => Ok(ns(t_m)),
            (None, Some(r1)) => Ok(-r1 / self.array.c_m_per_s),
            _ => Err(invalid(
                "focus.t_m_ns",
                "required to derive the constant variant",
            )),
        }
    }

    pub fn modulation_window(&self) -> f64 {
        ns(self.model.window_ns.unwrap_or(DEFAULT_WINDOW_NS))
    }

    /// The configured offset law with any parameters it lacks derived from
    /// the rest of the config.
    pub fn offset_model(&self, kind: ModelKind) -> Result<OffsetModel, ConfigError> {
        Ok(match kind {
            ModelKind::Constant => OffsetModel::Constant {
                t_m: self.emission_parameter()?,
            },
            ModelKind::Naive => OffsetModel::Naive {
                r1: self.focus_range()?,
                window: self.modulation_window(),
            },
            ModelKind::Causal => OffsetModel::Causal {
                r1: self.focus_range()?,
                window: self.modulation_window(),
            },
        })
    }

    pub fn window(&self) -> Result<ExcitationWindow, ConfigError> {
        let start = self.excitation.t_start_ns.map_or(f64::NEG_INFINITY, ns);
        let end = self.excitation.t_end_ns.map_or(f64::INFINITY, ns);
        ExcitationWindow::new(start, end).map_err(|e| invalid("excitation", e.to_string()))
    }

    /// SI scenario for the configured model.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        self.scenario_for(self.model.kind)
    }

    /// SI scenario with the offset law replaced by `kind`.
    pub fn scenario_for(&self, kind: ModelKind) -> Result<Scenario, ConfigError> {
        let model = self.offset_model(kind)?;
        let mut s = Scenario::new(self.geometry()?, self.focus_spec()?, model)
            .map_err(|e| invalid("model", e.to_string()))?
            .with_gating(self.window()?, self.excitation.gating.into());
        s.floor_db = self.render.floor_db;
        s.pole_epsilon = self.model.pole_epsilon_s;
        s.metadata = serde_json::to_value(self).expect("config serializes");
        Ok(s)
    }

    pub fn time_axis(&self) -> AxisSpec {
        let a = self.grid.t_ns;
        AxisSpec::new(AxisKind::Time, ns(a.min), ns(a.max), a.count).expect("validated at load")
    }

    pub fn range_axis(&self) -> AxisSpec {
        let a = self.grid.r_m;
        AxisSpec::new(AxisKind::Range, a.min, a.max, a.count).expect("validated at load")
    }

    pub fn angle_axis(&self) -> AxisSpec {
        let a = self.grid.theta_deg;
        AxisSpec::new(
            AxisKind::Angle,
            a.min.to_radians(),
            a.max.to_radians(),
            a.count,
        )
        .expect("validated at load")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1A: &str = r#"{
        "array": {"n_half": 5, "f0_hz": 3e9},
        "focus": {"theta0_deg": -30, "g": [1.8, 4.4, 4.4, 5.5, 4.8], "t_m_ns": -50},
        "model": {"type": "constant"}
    }"#;

    fn path_of(err: ConfigError) -> String {
        match err {
            ConfigError::Validation { path, .. } => path,
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn defaults_are_applied() {
        let cfg = load_config(FIG1A).unwrap();
        assert_eq!(cfg.array.d_m, 0.05);
        assert_eq!(cfg.array.c_m_per_s, 3e8);
        assert_eq!(cfg.array.phi_deg, vec![0.0; 11]);
        assert_eq!(cfg.render.floor_db, -50.0);
        assert_eq!(cfg.excitation.gating, GatingConfig::None);
        assert_eq!(cfg.grid.theta_deg.count, 361);
    }

    #[test]
    fn resolved_echo_reloads_identically() {
        let cfg = load_config(FIG1A).unwrap();
        let again = load_config(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert!(!cfg.to_json().contains('\n'));
    }

    #[test]
    fn constant_without_t_m_names_the_field() {
        let doc = FIG1A.replace(r#", "t_m_ns": -50"#, "");
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "focus.t_m_ns");
    }

    #[test]
    fn naive_without_r1_names_the_field() {
        let doc = FIG1A.replace(r#""type": "constant""#, r#""type": "naive", "T_ns": 30"#);
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "focus.r1_m");
        let doc = doc
            .replace(r#""t_m_ns": -50"#, r#""r1_m": 15"#)
            .replace(r#", "T_ns": 30"#, "");
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "model.T_ns");
    }

    #[test]
    fn malformed_and_unknown_fields_are_parse_errors() {
        assert!(matches!(
            load_config("{ not json"),
            Err(ConfigError::Parse(_))
        ));
        let doc = FIG1A.replace(r#""f0_hz""#, r#""f0_ghz""#);
        assert!(matches!(load_config(&doc), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn inconsistent_fields() {
        let doc = FIG1A.replace("[1.8, 4.4, 4.4, 5.5, 4.8]", "[1.8]");
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "focus.g");
        let doc = FIG1A.replace(r#""f0_hz": 3e9"#, r#""f0_hz": 3e9, "phi_deg": [0]"#);
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "array.phi_deg");
        let doc = FIG1A.replace("-30", "-120");
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "focus.theta0_deg");
        let doc = FIG1A.replace(
            r#""model""#,
            r#""excitation": {"t_start_ns": 5, "t_end_ns": 1}, "model""#,
        );
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "excitation");
        let doc = FIG1A.replace(
            r#""model""#,
            r#""grid": {"r_m": {"min": -1, "max": 3, "count": 5}}, "model""#,
        );
        assert_eq!(path_of(load_config(&doc).unwrap_err()), "grid.r_m");
        assert_eq!(path_of(load_config("{}").unwrap_err()), "array");
    }

    #[test]
    fn scenario_is_in_si() {
        let cfg = load_config(FIG1A).unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.model, OffsetModel::Constant { t_m: -5e-8 });
        assert_eq!(s.focus.theta0(), -30f64.to_radians());
        assert_eq!(s.window, ExcitationWindow::ALWAYS);
        assert_eq!(cfg.time_axis().min, -1e-7);
        assert_eq!(cfg.range_axis().max, 30.0);
    }

    #[test]
    fn variants_derive_missing_parameters() {
        let cfg = load_config(FIG1A).unwrap();
        match cfg.offset_model(ModelKind::Causal).unwrap() {
            OffsetModel::Causal { r1, window } => {
                assert!((r1 - 15.0).abs() < 1e-12);
                assert_eq!(window, 3e-8);
            }
            other => panic!("{other:?}"),
        }
        let doc = FIG1A.replace("-50", "40");
        let cfg = load_config(&doc).unwrap();
        assert_eq!(
            path_of(cfg.offset_model(ModelKind::Naive).unwrap_err()),
            "focus.r1_m"
        );
    }
}
