//! Complex array factor evaluation and dB conversion.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{
    emission_time, offset_at_with_epsilon, ArrayGeometry, ExcitationWindow, FocusSpec, ModelError,
    OffsetModel, SpaceTimePoint, DEFAULT_POLE_EPSILON,
};

/// Default clamp for "no power" in normalized grids, dB.
pub const DEFAULT_FLOOR_DB: f64 = -50.0;

/// One evaluation of the array factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: Complex64,
    /// False when gated out or when an element offset hit its pole.
    pub valid: bool,
    /// True when the sample is zero because of the excitation window.
    pub gated: bool,
}

impl FieldSample {
    pub const GATED: FieldSample = FieldSample {
        value: Complex64::new(0.0, 0.0),
        valid: false,
        gated: true,
    };

    pub const SINGULAR: FieldSample = FieldSample {
        value: Complex64::new(0.0, 0.0),
        valid: false,
        gated: false,
    };

    pub fn field(value: Complex64) -> Self {
        Self {
            value,
            valid: true,
            gated: false,
        }
    }

    pub fn is_singular(&self) -> bool {
        !self.valid && !self.gated
    }

    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// Which clock the excitation window is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatingMode {
    #[default]
    None,
    /// Gate on the retarded time `t − r/c`.
    EmissionTime,
    /// Gate on the observation time `t`.
    ObservationTime,
}

/// Evaluates the array factor at `p`.
///
/// Each element contributes
/// `exp(j·{2π[Δf_n·(t − r/c) + (n·d·sin θ / c)·(f₀ + Δf_n)] + φ_n})`, summed
/// from `n = −N` to `N`. A single range `r` is used for all elements (far
/// field). Singular offsets produce an invalid sample, never a non-finite
/// value.
pub fn array_factor(
    geom: &ArrayGeometry,
    model: &OffsetModel,
    focus: &FocusSpec,
    window: &ExcitationWindow,
    gating: GatingMode,
    p: &SpaceTimePoint,
) -> FieldSample {
    array_factor_with_epsilon(geom, model, focus, window, gating, p, DEFAULT_POLE_EPSILON)
}

pub fn array_factor_with_epsilon(
    geom: &ArrayGeometry,
    model: &OffsetModel,
    focus: &FocusSpec,
    window: &ExcitationWindow,
    gating: GatingMode,
    p: &SpaceTimePoint,
    pole_epsilon: f64,
) -> FieldSample {
    let gated_out = match gating {
        GatingMode::None => false,
        GatingMode::EmissionTime => !window.emits(p.t, p.r, geom.c()),
        GatingMode::ObservationTime => !window.contains(p.t),
    };
    if gated_out {
        return FieldSample::GATED;
    }
    let t0 = emission_time(p, geom);

    let spatial = geom.spacing() * p.theta.sin() / geom.c();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in geom.indices() {
        let df = match offset_at_with_epsilon(model, focus, geom, n, p, pole_epsilon) {
            Ok(df) => df,
            Err(_) => return FieldSample::SINGULAR,
        };
        let cycles = df * t0 + n as f64 * spatial * (geom.f0() + df);
        sum += Complex64::cis(TAU * cycles + geom.phase(n));
    }
    if !(sum.re.is_finite() && sum.im.is_finite()) {
        return FieldSample::SINGULAR;
    }
    FieldSample::field(sum)
}

/// Normalized power `20·log₁₀(|AF| / reference)`, clamped below at
/// `floor_db`. Gated, singular and zero samples map to the floor.
pub fn power_db(sample: &FieldSample, reference_magnitude: f64, floor_db: f64) -> f64 {
    debug_assert!(reference_magnitude > 0.0);
    if !sample.valid {
        return floor_db;
    }
    let magnitude = sample.magnitude();
    if magnitude == 0.0 {
        return floor_db;
    }
    let db = 20.0 * (magnitude / reference_magnitude).log10();
    db.max(floor_db)
}

/// Everything needed to evaluate the field at a point, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub focus: FocusSpec,
    pub model: OffsetModel,
    pub window: ExcitationWindow,
    pub gating: GatingMode,
    pub floor_db: f64,
    pub pole_epsilon: f64,
    /// Provenance carried into rendered grids (normally the resolved
    /// configuration document).
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl Scenario {
    /// Ungated scenario with default floor and pole tolerance.
    pub fn new(
        geometry: ArrayGeometry,
        focus: FocusSpec,
        model: OffsetModel,
    ) -> Result<Self, ModelError> {
        focus.check_against(&geometry)?;
        model.validate()?;
        Ok(Self {
            geometry,
            focus,
            model,
            window: ExcitationWindow::ALWAYS,
            gating: GatingMode::None,
            floor_db: DEFAULT_FLOOR_DB,
            pole_epsilon: DEFAULT_POLE_EPSILON,
            metadata: serde_json::Value::Null,
        })
    }

    pub fn with_gating(mut self, window: ExcitationWindow, gating: GatingMode) -> Self {
        self.window = window;
        self.gating = gating;
        self
    }

    pub fn with_model(mut self, model: OffsetModel) -> Result<Self, ModelError> {
        model.validate()?;
        self.model = model;
        Ok(self)
    }

    pub fn with_geometry(mut self, geometry: ArrayGeometry) -> Result<Self, ModelError> {
        self.focus.check_against(&geometry)?;
        self.geometry = geometry;
        Ok(self)
    }

    pub fn c(&self) -> f64 {
        self.geometry.c()
    }

    pub fn field(&self, p: &SpaceTimePoint) -> FieldSample {
        array_factor_with_epsilon(
            &self.geometry,
            &self.model,
            &self.focus,
            &self.window,
            self.gating,
            p,
            self.pole_epsilon,
        )
    }

    /// Frequency offsets of all elements at `p`, in index order.
    pub fn offsets(&self, p: &SpaceTimePoint) -> Result<Vec<f64>, ModelError> {
        self.geometry
            .indices()
            .map(|n| {
                offset_at_with_epsilon(
                    &self.model,
                    &self.focus,
                    &self.geometry,
                    n,
                    p,
                    self.pole_epsilon,
                )
            })
            .collect()
    }
}
