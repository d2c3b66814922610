//! Array geometry, focus parameters and the frequency-offset laws.
//!
//! Every law shares one closed form,
//!
//! ```text
//! Δf_n = (g_n − n·d·f₀·sin θ₀ / c) / (τ + (n·d / c)·sin θ₀)
//! ```
//!
//! and the variants differ only in the time argument `τ`:
//!
//! * [`OffsetModel::Constant`]: `τ = t_m`, fixed for the whole simulation.
//! * [`OffsetModel::Naive`]: `τ = t − r₁/c`, driven by the *observation* time.
//!   This is physically unrealizable, since the element frequency then depends
//!   on where the observer stands.
//! * [`OffsetModel::Causal`]: `τ = (t − r/c) − r₁/c`, driven by the emission
//!   (retarded) time of the wavefront reaching the observer.
//!
//! With `d = c/(2f₀)` the closed form reduces to the familiar
//! `(g_n − (n/2) sin θ₀) / (τ + n sin θ₀ / (2f₀))`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Propagation speed used when none is configured, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Smallest offset-law denominator magnitude accepted before a sample is
/// declared singular, s.
pub const DEFAULT_POLE_EPSILON: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid focus specification: {0}")]
    InvalidFocus(String),
    #[error("invalid offset model: {0}")]
    InvalidModel(String),
    #[error("invalid excitation window: {0}")]
    InvalidWindow(String),
    #[error("invalid space-time point: {0}")]
    InvalidPoint(String),
    #[error("element index {n} outside [-{n_half}, {n_half}]")]
    ElementOutOfRange { n: i32, n_half: usize },
    #[error("offset law is singular for element {n} (denominator {denominator:e} s)")]
    SingularDenominator { n: i32, denominator: f64 },
}

/// Uniform linear array of `2N+1` elements indexed `n = −N..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_half: usize,
    f0: f64,
    d: f64,
    phi: Vec<f64>,
    c: f64,
}

impl ArrayGeometry {
    /// Half-wavelength array with zero static phases and `c = 3e8 m/s`.
    pub fn half_wavelength(n_half: usize, f0: f64) -> Result<Self, ModelError> {
        Self::new(n_half, f0, None, None, None)
    }

    /// Builds a geometry, filling `d = c/(2f₀)`, `φ = 0` and `c = 3e8` when
    /// absent.
    pub fn new(
        n_half: usize,
        f0: f64,
        d: Option<f64>,
        phi: Option<Vec<f64>>,
        c: Option<f64>,
    ) -> Result<Self, ModelError> {
        let c = c.unwrap_or(SPEED_OF_LIGHT);
        if !(c.is_finite() && c > 0.0) {
            return Err(ModelError::InvalidGeometry(format!(
                "c must be > 0, got {c}"
            )));
        }
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(ModelError::InvalidGeometry(format!(
                "f0 must be > 0, got {f0}"
            )));
        }
        let d = d.unwrap_or(c / (2.0 * f0));
        if !(d.is_finite() && d > 0.0) {
            return Err(ModelError::InvalidGeometry(format!(
                "d must be > 0, got {d}"
            )));
        }
        let count = 2 * n_half + 1;
        let phi = phi.unwrap_or_else(|| vec![0.0; count]);
        if phi.len() != count {
            return Err(ModelError::InvalidGeometry(format!(
                "phi must have 2N+1 = {count} entries, got {}",
                phi.len()
            )));
        }
        if phi.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::InvalidGeometry(
                "phi entries must be finite".into(),
            ));
        }
        Ok(Self {
            n_half,
            f0,
            d,
            phi,
            c,
        })
    }

    /// Replaces the static phases, indexed `n = −N..=N`.
    pub fn with_phases(self, phi: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(self.n_half, self.f0, Some(self.d), Some(phi), Some(self.c))
    }

    pub fn n_half(&self) -> usize {
        self.n_half
    }

    pub fn element_count(&self) -> usize {
        2 * self.n_half + 1
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn spacing(&self) -> f64 {
        self.d
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn phases(&self) -> &[f64] {
        &self.phi
    }

    /// Static phase φ_n of element `n`.
    pub fn phase(&self, n: i32) -> f64 {
        self.phi[self.slot(n)]
    }

    /// Element indices in summation order, `−N..=N`.
    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        let n = self.n_half as i32;
        -n..=n
    }

    pub fn contains(&self, n: i32) -> bool {
        n.unsigned_abs() as usize <= self.n_half
    }

    fn slot(&self, n: i32) -> usize {
        (n + self.n_half as i32) as usize
    }
}

/// Steering angle and the optimized per-element factors.
///
/// `g` holds `g_1..g_N`; `g_{−n} = g_n` and `g_0 = 0` are implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusSpec {
    theta0: f64,
    g: Vec<f64>,
}

impl FocusSpec {
    pub fn new(theta0: f64, g: Vec<f64>) -> Result<Self, ModelError> {
        if !theta0.is_finite() || theta0.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(ModelError::InvalidFocus(format!(
                "|theta0| must be <= pi/2, got {theta0}"
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidFocus("g entries must be finite".into()));
        }
        Ok(Self { theta0, g })
    }

    /// Checks that `g` provides exactly one factor per positive element.
    pub fn check_against(&self, geom: &ArrayGeometry) -> Result<(), ModelError> {
        if self.g.len() != geom.n_half() {
            return Err(ModelError::InvalidFocus(format!(
                "g must have N = {} entries, got {}",
                geom.n_half(),
                self.g.len()
            )));
        }
        Ok(())
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn factors(&self) -> &[f64] {
        &self.g
    }

    /// `g_n` with the symmetric extension and `g_0 = 0`.
    pub fn g_at(&self, n: i32) -> f64 {
        match n.unsigned_abs() as usize {
            0 => 0.0,
            k => self.g[k - 1],
        }
    }
}

/// Which time argument drives the offset law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OffsetModel {
    /// Time-independent offsets tuned so the focus leaves the array at `t_m`.
    Constant { t_m: f64 },
    /// Offsets modulated by observation time over `t ∈ [0, window]`.
    Naive { r1: f64, window: f64 },
    /// Offsets modulated by emission time `t − r/c`.
    Causal { r1: f64, window: f64 },
}

impl OffsetModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            OffsetModel::Constant { t_m } => {
                if !t_m.is_finite() {
                    return Err(ModelError::InvalidModel("t_m must be finite".into()));
                }
            }
            OffsetModel::Naive { r1, window } | OffsetModel::Causal { r1, window } => {
                if !(r1.is_finite() && r1 >= 0.0) {
                    return Err(ModelError::InvalidModel(format!(
                        "r1 must be >= 0, got {r1}"
                    )));
                }
                if !(window.is_finite() && window > 0.0) {
                    return Err(ModelError::InvalidModel(format!(
                        "modulation window T must be > 0, got {window}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            OffsetModel::Constant { .. } => "constant",
            OffsetModel::Naive { .. } => "naive",
            OffsetModel::Causal { .. } => "causal",
        }
    }

    /// Time argument `τ` of the offset law at point `p`.
    pub fn tau(&self, geom: &ArrayGeometry, p: &SpaceTimePoint) -> f64 {
        match *self {
            OffsetModel::Constant { t_m } => t_m,
            OffsetModel::Naive { r1, .. } => p.t - r1 / geom.c(),
            OffsetModel::Causal { r1, .. } => emission_time(p, geom) - r1 / geom.c(),
        }
    }
}

/// Emission-time interval during which the elements radiate. Infinite
/// bounds mean "always on" on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationWindow {
    pub t_start: f64,
    pub t_end: f64,
}

impl ExcitationWindow {
    pub const ALWAYS: ExcitationWindow = ExcitationWindow {
        t_start: f64::NEG_INFINITY,
        t_end: f64::INFINITY,
    };

    pub fn new(t_start: f64, t_end: f64) -> Result<Self, ModelError> {
        if t_start.is_nan() || t_end.is_nan() || t_start >= t_end {
            return Err(ModelError::InvalidWindow(format!(
                "t_start must be < t_end, got [{t_start}, {t_end}]"
            )));
        }
        Ok(Self { t_start, t_end })
    }

    /// Excitation switched on at `t_start` and never switched off.
    pub fn starting_at(t_start: f64) -> Result<Self, ModelError> {
        Self::new(t_start, f64::INFINITY)
    }

    pub fn contains(&self, time: f64) -> bool {
        time >= self.t_start && time <= self.t_end
    }

    /// True when the wave observed at `(t, r)` left the array before the
    /// excitation began, i.e. `r > c·(t − t_start)`. Shared by the
    /// emission-time gate and the light-cone checker so both agree exactly.
    pub fn emitted_before_start(&self, t: f64, r: f64, c: f64) -> bool {
        self.t_start != f64::NEG_INFINITY && cone_exceeds(r / c, t - self.t_start, t, self.t_start)
    }

    /// True when the wave observed at `(t, r)` left the array after the
    /// excitation ended.
    pub fn emitted_after_end(&self, t: f64, r: f64, c: f64) -> bool {
        self.t_end != f64::INFINITY && cone_exceeds(t - self.t_end, r / c, t, self.t_end)
    }

    /// Emission time `t − r/c` inside the window, both ends inclusive.
    pub fn emits(&self, t: f64, r: f64, c: f64) -> bool {
        !self.emitted_before_start(t, r, c) && !self.emitted_after_end(t, r, c)
    }
}

/// Relative round-off allowance for light-cone comparisons. A cell exactly
/// on the cone, such as `r = c·(t − t_start)` on a uniform grid, computes
/// its emission time a few ulps either side of `t_start`; it counts as
/// emitted at `t_start`.
const CONE_SLACK: f64 = 16.0 * f64::EPSILON;

/// `a > b` by more than round-off on the scale of the operands.
fn cone_exceeds(a: f64, b: f64, t: f64, edge: f64) -> bool {
    a - b > CONE_SLACK * (a.abs() + t.abs() + edge.abs())
}

impl Default for ExcitationWindow {
    fn default() -> Self {
        Self::ALWAYS
    }
}

/// Observation point: time `t` (s), range `r` (m), angle `theta` (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
}

impl SpaceTimePoint {
    pub fn new(t: f64, r: f64, theta: f64) -> Result<Self, ModelError> {
        if r.is_nan() || r < 0.0 || !r.is_finite() || !t.is_finite() || !theta.is_finite() {
            return Err(ModelError::InvalidPoint(format!(
                "need finite t, theta and r >= 0, got (t={t}, r={r}, theta={theta})"
            )));
        }
        Ok(Self { t, r, theta })
    }
}

/// Retarded time `t₀ = t − r/c` at which the wavefront observed at `p`
/// left the array.
pub fn emission_time(p: &SpaceTimePoint, geom: &ArrayGeometry) -> f64 {
    retarded_time(p.t, p.r, geom.c())
}

/// `t − r/c`.
pub fn retarded_time(t: f64, r: f64, c: f64) -> f64 {
    t - r / c
}

/// Frequency offset `Δf_n` in Hz, with the default pole tolerance.
pub fn offset_at(
    model: &OffsetModel,
    focus: &FocusSpec,
    geom: &ArrayGeometry,
    n: i32,
    p: &SpaceTimePoint,
) -> Result<f64, ModelError> {
    offset_at_with_epsilon(model, focus, geom, n, p, DEFAULT_POLE_EPSILON)
}

/// Frequency offset `Δf_n` in Hz. Fails with
/// [`ModelError::SingularDenominator`] when the law's denominator is within
/// `pole_epsilon` seconds of zero.
pub fn offset_at_with_epsilon(
    model: &OffsetModel,
    focus: &FocusSpec,
    geom: &ArrayGeometry,
    n: i32,
    p: &SpaceTimePoint,
    pole_epsilon: f64,
) -> Result<f64, ModelError> {
    if !geom.contains(n) {
        return Err(ModelError::ElementOutOfRange {
            n,
            n_half: geom.n_half(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let tau = model.tau(geom, p);
    let (numerator, denominator) = law_terms(focus, geom, n, tau);
    if denominator.is_nan() || denominator.abs() < pole_epsilon {
        return Err(ModelError::SingularDenominator { n, denominator });
    }
    Ok(numerator / denominator)
}

/// Numerator and denominator of the generalized offset law for element `n`.
pub fn law_terms(focus: &FocusSpec, geom: &ArrayGeometry, n: i32, tau: f64) -> (f64, f64) {
    let sin0 = focus.theta0().sin();
    let nd_over_c = n as f64 * geom.spacing() / geom.c();
    let numerator = focus.g_at(n) - nd_over_c * geom.f0() * sin0;
    let denominator = tau + nd_over_c * sin0;
    (numerator, denominator)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: f64 = 1e-9;

    fn reference_array() -> (ArrayGeometry, FocusSpec) {
        let geom = ArrayGeometry::half_wavelength(5, 3e9).unwrap();
        let focus = FocusSpec::new(-30f64.to_radians(), vec![1.8, 4.4, 4.4, 5.5, 4.8]).unwrap();
        (geom, focus)
    }

    fn at(t: f64, r: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(t, r, 0.0).unwrap()
    }

    #[test]
    fn emission_time_examples() {
        let (geom, _) = reference_array();
        assert_eq!(emission_time(&at(0.0, 0.0), &geom), 0.0);
        assert!((emission_time(&at(0.0, 15.0), &geom) + 50.0 * NS).abs() < 1e-21);
        assert!(emission_time(&at(80.0 * NS, 24.0), &geom).abs() < 1e-21);
    }

    #[test]
    fn defaults_are_half_wavelength() {
        let (geom, _) = reference_array();
        assert_eq!(geom.c(), 3e8);
        assert_eq!(geom.spacing(), 0.05);
        assert_eq!(geom.phases(), &[0.0; 11]);
    }

    #[test]
    fn geometry_rejects_bad_inputs() {
        assert!(ArrayGeometry::half_wavelength(2, 0.0).is_err());
        assert!(ArrayGeometry::new(2, 1e9, Some(-1.0), None, None).is_err());
        assert!(ArrayGeometry::new(2, 1e9, None, Some(vec![0.0; 4]), None).is_err());
        assert!(ArrayGeometry::new(2, 1e9, None, None, Some(0.0)).is_err());
    }

    #[test]
    fn focus_rejects_out_of_range_angle_and_wrong_length() {
        assert!(FocusSpec::new(2.0, vec![]).is_err());
        let (geom, _) = reference_array();
        let short = FocusSpec::new(0.1, vec![1.0; 4]).unwrap();
        assert!(short.check_against(&geom).is_err());
    }

    #[test]
    fn g_is_symmetric_with_zero_center() {
        let (_, focus) = reference_array();
        assert_eq!(focus.g_at(0), 0.0);
        for n in 1..=5 {
            assert_eq!(focus.g_at(n), focus.g_at(-n));
        }
        assert_eq!(focus.g_at(4), 5.5);
    }

    #[test]
    fn window_validation() {
        assert!(ExcitationWindow::new(1.0, 1.0).is_err());
        assert!(ExcitationWindow::new(f64::NAN, 1.0).is_err());
        let w = ExcitationWindow::starting_at(0.0).unwrap();
        assert!(w.contains(0.0) && w.contains(1e9) && !w.contains(-1e-30));
    }

    #[test]
    fn constant_offsets_hand_computed() {
        // numerator 1.8 + 0.25 = 2.05, denominator −50 ns − 1/(12 GHz)
        let (geom, focus) = reference_array();
        let model = OffsetModel::Constant { t_m: -50.0 * NS };
        let p = at(0.0, 0.0);
        let plus = offset_at(&model, &focus, &geom, 1, &p).unwrap();
        let expected_plus = 2.05 / (-50.0e-9 - 1.0 / 12.0e9);
        assert!((plus - expected_plus).abs() <= 1e-12 * expected_plus.abs());
        assert!((plus / 1e6 + 40.932).abs() < 1e-3);

        let minus = offset_at(&model, &focus, &geom, -1, &p).unwrap();
        let expected_minus = 1.55 / (-50.0e-9 + 1.0 / 12.0e9);
        assert!((minus - expected_minus).abs() <= 1e-12 * expected_minus.abs());
        assert!((minus / 1e6 + 31.052).abs() < 1e-3);
    }

    #[test]
    fn naive_at_zero_matches_constant_minus_fifty() {
        let (geom, focus) = reference_array();
        let naive = OffsetModel::Naive {
            r1: 15.0,
            window: 30.0 * NS,
        };
        let v = offset_at(&naive, &focus, &geom, 1, &at(0.0, 0.0)).unwrap();
        assert!((v / 1e6 + 40.932).abs() < 1e-3);
    }

    #[test]
    fn center_element_has_zero_offset() {
        let (geom, focus) = reference_array();
        for model in [
            OffsetModel::Constant { t_m: 0.0 },
            OffsetModel::Naive {
                r1: 0.0,
                window: 1.0,
            },
            OffsetModel::Causal {
                r1: 3.0,
                window: 1.0,
            },
        ] {
            assert_eq!(
                offset_at(&model, &focus, &geom, 0, &at(0.0, 0.0)).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn pole_is_reported_not_propagated() {
        let (geom, focus) = reference_array();
        // τ = −(n d / c) sin θ₀ puts element n exactly on its pole.
        let n = 2;
        let t_m = -(n as f64 * geom.spacing() / geom.c()) * focus.theta0().sin();
        let model = OffsetModel::Constant { t_m };
        let err = offset_at(&model, &focus, &geom, n, &at(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, ModelError::SingularDenominator { n: 2, .. }));
    }

    #[test]
    fn out_of_range_element() {
        let (geom, focus) = reference_array();
        let model = OffsetModel::Constant { t_m: 1.0 };
        assert!(matches!(
            offset_at(&model, &focus, &geom, 6, &at(0.0, 0.0)),
            Err(ModelError::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn model_validation() {
        assert!(OffsetModel::Naive {
            r1: 15.0,
            window: 0.0
        }
        .validate()
        .is_err());
        assert!(OffsetModel::Causal {
            r1: -1.0,
            window: 1.0
        }
        .validate()
        .is_err());
        assert!(OffsetModel::Constant { t_m: f64::NAN }.validate().is_err());
        assert!(OffsetModel::Constant { t_m: -5e-8 }.validate().is_ok());
    }

    #[test]
    fn negative_range_point_rejected() {
        assert!(SpaceTimePoint::new(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn cells_on_the_cone_are_excited() {
        let w = ExcitationWindow::starting_at(-90e-9).unwrap();
        // Grid cell t = -65.25 ns, r = 7.425 m sits exactly on r = c(t + 90 ns);
        // t - r/c lands one ulp below -90 ns.
        let (t, r) = (-100e-9 + 139.0 * (150e-9 / 600.0), 0.05 * 148.5);
        assert!(!w.emitted_before_start(t, r, 3e8));
        assert!(w.emits(t, r, 3e8));
        assert!(w.emitted_before_start(t, r + 1e-9, 3e8));
        assert!(!w.emitted_before_start(t, r - 1e-9, 3e8));
    }

    #[test]
    fn window_end_gates_late_emission() {
        let w = ExcitationWindow::new(0.0, 10e-9).unwrap();
        assert!(w.emits(10e-9, 0.0, 3e8));
        assert!(w.emitted_after_end(11e-9, 0.0, 3e8));
        assert!(w.emits(11e-9, 0.3, 3e8));
        assert!(!ExcitationWindow::ALWAYS.emitted_before_start(-1.0, 1e9, 3e8));
    }
}
