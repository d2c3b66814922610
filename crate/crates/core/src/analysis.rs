//! Machine-checkable versions of the causality arguments: light-cone
//! violations, retarded-time invariance, naive focus constancy, focus
//! velocity and a naive-vs-causal comparison.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array_factor::{GatingMode, Scenario};
use crate::grid::{
    sweep_time_range, AxisKind, AxisSpec, Execution, FocusTrajectory, GridError, PowerGrid,
};
use crate::model::{law_terms, ExcitationWindow, ModelError, OffsetModel, SpaceTimePoint};

/// Added to |AF| in the invariance denominator: deviations are measured
/// relative to the field but never relative to less than one element's
/// amplitude.
pub const INVARIANCE_EPSILON: f64 = 1.0;

/// Threshold above the floor for a cell to count as carrying power.
pub const CAUSALITY_MARGIN_DB: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("expected a time-range grid, got {0:?} x {1:?}")]
    WrongGridKind(AxisKind, AxisKind),
    #[error("check requires the {expected} model, got {got}")]
    WrongModel {
        expected: &'static str,
        got: &'static str,
    },
    #[error("retarded-time invariance is a property of the ungated field; disable gating")]
    GatingNotAllowed,
    #[error("trajectory is degenerate: {0}")]
    DegenerateTrajectory(String),
    #[error("invalid sampling domain: {0}")]
    InvalidDomain(String),
    #[error("pole avoidance gave up after {0} consecutive rejections")]
    SamplerExhausted(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Cell with power outside the light cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalityViolation {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub pass: bool,
    pub t_start: f64,
    pub threshold_db: f64,
    pub cells_outside_cone: usize,
    pub violations: Vec<CausalityViolation>,
    pub worst_violation_db: Option<f64>,
}

impl CausalityReport {
    /// Violation at the cell nearest to `(t, r)`, if any.
    pub fn violation_near(&self, t: f64, r: f64, dt: f64, dr: f64) -> Option<&CausalityViolation> {
        self.violations
            .iter()
            .find(|v| (v.t - t).abs() <= dt && (v.r - r).abs() <= dr)
    }
}

impl fmt::Display for CausalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "causality: {} ({} violations among {} cells outside the cone, threshold {:.1} dB",
            if self.pass { "pass" } else { "FAIL" },
            self.violations.len(),
            self.cells_outside_cone,
            self.threshold_db
        )?;
        if let Some(w) = self.worst_violation_db {
            write!(f, ", worst {w:.2} dB")?;
        }
        write!(f, ")")
    }
}

/// Flags every valid cell of a time-range grid that lies outside the light
/// cone `r ≤ c·(t − t_start)` and carries more than `threshold_db`.
///
/// An infinite `t_start` makes the check vacuous.
pub fn check_causality(
    grid: &PowerGrid,
    window: &ExcitationWindow,
    c: f64,
    threshold_db: f64,
) -> Result<CausalityReport, AnalysisError> {
    let kinds = (grid.axis1.kind, grid.axis2.kind);
    if !matches!(
        kinds,
        (AxisKind::Time, AxisKind::Range) | (AxisKind::Range, AxisKind::Time)
    ) {
        return Err(AnalysisError::WrongGridKind(kinds.0, kinds.1));
    }
    let (rows, cols) = grid.shape();
    let mut violations = Vec::new();
    let mut outside = 0;
    for i in 0..rows {
        for j in 0..cols {
            let p = grid.point(i, j);
            if !window.emitted_before_start(p.t, p.r, c) {
                continue;
            }
            outside += 1;
            let v = grid.get(i, j);
            if grid.is_valid(i, j) && v > threshold_db {
                violations.push(CausalityViolation {
                    t: p.t,
                    r: p.r,
                    theta: p.theta,
                    power_db: v,
                });
            }
        }
    }
    let worst = violations.iter().map(|v| v.power_db).reduce(f64::max);
    Ok(CausalityReport {
        pass: violations.is_empty(),
        t_start: window.t_start,
        threshold_db,
        cells_outside_cone: outside,
        violations,
        worst_violation_db: worst,
    })
}

/// Box from which invariance samples are drawn, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    pub t: (f64, f64),
    pub r: (f64, f64),
    pub theta: (f64, f64),
    /// Largest shift Δ in seconds; shifts are uniform in `[0, max_shift]`.
    pub max_shift: f64,
}

impl SampleDomain {
    fn validate(&self) -> Result<(), AnalysisError> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(ok(self.t) && ok(self.r) && ok(self.theta)) || self.r.0 < 0.0 {
            return Err(AnalysisError::InvalidDomain(format!("{self:?}")));
        }
        if !(self.max_shift.is_finite() && self.max_shift >= 0.0) {
            return Err(AnalysisError::InvalidDomain(format!(
                "max_shift {}",
                self.max_shift
            )));
        }
        Ok(())
    }
}

/// One sampled invariance probe: `(t, r, θ)` and shift Δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub shift: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub model: String,
    pub check: String,
    pub max_relative_deviation: f64,
    pub sample_count: usize,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub resamples: usize,
    pub worst: Option<ShiftSample>,
    /// Mean |AF| for the constancy check.
    pub magnitude: Option<f64>,
}

impl fmt::Display for InvarianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}]: {} (max deviation {:.3e}, tolerance {:.1e}, {} samples",
            self.check,
            self.model,
            if self.pass { "pass" } else { "FAIL" },
            self.max_relative_deviation,
            self.tolerance,
            self.sample_count
        )?;
        if let Some(seed) = self.seed {
            write!(f, ", seed {seed}, {} resamples", self.resamples)?;
        }
        if let Some(m) = self.magnitude {
            write!(f, ", |AF| = {m:.6}")?;
        }
        write!(f, ")")
    }
}

/// Rejection rule for samples near an offset-law pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleGuard {
    /// Reject when any denominator is closer than this to zero, s.
    pub min_denominator: f64,
    /// Reject when any `|Δf_n|` reaches this, Hz. The field near a pole is
    /// so steep in `t − r/c` that one ulp of round-off in the retarded time
    /// moves the phase by more than the invariance tolerance.
    pub max_offset_hz: Option<f64>,
    pub max_attempts: usize,
}

impl PoleGuard {
    /// `10·ε_den` on the denominator and `|Δf_n| < f₀`.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self {
            min_denominator: 10.0 * scenario.pole_epsilon,
            max_offset_hz: Some(scenario.geometry.f0()),
            max_attempts: 10_000,
        }
    }

    fn accepts(&self, scenario: &Scenario, p: &SpaceTimePoint) -> bool {
        let geom = &scenario.geometry;
        let tau = scenario.model.tau(geom, p);
        geom.indices().filter(|n| *n != 0).all(|n| {
            let (num, den) = law_terms(&scenario.focus, geom, n, tau);
            if den.is_nan() || den.abs() < self.min_denominator {
                return false;
            }
            self.max_offset_hz.is_none_or(|cap| (num / den).abs() < cap)
        })
    }
}

/// Randomized check that `AF(t+Δ, r+cΔ, θ) = AF(t, r, θ)`.
///
/// The deviation of each probe is `|AF' − AF| / (|AF| + ε)` with
/// [`INVARIANCE_EPSILON`]. Probes are drawn with a seeded ChaCha generator;
/// probes rejected by the pole guard are redrawn and counted.
pub fn check_retarded_invariance(
    scenario: &Scenario,
    domain: &SampleDomain,
    sample_count: usize,
    tolerance: f64,
    seed: u64,
) -> Result<InvarianceReport, AnalysisError> {
    check_retarded_invariance_guarded(
        scenario,
        domain,
        sample_count,
        tolerance,
        seed,
        &PoleGuard::for_scenario(scenario),
    )
}

pub fn check_retarded_invariance_guarded(
    scenario: &Scenario,
    domain: &SampleDomain,
    sample_count: usize,
    tolerance: f64,
    seed: u64,
    guard: &PoleGuard,
) -> Result<InvarianceReport, AnalysisError> {
    if scenario.gating != GatingMode::None {
        return Err(AnalysisError::GatingNotAllowed);
    }
    domain.validate()?;
    let c = scenario.c();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..=hi)
        }
    };

    let mut resamples = 0;
    let mut worst: Option<ShiftSample> = None;
    for _ in 0..sample_count {
        let mut attempts = 0;
        let (p, q, shift) = loop {
            let t = draw(&mut rng, domain.t);
            let r = draw(&mut rng, domain.r);
            let theta = draw(&mut rng, domain.theta);
            let shift = draw(&mut rng, (0.0, domain.max_shift));
            let p = SpaceTimePoint { t, r, theta };
            let q = SpaceTimePoint {
                t: t + shift,
                r: r + c * shift,
                theta,
            };
            if guard.accepts(scenario, &p) && guard.accepts(scenario, &q) {
                break (p, q, shift);
            }
            resamples += 1;
            attempts += 1;
            if attempts >= guard.max_attempts {
                return Err(AnalysisError::SamplerExhausted(attempts));
            }
        };
        let a = scenario.field(&p);
        let b = scenario.field(&q);
        let deviation = if a.valid && b.valid {
            (b.value - a.value).norm() / (a.magnitude() + INVARIANCE_EPSILON)
        } else {
            // guard should have excluded poles; treat a hole as maximal
            f64::INFINITY
        };
        if worst.is_none_or(|w| deviation > w.deviation) {
            worst = Some(ShiftSample {
                t: p.t,
                r: p.r,
                theta: p.theta,
                shift,
                deviation,
            });
        }
    }

    let max_dev = worst.map_or(0.0, |w| w.deviation);
    Ok(InvarianceReport {
        model: scenario.model.tag().into(),
        check: "retarded-time invariance".into(),
        max_relative_deviation: max_dev,
        sample_count,
        tolerance,
        pass: max_dev <= tolerance,
        seed: Some(seed),
        resamples,
        worst,
        magnitude: None,
    })
}

/// Evaluates the naive model at `(r₁, θ₀)` for `t` evenly spaced over
/// `[0, T]` and reports the relative spread `(max − min)/max` of |AF|.
pub fn check_naive_focus_constancy(
    scenario: &Scenario,
    n_time_samples: usize,
    tolerance: f64,
) -> Result<InvarianceReport, AnalysisError> {
    let (r1, window) = match scenario.model {
        OffsetModel::Naive { r1, window } => (r1, window),
        other => {
            return Err(AnalysisError::WrongModel {
                expected: "naive",
                got: other.tag(),
            })
        }
    };
    let theta0 = scenario.focus.theta0();
    let count = n_time_samples.max(1);
    let mut magnitudes = Vec::with_capacity(count);
    for k in 0..count {
        let t = if count == 1 {
            0.0
        } else {
            window * k as f64 / (count - 1) as f64
        };
        let sample = scenario.field(&SpaceTimePoint {
            t,
            r: r1,
            theta: theta0,
        });
        magnitudes.push(if sample.valid {
            sample.magnitude()
        } else {
            f64::NAN
        });
    }
    let max = magnitudes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = magnitudes.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = magnitudes.iter().sum::<f64>() / count as f64;
    let spread = if magnitudes.iter().any(|m| m.is_nan()) {
        f64::INFINITY
    } else if max > 0.0 {
        (max - min) / max
    } else {
        0.0
    };
    Ok(InvarianceReport {
        model: scenario.model.tag().into(),
        check: "naive focus constancy".into(),
        max_relative_deviation: spread,
        sample_count: count,
        tolerance,
        pass: spread <= tolerance,
        seed: None,
        resamples: 0,
        worst: None,
        magnitude: Some(mean),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityReport {
    /// Least-squares slope of `r*(t)`, m/s.
    pub slope: f64,
    /// Fitted range at `t = 0`, m.
    pub intercept: f64,
    /// RMS distance of the argmax points from the fitted line, m.
    pub residual: f64,
    pub relative_error_vs_c: f64,
    pub points: usize,
}

impl fmt::Display for VelocityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "focus velocity: {:.6e} m/s ({:+.4}% vs c), r(t=0) = {:.4} m, rms residual {:.4} m over {} slices",
            self.slope,
            100.0 * self.relative_error_vs_c,
            self.intercept,
            self.residual,
            self.points
        )
    }
}

/// Least-squares line through the `(t, r*)` points of a time-sliced
/// trajectory.
pub fn estimate_focus_velocity(
    traj: &FocusTrajectory,
    c: f64,
) -> Result<VelocityReport, AnalysisError> {
    if traj.slice_axis != AxisKind::Time {
        return Err(AnalysisError::DegenerateTrajectory(format!(
            "trajectory is sliced along {:?}, need time",
            traj.slice_axis
        )));
    }
    let pts = traj.series(AxisKind::Range);
    let (slope, intercept, residual) = fit_line(&pts)?;
    Ok(VelocityReport {
        slope,
        intercept,
        residual,
        relative_error_vs_c: (slope - c) / c,
        points: pts.len(),
    })
}

/// Ordinary least squares `y = a·x + b`; returns `(a, b, rms residual)`.
fn fit_line(pts: &[(f64, f64)]) -> Result<(f64, f64, f64), AnalysisError> {
    if pts.len() < 2 {
        return Err(AnalysisError::DegenerateTrajectory(format!(
            "need at least 2 points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateTrajectory(
            "all slices share one time".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    Ok((slope, intercept, (ss / n).sqrt()))
}

/// Naive and causal grids over the same axes, plus `causal − naive` in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub naive: PowerGrid,
    pub causal: PowerGrid,
    pub difference: Vec<f64>,
    /// False where either grid is singular.
    pub difference_valid: Vec<bool>,
}

/// Sweeps the naive and causal models with otherwise identical parameters.
/// Each grid keeps its own normalization.
pub fn compare_models(
    scenario: &Scenario,
    r1: f64,
    window: f64,
    time: AxisSpec,
    range: AxisSpec,
    theta: f64,
    execution: Execution,
) -> Result<ModelComparison, AnalysisError> {
    let naive_s = scenario
        .clone()
        .with_model(OffsetModel::Naive { r1, window })?;
    let causal_s = scenario
        .clone()
        .with_model(OffsetModel::Causal { r1, window })?;
    let naive = sweep_time_range(&naive_s, time, range, theta, execution)?;
    let causal = sweep_time_range(&causal_s, time, range, theta, execution)?;
    let difference_valid: Vec<bool> = naive
        .valid_mask
        .iter()
        .zip(&causal.valid_mask)
        .map(|(a, b)| *a && *b)
        .collect();
    let difference = causal
        .values
        .iter()
        .zip(&naive.values)
        .zip(&difference_valid)
        .map(|((c, n), ok)| if *ok { c - n } else { 0.0 })
        .collect();
    Ok(ModelComparison {
        naive,
        causal,
        difference,
        difference_valid,
    })
}
