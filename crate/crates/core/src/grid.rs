//! Sweeps of the array factor over 2-D slices of (t, r, θ) and focus
//! extraction.
//!
//! Each cell is an independent evaluation. Sweeps first collect the raw
//! samples (serially or with rayon, order preserved), then take the
//! normalization maximum in index order, so the result does not depend on
//! how work was partitioned.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array_factor::{power_db, FieldSample, Scenario};
use crate::model::SpaceTimePoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("axes must differ and exclude the fixed coordinate ({0})")]
    AxisConflict(String),
    #[error("every cell is gated or singular; nothing to normalize")]
    AllSamplesInvalid,
    #[error("grid has no slice with a valid cell above the floor")]
    EmptyGrid,
    #[error("axis {0:?} is not part of this grid")]
    AxisNotInGrid(AxisKind),
    #[error("grid shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Time,
    Range,
    Angle,
}

impl AxisKind {
    /// CSV column name, in the engineering unit used for that column.
    pub fn column(&self) -> &'static str {
        match self {
            AxisKind::Time => "t_ns",
            AxisKind::Range => "r_m",
            AxisKind::Angle => "theta_deg",
        }
    }

    /// SI value to the column's engineering unit.
    pub fn to_display(&self, si: f64) -> f64 {
        match self {
            AxisKind::Time => si * 1e9,
            AxisKind::Range => si,
            AxisKind::Angle => si.to_degrees(),
        }
    }
}

/// Uniform axis with inclusive endpoints, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub kind: AxisKind,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(kind: AxisKind, min: f64, max: f64, count: usize) -> Result<Self, GridError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(GridError::InvalidAxis(format!(
                "{kind:?} axis needs finite min < max, got [{min}, {max}]"
            )));
        }
        if count < 2 {
            return Err(GridError::InvalidAxis(format!(
                "{kind:?} axis needs at least 2 samples, got {count}"
            )));
        }
        if kind == AxisKind::Range && min < 0.0 {
            return Err(GridError::InvalidAxis(format!(
                "range axis must start at >= 0, got {min}"
            )));
        }
        Ok(Self {
            kind,
            min,
            max,
            count,
        })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    /// Coordinate of sample `i`; both endpoints are exact.
    pub fn value(&self, i: usize) -> f64 {
        if i == 0 {
            self.min
        } else if i + 1 == self.count {
            self.max
        } else {
            self.min + self.step() * i as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    /// Axis over the same extent with `2·count − 1` samples, nesting the
    /// original grid.
    pub fn refined(&self) -> Self {
        Self {
            count: 2 * self.count - 1,
            ..*self
        }
    }
}

/// The coordinate held constant over a 2-D slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedCoordinate {
    pub kind: AxisKind,
    pub value: f64,
}

/// Worker layout for a sweep. Results are identical for every choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Normalized dB power over a 2-D slice, row-major with `axis1` as rows.
///
/// Singular cells have `valid_mask == false` and hold `floor_db`. Gated cells
/// are valid and hold `floor_db` (no power arrives there).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub fixed: FixedCoordinate,
    pub values: Vec<f64>,
    pub valid_mask: Vec<bool>,
    pub reference_magnitude: f64,
    pub floor_db: f64,
    pub metadata: serde_json::Value,
}

impl PowerGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.count, self.axis2.count)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.axis2.count + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid_mask[self.index(i, j)]
    }

    /// Space-time point of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> SpaceTimePoint {
        point_for(
            &self.axis1,
            self.axis1.value(i),
            &self.axis2,
            self.axis2.value(j),
            &self.fixed,
        )
    }

    pub fn axis(&self, kind: AxisKind) -> Option<&AxisSpec> {
        [&self.axis1, &self.axis2]
            .into_iter()
            .find(|a| a.kind == kind)
    }

    /// Checks the structural invariants: matching sizes, finite values in
    /// `[floor_db, 0]`.
    pub fn check(&self) -> Result<(), GridError> {
        let cells = self.axis1.count * self.axis2.count;
        if self.values.len() != cells || self.valid_mask.len() != cells {
            return Err(GridError::Shape(format!(
                "expected {cells} cells, got {} values and {} mask entries",
                self.values.len(),
                self.valid_mask.len()
            )));
        }
        if let Some(v) = self
            .values
            .iter()
            .find(|v| !v.is_finite() || **v > 0.0 || **v < self.floor_db)
        {
            return Err(GridError::Shape(format!(
                "value {v} outside [{}, 0]",
                self.floor_db
            )));
        }
        Ok(())
    }
}

fn point_for(
    axis1: &AxisSpec,
    v1: f64,
    axis2: &AxisSpec,
    v2: f64,
    fixed: &FixedCoordinate,
) -> SpaceTimePoint {
    let mut p = SpaceTimePoint {
        t: 0.0,
        r: 0.0,
        theta: 0.0,
    };
    for (kind, v) in [
        (axis1.kind, v1),
        (axis2.kind, v2),
        (fixed.kind, fixed.value),
    ] {
        match kind {
            AxisKind::Time => p.t = v,
            AxisKind::Range => p.r = v,
            AxisKind::Angle => p.theta = v,
        }
    }
    p
}

/// Sweeps any pair of axes with the third coordinate held fixed.
pub fn sweep(
    scenario: &Scenario,
    axis1: AxisSpec,
    axis2: AxisSpec,
    fixed: FixedCoordinate,
    execution: Execution,
) -> Result<PowerGrid, GridError> {
    if axis1.kind == axis2.kind || fixed.kind == axis1.kind || fixed.kind == axis2.kind {
        return Err(GridError::AxisConflict(format!(
            "{:?} x {:?} at fixed {:?}",
            axis1.kind, axis2.kind, fixed.kind
        )));
    }
    if !fixed.value.is_finite() || (fixed.kind == AxisKind::Range && fixed.value < 0.0) {
        return Err(GridError::InvalidAxis(format!(
            "bad fixed coordinate {}",
            fixed.value
        )));
    }

    let cols = axis2.count;
    let cells = axis1.count * cols;
    let eval = |k: usize| {
        let p = point_for(
            &axis1,
            axis1.value(k / cols),
            &axis2,
            axis2.value(k % cols),
            &fixed,
        );
        scenario.field(&p)
    };
    let samples: Vec<FieldSample> = match execution {
        Execution::Serial => (0..cells).map(eval).collect(),
        Execution::Parallel => (0..cells).into_par_iter().map(eval).collect(),
    };

    let mut reference = 0.0f64;
    for s in samples.iter().filter(|s| s.valid) {
        reference = reference.max(s.magnitude());
    }
    if reference <= 0.0 {
        return Err(GridError::AllSamplesInvalid);
    }

    let floor = scenario.floor_db;
    Ok(PowerGrid {
        axis1,
        axis2,
        fixed,
        values: samples
            .iter()
            .map(|s| power_db(s, reference, floor))
            .collect(),
        valid_mask: samples.iter().map(|s| !s.is_singular()).collect(),
        reference_magnitude: reference,
        floor_db: floor,
        metadata: scenario.metadata.clone(),
    })
}

/// Range-angle projection at a fixed observation time.
pub fn sweep_range_angle(
    scenario: &Scenario,
    range: AxisSpec,
    angle: AxisSpec,
    t_fixed: f64,
    execution: Execution,
) -> Result<PowerGrid, GridError> {
    expect_kind(&range, AxisKind::Range)?;
    expect_kind(&angle, AxisKind::Angle)?;
    sweep(
        scenario,
        range,
        angle,
        FixedCoordinate {
            kind: AxisKind::Time,
            value: t_fixed,
        },
        execution,
    )
}

/// Time-range projection at a fixed angle.
pub fn sweep_time_range(
    scenario: &Scenario,
    time: AxisSpec,
    range: AxisSpec,
    theta_fixed: f64,
    execution: Execution,
) -> Result<PowerGrid, GridError> {
    expect_kind(&time, AxisKind::Time)?;
    expect_kind(&range, AxisKind::Range)?;
    sweep(
        scenario,
        time,
        range,
        FixedCoordinate {
            kind: AxisKind::Angle,
            value: theta_fixed,
        },
        execution,
    )
}

fn expect_kind(axis: &AxisSpec, kind: AxisKind) -> Result<(), GridError> {
    if axis.kind != kind {
        return Err(GridError::AxisConflict(format!(
            "expected {kind:?} axis, got {:?}",
            axis.kind
        )));
    }
    Ok(())
}

/// Peak of one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusPoint {
    /// Coordinate of the slice along the slicing axis (SI).
    pub slice: f64,
    /// Argmax coordinates (SI) for every non-slicing axis of the grid.
    pub location: Vec<(AxisKind, f64)>,
    pub peak_db: f64,
    /// True when the argmax sits on the boundary of a non-slicing axis, so
    /// the true peak may lie outside the grid.
    pub on_edge: bool,
}

impl FocusPoint {
    pub fn coordinate(&self, kind: AxisKind) -> Option<f64> {
        self.location
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, v)| *v)
    }
}

/// Per-slice argmax trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusTrajectory {
    pub slice_axis: AxisKind,
    pub points: Vec<FocusPoint>,
    /// Slice coordinates with no valid cell above the floor.
    pub omitted: Vec<f64>,
}

impl FocusTrajectory {
    /// Points that form the main focus ridge: interior argmax and peak at
    /// least `min_peak_db`.
    pub fn main_ridge(&self, min_peak_db: f64) -> FocusTrajectory {
        FocusTrajectory {
            slice_axis: self.slice_axis,
            points: self
                .points
                .iter()
                .filter(|p| !p.on_edge && p.peak_db >= min_peak_db)
                .cloned()
                .collect(),
            omitted: self.omitted.clone(),
        }
    }

    /// `(slice, coordinate)` pairs for one argmax axis.
    pub fn series(&self, kind: AxisKind) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.coordinate(kind).map(|v| (p.slice, v)))
            .collect()
    }
}

/// Per-slice argmax along `slice_axis`.
///
/// When `slice_axis` is one of the grid axes, every row (or column) is a
/// slice and the argmax runs over the other axis. When it is the fixed
/// coordinate, the whole grid is one slice. Ties go to the smallest index.
/// Singular cells are skipped; slices whose best valid cell is at the floor
/// carry no power and are reported in `omitted`.
pub fn find_focus(grid: &PowerGrid, slice_axis: AxisKind) -> Result<FocusTrajectory, GridError> {
    let (rows, cols) = grid.shape();
    let mut points = Vec::new();
    let mut omitted = Vec::new();

    let mut best_in = |slice: f64, cells: &mut dyn Iterator<Item = (usize, usize)>| {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, j) in cells {
            if !grid.is_valid(i, j) {
                continue;
            }
            let v = grid.get(i, j);
            if best.is_none_or(|(_, _, b)| v > b) {
                best = Some((i, j, v));
            }
        }
        match best {
            Some((i, j, v)) if v > grid.floor_db => {
                let mut location = Vec::with_capacity(2);
                let mut on_edge = false;
                if slice_axis != grid.axis1.kind {
                    location.push((grid.axis1.kind, grid.axis1.value(i)));
                    on_edge |= i == 0 || i + 1 == rows;
                }
                if slice_axis != grid.axis2.kind {
                    location.push((grid.axis2.kind, grid.axis2.value(j)));
                    on_edge |= j == 0 || j + 1 == cols;
                }
                points.push(FocusPoint {
                    slice,
                    location,
                    peak_db: v,
                    on_edge,
                });
            }
            _ => omitted.push(slice),
        }
    };

    if slice_axis == grid.axis1.kind {
        for i in 0..rows {
            best_in(grid.axis1.value(i), &mut (0..cols).map(|j| (i, j)));
        }
    } else if slice_axis == grid.axis2.kind {
        for j in 0..cols {
            best_in(grid.axis2.value(j), &mut (0..rows).map(|i| (i, j)));
        }
    } else if slice_axis == grid.fixed.kind {
        best_in(
            grid.fixed.value,
            &mut (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))),
        );
    } else {
        return Err(GridError::AxisNotInGrid(slice_axis));
    }

    if points.is_empty() {
        return Err(GridError::EmptyGrid);
    }
    Ok(FocusTrajectory {
        slice_axis,
        points,
        omitted,
    })
}
