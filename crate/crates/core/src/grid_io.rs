//! Long-format CSV serialization of power grids.
//!
//! ```text
//! # config: {...resolved config, one line...}
//! # grid: {"reference_magnitude":..,"floor_db":..,"axis1":{..},"axis2":{..},"fixed":{..}}
//! r_m,theta_deg,power_db
//! 0,-90,-23.4518912
//! ...
//! ```
//!
//! Coordinates are written in engineering units with 9 significant digits.
//! Power values use the shortest decimal that reads back to the same `f64`,
//! and singular cells are written as `nan`. Rows run axis1-major. The exact
//! axis specs live in the `# grid:` line, so a file is self-describing.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{AxisSpec, FixedCoordinate, PowerGrid};

#[derive(Debug, Error)]
pub enum GridIoError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

fn format_err(line: usize, message: impl Into<String>) -> GridIoError {
    GridIoError::Format {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    reference_magnitude: f64,
    floor_db: f64,
    axis1: AxisSpec,
    axis2: AxisSpec,
    fixed: FixedCoordinate,
}

/// Rounds to 9 significant digits and prints the shortest form of the
/// rounded value.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_grid<W: Write>(grid: &PowerGrid, sink: &mut W) -> Result<(), GridIoError> {
    let header = GridHeader {
        reference_magnitude: grid.reference_magnitude,
        floor_db: grid.floor_db,
        axis1: grid.axis1,
        axis2: grid.axis2,
        fixed: grid.fixed,
    };
    writeln!(
        sink,
        "# config: {}",
        serde_json::to_string(&grid.metadata).expect("json value")
    )?;
    writeln!(
        sink,
        "# grid: {}",
        serde_json::to_string(&header).expect("grid header")
    )?;
    writeln!(
        sink,
        "{},{},power_db",
        grid.axis1.kind.column(),
        grid.axis2.kind.column()
    )?;

    let a1: Vec<String> = grid
        .axis1
        .values()
        .iter()
        .map(|v| sig9(grid.axis1.kind.to_display(*v)))
        .collect();
    let a2: Vec<String> = grid
        .axis2
        .values()
        .iter()
        .map(|v| sig9(grid.axis2.kind.to_display(*v)))
        .collect();
    for (i, c1) in a1.iter().enumerate() {
        for (j, c2) in a2.iter().enumerate() {
            if grid.is_valid(i, j) {
                writeln!(sink, "{c1},{c2},{}", grid.get(i, j))?;
            } else {
                writeln!(sink, "{c1},{c2},nan")?;
            }
        }
    }
    Ok(())
}

pub fn write_grid_string(grid: &PowerGrid) -> String {
    let mut buf = Vec::new();
    write_grid(grid, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}

pub fn read_grid<R: BufRead>(source: R) -> Result<PowerGrid, GridIoError> {
    let mut lines = source.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut next = |what: &str| -> Result<(usize, String), GridIoError> {
        match lines.next() {
            Some((k, line)) => Ok((k, line?)),
            None => Err(format_err(
                0,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    };

    let (k, line) = next("config comment")?;
    let config = line
        .strip_prefix("# config: ")
        .ok_or_else(|| format_err(k, "expected '# config: ' line"))?;
    let metadata: serde_json::Value =
        serde_json::from_str(config).map_err(|e| format_err(k, e.to_string()))?;

    let (k, line) = next("grid comment")?;
    let header = line
        .strip_prefix("# grid: ")
        .ok_or_else(|| format_err(k, "expected '# grid: ' line"))?;
    let header: GridHeader =
        serde_json::from_str(header).map_err(|e| format_err(k, e.to_string()))?;
    for axis in [&header.axis1, &header.axis2] {
        AxisSpec::new(axis.kind, axis.min, axis.max, axis.count)
            .map_err(|e| format_err(k, e.to_string()))?;
    }

    let (k, line) = next("column header")?;
    let expected = format!(
        "{},{},power_db",
        header.axis1.kind.column(),
        header.axis2.kind.column()
    );
    if line != expected {
        return Err(format_err(
            k,
            format!("expected header '{expected}', got '{line}'"),
        ));
    }

    let (rows, cols) = (header.axis1.count, header.axis2.count);
    let mut values = Vec::with_capacity(rows * cols);
    let mut valid_mask = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let c1 = sig9(header.axis1.kind.to_display(header.axis1.value(i)));
        for j in 0..cols {
            let (k, line) = next("data row")?;
            let mut fields = line.split(',');
            let (f1, f2, f3) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), Some(c), None) => (a, b, c),
                _ => return Err(format_err(k, "expected 3 columns")),
            };
            let c2 = sig9(header.axis2.kind.to_display(header.axis2.value(j)));
            if f1 != c1 || f2 != c2 {
                return Err(format_err(
                    k,
                    format!("coordinates ({f1}, {f2}) do not match axes ({c1}, {c2})"),
                ));
            }
            if f3 == "nan" {
                values.push(header.floor_db);
                valid_mask.push(false);
            } else {
                let v: f64 = f3
                    .parse()
                    .map_err(|_| format_err(k, format!("bad power '{f3}'")))?;
                values.push(v);
                valid_mask.push(true);
            }
        }
    }
    if let Some((k, Ok(extra))) = lines.next() {
        if !extra.is_empty() {
            return Err(format_err(k, "trailing data after the last grid row"));
        }
    }

    Ok(PowerGrid {
        axis1: header.axis1,
        axis2: header.axis2,
        fixed: header.fixed,
        values,
        valid_mask,
        reference_magnitude: header.reference_magnitude,
        floor_db: header.floor_db,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_factor::Scenario;
    use crate::grid::{sweep_range_angle, AxisKind, Execution};
    use crate::model::{ArrayGeometry, FocusSpec, OffsetModel};

    fn grid(n_half: usize, nr: usize, nt: usize) -> PowerGrid {
        let geom = ArrayGeometry::half_wavelength(n_half, 3e9).unwrap();
        let g = [1.8, 4.4, 4.4, 5.5, 4.8][..n_half].to_vec();
        let focus = FocusSpec::new(-30f64.to_radians(), g).unwrap();
        let mut s = Scenario::new(geom, focus, OffsetModel::Constant { t_m: -5e-8 }).unwrap();
        s.metadata = serde_json::json!({"note": "test"});
        sweep_range_angle(
            &s,
            AxisSpec::new(AxisKind::Range, 0.0, 30.0, nr).unwrap(),
            AxisSpec::new(AxisKind::Angle, -1.5, 1.5, nt).unwrap(),
            0.0,
            Execution::Serial,
        )
        .unwrap()
    }

    #[test]
    fn sig9_examples() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(0.15000000000000002), "0.15");
        assert_eq!(sig9(-30.000000000000004), "-30");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
    }

    #[test]
    fn trivial_grid_line_count() {
        let text = write_grid_string(&grid(0, 2, 2));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines.iter().filter(|l| l.starts_with("# ")).count(), 2);
        assert_eq!(lines[2], "r_m,theta_deg,power_db");
        assert_eq!(lines[3], "0,-85.9436693,0");
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn round_trip_is_exact() {
        let g = grid(5, 13, 17);
        let back = read_grid(write_grid_string(&g).as_bytes()).unwrap();
        assert_eq!(back, g);
        for (a, b) in g.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn invalid_cells_written_as_nan() {
        let mut g = grid(1, 2, 2);
        g.valid_mask[1] = false;
        g.values[1] = g.floor_db;
        let text = write_grid_string(&g);
        assert_eq!(text.lines().nth(4).unwrap().rsplit(',').next(), Some("nan"));
        assert_eq!(read_grid(text.as_bytes()).unwrap(), g);
    }

    #[test]
    fn rejects_corrupted_files() {
        let text = write_grid_string(&grid(1, 3, 3));
        assert!(read_grid("".as_bytes()).is_err());
        let bad_header = text.replacen("r_m,theta_deg,power_db", "a,b,c", 1);
        assert!(read_grid(bad_header.as_bytes()).is_err());
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(read_grid(truncated.as_bytes()).is_err());
        let extra = format!("{text}1,2,3\n");
        assert!(read_grid(extra.as_bytes()).is_err());
    }
}
