//! CSV ingestion and emission.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::metrics::ObservationSeries;
use crate::model::HormoneState;
use crate::params::ParameterSet;

pub const OBSERVATION_HEADER: [&str; 3] = ["time_min", "acth_pg_ml", "cortisol_ug_dl"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["t_min", "crh", "acth", "cortisol"];

/// Shortest decimal form that parses back to the same `f64`; scientific
/// notation outside `[1e-4, 1e15)`.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Builds CSV text with `\n` line endings.
#[derive(Debug, Default)]
pub struct CsvText(String);

impl CsvText {
    pub fn new(header: &[&str]) -> Self {
        let mut s = Self::default();
        s.row(header.iter().map(|h| h.to_string()));
        s
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let line: Vec<String> = cells.into_iter().collect();
        self.0.push_str(&line.join(","));
        self.0.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.0.as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> CsvText {
    let mut out = CsvText::new(&TRAJECTORY_HEADER);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.row([
            fmt_float(*t),
            fmt_float(s.r),
            fmt_float(s.a),
            fmt_float(s.c),
        ]);
    }
    out
}

/// ACTH and cortisol columns of a trajectory in the observation schema.
pub fn observations_csv(obs: &ObservationSeries) -> CsvText {
    let mut out = CsvText::new(&OBSERVATION_HEADER);
    let cell =
        |v: &Option<Vec<f64>>, i: usize| v.as_ref().map_or(String::new(), |v| fmt_float(v[i]));
    for (i, t) in obs.times.iter().enumerate() {
        out.row([fmt_float(*t), cell(&obs.acth, i), cell(&obs.cortisol, i)]);
    }
    out
}

/// Header and `(row number, cells)` records.
type Records = (Vec<String>, Vec<(usize, Vec<String>)>);

fn read_records(path: &Path) -> Result<Records> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            line: row,
            msg: format!("row {row}: {e}"),
        })?;
        rows.push((row, rec.iter().map(str::to_string).collect()));
    }
    Ok((header, rows))
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line: row,
        msg: format!("row {row}: `{cell}` in column {column} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: row,
            msg: format!("row {row}: non-finite value in column {column}"),
        });
    }
    Ok(v)
}

/// Reads `time_min,acth_pg_ml,cortisol_ug_dl`. Row numbers in errors count data
/// rows from 1 (the header is not a row).
pub fn parse_observations(path: &Path) -> Result<ObservationSeries> {
    let (header, rows) = read_records(path)?;
    if header != OBSERVATION_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header `{}`, found `{}`",
                OBSERVATION_HEADER.join(","),
                header.join(",")
            ),
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no data rows".into(),
        });
    }

    let present = |col: usize| rows.iter().any(|(_, r)| !r[col].is_empty());
    let (has_acth, has_cortisol) = (present(1), present(2));
    if !has_acth && !has_cortisol {
        return Err(Error::Parse {
            line: 1,
            msg: "both hormone columns are empty".into(),
        });
    }

    let mut points: Vec<(f64, usize, Option<f64>, Option<f64>)> = Vec::with_capacity(rows.len());
    for (row, cells) in &rows {
        let t = parse_cell(&cells[0], *row, OBSERVATION_HEADER[0])?;
        let mut conc = [None, None];
        for (k, (col, wanted)) in [(1, has_acth), (2, has_cortisol)].into_iter().enumerate() {
            if !wanted {
                continue;
            }
            let name = OBSERVATION_HEADER[col];
            if cells[col].is_empty() {
                return Err(Error::Parse {
                    line: *row,
                    msg: format!("row {row}: missing value in column {name}"),
                });
            }
            let v = parse_cell(&cells[col], *row, name)?;
            if v <= 0.0 {
                return Err(Error::Parse {
                    line: *row,
                    msg: format!("row {row}: {name} = {v} must be positive"),
                });
            }
            conc[k] = Some(v);
        }
        points.push((t, *row, conc[0], conc[1]));
    }

    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
        let row = w[0].1.max(w[1].1);
        return Err(Error::Parse {
            line: row,
            msg: format!("row {row}: duplicate time {}", w[1].0),
        });
    }

    let subject_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let obs = ObservationSeries {
        times: points.iter().map(|p| p.0).collect(),
        acth: has_acth.then(|| points.iter().map(|p| p.2.unwrap()).collect()),
        cortisol: has_cortisol.then(|| points.iter().map(|p| p.3.unwrap()).collect()),
        subject_id,
    };
    obs.validate()?;
    Ok(obs)
}

/// Reads a trajectory CSV written by [`trajectory_csv`]. The parameter set is
/// not stored in the file; `params` is attached as given.
pub fn parse_trajectory(path: &Path, params: ParameterSet) -> Result<Trajectory> {
    let (header, rows) = read_records(path)?;
    if header != TRAJECTORY_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{}`", TRAJECTORY_HEADER.join(",")),
        });
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut states = Vec::with_capacity(rows.len());
    for (row, cells) in &rows {
        let v: Vec<f64> = cells
            .iter()
            .zip(TRAJECTORY_HEADER)
            .map(|(c, name)| parse_cell(c, *row, name))
            .collect::<Result<_>>()?;
        if let Some(&last) = times.last() {
            if !(v[0] > last) {
                return Err(Error::Parse {
                    line: *row,
                    msg: format!("row {row}: times must be strictly increasing"),
                });
            }
        }
        times.push(v[0]);
        states.push(HormoneState::new(v[1], v[2], v[3]));
    }
    Ok(Trajectory {
        times,
        states,
        params,
    })
}

/// Header plus string cells of any CSV this tool writes.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let (header, rows) = read_records(path)?;
    Ok((header, rows.into_iter().map(|(_, r)| r).collect()))
}
