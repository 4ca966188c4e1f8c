//! CSV artifacts: run traces, metric tables, tuned gains, fitness histories
//! and gain tables. Each writer has a matching reader so every file round-
//! trips through this module. Floats are written with Rust's shortest
//! round-trip formatting, so read-back is bit exact.

use std::path::Path;

use cruise_core::{GainTable, Gains, GenerationStats, Metrics, RunRecord, RunRow};

use crate::error::CliError;

pub const TRACE_HEADER: &[&str] = &[
    "t", "v_ref", "v", "e", "u", "accel", "brake", "theta", "v_w", "kp", "ki", "kd", "soc",
];
pub const METRICS_HEADER: &[&str] =
    &["label", "mse", "rise_time", "settling_time", "overshoot_pct"];
pub const GAINS_HEADER: &[&str] = &["kp", "ki", "kd"];
pub const HISTORY_HEADER: &[&str] = &["generation", "best_fitness", "mean_fitness"];
pub const TABLE_HEADER: &[&str] = &["v_ref", "theta_rad", "v_w", "kp", "ki", "kd"];

/// One line of a metrics CSV: a run label and its tracking metrics. Step
/// metrics that do not apply (no positive step target, never crossed) stay
/// empty in the file and `None` here.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub label: String,
    pub metrics: Metrics,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Run(format!("{}: {e}", path.display()))
}

fn read_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{}: {e}", path.display()))
}

fn bad_field(path: &Path, name: &str, field: &str) -> CliError {
    CliError::Config(format!(
        "{}: bad {name} value {field:?}",
        path.display()
    ))
}

fn parse_f64(path: &Path, name: &str, field: &str) -> Result<f64, CliError> {
    field.parse().map_err(|_| bad_field(path, name, field))
}

fn parse_opt_f64(path: &Path, name: &str, field: &str) -> Result<Option<f64>, CliError> {
    if field.is_empty() {
        return Ok(None);
    }
    parse_f64(path, name, field).map(Some)
}

fn open_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>, CliError> {
    let mut w = csv::Writer::from_path(path).map_err(write_err(path))?;
    w.write_record(header).map_err(write_err(path))?;
    Ok(w)
}

fn finish_writer(path: &Path, mut w: csv::Writer<std::fs::File>) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

/// Read all records of a CSV whose header must match `header` exactly and
/// whose rows must all have `header.len()` fields.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(read_err(path))?;
    let got = rdr.headers().map_err(read_err(path))?;
    if !got.iter().eq(header.iter().copied()) {
        return Err(CliError::Config(format!(
            "{}: unexpected header {:?}, expected {:?}",
            path.display(),
            got.iter().collect::<Vec<_>>(),
            header
        )));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(read_err(path))?;
        if record.len() != header.len() {
            return Err(CliError::Config(format!(
                "{}: expected {} fields per row, found {}",
                path.display(),
                header.len(),
                record.len()
            )));
        }
        rows.push(record);
    }
    Ok(rows)
}

pub fn write_trace(path: &Path, record: &RunRecord) -> Result<(), CliError> {
    let mut w = open_writer(path, TRACE_HEADER)?;
    for r in &record.rows {
        w.write_record(&[
            fmt(r.t),
            fmt(r.v_ref),
            fmt(r.v),
            fmt(r.e),
            fmt(r.u),
            fmt(r.accel_frac),
            fmt(r.brake_frac),
            fmt(r.theta_rad),
            fmt(r.wind_ms),
            fmt(r.kp),
            fmt(r.ki),
            fmt(r.kd),
            fmt(r.soc),
        ])
        .map_err(write_err(path))?;
    }
    finish_writer(path, w)
}

pub fn read_trace(path: &Path) -> Result<Vec<RunRow>, CliError> {
    let mut rows = Vec::new();
    for record in read_rows(path, TRACE_HEADER)? {
        let f = |i: usize| -> Result<f64, CliError> {
            parse_f64(path, TRACE_HEADER[i], &record[i])
        };
        rows.push(RunRow {
            t: f(0)?,
            v_ref: f(1)?,
            v: f(2)?,
            e: f(3)?,
            u: f(4)?,
            accel_frac: f(5)?,
            brake_frac: f(6)?,
            theta_rad: f(7)?,
            wind_ms: f(8)?,
            kp: f(9)?,
            ki: f(10)?,
            kd: f(11)?,
            soc: f(12)?,
        });
    }
    Ok(rows)
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), CliError> {
    let mut w = open_writer(path, METRICS_HEADER)?;
    for row in rows {
        let m = &row.metrics;
        w.write_record(&[
            row.label.clone(),
            fmt(m.mse),
            fmt_opt(m.rise_time_s),
            fmt_opt(m.settling_time_s),
            fmt_opt(m.overshoot_pct),
        ])
        .map_err(write_err(path))?;
    }
    finish_writer(path, w)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, CliError> {
    let mut rows = Vec::new();
    for record in read_rows(path, METRICS_HEADER)? {
        rows.push(MetricsRow {
            label: record[0].to_string(),
            metrics: Metrics {
                mse: parse_f64(path, "mse", &record[1])?,
                rise_time_s: parse_opt_f64(path, "rise_time", &record[2])?,
                settling_time_s: parse_opt_f64(path, "settling_time", &record[3])?,
                overshoot_pct: parse_opt_f64(path, "overshoot_pct", &record[4])?,
            },
        });
    }
    Ok(rows)
}

pub fn write_gains(path: &Path, gains: Gains) -> Result<(), CliError> {
    let mut w = open_writer(path, GAINS_HEADER)?;
    w.write_record(&[fmt(gains.kp), fmt(gains.ki), fmt(gains.kd)])
        .map_err(write_err(path))?;
    finish_writer(path, w)
}

pub fn read_gains(path: &Path) -> Result<Gains, CliError> {
    let rows = read_rows(path, GAINS_HEADER)?;
    if rows.len() != 1 {
        return Err(CliError::Config(format!(
            "{}: expected exactly one gain row, found {}",
            path.display(),
            rows.len()
        )));
    }
    Ok(Gains {
        kp: parse_f64(path, "kp", &rows[0][0])?,
        ki: parse_f64(path, "ki", &rows[0][1])?,
        kd: parse_f64(path, "kd", &rows[0][2])?,
    })
}

pub fn write_history(path: &Path, history: &[GenerationStats]) -> Result<(), CliError> {
    let mut w = open_writer(path, HISTORY_HEADER)?;
    for s in history {
        w.write_record(&[
            s.generation.to_string(),
            fmt(s.best_fitness),
            fmt(s.mean_fitness),
        ])
        .map_err(write_err(path))?;
    }
    finish_writer(path, w)
}

pub fn read_history(path: &Path) -> Result<Vec<GenerationStats>, CliError> {
    let mut history = Vec::new();
    for record in read_rows(path, HISTORY_HEADER)? {
        history.push(GenerationStats {
            generation: record[0]
                .parse()
                .map_err(|_| bad_field(path, "generation", &record[0]))?,
            best_fitness: parse_f64(path, "best_fitness", &record[1])?,
            mean_fitness: parse_f64(path, "mean_fitness", &record[2])?,
        });
    }
    Ok(history)
}

/// Rows in storage order: v_ref-major, then theta, then wind.
pub fn write_gain_table(path: &Path, table: &GainTable) -> Result<(), CliError> {
    let mut w = open_writer(path, TABLE_HEADER)?;
    let mut cells = table.cells().iter();
    for &v in table.v_ref_axis() {
        for &theta in table.theta_axis() {
            for &wind in table.wind_axis() {
                // Full-grid invariant of GainTable: one cell per node.
                let g = cells.next().expect("cell count matches axes");
                w.write_record(&[
                    fmt(v),
                    fmt(theta),
                    fmt(wind),
                    fmt(g.kp),
                    fmt(g.ki),
                    fmt(g.kd),
                ])
                .map_err(write_err(path))?;
            }
        }
    }
    finish_writer(path, w)
}

/// Rebuild a gain table from its CSV. Axes are the sorted distinct values of
/// the coordinate columns; every grid node must appear exactly once, in any
/// row order.
pub fn read_gain_table(path: &Path) -> Result<GainTable, CliError> {
    struct Node {
        v: f64,
        theta: f64,
        wind: f64,
        gains: Gains,
    }
    let parse_coord = |name: &str, field: &str| -> Result<f64, CliError> {
        let v = parse_f64(path, name, field)?;
        if !v.is_finite() {
            return Err(bad_field(path, name, field));
        }
        Ok(v)
    };
    let mut nodes = Vec::new();
    for record in read_rows(path, TABLE_HEADER)? {
        nodes.push(Node {
            v: parse_coord("v_ref", &record[0])?,
            theta: parse_coord("theta_rad", &record[1])?,
            wind: parse_coord("v_w", &record[2])?,
            gains: Gains {
                kp: parse_f64(path, "kp", &record[3])?,
                ki: parse_f64(path, "ki", &record[4])?,
                kd: parse_f64(path, "kd", &record[5])?,
            },
        });
    }

    fn axis_of(values: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut axis: Vec<f64> = values.collect();
        axis.sort_by(|a, b| a.partial_cmp(b).expect("finite axis value"));
        axis.dedup();
        axis
    }
    let v_axis = axis_of(nodes.iter().map(|n| n.v));
    let t_axis = axis_of(nodes.iter().map(|n| n.theta));
    let w_axis = axis_of(nodes.iter().map(|n| n.wind));
    let expected = v_axis.len() * t_axis.len() * w_axis.len();
    if nodes.is_empty() || nodes.len() != expected {
        return Err(CliError::Config(format!(
            "{}: {} rows do not fill a {}x{}x{} grid",
            path.display(),
            nodes.len(),
            v_axis.len(),
            t_axis.len(),
            w_axis.len()
        )));
    }

    let mut cells: Vec<Option<Gains>> = vec![None; expected];
    for n in &nodes {
        // Positions exist by construction; equality is exact because the
        // axis values came from the same parsed strings.
        let iv = v_axis.iter().position(|&x| x == n.v).unwrap();
        let it = t_axis.iter().position(|&x| x == n.theta).unwrap();
        let iw = w_axis.iter().position(|&x| x == n.wind).unwrap();
        let idx = (iv * t_axis.len() + it) * w_axis.len() + iw;
        if cells[idx].replace(n.gains).is_some() {
            return Err(CliError::Config(format!(
                "{}: duplicate node (v_ref={}, theta_rad={}, v_w={})",
                path.display(),
                n.v,
                n.theta,
                n.wind
            )));
        }
    }
    let Some(cells) = cells.into_iter().collect::<Option<Vec<Gains>>>() else {
        return Err(CliError::Config(format!(
            "{}: grid has missing nodes",
            path.display()
        )));
    };
    GainTable::new(v_axis, t_axis, w_axis, cells)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
