//! Stream files: UTF-8, comma-separated, one header row.
//!
//! Columns, in this order when written:
//!
//! | column | meaning |
//! |---|---|
//! | `f0 .. f{d-1}` | features (required) |
//! | `y` | target (required) |
//! | `label` | `±1` companion of a real target (optional) |
//! | `w0 .. w{d-1}` | weight that produced `y` (optional truth) |
//! | `s0 .. s{d-1}` | drift applied after this row (optional truth) |
//! | `eps` | noise in `y` (optional truth) |
//! | `stage` | stage id (optional) |
//!
//! The truth columns come as a group: all of `w*`, `s*` and `eps` or none.
//! Floats are written in shortest round-trip form, so write-then-read is
//! bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use dfop_core::estimators::Sample;
use dfop_core::streams::{GroundTruth, LabeledTrace};

use crate::error::{AppError, Result};

#[derive(Debug, Default)]
struct Layout {
    features: Vec<usize>,
    y: usize,
    label: Option<usize>,
    w: Vec<usize>,
    s: Vec<usize>,
    eps: Option<usize>,
    stage: Option<usize>,
    width: usize,
}

fn schema(origin: &Path, message: impl Into<String>) -> AppError {
    AppError::Parse {
        path: origin.to_path_buf(),
        line: 1,
        message: message.into(),
    }
}

fn indexed(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || (rest.len() > 1 && rest.starts_with('0')) {
        return None;
    }
    rest.parse().ok()
}

fn place(slots: &mut Vec<Option<usize>>, idx: usize, col: usize) -> bool {
    if slots.len() <= idx {
        slots.resize(idx + 1, None);
    }
    slots[idx].replace(col).is_none()
}

fn complete(slots: Vec<Option<usize>>) -> Option<Vec<usize>> {
    slots.into_iter().collect()
}

fn parse_header(headers: &csv::StringRecord, origin: &Path) -> Result<Layout> {
    let (mut f, mut w, mut s) = (Vec::new(), Vec::new(), Vec::new());
    let mut layout = Layout {
        width: headers.len(),
        ..Layout::default()
    };
    let mut y = None;
    for (col, raw) in headers.iter().enumerate() {
        let name = raw.trim();
        let fresh = match name {
            "y" => y.replace(col).is_none(),
            "label" => layout.label.replace(col).is_none(),
            "eps" => layout.eps.replace(col).is_none(),
            "stage" => layout.stage.replace(col).is_none(),
            _ => match (indexed(name, 'f'), indexed(name, 'w'), indexed(name, 's')) {
                (Some(i), _, _) => place(&mut f, i, col),
                (_, Some(i), _) => place(&mut w, i, col),
                (_, _, Some(i)) => place(&mut s, i, col),
                _ => return Err(schema(origin, format!("unknown column `{name}`"))),
            },
        };
        if !fresh {
            return Err(schema(origin, format!("duplicate column `{name}`")));
        }
    }
    layout.y = y.ok_or_else(|| schema(origin, "missing `y` column"))?;
    layout.features = complete(f)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| schema(origin, "feature columns must be f0..f{d-1} without gaps"))?;
    let d = layout.features.len();
    let truth_cols = (!w.is_empty(), !s.is_empty(), layout.eps.is_some());
    match truth_cols {
        (false, false, false) => {}
        (true, true, true) => {
            layout.w = complete(w).filter(|v| v.len() == d).ok_or_else(|| {
                schema(origin, format!("truth columns must be w0..w{}", d - 1))
            })?;
            layout.s = complete(s).filter(|v| v.len() == d).ok_or_else(|| {
                schema(origin, format!("truth columns must be s0..s{}", d - 1))
            })?;
        }
        _ => return Err(schema(origin, "truth columns w*, s* and eps must appear together")),
    }
    Ok(layout)
}

fn parse_f64(field: &str, column: &str, origin: &Path, line: u64) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| AppError::Parse {
        path: origin.to_path_buf(),
        line,
        message: format!("column `{column}`: `{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(AppError::Parse {
            path: origin.to_path_buf(),
            line,
            message: format!("column `{column}`: non-finite value"),
        });
    }
    Ok(v)
}

/// Parses a stream from any reader. `origin` names the source in errors.
pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<LabeledTrace> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        AppError::Parse {
            path: origin.to_path_buf(),
            line,
            message: e.to_string(),
        }
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let layout = parse_header(&headers, origin)?;
    let has_truth = layout.eps.is_some();
    let mut trace = LabeledTrace {
        truth: has_truth.then(Vec::new),
        stages: layout.stage.map(|_| Vec::new()),
        labels: layout.label.map(|_| Vec::new()),
        ..LabeledTrace::default()
    };
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != layout.width {
            return Err(AppError::Parse {
                path: origin.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", layout.width, record.len()),
            });
        }
        let num = |col: usize| parse_f64(&record[col], &headers[col], origin, line);
        let x = layout.features.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?;
        trace.samples.push(Sample::new(x, num(layout.y)?));
        if let (Some(col), Some(labels)) = (layout.label, trace.labels.as_mut()) {
            let v = num(col)?;
            if v != 1.0 && v != -1.0 {
                return Err(AppError::Parse {
                    path: origin.to_path_buf(),
                    line,
                    message: format!("column `label`: expected -1 or 1, found {v}"),
                });
            }
            labels.push(v);
        }
        if let Some(truth) = trace.truth.as_mut() {
            truth.push(GroundTruth {
                w: layout.w.iter().map(|&c| num(c)).collect::<Result<_>>()?,
                s: layout.s.iter().map(|&c| num(c)).collect::<Result<_>>()?,
                eps: num(layout.eps.unwrap_or_default())?,
            });
        }
        if let (Some(col), Some(stages)) = (layout.stage, trace.stages.as_mut()) {
            let stage = record[col].trim().parse::<u32>().map_err(|_| AppError::Parse {
                path: origin.to_path_buf(),
                line,
                message: format!("column `stage`: `{}` is not a stage id", &record[col]),
            })?;
            stages.push(stage);
        }
    }
    Ok(trace)
}

pub fn read_csv_stream(path: &Path) -> Result<LabeledTrace> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_csv(BufReader::new(file), path)
}

fn check_lengths(trace: &LabeledTrace) -> Result<usize> {
    let d = trace.dim();
    let n = trace.len();
    let bad = trace.samples.iter().any(|s| s.x.len() != d)
        || trace.truth.as_ref().is_some_and(|t| {
            t.len() != n || t.iter().any(|g| g.w.len() != d || g.s.len() != d)
        })
        || trace.stages.as_ref().is_some_and(|s| s.len() != n)
        || trace.labels.as_ref().is_some_and(|l| l.len() != n);
    if bad || d == 0 {
        return Err(AppError::Data("trace columns have inconsistent lengths".into()));
    }
    Ok(d)
}

pub fn write_csv_to<W: Write>(trace: &LabeledTrace, out: W, origin: &Path) -> Result<()> {
    let d = check_lengths(trace)?;
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => AppError::io(origin, e),
        other => AppError::Data(format!("{other:?}")),
    };
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..d).map(|i| format!("f{i}")).collect();
    header.push("y".into());
    if trace.labels.is_some() {
        header.push("label".into());
    }
    if trace.truth.is_some() {
        header.extend((0..d).map(|i| format!("w{i}")));
        header.extend((0..d).map(|i| format!("s{i}")));
        header.push("eps".into());
    }
    if trace.stages.is_some() {
        header.push("stage".into());
    }
    wtr.write_record(&header).map_err(io)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for (i, s) in trace.samples.iter().enumerate() {
        row.clear();
        row.extend(s.x.iter().map(|v| format!("{v:?}")));
        row.push(format!("{:?}", s.y));
        if let Some(labels) = &trace.labels {
            row.push(format!("{:?}", labels[i]));
        }
        if let Some(truth) = &trace.truth {
            let g = &truth[i];
            row.extend(g.w.iter().chain(&g.s).map(|v| format!("{v:?}")));
            row.push(format!("{:?}", g.eps));
        }
        if let Some(stages) = &trace.stages {
            row.push(stages[i].to_string());
        }
        wtr.write_record(&row).map_err(io)?;
    }
    wtr.flush().map_err(|e| AppError::io(origin, e))
}

pub fn write_csv(trace: &LabeledTrace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    write_csv_to(trace, BufWriter::new(file), path)
}
