//! CSV serialization of metric logs.
//!
//! Layout: `#key=value` metadata lines, then the header
//! `kind,epoch,iteration,loss,accuracy,grad_norm,lr,guarded`, then one row per
//! record. Absent values are empty cells; reals use 17 significant digits so
//! parsing recovers them exactly. Merged files prepend a `run` column and
//! prefix metadata keys with `<run>:`.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::metrics::{MetricLog, MetricRecord, RecordKind};

pub const HEADER: [&str; 8] = [
    "kind",
    "epoch",
    "iteration",
    "loss",
    "accuracy",
    "grad_norm",
    "lr",
    "guarded",
];

struct Counting<W> {
    inner: W,
    bytes: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn cells(r: &MetricRecord) -> [String; 8] {
    [
        r.kind.name().to_string(),
        real(r.epoch),
        r.iteration.to_string(),
        r.loss.map(real).unwrap_or_default(),
        r.accuracy.map(real).unwrap_or_default(),
        r.grad_norm.map(real).unwrap_or_default(),
        r.lr.map(real).unwrap_or_default(),
        r.guarded.map(|g| g.to_string()).unwrap_or_default(),
    ]
}

fn write_meta<W: Write>(out: &mut W, prefix: &str, log: &MetricLog) -> Result<()> {
    for (k, v) in &log.metadata {
        if k.contains(['\n', '=']) || v.contains('\n') {
            return Err(Error::Format {
                field: "metadata",
                reason: format!("key `{k}` or its value cannot be written on one line"),
            });
        }
        writeln!(out, "#{prefix}{k}={v}")?;
    }
    Ok(())
}

/// Writes one log; returns the number of bytes written.
pub fn write_csv<W: Write>(log: &MetricLog, sink: W) -> Result<u64> {
    let mut out = Counting {
        inner: sink,
        bytes: 0,
    };
    write_meta(&mut out, "", log)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(HEADER)?;
        for r in &log.records {
            w.write_record(cells(r))?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(out.bytes)
}

/// Writes several named logs into one table with a leading `run` column.
pub fn write_merged_csv<W: Write>(runs: &[(String, &MetricLog)], sink: W) -> Result<u64> {
    let mut out = Counting {
        inner: sink,
        bytes: 0,
    };
    for (name, log) in runs {
        if name.contains([':', '\n', ',']) {
            return Err(Error::Format {
                field: "run name",
                reason: format!("`{name}` contains a reserved character"),
            });
        }
        write_meta(&mut out, &format!("{name}:"), log)?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(std::iter::once("run").chain(HEADER))?;
        for (name, log) in runs {
            for r in &log.records {
                w.write_record(std::iter::once(name.clone()).chain(cells(r)))?;
            }
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(out.bytes)
}

fn parse_opt<T: std::str::FromStr>(
    cell: &str,
    field: &'static str,
    line: usize,
) -> Result<Option<T>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| Error::Parse {
        line,
        reason: format!("bad {field} `{cell}`"),
    })
}

fn parse_record(row: &csv::StringRecord, line: usize) -> Result<MetricRecord> {
    let kind = RecordKind::parse(&row[0]).ok_or_else(|| Error::Parse {
        line,
        reason: format!("unknown record kind `{}`", &row[0]),
    })?;
    let required = |v: Option<f64>, field| {
        v.ok_or_else(|| Error::Parse {
            line,
            reason: format!("missing {field}"),
        })
    };
    Ok(MetricRecord {
        kind,
        epoch: required(parse_opt(&row[1], "epoch", line)?, "epoch")?,
        iteration: parse_opt(&row[2], "iteration", line)?.ok_or_else(|| Error::Parse {
            line,
            reason: "missing iteration".into(),
        })?,
        loss: parse_opt(&row[3], "loss", line)?,
        accuracy: parse_opt(&row[4], "accuracy", line)?,
        grad_norm: parse_opt(&row[5], "grad_norm", line)?,
        lr: parse_opt(&row[6], "lr", line)?,
        guarded: parse_opt(&row[7], "guarded", line)?,
    })
}

/// Reads a file produced by [`write_csv`] or [`write_merged_csv`].
///
/// Returns `(run name, log)` pairs in order of first appearance; a plain
/// file yields a single run with an empty name.
pub fn read_csv<R: BufRead>(reader: R) -> Result<Vec<(String, MetricLog)>> {
    let mut meta_lines = Vec::new();
    let mut body = String::new();
    let mut body_start = 0;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if body.is_empty() && line.starts_with('#') {
            meta_lines.push((n + 1, line[1..].to_string()));
            body_start = n + 1;
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let header = rdr.headers()?.clone();
    let merged = match header.iter().collect::<Vec<_>>().as_slice() {
        h if h == HEADER => false,
        [first, rest @ ..] if *first == "run" && rest == HEADER => true,
        _ => {
            return Err(Error::Parse {
                line: body_start + 1,
                reason: format!(
                    "unexpected header `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            })
        }
    };

    let mut runs: Vec<(String, MetricLog)> = Vec::new();
    fn run_mut<'a>(runs: &'a mut Vec<(String, MetricLog)>, name: &str) -> &'a mut MetricLog {
        let idx = match runs.iter().position(|(n, _)| n == name) {
            Some(i) => i,
            None => {
                runs.push((name.to_string(), MetricLog::new()));
                runs.len() - 1
            }
        };
        &mut runs[idx].1
    }

    for (line, text) in meta_lines {
        let (key, value) = text.split_once('=').ok_or_else(|| Error::Parse {
            line,
            reason: format!("metadata line `#{text}` lacks `=`"),
        })?;
        let (run, key) = if merged {
            key.split_once(':').ok_or_else(|| Error::Parse {
                line,
                reason: format!("merged metadata key `{key}` lacks a run prefix"),
            })?
        } else {
            ("", key)
        };
        run_mut(&mut runs, run)
            .metadata
            .push((key.to_string(), value.to_string()));
    }

    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = body_start + i + 2;
        let (run, fields) = if merged {
            let name = row[0].to_string();
            let rest: csv::StringRecord = row.iter().skip(1).collect();
            (name, rest)
        } else {
            (String::new(), row)
        };
        let record = parse_record(&fields, line)?;
        run_mut(&mut runs, &run).push(record);
    }
    if runs.is_empty() && !merged {
        runs.push((String::new(), MetricLog::new()));
    }
    Ok(runs)
}
