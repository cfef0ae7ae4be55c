//! LIBSVM / svmlight text format.
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ... [# comment]
//! ```
//!
//! Indices are 1-based and strictly increasing within a line; they are stored
//! 0-based. Label sets are normalized: `{-1, +1}` is kept, `{1, 2}` (the
//! covtype.binary convention) becomes `1 -> +1, 2 -> -1`, anything else is
//! treated as regression targets.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{open_maybe_gz, Dataset, SparseExample, Task};
use crate::error::{Error, Result};

/// Published feature dimension of the a8a benchmark.
pub const A8A_DIM: usize = 123;

/// Parses LIBSVM text. The dimension is `1 + max index` unless `dim` pins it.
pub fn parse_libsvm<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut examples = Vec::new();
    let mut max_dim = 0usize;

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label = parse_real(label_tok)
            .ok_or_else(|| parse_err(line_no, format!("malformed label `{label_tok}`")))?;

        let mut features = Vec::new();
        let mut prev: Option<usize> = None;
        for tok in tokens {
            let (idx_str, val_str) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("malformed feature `{tok}`")))?;
            let idx: usize = idx_str
                .parse()
                .map_err(|_| parse_err(line_no, format!("malformed feature index `{idx_str}`")))?;
            if idx == 0 {
                return Err(parse_err(line_no, "feature indices are 1-based".into()));
            }
            let value = parse_real(val_str).ok_or_else(|| {
                parse_err(line_no, format!("malformed feature value `{val_str}`"))
            })?;
            if let Some(p) = prev {
                if idx == p {
                    return Err(parse_err(line_no, format!("duplicate feature index {idx}")));
                }
                if idx < p {
                    return Err(parse_err(
                        line_no,
                        format!("non-ascending feature index {idx} after {p}"),
                    ));
                }
            }
            prev = Some(idx);
            features.push((idx - 1, value));
        }
        max_dim = max_dim.max(prev.unwrap_or(0));
        examples.push(SparseExample::new(label, features));
    }

    if examples.is_empty() {
        return Err(parse_err(0, "empty input".into()));
    }

    let task = normalize_labels(&mut examples);
    let dataset = Dataset::new(examples, max_dim, task)?;
    match dim {
        Some(d) => dataset.with_dim(d),
        None => Ok(dataset),
    }
}

/// Reads a (possibly gzipped) LIBSVM file. Files whose name starts with `a8a`
/// are pinned to [`A8A_DIM`] unless `dim` says otherwise.
pub fn load_libsvm_file(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let dim = dim.or_else(|| {
        path.file_name()
            .and_then(|f| f.to_str())
            .filter(|f| f.starts_with("a8a"))
            .map(|_| A8A_DIM)
    });
    parse_libsvm(BufReader::new(open_maybe_gz(path)?), dim)
}

/// Writes a dataset back out in LIBSVM format (1-based indices, shortest
/// round-tripping float representation).
pub fn write_libsvm<W: Write>(data: &Dataset, mut sink: W) -> Result<()> {
    for ex in data.examples() {
        if data.task() == Task::Binary && ex.label > 0.0 {
            write!(sink, "+1")?;
        } else {
            write!(sink, "{}", ex.label)?;
        }
        for &(j, v) in &ex.features {
            write!(sink, " {}:{}", j + 1, v)?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

fn parse_real(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_err(line: usize, reason: String) -> Error {
    Error::Parse { line, reason }
}

fn normalize_labels(examples: &mut [SparseExample]) -> Task {
    let all = |pred: &dyn Fn(f64) -> bool| examples.iter().all(|e| pred(e.label));
    if all(&|l| l == 1.0 || l == -1.0) {
        return Task::Binary;
    }
    if all(&|l| l == 1.0 || l == 2.0) {
        for ex in examples.iter_mut() {
            ex.label = if ex.label == 1.0 { 1.0 } else { -1.0 };
        }
        return Task::Binary;
    }
    Task::Regression
}
