//! Datasets: a sparse example store plus readers for LIBSVM text and MNIST
//! IDX binaries, and generators for synthetic problems with known optima.

mod idx;
mod libsvm;
mod synthetic;

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub use idx::{encode_idx_images, encode_idx_labels, load_mnist_files, load_mnist_idx};
pub use libsvm::{load_libsvm_file, parse_libsvm, write_libsvm, A8A_DIM};
pub use synthetic::{
    gen_categorical_binary, gen_least_squares, least_squares_from_rows, SyntheticProblem,
    A8A_LIKE_GROUPS,
};

/// What the labels of a dataset mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Labels in `{-1, +1}`.
    Binary,
    /// Labels in `{0, .., k-1}` stored as reals.
    Multiclass(usize),
    /// Arbitrary real targets.
    Regression,
}

impl Task {
    pub fn name(&self) -> String {
        match self {
            Task::Binary => "binary".to_string(),
            Task::Multiclass(k) => format!("multiclass({k})"),
            Task::Regression => "regression".to_string(),
        }
    }

    fn accepts(&self, label: f64) -> bool {
        match *self {
            Task::Binary => label == 1.0 || label == -1.0,
            Task::Multiclass(k) => label >= 0.0 && label.fract() == 0.0 && (label as usize) < k,
            Task::Regression => label.is_finite(),
        }
    }
}

/// One labeled example with sparse features.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseExample {
    pub label: f64,
    /// `(index, value)` pairs, indices strictly increasing.
    pub features: Vec<(usize, f64)>,
}

impl SparseExample {
    pub fn new(label: f64, features: Vec<(usize, f64)>) -> Self {
        SparseExample { label, features }
    }

    /// Builds an example from a dense row, dropping exact zeros.
    pub fn from_dense(label: f64, row: &[f64]) -> Self {
        let features = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        SparseExample { label, features }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.features.iter().map(|&(j, v)| weights[j] * v).sum()
    }

    fn max_index(&self) -> Option<usize> {
        self.features.last().map(|&(j, _)| j)
    }
}

/// An immutable collection of examples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<SparseExample>,
    dim: usize,
    task: Task,
}

impl Dataset {
    /// Validates every invariant: ascending in-range indices, finite values and
    /// labels admissible for `task`.
    pub fn new(examples: Vec<SparseExample>, dim: usize, task: Task) -> Result<Self> {
        for (n, ex) in examples.iter().enumerate() {
            if !task.accepts(ex.label) {
                return Err(Error::TaskMismatch(format!(
                    "example {n} has label {} which is not valid for a {} task",
                    ex.label,
                    task.name()
                )));
            }
            let mut prev: Option<usize> = None;
            for &(j, v) in &ex.features {
                if prev.is_some_and(|p| j <= p) {
                    return Err(Error::InvalidProblem(format!(
                        "example {n}: feature indices not strictly increasing at {j}"
                    )));
                }
                if j >= dim {
                    return Err(Error::InvalidProblem(format!(
                        "example {n}: feature index {j} out of range for dimension {dim}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidProblem(format!(
                        "example {n}: non-finite feature value at {j}"
                    )));
                }
                prev = Some(j);
            }
        }
        Ok(Dataset {
            examples,
            dim,
            task,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn examples(&self) -> &[SparseExample] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &SparseExample {
        &self.examples[i]
    }

    /// Keeps only the first `n` examples (all of them if `n >= len`).
    pub fn truncated(mut self, n: usize) -> Self {
        self.examples.truncate(n);
        self
    }

    /// Widens the feature dimension, e.g. to pin a LIBSVM file to its
    /// published dimension.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        let needed = self.required_dim();
        if dim < needed {
            return Err(Error::InvalidProblem(format!(
                "dimension {dim} is smaller than the largest feature index + 1 ({needed})"
            )));
        }
        self.dim = dim;
        Ok(self)
    }

    fn required_dim(&self) -> usize {
        self.examples
            .iter()
            .filter_map(SparseExample::max_index)
            .max()
            .map_or(0, |j| j + 1)
    }
}

/// Opens a file for reading, transparently gunzipping `.gz` content
/// (detected by magic bytes, not by extension).
pub fn open_maybe_gz(path: &Path) -> Result<Box<dyn Read>> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 2];
    let n = read_prefix(&mut file, &mut magic)?;
    let file = BufReader::new(File::open(path)?);
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

fn read_prefix(reader: &mut impl Read, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_rejects_bad_examples() {
        let unordered = SparseExample::new(1.0, vec![(2, 1.0), (1, 1.0)]);
        assert!(Dataset::new(vec![unordered], 3, Task::Binary).is_err());
        let out_of_range = SparseExample::new(1.0, vec![(3, 1.0)]);
        assert!(Dataset::new(vec![out_of_range], 3, Task::Binary).is_err());
        let bad_label = SparseExample::new(0.0, vec![]);
        assert!(matches!(
            Dataset::new(vec![bad_label], 3, Task::Binary),
            Err(Error::TaskMismatch(_))
        ));
        let bad_class = SparseExample::new(10.0, vec![]);
        assert!(Dataset::new(vec![bad_class], 3, Task::Multiclass(10)).is_err());
    }

    #[test]
    fn with_dim_only_widens() {
        let ds = Dataset::new(
            vec![SparseExample::new(1.0, vec![(4, 1.0)])],
            5,
            Task::Binary,
        )
        .unwrap();
        assert_eq!(ds.clone().with_dim(123).unwrap().dim(), 123);
        assert!(ds.with_dim(4).is_err());
    }

    #[test]
    fn gz_detection() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("plain.txt");
        std::fs::write(&plain, b"+1 1:1\n").unwrap();
        let zipped = dir.path().join("zipped.bin");
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"+1 1:1\n").unwrap();
        std::fs::write(&zipped, enc.finish().unwrap()).unwrap();
        for path in [plain, zipped] {
            let mut s = String::new();
            open_maybe_gz(&path)
                .unwrap()
                .read_to_string(&mut s)
                .unwrap();
            assert_eq!(s, "+1 1:1\n");
        }
    }
}
