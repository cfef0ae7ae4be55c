//! Metric records produced by a training run.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// Full training loss and accuracy after an epoch.
    Epoch,
    /// Gradient norm and learning rate at a logged iteration.
    Iteration,
}

impl RecordKind {
    pub fn name(&self) -> &'static str {
        match self {
            RecordKind::Epoch => "epoch",
            RecordKind::Iteration => "iteration",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "epoch" => Some(RecordKind::Epoch),
            "iteration" => Some(RecordKind::Iteration),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub kind: RecordKind,
    /// Epochs elapsed, fractional for iteration records.
    pub epoch: f64,
    pub iteration: u64,
    pub loss: Option<f64>,
    pub accuracy: Option<f64>,
    pub grad_norm: Option<f64>,
    pub lr: Option<f64>,
    pub guarded: Option<bool>,
}

impl MetricRecord {
    pub fn epoch(epoch: u64, iteration: u64, loss: f64, accuracy: Option<f64>) -> Self {
        MetricRecord {
            kind: RecordKind::Epoch,
            epoch: epoch as f64,
            iteration,
            loss: Some(loss),
            accuracy,
            grad_norm: None,
            lr: None,
            guarded: None,
        }
    }

    pub fn iteration(epoch: f64, iteration: u64, grad_norm: f64, lr: f64, guarded: bool) -> Self {
        MetricRecord {
            kind: RecordKind::Iteration,
            epoch,
            iteration,
            loss: None,
            accuracy: None,
            grad_norm: Some(grad_norm),
            lr: Some(lr),
            guarded: Some(guarded),
        }
    }
}

/// Ordered records plus `key=value` metadata describing the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricLog {
    pub records: Vec<MetricRecord>,
    pub metadata: Vec<(String, String)>,
}

impl MetricLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: MetricRecord) {
        self.records.push(record);
    }

    /// Sets a metadata entry, replacing an existing key in place.
    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.metadata.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key, value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn epochs(&self) -> impl Iterator<Item = &MetricRecord> {
        self.records.iter().filter(|r| r.kind == RecordKind::Epoch)
    }

    pub fn iterations(&self) -> impl Iterator<Item = &MetricRecord> {
        self.records
            .iter()
            .filter(|r| r.kind == RecordKind::Iteration)
    }

    /// Training loss of the last epoch record.
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs().last().and_then(|r| r.loss)
    }
}
