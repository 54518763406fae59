use std::fs::File;
use std::path::Path;

use anyhow::Context;
use qdnn::network::LogRow;

pub const HEADER: [&str; 5] = ["iteration", "train_loss", "test_loss", "test_accuracy", "eta"];

/// Shortest decimal that parses back to the same value; empty when absent.
pub fn number(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn record(row: &LogRow) -> [String; 5] {
    [
        row.iteration.to_string(),
        number(row.train_loss),
        number(row.test_loss),
        number(row.test_accuracy),
        number(Some(row.eta)),
    ]
}

pub struct MetricsWriter {
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        let mut inner = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        inner.write_record(HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &LogRow) -> anyhow::Result<()> {
        self.inner.write_record(record(row))?;
        self.inner.flush()?;
        Ok(())
    }
}
