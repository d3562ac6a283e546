//! Sample/baseline CSV files: one row per sample, header = variable names.

use super::{OracleError, Sample};
use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, OracleError> {
        if names.is_empty() {
            return Err(OracleError::Format("sample set needs at least one variable".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(OracleError::Format(format!(
                    "row {i} has {} values for {} variables",
                    row.len(),
                    names.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(OracleError::Format(format!("row {i} contains a non-finite value")));
            }
        }
        Ok(Self { names, rows })
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self, OracleError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(|e| OracleError::Format(format!("bad CSV header: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| OracleError::Format(format!("bad CSV row {i}: {e}")))?;
            let row = record
                .iter()
                .map(|field| {
                    field
                        .parse::<f64>()
                        .map_err(|_| OracleError::Format(format!("row {i}: '{field}' is not a number")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        Self::new(names, rows)
    }

    pub fn to_csv_writer(&self, writer: impl Write) -> Result<(), OracleError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.names).map_err(|e| OracleError::Format(e.to_string()))?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(|v| format!("{v}")))
                .map_err(|e| OracleError::Format(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn sample(&self, row: usize) -> Result<Sample, OracleError> {
        let row = self
            .rows
            .get(row)
            .ok_or_else(|| OracleError::InvalidParameter(format!("row {row} out of range ({} rows)", self.rows.len())))?;
        Sample::new(row.clone())
    }

    /// Per-variable mean over all rows.
    pub fn mean(&self) -> Result<Vec<f64>, OracleError> {
        if self.rows.is_empty() {
            return Err(OracleError::InvalidParameter("cannot take the mean of an empty sample set".into()));
        }
        let mut acc = vec![0.0; self.n()];
        for row in &self.rows {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let len = self.rows.len() as f64;
        Ok(acc.into_iter().map(|a| a / len).collect())
    }

    /// Per-variable population variance over all rows.
    pub fn variance(&self) -> Result<Vec<f64>, OracleError> {
        let mean = self.mean()?;
        let mut acc = vec![0.0; self.n()];
        for row in &self.rows {
            for ((a, v), m) in acc.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *a += d * d;
            }
        }
        let len = self.rows.len() as f64;
        Ok(acc.into_iter().map(|a| a / len).collect())
    }
}
