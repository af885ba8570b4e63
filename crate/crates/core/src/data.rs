//! Column-named numeric tables and train/test datasets.
//!
//! Every column is addressed by name so a conditioning set can reference
//! variables that were never handed to the model.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RfiError};

/// An n×p numeric table with named columns, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl Table {
    /// Builds a table from named columns. Names must be unique, columns
    /// equally long and every entry finite.
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(RfiError::Schema(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(RfiError::Schema(format!("duplicate column name `{name}`")));
            }
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(RfiError::Schema(format!(
                    "column `{name}` has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(RfiError::Schema(format!(
                    "non-finite value in column `{name}` at row {row}"
                )));
            }
        }
        Ok(Self {
            names,
            columns,
            n_rows,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.index_of(name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| RfiError::Schema(format!("missing column `{name}`")))
    }

    /// Column slices for `names`, in that order.
    pub fn columns_for<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<&[f64]>> {
        names.iter().map(|n| self.column(n.as_ref())).collect()
    }

    /// An m×k matrix whose columns are the named columns in order.
    pub fn matrix<S: AsRef<str>>(&self, names: &[S]) -> Result<DMatrix<f64>> {
        let cols = self.columns_for(names)?;
        Ok(DMatrix::from_fn(self.n_rows, cols.len(), |r, c| cols[c][r]))
    }

    /// Copy of the table restricted to the given names. The row count is
    /// kept even when no columns are selected.
    pub fn project<S: AsRef<str>>(&self, names: &[S]) -> Result<Table> {
        let cols = self.columns_for(names)?;
        let mut table = Table::new(
            names.iter().map(|n| n.as_ref().to_string()).collect(),
            cols.into_iter().map(<[f64]>::to_vec).collect(),
        )?;
        table.n_rows = self.n_rows;
        Ok(table)
    }

    /// Copy of the table keeping only the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        Table {
            names: self.names.clone(),
            columns,
            n_rows: rows.len(),
        }
    }

    /// Parses CSV text whose header row holds the column names.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Table> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    RfiError::Parse(format!(
                        "row {}: column `{}`: `{field}` is not a number",
                        line + 1,
                        names[c]
                    ))
                })?;
                columns[c].push(v);
            }
        }
        Table::new(names, columns)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Table> {
        Table::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Writes the table as CSV. Values use the shortest round-trip
    /// representation, so output is byte-stable for identical input.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.names)?;
        let mut record = Vec::with_capacity(self.n_cols());
        for r in 0..self.n_rows {
            record.clear();
            record.extend(self.columns.iter().map(|c| c[r].to_string()));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Row tag for the train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

/// A table together with its target column and a train/test split.
#[derive(Debug, Clone)]
pub struct Dataset {
    table: Table,
    target: String,
    split: Vec<Split>,
}

impl Dataset {
    pub fn new(table: Table, target: impl Into<String>, split: Vec<Split>) -> Result<Self> {
        let target = target.into();
        if !table.contains(&target) {
            return Err(RfiError::Schema(format!("target `{target}` is not a column")));
        }
        if split.len() != table.n_rows() {
            return Err(RfiError::Schema(format!(
                "split has {} tags for {} rows",
                split.len(),
                table.n_rows()
            )));
        }
        Ok(Self {
            table,
            target,
            split,
        })
    }

    /// Tags `round(n * test_fraction)` rows as test, chosen by a seeded
    /// shuffle of the row indices.
    pub fn with_random_split(
        table: Table,
        target: impl Into<String>,
        test_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(RfiError::Schema(format!(
                "test fraction {test_fraction} outside [0, 1)"
            )));
        }
        let n = table.n_rows();
        let n_test = (n as f64 * test_fraction).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut split = vec![Split::Train; n];
        for &i in &order[..n_test] {
            split[i] = Split::Test;
        }
        Dataset::new(table, target, split)
    }

    /// Uses a column of 0/1 flags (1 = test) as the split and drops it from
    /// the variables.
    pub fn with_split_column(table: Table, target: impl Into<String>, column: &str) -> Result<Self> {
        let flags = table.column(column)?;
        let split = flags
            .iter()
            .enumerate()
            .map(|(row, &v)| match v {
                0.0 => Ok(Split::Train),
                1.0 => Ok(Split::Test),
                v => Err(RfiError::Schema(format!(
                    "split column `{column}` row {row}: expected 0 (train) or 1 (test), got {v}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let keep: Vec<&String> = table.names().iter().filter(|n| *n != column).collect();
        let table = table.project(&keep)?;
        Dataset::new(table, target, split)
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn variable_names(&self) -> &[String] {
        self.table.names()
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn rows(&self, which: Split) -> Table {
        let idx: Vec<usize> = self
            .split
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == which)
            .map(|(i, _)| i)
            .collect();
        self.table.select_rows(&idx)
    }

    pub fn train(&self) -> Table {
        self.rows(Split::Train)
    }

    pub fn test(&self) -> Table {
        self.rows(Split::Test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Table {
        Table::new(
            vec!["a".into(), "y".into()],
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_finite() {
        let err = Table::new(vec!["a".into()], vec![vec![1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, RfiError::Schema(_)));
    }

    #[test]
    fn rejects_ragged_and_duplicate_columns() {
        assert!(Table::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![]]).is_err());
        assert!(Table::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn random_split_is_disjoint_and_exhaustive() {
        let table = Table::new(vec!["y".into()], vec![(0..100).map(f64::from).collect()]).unwrap();
        let ds = Dataset::with_random_split(table, "y", 0.1, 7).unwrap();
        let train = ds.train();
        let test = ds.test();
        assert_eq!(test.n_rows(), 10);
        assert_eq!(train.n_rows() + test.n_rows(), 100);
        let mut all: Vec<f64> = train.column("y").unwrap().to_vec();
        all.extend_from_slice(test.column("y").unwrap());
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn split_column_is_consumed() {
        let ds = Dataset::with_split_column(small(), "a", "y").unwrap();
        assert_eq!(ds.variable_names(), &["a".to_string()]);
        assert_eq!(ds.test().column("a").unwrap(), &[2.0, 4.0]);
    }

    #[test]
    fn csv_round_trip() {
        let t = small();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(Table::from_csv_reader(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn csv_rejects_text_and_nan() {
        assert!(Table::from_csv_reader("a,b\n1,x\n".as_bytes()).is_err());
        assert!(Table::from_csv_reader("a,b\n1,NaN\n".as_bytes()).is_err());
    }

    #[test]
    fn target_must_exist() {
        assert!(Dataset::new(small(), "zzz", vec![Split::Train; 4]).is_err());
    }
}
