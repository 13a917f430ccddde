//! Incomplete datasets: values plus a missingness mask, pattern grouping,
//! marginal-draw initialization and CSV I/O (empty field = missing).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Rows sharing one missingness pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingPattern {
    pub missing: Vec<usize>,
    pub observed: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteData {
    values: DMatrix<f64>,
    /// `true` = missing
    mask: DMatrix<bool>,
    column_names: Vec<String>,
}

impl IncompleteData {
    /// Masked cells are overwritten with NaN so they can never leak into a
    /// statistic by accident.
    pub fn new(mut values: DMatrix<f64>, mask: DMatrix<bool>, column_names: Vec<String>) -> Result<Self> {
        let (n, p) = values.shape();
        if mask.shape() != (n, p) {
            return Err(Error::Dimension(format!("values are {n}x{p} but mask is {:?}", mask.shape())));
        }
        if column_names.len() != p {
            return Err(Error::Dimension(format!("{} column names for {p} columns", column_names.len())));
        }
        if p == 0 {
            return Err(Error::InvalidData("dataset has no columns".into()));
        }
        for i in 0..n {
            if (0..p).all(|j| mask[(i, j)]) {
                return Err(Error::InvalidData(format!("row {i} has every cell missing")));
            }
            for j in 0..p {
                if mask[(i, j)] {
                    values[(i, j)] = f64::NAN;
                } else if !values[(i, j)].is_finite() {
                    return Err(Error::InvalidData(format!("non-finite observed value at row {i}, column {j}")));
                }
            }
        }
        Ok(Self { values, mask, column_names })
    }

    pub fn complete(values: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), false);
        Self::new(values, mask, column_names)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown column `{name}`")))
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.mask[(i, j)]
    }

    pub fn n_missing(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn observed_rows(&self, j: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| !self.mask[(i, j)]).collect()
    }

    pub fn missing_rows(&self, j: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.mask[(i, j)]).collect()
    }

    /// Columns containing at least one missing cell, in column order.
    pub fn incomplete_columns(&self) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| (0..self.n_rows()).any(|i| self.mask[(i, j)])).collect()
    }

    /// Groups incomplete rows by their mask row; fully observed rows are skipped.
    pub fn patterns(&self) -> Vec<MissingPattern> {
        let p = self.n_cols();
        let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for i in 0..self.n_rows() {
            let missing: Vec<usize> = (0..p).filter(|&j| self.mask[(i, j)]).collect();
            if !missing.is_empty() {
                groups.entry(missing).or_default().push(i);
            }
        }
        groups
            .into_iter()
            .map(|(missing, rows)| MissingPattern {
                observed: (0..p).filter(|j| !missing.contains(j)).collect(),
                missing,
                rows,
            })
            .collect()
    }

    /// Fills each missing cell with a uniformly chosen observed value of
    /// the same column.
    pub fn initialize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DMatrix<f64>> {
        let mut out = self.values.clone();
        for j in self.incomplete_columns() {
            let pool = self.observed_rows(j);
            if pool.is_empty() {
                return Err(Error::InvalidData(format!(
                    "column `{}` has no observed values",
                    self.column_names[j]
                )));
            }
            for i in self.missing_rows(j) {
                out[(i, j)] = self.values[(pool[rng.random_range(0..pool.len())], j)];
            }
        }
        Ok(out)
    }

    /// True when `completed` matches every observed cell bit for bit.
    pub fn agrees_with(&self, completed: &DMatrix<f64>) -> bool {
        completed.shape() == self.values.shape()
            && self
                .values
                .iter()
                .zip(self.mask.iter())
                .zip(completed.iter())
                .all(|((v, m), c)| *m || v.to_bits() == c.to_bits())
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let p = names.len();
        let mut vals = Vec::new();
        let mut miss = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != p {
                return Err(Error::InvalidData(format!("row {i} has {} fields, expected {p}", rec.len())));
            }
            for (j, field) in rec.iter().enumerate() {
                let field = field.trim();
                if field.is_empty() {
                    vals.push(f64::NAN);
                    miss.push(true);
                } else {
                    let v: f64 = field.parse().map_err(|_| {
                        Error::InvalidData(format!("row {i}, column `{}`: cannot parse `{field}`", names[j]))
                    })?;
                    vals.push(v);
                    miss.push(false);
                }
            }
        }
        let n = vals.len() / p.max(1);
        Self::new(
            DMatrix::from_row_slice(n, p, &vals),
            DMatrix::from_row_slice(n, p, &miss),
            names,
        )
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &self.column_names, &self.values, Some(&self.mask))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_writer(std::fs::File::create(path)?)
    }
}

/// Writes a completed matrix with a header row.
pub fn write_matrix_csv<W: Write>(writer: W, names: &[String], values: &DMatrix<f64>) -> Result<()> {
    write_rows(writer, names, values, None)
}

fn write_rows<W: Write>(writer: W, names: &[String], values: &DMatrix<f64>, mask: Option<&DMatrix<bool>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names)?;
    for i in 0..values.nrows() {
        let row: Vec<String> = (0..values.ncols())
            .map(|j| match mask {
                Some(m) if m[(i, j)] => String::new(),
                // `{:?}` on f64 prints the shortest round-tripping form
                _ => format!("{:?}", values[(i, j)]),
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
