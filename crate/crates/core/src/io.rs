//! CSV and JSON output. Files are replaced atomically (temp file, then rename).

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::approx::FourierSeries;
use crate::circuitsim::QspPhaseSet;
use crate::error::Result;
use crate::thermal::DensityMatrix;

/// Shortest decimal form with 12 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Header plus rows of pre-formatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(std::io::Error::from)?;
        for r in &self.rows {
            w.write_record(r).map_err(std::io::Error::from)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

/// Rows (i, j, re, im) of a density matrix.
pub fn density_matrix_table(rho: &DensityMatrix) -> CsvTable {
    let mut t = CsvTable::new(&["i", "j", "re", "im"]);
    let m = &rho.matrix;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            t.push(vec![i.to_string(), j.to_string(), format_float(z.re), format_float(z.im)]);
        }
    }
    t
}

/// Rows (j, re, im) of the series coefficients, j = -J..=J.
pub fn series_table(series: &FourierSeries) -> CsvTable {
    let mut t = CsvTable::new(&["j", "re", "im"]);
    let jj = series.j() as i64;
    for j in -jj..=jj {
        let c = series.coeff(j);
        t.push(vec![j.to_string(), format_float(c.re), format_float(c.im)]);
    }
    t
}

/// Rows (set, index, phi) for both phase lists.
pub fn phases_table(set: &QspPhaseSet) -> CsvTable {
    let mut t = CsvTable::new(&["set", "index", "phi"]);
    for (name, phases) in [("1", &set.phases1), ("2", &set.phases2)] {
        for (k, p) in phases.iter().enumerate() {
            t.push(vec![name.to_string(), k.to_string(), format_float(*p)]);
        }
    }
    t
}
