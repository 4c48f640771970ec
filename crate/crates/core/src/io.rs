//! File formats: density-matrix JSON, quadrature CSV and Wigner-grid CSV.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, ModeRegister};
use crate::homodyne::{QuadratureDataset, QuadratureSample};
use crate::tomography::{ReconstructionResult, WignerGrid};

pub const QUADRATURE_HEADER: [&str; 2] = ["theta_rad", "x"];

/// Serialized form of a [`DensityMatrix`]: row-major real and imaginary
/// parts in the register's lexicographic basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityJson {
    pub labels: Vec<String>,
    pub cutoff: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&DensityMatrix> for DensityJson {
    fn from(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            labels: rho.register().labels().to_vec(),
            cutoff: rho.register().cutoff(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl DensityJson {
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let register = ModeRegister::new(self.labels.iter().cloned(), self.cutoff)?;
        let dim = register.dim().ok_or(Error::TooLarge(usize::MAX))?;
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != dim {
                return Err(Error::InvalidDensity(format!(
                    "`{name}` has {} rows, expected {dim}",
                    part.len()
                )));
            }
            if let Some((i, row)) = part.iter().enumerate().find(|(_, r)| r.len() != dim) {
                return Err(Error::InvalidDensity(format!(
                    "`{name}` row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(self.re[i][j], self.im[i][j]));
        DensityMatrix::new(register, m)
    }
}

/// Reconstruction output: the density matrix plus fit diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionJson {
    #[serde(flatten)]
    pub rho: DensityJson,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub final_loglik: f64,
    pub converged: bool,
    pub eta_used: f64,
}

impl From<&ReconstructionResult> for ReconstructionJson {
    fn from(r: &ReconstructionResult) -> Self {
        Self {
            rho: DensityJson::from(&r.rho),
            diagnostics: Diagnostics {
                iterations: r.iterations,
                final_loglik: r.final_loglik(),
                converged: r.converged,
                eta_used: r.eta_used,
            },
        }
    }
}

pub fn density_to_json(rho: &DensityMatrix) -> Result<String> {
    Ok(serde_json::to_string_pretty(&DensityJson::from(rho))?)
}

/// Parses a density matrix. Extra fields, such as a reconstruction's
/// diagnostics block, are ignored.
pub fn density_from_json(text: &str) -> Result<DensityMatrix> {
    let parsed: DensityJson = serde_json::from_str(text).map_err(json_error)?;
    parsed.to_density()
}

pub fn reconstruction_to_json(r: &ReconstructionResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ReconstructionJson::from(r))?)
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    if e.is_io() {
        Error::Json(e)
    } else {
        Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }
    }
}

/// Writes `theta_rad,x` rows using shortest round-trip float formatting.
pub fn write_quadratures<W: Write>(data: &QuadratureDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(QUADRATURE_HEADER).map_err(csv_error)?;
    for s in &data.samples {
        w.write_record([s.theta.to_string(), s.x.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn quadratures_to_csv(data: &QuadratureDataset) -> Result<String> {
    let mut buf = Vec::new();
    write_quadratures(data, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}

/// Reads quadrature CSV. Errors carry the 1-based line number.
pub fn read_quadratures<R: Read>(input: R, eta_assumed: f64, source_label: &str) -> Result<QuadratureDataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = r.records();
    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header `theta_rad,x`".into(),
            })
        }
        Some(h) => h.map_err(csv_error)?,
    };
    if header.iter().collect::<Vec<_>>() != QUADRATURE_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `theta_rad,x`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut samples = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = record[i].parse().map_err(|_| Error::Parse {
                line,
                message: format!("`{}` is not a number in column {name}", &record[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value in column {name}"),
                });
            }
            Ok(v)
        };
        samples.push(QuadratureSample {
            theta: field(0, "theta_rad")?,
            x: field(1, "x")?,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(QuadratureDataset::new(samples, eta_assumed, source_label))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { len, expected_len, .. } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `q,p,w` rows, q varying slowest.
pub fn wigner_to_csv(grid: &WignerGrid) -> String {
    let mut out = String::from("q,p,w\n");
    for (i, q) in grid.q.iter().enumerate() {
        for (j, p) in grid.p.iter().enumerate() {
            out.push_str(&format!("{q},{p},{}\n", grid.values[i][j]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(
            read_quadratures("theta_rad,x\n".as_bytes(), 1.0, "m"),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn empty_file_reports_line_one() {
        assert!(matches!(
            read_quadratures("".as_bytes(), 1.0, "m"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "theta_rad,x\n0.1,0.2\n0.3,abc\n";
        match read_quadratures(text.as_bytes(), 1.0, "m") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let text = "theta_rad,x\n0.1,0.2\n0.1,0.2\n0.3\n";
        match read_quadratures(text.as_bytes(), 1.0, "m") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(matches!(
            read_quadratures("x,theta\n1,2\n".as_bytes(), 1.0, "m"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ragged_json_is_rejected() {
        let text = r#"{"labels":["m"],"cutoff":1,"re":[[1.0,0.0],[0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#;
        assert!(matches!(density_from_json(text), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = "{\n\"labels\": [\"m\"],\n\"cutoff\": ,\n}";
        assert!(matches!(density_from_json(text), Err(Error::Parse { line: 3, .. })));
    }
}
