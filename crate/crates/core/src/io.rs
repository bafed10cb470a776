//! File formats: the JSON system description and the CSV outline export.
//!
//! ```json
//! {"n": 2, "m": 2, "t": [0.0, 1.0],
//!  "A": {"kind": "piecewise_constant",
//!        "segments": [{"until": 1.0, "matrix": [[0.0, 0.0], [0.0, 0.0]]}]},
//!  "B": {"kind": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
//!  "X0": {"center": [0.0, 0.0], "generators": []},
//!  "U": {"center": [0.0, 0.0], "generators": [[1.0, 0.0], [0.0, 1.0]]}}
//! ```
//!
//! `{"kind": "builtin", "name": "academic" | "dcdc"}` selects the compiled-in
//! matrix functions; for `B`, `"dcdc"` is the 2×2 identity.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{MatrixProvider, SystemSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::reachcore::ReachResult;
use crate::setkernel::{Zonotope, ZonotopeJson};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub m: usize,
    pub t: [f64; 2],
    #[serde(rename = "A")]
    pub a: ProviderJson,
    #[serde(rename = "B")]
    pub b: ProviderJson,
    #[serde(rename = "X0")]
    pub x0: ZonotopeJson,
    #[serde(rename = "U")]
    pub u: ZonotopeJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderJson {
    Constant { matrix: Vec<Vec<f64>> },
    PiecewiseConstant { segments: Vec<SegmentJson> },
    Builtin { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentJson {
    pub until: f64,
    pub matrix: Vec<Vec<f64>>,
}

/// Parses a JSON system description. Syntax errors carry line and column;
/// semantic errors name the offending field.
pub fn parse_system(text: &str, name: &str) -> Result<SystemSpec> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| {
        Error::InvalidInput(format!(
            "malformed system description at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    system_from_file(&file, name)
}

pub fn system_from_file(file: &SystemFile, name: &str) -> Result<SystemSpec> {
    let [t_lo, t_hi] = file.t;
    let a = provider_from_json(&file.a, "A", file.n, file.n, t_hi, true)?;
    let b = provider_from_json(&file.b, "B", file.n, file.m, t_hi, false)?;
    let x0 = Zonotope::from_json(&file.x0).map_err(|e| field_error("X0", e))?;
    let u = Zonotope::from_json(&file.u).map_err(|e| field_error("U", e))?;
    if x0.dim() != 0 && x0.dim() != file.n {
        return Err(Error::Assumption {
            assumption: "iv",
            message: format!("X0 has dimension {}, but n = {}", x0.dim(), file.n),
        });
    }
    if u.dim() != 0 && u.dim() != file.m {
        return Err(Error::Assumption {
            assumption: "iv",
            message: format!("U has dimension {}, but m = {}", u.dim(), file.m),
        });
    }
    SystemSpec::new(name, t_lo, t_hi, a, b, x0, u)
}

fn field_error(path: &str, e: Error) -> Error {
    Error::InvalidInput(format!("{path}: {e}"))
}

fn provider_from_json(
    p: &ProviderJson,
    path: &str,
    rows: usize,
    cols: usize,
    t_hi: f64,
    is_a: bool,
) -> Result<MatrixProvider> {
    match p {
        ProviderJson::Constant { matrix } => Ok(MatrixProvider::Constant(matrix_from_rows(
            matrix,
            &format!("{path}.matrix"),
            rows,
            cols,
        )?)),
        ProviderJson::PiecewiseConstant { segments } => {
            if segments.is_empty() {
                return Err(Error::InvalidInput(format!("{path}.segments: no segments")));
            }
            let segs = segments
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    Ok((
                        s.until,
                        matrix_from_rows(&s.matrix, &format!("{path}.segments[{k}].matrix"), rows, cols)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MatrixProvider::piecewise(segs))
        }
        ProviderJson::Builtin { name } => match (name.as_str(), is_a) {
            ("academic", true) => Ok(MatrixProvider::AcademicA),
            ("academic", false) => Ok(MatrixProvider::AcademicB),
            ("dcdc", true) => Ok(MatrixProvider::dcdc_a(t_hi)),
            ("dcdc", false) => Ok(MatrixProvider::Constant(Matrix::identity(2, 2))),
            (other, _) => Err(Error::InvalidInput(format!(
                "{path}.name: unknown built-in {other:?} (expected \"academic\" or \"dcdc\")"
            ))),
        },
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], path: &str, nrows: usize, ncols: usize) -> Result<Matrix> {
    if rows.len() != nrows {
        return Err(Error::InvalidInput(format!(
            "{path}: expected {nrows} rows, got {}",
            rows.len()
        )));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::InvalidInput(format!(
                "{path}[{r}]: expected {ncols} columns, got {}",
                row.len()
            )));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(nrows, ncols, &flat))
}

/// One polygon per set: rows `set_index,t,x1,x2` with outline points in
/// angular order. Numbers use the shortest representation that round-trips.
pub fn outline_csv(result: &ReachResult, directions: usize) -> Result<String> {
    let mut out = String::from("set_index,t,x1,x2\n");
    for (i, z) in result.lambdas().iter().enumerate() {
        let t = result.grid().t(i);
        for p in z.outline_2d(directions)? {
            writeln!(out, "{i},{t:?},{:?},{:?}", p[0], p[1]).expect("write to string");
        }
    }
    Ok(out)
}
