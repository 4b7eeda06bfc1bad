//! The versioned JSON system format.
//!
//! ```json
//! { "type": "statespace", "version": 1, "A": [[0.5]], "B": [[1]], "C": [[1]], "D": [[0]] }
//! { "type": "rnn", "version": 1, "Lambda": [[0]], "Win": [[0.5]], "Wout": [[1]] }
//! ```
//!
//! Matrices are row-major nested arrays. A state-space file may omit `A`,
//! `B` and `C` together to describe a static gain `D`. An RNN file may carry
//! a `sweep` section naming the two perturbed entries of `Win` (zero-based
//! `[row, col]`) and default grids `[lo, hi, steps]`.

use std::fs;
use std::path::Path;

use posgain::lti::StateSpace;
use posgain::numkernel::Matrix;
use posgain::rnn::{GridAxis, RnnModel, RnnTemplate};
use serde::{Deserialize, Serialize};

use crate::report::write_atomic;
use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum SystemFile {
    #[serde(rename = "statespace")]
    StateSpace(StateSpaceFile),
    #[serde(rename = "rnn")]
    Rnn(RnnFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpaceFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(rename = "D")]
    pub d: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(rename = "Lambda")]
    pub lambda: Rows,
    #[serde(rename = "Win")]
    pub w_in: Rows,
    #[serde(rename = "Wout")]
    pub w_out: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub a_entry: [usize; 2],
    pub b_entry: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<(f64, f64, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<(f64, f64, usize)>,
}

fn to_matrix(key: &str, rows: &Rows) -> Result<Matrix, CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(CliError::Invalid(format!(
            "{key}: row {i} has {} entries, expected {cols}",
            r.len()
        )));
    }
    Matrix::new(rows.len(), cols, rows.concat()).map_err(|e| CliError::Invalid(format!("{key}: {e}")))
}

fn to_rows(m: &Matrix) -> Rows {
    m.to_rows()
}

fn with_key<T>(key: &str, r: posgain::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        posgain::Error::UnstableSystem(_) => CliError::Model(e),
        e => CliError::Invalid(format!("{key}: {e}")),
    })
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: SystemFile = serde_json::from_str(text).map_err(|e| match e.line() {
            0 => CliError::Invalid(e.to_string()),
            line => CliError::Parse {
                line,
                column: e.column(),
                message: e.to_string(),
            },
        })?;
        let version = match &file {
            SystemFile::StateSpace(s) => s.version,
            SystemFile::Rnn(r) => r.version,
        };
        if version != FORMAT_VERSION {
            return Err(CliError::Invalid(format!(
                "unsupported format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { line, column, message } => CliError::Parse {
                line,
                column,
                message: format!("{}: {message}", path.display()),
            },
            CliError::Invalid(message) => CliError::Invalid(format!("{}: {message}", path.display())),
            e => e,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn from_state_space(sys: &StateSpace, name: Option<&str>) -> Self {
        let dynamic = sys.states() > 0;
        SystemFile::StateSpace(StateSpaceFile {
            version: FORMAT_VERSION,
            name: name.map(str::to_owned),
            description: None,
            a: dynamic.then(|| to_rows(sys.a())),
            b: dynamic.then(|| to_rows(sys.b())),
            c: dynamic.then(|| to_rows(sys.c())),
            d: to_rows(sys.d()),
        })
    }

    pub fn from_rnn(rnn: &RnnModel, name: Option<&str>) -> Self {
        SystemFile::Rnn(RnnFile {
            version: FORMAT_VERSION,
            name: name.map(str::to_owned),
            description: None,
            lambda: to_rows(rnn.lambda()),
            w_in: to_rows(rnn.w_in()),
            w_out: to_rows(rnn.w_out()),
            sweep: None,
        })
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            SystemFile::StateSpace(s) => s.name.as_deref(),
            SystemFile::Rnn(r) => r.name.as_deref(),
        }
    }
}

impl StateSpaceFile {
    pub fn to_model(&self) -> Result<StateSpace, CliError> {
        let d = to_matrix("D", &self.d)?;
        match (&self.a, &self.b, &self.c) {
            (None, None, None) => Ok(StateSpace::static_gain(d)),
            (Some(a), Some(b), Some(c)) => with_key(
                "dimensions",
                StateSpace::new(to_matrix("A", a)?, to_matrix("B", b)?, to_matrix("C", c)?, d),
            ),
            _ => Err(CliError::Invalid("A, B and C must be given together".into())),
        }
    }
}

impl RnnFile {
    pub fn to_model(&self) -> Result<RnnModel, CliError> {
        let model = RnnModel::new(
            to_matrix("Lambda", &self.lambda)?,
            to_matrix("Win", &self.w_in)?,
            to_matrix("Wout", &self.w_out)?,
        );
        with_key("dimensions", model)
    }

    pub fn to_template(&self) -> Result<RnnTemplate, CliError> {
        let sweep = self
            .sweep
            .ok_or_else(|| CliError::Invalid("template needs a sweep section".into()))?;
        let [ar, ac] = sweep.a_entry;
        let [br, bc] = sweep.b_entry;
        with_key("sweep", RnnTemplate::new(self.to_model()?, (ar, ac), (br, bc)))
    }

    /// Default grids from the sweep section.
    pub fn default_axes(&self) -> Result<(Option<GridAxis>, Option<GridAxis>), CliError> {
        let axis = |g: Option<(f64, f64, usize)>| -> Result<Option<GridAxis>, CliError> {
            g.map(|(lo, hi, steps)| with_key("sweep", GridAxis::new(lo, hi, steps)))
                .transpose()
        };
        let sweep = self.sweep.as_ref();
        Ok((axis(sweep.and_then(|s| s.a))?, axis(sweep.and_then(|s| s.b))?))
    }
}
