//! JSON model definitions for the generic engines.
//!
//! ```json
//! {
//!   "d_s": 2, "d_e": 2,
//!   "terms": [{"a": [[[0,0],[1,0]], [[0,0],[0,0]]], "b": ...}],
//!   "rho_s_mixture": [{"weight": 1.0, "state": [[1,0],[0,0]]}],
//!   "rho_e_mixture": [{"weight": 0.5, "state": [[1,0],[0,0]]}, ...],
//!   "engine": "form1",
//!   "form2_rates": [[1.414, 1.414]]
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs, matrices are lists of rows.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Form2Config, InitialMixture, InteractionHamiltonian, InteractionTerm, PureMixture};
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, CVector, Complex};
use crate::oracle::ComposedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineForm {
    Form1,
    Form2,
}

pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub a: Vec<Vec<ComplexPair>>,
    pub b: Vec<Vec<ComplexPair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureEntry {
    pub weight: f64,
    pub state: Vec<ComplexPair>,
}

/// The document as written on disk, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub d_s: usize,
    pub d_e: usize,
    pub terms: Vec<TermSpec>,
    pub rho_s_mixture: Vec<MixtureEntry>,
    pub rho_e_mixture: Vec<MixtureEntry>,
    pub engine: EngineForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form2_rates: Option<Vec<[f64; 2]>>,
}

/// A validated model.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub spec: ModelSpec,
    pub hamiltonian: InteractionHamiltonian,
    pub initial: InitialMixture,
    pub form2: Option<Form2Config>,
}

fn located(loc: &str, e: Error) -> Error {
    Error::ModelFile(format!("{loc}: {e}"))
}

fn complex(p: &ComplexPair, loc: &str) -> Result<Complex> {
    if !p[0].is_finite() || !p[1].is_finite() {
        return Err(Error::ModelFile(format!("{loc}: non-finite entry {p:?}")));
    }
    Ok(Complex::new(p[0], p[1]))
}

fn parse_matrix(rows: &[Vec<ComplexPair>], dim: usize, loc: &str) -> Result<CMatrix> {
    if rows.len() != dim {
        return Err(Error::ModelFile(format!("{loc}: expected {dim} rows, found {}", rows.len())));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::ModelFile(format!("{loc}[{i}]: expected {dim} entries, found {}", row.len())));
        }
        for (j, p) in row.iter().enumerate() {
            entries.push(complex(p, &format!("{loc}[{i}][{j}]"))?);
        }
    }
    CMatrix::new(dim, dim, entries).map_err(|e| located(loc, e))
}

fn parse_mixture(entries: &[MixtureEntry], dim: usize, loc: &str) -> Result<PureMixture> {
    if entries.is_empty() {
        return Err(Error::ModelFile(format!("{loc}: mixture is empty")));
    }
    let mut weights = Vec::with_capacity(entries.len());
    let mut states = Vec::with_capacity(entries.len());
    for (k, e) in entries.iter().enumerate() {
        let here = format!("{loc}[{k}]");
        if !(e.weight >= 0.0) || !e.weight.is_finite() {
            return Err(Error::ModelFile(format!("{here}.weight: must be >= 0, got {}", e.weight)));
        }
        if e.state.len() != dim {
            return Err(Error::ModelFile(format!("{here}.state: expected {dim} entries, found {}", e.state.len())));
        }
        let v = e
            .state
            .iter()
            .enumerate()
            .map(|(i, p)| complex(p, &format!("{here}.state[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        weights.push(e.weight);
        states.push(CVector::new(v).map_err(|err| located(&here, err))?);
    }
    PureMixture::new(weights, states).map_err(|e| located(loc, e))
}

impl ModelSpec {
    pub fn validate(self) -> Result<ModelFile> {
        if self.d_s == 0 || self.d_e == 0 {
            return Err(Error::ModelFile("d_s and d_e must be >= 1".into()));
        }
        if self.terms.is_empty() {
            return Err(Error::ModelFile("terms: at least one term is required".into()));
        }
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(k, t)| {
                Ok(InteractionTerm {
                    a_op: parse_matrix(&t.a, self.d_s, &format!("terms[{k}].a"))?,
                    b_op: parse_matrix(&t.b, self.d_e, &format!("terms[{k}].b"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let hamiltonian = InteractionHamiltonian::new(terms).map_err(|e| located("terms", e))?;
        let initial = InitialMixture::new(
            parse_mixture(&self.rho_s_mixture, self.d_s, "rho_s_mixture")?,
            parse_mixture(&self.rho_e_mixture, self.d_e, "rho_e_mixture")?,
        );
        let form2 = match &self.form2_rates {
            Some(r) => {
                if r.len() != self.terms.len() {
                    return Err(Error::ModelFile(format!(
                        "form2_rates: {} entries for {} terms",
                        r.len(),
                        self.terms.len()
                    )));
                }
                Some(Form2Config::new(r.clone()).map_err(|e| located("form2_rates", e))?)
            }
            None => None,
        };
        if self.engine == EngineForm::Form2 && form2.is_none() {
            return Err(Error::ModelFile("form2_rates: required when engine is form2".into()));
        }
        Ok(ModelFile { spec: self, hamiltonian, initial, form2 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)
            .map_err(|e| Error::ModelFile(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        spec.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::ModelFile(msg) => Error::ModelFile(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn engine(&self) -> EngineForm {
        self.spec.engine
    }

    pub fn form2_config(&self) -> Result<&Form2Config> {
        self.form2.as_ref().ok_or_else(|| Error::ModelFile("form2_rates: not given".into()))
    }

    pub fn initial_density(&self) -> CMatrix {
        self.initial.density()
    }

    pub fn oracle(&self) -> Result<ComposedModel> {
        ComposedModel::new(self.hamiltonian.total(), self.spec.d_s, self.spec.d_e)
    }

    /// Exact reduced states on `times`.
    pub fn exact_reduced(&self, times: &[f64]) -> Result<Vec<CMatrix>> {
        self.oracle()?.reduced_states(&self.initial_density(), times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_rows(m: &[&[f64]]) -> Vec<Vec<ComplexPair>> {
        m.iter().map(|r| r.iter().map(|x| [*x, 0.0]).collect()).collect()
    }

    fn spec() -> ModelSpec {
        ModelSpec {
            description: None,
            d_s: 2,
            d_e: 2,
            terms: vec![
                TermSpec { a: pair_rows(&[&[0.0, 1.0], &[0.0, 0.0]]), b: pair_rows(&[&[0.0, 0.0], &[2.0, 0.0]]) },
                TermSpec { a: pair_rows(&[&[0.0, 0.0], &[1.0, 0.0]]), b: pair_rows(&[&[0.0, 2.0], &[0.0, 0.0]]) },
            ],
            rho_s_mixture: vec![MixtureEntry { weight: 1.0, state: vec![[1.0, 0.0], [0.0, 0.0]] }],
            rho_e_mixture: vec![
                MixtureEntry { weight: 0.5, state: vec![[1.0, 0.0], [0.0, 0.0]] },
                MixtureEntry { weight: 0.5, state: vec![[0.0, 0.0], [1.0, 0.0]] },
            ],
            engine: EngineForm::Form1,
            form2_rates: Some(vec![[1.5, 1.5], [1.5, 1.5]]),
        }
    }

    #[test]
    fn round_trip() {
        let s = spec();
        let m = ModelFile::parse(&s.to_json()).unwrap();
        assert_eq!(m.spec, s);
        assert_eq!(m.hamiltonian.terms().len(), 2);
        assert_eq!(m.initial_density().trace(), Complex::new(1.0, 0.0));
    }

    #[test]
    fn errors_name_their_location() {
        let mut s = spec();
        s.terms[1].b[1].pop();
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("terms[1].b[1]"), "{err}");

        let mut s = spec();
        s.rho_e_mixture[0].weight = 0.4;
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("rho_e_mixture"), "{err}");

        let mut s = spec();
        s.terms.pop();
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("terms") && err.contains("tolerance"), "{err}");

        let mut s = spec();
        s.engine = EngineForm::Form2;
        s.form2_rates = None;
        assert!(s.validate().unwrap_err().to_string().contains("form2_rates"));

        let err = ModelFile::parse("{\"d_s\": 2,\n \"bogus\": 1}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
