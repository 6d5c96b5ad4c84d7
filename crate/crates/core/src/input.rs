//! JSON input format for fans and polarizations.
//!
//! ```json
//! {"dim": 2, "rays": [[1,0],[0,1],[-1,-1]], "max_cones": [[0,1],[1,2],[2,0]],
//!  "polarization": {"anticanonical": true}}
//! ```
//!
//! A polarization may instead be given as `{"coeffs": ["p/q", ...]}`. Coupled inputs list
//! several under `"components"`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ToricError};
use crate::fan::{Fan, LatticeVector};
use crate::polytope::{Polarization, PolarizedToric};
use crate::rational::parse_rational;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PolarizationSpec {
    Anticanonical { anticanonical: bool },
    Coeffs { coeffs: Vec<String> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct InputFile {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub max_cones: Vec<Vec<usize>>,
    #[serde(default)]
    pub polarization: Option<PolarizationSpec>,
    #[serde(default)]
    pub components: Vec<PolarizationSpec>,
}

/// Parsed input together with the SHA-256 of its raw bytes.
#[derive(Clone, Debug)]
pub struct Input {
    pub file: InputFile,
    pub hash: String,
}

pub fn input_hash(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

impl Input {
    pub fn parse(raw: &str) -> Result<Input> {
        let file: InputFile =
            serde_json::from_str(raw).map_err(|e| ToricError::Input(format!("malformed input: {e}")))?;
        Ok(Input {
            file,
            hash: input_hash(raw.as_bytes()),
        })
    }

    pub fn rays(&self) -> Vec<LatticeVector> {
        self.file.rays.iter().map(|r| LatticeVector::from_i64(r)).collect()
    }

    pub fn fan(&self) -> Result<Fan> {
        Fan::new(self.file.dim, self.rays(), self.file.max_cones.clone())
    }

    pub fn polarization(&self, fan: &Fan) -> Result<Polarization> {
        match &self.file.polarization {
            None => Ok(Polarization::anticanonical(fan)),
            Some(spec) => resolve(spec, fan),
        }
    }

    pub fn polarized(&self) -> Result<PolarizedToric> {
        let fan = self.fan()?;
        let l = self.polarization(&fan)?;
        PolarizedToric::new(fan, l)
    }

    pub fn components(&self, fan: &Fan) -> Result<Vec<Polarization>> {
        self.file.components.iter().map(|c| resolve(c, fan)).collect()
    }
}

fn resolve(spec: &PolarizationSpec, fan: &Fan) -> Result<Polarization> {
    match spec {
        PolarizationSpec::Anticanonical { anticanonical: true } => Ok(Polarization::anticanonical(fan)),
        PolarizationSpec::Anticanonical { anticanonical: false } => Err(ToricError::Input(
            "\"anticanonical\": false requires explicit coeffs".into(),
        )),
        PolarizationSpec::Coeffs { coeffs } => {
            let c = coeffs.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            if c.len() != fan.rays().len() {
                return Err(ToricError::Input(format!(
                    "{} coefficients for {} rays",
                    c.len(),
                    fan.rays().len()
                )));
            }
            Ok(Polarization::new(c))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn parses_both_polarization_forms() {
        let a = Input::parse(
            r#"{"dim":1,"rays":[[1],[-1]],"max_cones":[[0],[1]],"polarization":{"anticanonical":true}}"#,
        )
        .unwrap();
        assert!(a.polarized().unwrap().polarization.is_anticanonical());
        let b = Input::parse(
            r#"{"dim":1,"rays":[[1],[-1]],"max_cones":[[0],[1]],"polarization":{"coeffs":["1/2","-1/2"]}}"#,
        );
        let b = b.unwrap();
        let fan = b.fan().unwrap();
        assert_eq!(b.polarization(&fan).unwrap().coeffs, vec![ratio(1, 2), ratio(-1, 2)]);
        assert_eq!(a.hash.len(), 64);
        assert_ne!(a.hash, b.hash);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Input::parse("{\"dim\":1}"), Err(ToricError::Input(_))));
        let c = Input::parse(
            r#"{"dim":1,"rays":[[1],[-1]],"max_cones":[[0],[1]],"polarization":{"coeffs":["1"]}}"#,
        )
        .unwrap();
        assert!(c.polarized().is_err());
    }
}
