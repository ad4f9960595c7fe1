//! Scenario documents: a measure space, symbol and weight, optionally a
//! family of point measures and a grid, stored as JSON.
//!
//! Atom order in `atoms` is the canonical basis order. Complex weights are
//! `[re, im]`; a family maps each atom to a list of `{"t": .., "p": ..}`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{MeasureSpace, SystemInstance};
use crate::subnormality::family::{PointMeasure, ProbabilityFamily};
use crate::tolerance::Tolerances;
use crate::C64;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassPoint {
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmax: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// The on-disk form, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub name: String,
    pub atoms: Vec<String>,
    pub mass: BTreeMap<String, f64>,
    pub phi: BTreeMap<String, String>,
    pub w: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<BTreeMap<String, Vec<MassPoint>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub options: ScenarioOptions,
}

fn is_default(o: &ScenarioOptions) -> bool {
    *o == ScenarioOptions::default()
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub instance: SystemInstance,
    pub family: Option<ProbabilityFamily>,
    pub grid: Option<Vec<f64>>,
    pub options: ScenarioOptions,
}

impl Scenario {
    pub fn new(name: impl Into<String>, instance: SystemInstance) -> Self {
        Self {
            name: name.into(),
            instance,
            family: None,
            grid: None,
            options: ScenarioOptions::default(),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.options.tolerances.unwrap_or_default()
    }

    pub fn to_document(&self) -> ScenarioDocument {
        let space = self.instance.space();
        let ids = space.ids();
        let family = self.family.as_ref().map(|f| {
            space
                .atoms()
                .map(|x| {
                    let points = f.get(x).atoms().iter().map(|&(t, p)| MassPoint { t, p }).collect();
                    (ids[x].clone(), points)
                })
                .collect()
        });
        ScenarioDocument {
            name: self.name.clone(),
            atoms: ids.to_vec(),
            mass: space.atoms().map(|x| (ids[x].clone(), space.mass(x))).collect(),
            phi: space
                .atoms()
                .map(|x| (ids[x].clone(), ids[self.instance.phi(x)].clone()))
                .collect(),
            w: space
                .atoms()
                .map(|x| {
                    let w = self.instance.w(x);
                    (ids[x].clone(), [w.re, w.im])
                })
                .collect(),
            family,
            grid: self.grid.clone(),
            options: self.options.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario documents always serialize")
    }
}

/// Every atom must appear as a key and every key must be an atom.
fn check_keys<V>(field: &str, map: &BTreeMap<String, V>, atoms: &[String]) -> Result<(), ScenarioError> {
    if let Some(a) = atoms.iter().find(|a| !map.contains_key(*a)) {
        return Err(invalid(format!("{field}.{a}"), "missing entry for a declared atom"));
    }
    if let Some(k) = map.keys().find(|k| !atoms.contains(k)) {
        return Err(invalid(format!("{field}.{k}"), "not a declared atom"));
    }
    Ok(())
}

impl ScenarioDocument {
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        if self.atoms.is_empty() {
            return Err(invalid("atoms", "at least one atom is required"));
        }
        for (k, a) in self.atoms.iter().enumerate() {
            if self.atoms[..k].contains(a) {
                return Err(invalid(format!("atoms[{k}]"), format!("duplicate atom `{a}`")));
            }
        }
        check_keys("mass", &self.mass, &self.atoms)?;
        check_keys("phi", &self.phi, &self.atoms)?;
        check_keys("w", &self.w, &self.atoms)?;
        for a in &self.atoms {
            let m = self.mass[a];
            if !(m.is_finite() && m > 0.0) {
                return Err(invalid(format!("mass.{a}"), format!("mass must be positive and finite, got {m}")));
            }
        }
        let space = MeasureSpace::new(self.atoms.iter().map(|a| (a.clone(), self.mass[a])))
            .map_err(|e| invalid("mass", e.to_string()))?;
        let mut phi = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let target = &self.phi[a];
            let y = space
                .lookup(target)
                .ok_or_else(|| invalid(format!("phi.{a}"), format!("target `{target}` is not a declared atom")))?;
            phi.push(y);
        }
        let mut w = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let [re, im] = self.w[a];
            if !(re.is_finite() && im.is_finite()) {
                return Err(invalid(format!("w.{a}"), "weight must be finite"));
            }
            w.push(C64::new(re, im));
        }
        let instance = SystemInstance::new(space, phi, w).map_err(|e| invalid("w", e.to_string()))?;
        let tol = self.options.tolerances.unwrap_or_default();

        let family = match &self.family {
            None => None,
            Some(map) => {
                check_keys("family", map, &self.atoms)?;
                let mut measures = Vec::with_capacity(self.atoms.len());
                for a in &self.atoms {
                    let m = PointMeasure::new(map[a].iter().map(|mp| (mp.t, mp.p)), &tol)
                        .map_err(|e| invalid(format!("family.{a}"), e.to_string()))?;
                    measures.push(m);
                }
                Some(
                    ProbabilityFamily::new(instance.space(), measures)
                        .map_err(|e| invalid("family", e.to_string()))?,
                )
            }
        };
        if let Some(grid) = &self.grid {
            if let Some((k, t)) = grid.iter().enumerate().find(|(_, t)| !(t.is_finite() && **t >= 0.0)) {
                return Err(invalid(format!("grid[{k}]"), format!("location {t} is not a finite nonnegative number")));
            }
        }
        Ok(Scenario {
            name: self.name.clone(),
            instance,
            family,
            grid: self.grid.clone(),
            options: self.options.clone(),
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDocument = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    doc.validate()
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, scenario.to_json() + "\n")
}
