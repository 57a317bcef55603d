//! JSON scenario files: a circuit, an input state and a post-selection.
//!
//! ```json
//! {
//!   "rails": 3,
//!   "stages": [
//!     { "name": "in", "splitters": [] },
//!     { "name": "bs1", "splitters": [
//!         { "rails": ["psi", "psi_perp"], "reflectivity": 0.3333333333333333, "sign_rail": "S1" } ] }
//!   ],
//!   "labels": { "in": ["psi", "psi_perp", "D1"], "bs1": ["1", "S1", "D1"] },
//!   "input": { "stage": "in", "rail": "psi" },
//!   "postselect": { "stage": "bs1", "amplitudes": [[1, 0], [0, 0], [0, 0]] }
//! }
//! ```
//!
//! Splitter `rails` are named in the labeling of the *previous* stage; the
//! `sign_rail` names one of the two rails in the splitter's own stage labeling.
//! Amplitude lists are `[re, im]` pairs and are normalized on load. A missing
//! `stage` defaults to the first stage for `input` and the last for
//! `postselect`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{three_box, BeamSplitterSpec, Circuit, SignRail, StageSpec};
use crate::qcore::{StateVector, TOL};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("scenario key `{key}`: {message}")]
pub struct ScenarioError {
    pub key: String,
    pub message: String,
}

fn err(key: impl Into<String>, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError {
        key: key.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub rails: usize,
    pub stages: Vec<StageEntry>,
    pub labels: BTreeMap<String, Vec<String>>,
    pub input: StateRef,
    pub postselect: StateRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    pub name: String,
    #[serde(default)]
    pub splitters: Vec<SplitterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterEntry {
    pub rails: [String; 2],
    pub reflectivity: f64,
    pub sign_rail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub circuit: Circuit,
    pub psi: StateVector,
    pub f: StateVector,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| err("<document>", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        if self.rails == 0 {
            return Err(err("rails", "must be positive"));
        }
        if self.stages.is_empty() {
            return Err(err("stages", "at least one stage is required"));
        }
        for name in self.labels.keys() {
            if !self.stages.iter().any(|s| &s.name == name) {
                return Err(err(format!("labels.{name}"), "no stage with this name"));
            }
        }
        let mut specs: Vec<StageSpec> = Vec::with_capacity(self.stages.len());
        for (k, stage) in self.stages.iter().enumerate() {
            let key = format!("stages[{k}]");
            let labels = self
                .labels
                .get(&stage.name)
                .ok_or_else(|| err(format!("labels.{}", stage.name), "missing rail labels"))?
                .clone();
            if labels.len() != self.rails {
                return Err(err(
                    format!("labels.{}", stage.name),
                    format!("expected {} names, found {}", self.rails, labels.len()),
                ));
            }
            if k == 0 && !stage.splitters.is_empty() {
                return Err(err(
                    format!("{key}.splitters"),
                    "the first stage is the input checkpoint and cannot carry splitters",
                ));
            }
            let mut splitters = Vec::with_capacity(stage.splitters.len());
            for (j, s) in stage.splitters.iter().enumerate() {
                let skey = format!("{key}.splitters[{j}]");
                let previous = &specs[k - 1].labels;
                let index_of = |name: &str| {
                    previous.iter().position(|l| l == name).ok_or_else(|| {
                        err(
                            format!("{skey}.rails"),
                            format!("rail `{name}` is not labelled at stage `{}`", specs[k - 1].name),
                        )
                    })
                };
                let a = index_of(&s.rails[0])?;
                let b = index_of(&s.rails[1])?;
                if !(0.0..=1.0).contains(&s.reflectivity) {
                    return Err(err(
                        format!("{skey}.reflectivity"),
                        format!("{} is outside [0, 1]", s.reflectivity),
                    ));
                }
                let sign = if labels[a] == s.sign_rail {
                    SignRail::A
                } else if labels[b] == s.sign_rail {
                    SignRail::B
                } else {
                    return Err(err(
                        format!("{skey}.sign_rail"),
                        format!(
                            "`{}` must be one of the splitter's output rails ({}, {})",
                            s.sign_rail, labels[a], labels[b]
                        ),
                    ));
                };
                let bs = BeamSplitterSpec::new(a, b, s.reflectivity, sign)
                    .map_err(|e| err(skey.clone(), e))?;
                splitters.push(bs);
            }
            specs.push(StageSpec {
                name: stage.name.clone(),
                labels,
                splitters,
            });
        }
        let circuit = Circuit::new(self.rails, specs).map_err(|e| err("stages", e))?;
        let psi = resolve_state(&circuit, &self.input, "input", circuit.first_stage())?;
        let f = resolve_state(&circuit, &self.postselect, "postselect", circuit.last_stage())?;
        Ok(Scenario { circuit, psi, f })
    }

    /// Serialize `circuit` with the given input and post-selection.
    pub fn from_circuit(c: &Circuit, psi: &StateVector, f: &StateVector) -> Self {
        let mut stages = Vec::new();
        let mut labels = BTreeMap::new();
        let mut previous: Option<&[String]> = None;
        for name in c.stage_names() {
            let own = c.labels(name).expect("known stage");
            let splitters = c
                .splitters(name)
                .expect("known stage")
                .iter()
                .map(|bs| {
                    let prev = previous.expect("input stage has no splitters");
                    let sign = match bs.sign_rail() {
                        SignRail::A => bs.rail_a(),
                        SignRail::B => bs.rail_b(),
                    };
                    SplitterEntry {
                        rails: [prev[bs.rail_a()].clone(), prev[bs.rail_b()].clone()],
                        reflectivity: bs.reflectivity(),
                        sign_rail: own[sign].clone(),
                    }
                })
                .collect();
            stages.push(StageEntry {
                name: name.to_string(),
                splitters,
            });
            labels.insert(name.to_string(), own.to_vec());
            previous = Some(own);
        }
        Self {
            rails: c.rails(),
            stages,
            labels,
            input: state_ref(c, psi),
            postselect: state_ref(c, f),
        }
    }

    /// The built-in three-box interferometer.
    pub fn three_box() -> Self {
        let c = three_box::circuit();
        Self::from_circuit(&c, &three_box::psi(&c), &three_box::f(&c))
    }
}

fn state_ref(c: &Circuit, v: &StateVector) -> StateRef {
    let stage = v.stage().map(String::from);
    let labels = stage.as_deref().and_then(|s| c.labels(s).ok());
    let rail = labels.and_then(|labels| {
        let hot: Vec<usize> = (0..v.dim()).filter(|&i| v.amp(i).norm() > TOL).collect();
        match hot.as_slice() {
            [i] if (v.amp(*i) - Complex64::new(1.0, 0.0)).norm() <= TOL => Some(labels[*i].clone()),
            _ => None,
        }
    });
    let amplitudes = rail
        .is_none()
        .then(|| v.amps().iter().map(|a| [a.re, a.im]).collect());
    StateRef {
        stage,
        rail,
        amplitudes,
    }
}

fn resolve_state(
    c: &Circuit,
    r: &StateRef,
    key: &str,
    default_stage: &str,
) -> Result<StateVector, ScenarioError> {
    let stage = r.stage.as_deref().unwrap_or(default_stage);
    if c.stage_index(stage).is_err() {
        return Err(err(format!("{key}.stage"), format!("unknown stage `{stage}`")));
    }
    match (&r.rail, &r.amplitudes) {
        (Some(rail), None) => c
            .rail_state(stage, rail)
            .map_err(|e| err(format!("{key}.rail"), e)),
        (None, Some(amps)) => {
            if amps.len() != c.rails() {
                return Err(err(
                    format!("{key}.amplitudes"),
                    format!("expected {} amplitudes, found {}", c.rails(), amps.len()),
                ));
            }
            let v = StateVector::new(amps.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .map_err(|e| err(format!("{key}.amplitudes"), e))?;
            let v = v
                .normalized()
                .map_err(|_| err(format!("{key}.amplitudes"), "zero vector"))?;
            Ok(v.with_stage(stage))
        }
        _ => Err(err(key, "exactly one of `rail` or `amplitudes` is required")),
    }
}
