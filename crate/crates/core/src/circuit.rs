//! Beam-splitter networks with named stage checkpoints.
//!
//! A [`Circuit`] is an ordered list of stages. The first stage is the input
//! checkpoint and carries no splitters; every later stage applies its
//! splitters (in listed order) to the state of the previous stage. Each stage
//! has its own rail labeling, so the same rail index can be called `S1` after
//! one splitter and `2` after the next.

use std::collections::HashSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{adjoint, apply, compose, Basis, Operator, StateVector};

/// A rail index together with its name at some stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RailLabel {
    pub index: usize,
    pub name: String,
}

/// Which output rail of a splitter carries the negative diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRail {
    A,
    B,
}

/// A lossless two-rail splitter with a real orthogonal block
/// `[[sqrt(R), sqrt(T)], [sqrt(T), -sqrt(R)]]` over `(rail_a, rail_b)`.
///
/// With [`SignRail::A`] the minus sign moves to the `rail_a` row. Light
/// entering on `rail_a` is reflected back onto the `rail_a` index with
/// amplitude `sqrt(R)` and transmitted onto `rail_b` with `sqrt(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSplitterSpec {
    rail_a: usize,
    rail_b: usize,
    reflectivity: f64,
    sign_rail: SignRail,
}

impl BeamSplitterSpec {
    pub fn new(rail_a: usize, rail_b: usize, reflectivity: f64, sign_rail: SignRail) -> Result<Self> {
        if rail_a == rail_b {
            return Err(Error::InvalidSplitter(format!(
                "both ports on rail {rail_a}"
            )));
        }
        if !(0.0..=1.0).contains(&reflectivity) {
            return Err(Error::InvalidSplitter(format!(
                "reflectivity {reflectivity} outside [0, 1]"
            )));
        }
        Ok(Self {
            rail_a,
            rail_b,
            reflectivity,
            sign_rail,
        })
    }

    pub fn rail_a(&self) -> usize {
        self.rail_a
    }

    pub fn rail_b(&self) -> usize {
        self.rail_b
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn sign_rail(&self) -> SignRail {
        self.sign_rail
    }

    /// The 2x2 block, rows/columns ordered `(rail_a, rail_b)`.
    pub fn block(&self) -> [[f64; 2]; 2] {
        let r = self.reflectivity.sqrt();
        let t = (1.0 - self.reflectivity).sqrt();
        match self.sign_rail {
            SignRail::B => [[r, t], [t, -r]],
            SignRail::A => [[-r, t], [t, r]],
        }
    }

    /// Embed the block into a `rails`-dimensional identity.
    pub fn embed(&self, rails: usize) -> Result<Operator> {
        let top = self.rail_a.max(self.rail_b);
        if top >= rails {
            return Err(Error::InvalidSplitter(format!(
                "rail {top} outside a {rails}-rail circuit"
            )));
        }
        let mut op = Operator::identity(rails);
        let block = self.block();
        let idx = [self.rail_a, self.rail_b];
        for (bi, &row) in idx.iter().enumerate() {
            for (bj, &col) in idx.iter().enumerate() {
                op.set(row, col, Complex64::new(block[bi][bj], 0.0));
            }
        }
        Ok(op)
    }
}

/// Description of one stage, as handed to [`Circuit::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct StageSpec {
    pub name: String,
    pub labels: Vec<String>,
    pub splitters: Vec<BeamSplitterSpec>,
}

#[derive(Debug, Clone, PartialEq)]
struct Stage {
    name: String,
    labels: Vec<String>,
    splitters: Vec<BeamSplitterSpec>,
    // maps the previous stage's representation to this one
    operator: Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    rails: usize,
    stages: Vec<Stage>,
}

impl Circuit {
    pub fn new(rails: usize, specs: Vec<StageSpec>) -> Result<Self> {
        if rails == 0 {
            return Err(Error::InvalidCircuit("circuit needs at least one rail".into()));
        }
        if specs.is_empty() {
            return Err(Error::InvalidCircuit("circuit needs at least one stage".into()));
        }
        if !specs[0].splitters.is_empty() {
            return Err(Error::InvalidCircuit(format!(
                "input stage `{}` cannot carry splitters",
                specs[0].name
            )));
        }
        let mut seen = HashSet::new();
        let mut stages = Vec::with_capacity(specs.len());
        for spec in specs {
            if !seen.insert(spec.name.clone()) {
                return Err(Error::InvalidCircuit(format!(
                    "duplicate stage name `{}`",
                    spec.name
                )));
            }
            if spec.labels.len() != rails {
                return Err(Error::InvalidCircuit(format!(
                    "stage `{}` labels {} rails, circuit has {rails}",
                    spec.name,
                    spec.labels.len()
                )));
            }
            let unique: HashSet<_> = spec.labels.iter().collect();
            if unique.len() != rails {
                return Err(Error::InvalidCircuit(format!(
                    "stage `{}` has duplicate rail names",
                    spec.name
                )));
            }
            let mut operator = Operator::identity(rails);
            for bs in &spec.splitters {
                operator = compose(&bs.embed(rails)?, &operator)?;
            }
            stages.push(Stage {
                name: spec.name,
                labels: spec.labels,
                splitters: spec.splitters,
                operator,
            });
        }
        Ok(Self { rails, stages })
    }

    pub fn rails(&self) -> usize {
        self.rails
    }

    pub fn stage_names(&self) -> impl Iterator<Item = &str> {
        self.stages.iter().map(|s| s.name.as_str())
    }

    pub fn first_stage(&self) -> &str {
        &self.stages[0].name
    }

    pub fn last_stage(&self) -> &str {
        &self.stages[self.stages.len() - 1].name
    }

    pub fn stage_index(&self, stage: &str) -> Result<usize> {
        self.stages
            .iter()
            .position(|s| s.name == stage)
            .ok_or_else(|| Error::UnknownStage(stage.to_string()))
    }

    pub fn labels(&self, stage: &str) -> Result<&[String]> {
        Ok(&self.stages[self.stage_index(stage)?].labels)
    }

    pub fn splitters(&self, stage: &str) -> Result<&[BeamSplitterSpec]> {
        Ok(&self.stages[self.stage_index(stage)?].splitters)
    }

    pub fn rail(&self, stage: &str, name: &str) -> Result<RailLabel> {
        let index = self
            .labels(stage)?
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::UnknownRail {
                stage: stage.to_string(),
                rail: name.to_string(),
            })?;
        Ok(RailLabel {
            index,
            name: name.to_string(),
        })
    }

    /// The basis ket of rail `name`, expressed (and tagged) at `stage`.
    pub fn rail_state(&self, stage: &str, name: &str) -> Result<StateVector> {
        let rail = self.rail(stage, name)?;
        Ok(StateVector::basis(self.rails, rail.index)?.with_stage(stage))
    }

    /// Projector onto rail `name` in the representation of `stage`.
    pub fn projector(&self, stage: &str, name: &str) -> Result<Operator> {
        let rail = self.rail(stage, name)?;
        Operator::basis_projector(self.rails, rail.index)
    }

    /// The rail basis of `label_stage`, expressed at `at_stage`.
    pub fn rail_basis(&self, label_stage: &str, at_stage: &str) -> Result<Basis> {
        let u = self.transport_unitary(label_stage, at_stage)?;
        let elements = self
            .labels(label_stage)?
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let v = apply(&u, &StateVector::basis(self.rails, i)?)?;
                Ok((name.clone(), v.with_stage(at_stage)))
            })
            .collect::<Result<Vec<_>>>()?;
        Basis::new(label_stage, elements)
    }

    /// Operator of a single stage (maps the previous stage to this one).
    pub fn stage_operator(&self, stage: &str) -> Result<&Operator> {
        Ok(&self.stages[self.stage_index(stage)?].operator)
    }

    /// Unitary taking representations at `from` to representations at `to`.
    pub fn stage_unitary(&self, from: &str, to: &str) -> Result<Operator> {
        let i = self.stage_index(from)?;
        let j = self.stage_index(to)?;
        if j < i {
            return Err(Error::StageOrderViolation {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        let mut u = Operator::identity(self.rails);
        for stage in &self.stages[i + 1..=j] {
            u = compose(&stage.operator, &u)?;
        }
        Ok(u)
    }

    /// Like [`Self::stage_unitary`] but allows `to` to precede `from`.
    pub fn transport_unitary(&self, from: &str, to: &str) -> Result<Operator> {
        if self.stage_index(to)? >= self.stage_index(from)? {
            self.stage_unitary(from, to)
        } else {
            Ok(adjoint(&self.stage_unitary(to, from)?))
        }
    }

    fn tagged_stage<'a>(&self, v: &'a StateVector) -> Result<&'a str> {
        let stage = v.stage().ok_or(Error::UntaggedState)?;
        if v.dim() != self.rails {
            return Err(Error::DimensionMismatch {
                expected: self.rails,
                found: v.dim(),
            });
        }
        self.stage_index(stage)?;
        Ok(stage)
    }

    /// Evolve `v` forward to `to_stage`.
    pub fn propagate(&self, v: &StateVector, to_stage: &str) -> Result<StateVector> {
        let from = self.tagged_stage(v)?;
        let u = self.stage_unitary(from, to_stage)?;
        Ok(apply(&u, v)?.with_stage(to_stage))
    }

    /// Carry a post-selected state `f` backward to `to_stage` by the adjoint
    /// of the intervening stages.
    pub fn back_propagate(&self, f: &StateVector, to_stage: &str) -> Result<StateVector> {
        let from = self.tagged_stage(f)?;
        let u = self.stage_unitary(to_stage, from)?;
        Ok(apply(&adjoint(&u), f)?.with_stage(to_stage))
    }

    /// Re-express `v` at `stage`, in whichever direction that requires.
    pub fn transport(&self, v: &StateVector, stage: &str) -> Result<StateVector> {
        let from = self.tagged_stage(v)?;
        let u = self.transport_unitary(from, stage)?;
        Ok(apply(&u, v)?.with_stage(stage))
    }

    /// Re-express operator `op`, given at `from`, at stage `to` (`U A U^dagger`).
    pub fn transport_operator(&self, op: &Operator, from: &str, to: &str) -> Result<Operator> {
        op.conjugated_by(&self.transport_unitary(from, to)?)
    }

    /// Amplitude on each rail of the last stage after full propagation.
    pub fn output_amplitudes(&self, v: &StateVector) -> Result<Vec<Complex64>> {
        Ok(self.propagate(v, self.last_stage())?.amps().to_vec())
    }

    /// Per-stage unitarity defects, for diagnostics.
    pub fn unitarity_defects(&self) -> Vec<(String, f64)> {
        self.stages
            .iter()
            .map(|s| (s.name.clone(), s.operator.unitarity_defect()))
            .collect()
    }
}

/// The three-path interferometer of the three-box paradox.
///
/// Stages and rail labels (rail indices 0, 1, 2):
///
/// | stage | labels                 | splitter (rails, R, sign row) |
/// |-------|------------------------|-------------------------------|
/// | `in`  | `psi, psi_perp, D1`    | -                             |
/// | `bs1` | `1, S1, D1`            | (0, 1), 1/3, rail 1           |
/// | `bs2` | `1, 2, 3`              | (1, 2), 1/2, rail 2           |
/// | `bs3` | `S2, 2, D2`            | (0, 2), 1/2, rail 2           |
/// | `bs4` | `S2, f, f_perp`        | (1, 2), 1/3, rail 2           |
///
/// With this assignment `|S1> = (|2> + |3>)/sqrt2`, `|D1> = (|2> - |3>)/sqrt2`,
/// `|S2> = (|1> + |3>)/sqrt2` and `|D2> = (|1> - |3>)/sqrt2`.
pub mod three_box {
    use super::*;

    pub const IN: &str = "in";
    pub const BS1: &str = "bs1";
    pub const BS2: &str = "bs2";
    pub const BS3: &str = "bs3";
    pub const BS4: &str = "bs4";

    fn labels(names: [&str; 3]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn circuit() -> Circuit {
        let third = 1.0 / 3.0;
        let stage = |name: &str, names, bs: Option<(usize, usize, f64)>| StageSpec {
            name: name.to_string(),
            labels: labels(names),
            splitters: bs
                .map(|(a, b, r)| vec![BeamSplitterSpec::new(a, b, r, SignRail::B).unwrap()])
                .unwrap_or_default(),
        };
        Circuit::new(
            3,
            vec![
                stage(IN, ["psi", "psi_perp", "D1"], None),
                stage(BS1, ["1", "S1", "D1"], Some((0, 1, third))),
                stage(BS2, ["1", "2", "3"], Some((1, 2, 0.5))),
                stage(BS3, ["S2", "2", "D2"], Some((0, 2, 0.5))),
                stage(BS4, ["S2", "f", "f_perp"], Some((1, 2, third))),
            ],
        )
        .expect("built-in circuit is valid")
    }

    /// The canonical input `|psi>`, tagged at the input stage.
    pub fn psi(c: &Circuit) -> StateVector {
        c.rail_state(IN, "psi").expect("built-in rail")
    }

    /// The post-selected output `|f>`, tagged at the last stage.
    pub fn f(c: &Circuit) -> StateVector {
        c.rail_state(BS4, "f").expect("built-in rail")
    }
}

pub use three_box::circuit as build_three_box;

/// Amplitudes of `v` on the rails of `stage`, keyed by rail name.
pub fn named_amplitudes(c: &Circuit, v: &StateVector) -> Result<Vec<(String, Complex64)>> {
    let stage = v.stage().ok_or(Error::UntaggedState)?;
    Ok(c
        .labels(stage)?
        .iter()
        .cloned()
        .zip(v.amps().iter().copied())
        .collect())
}
