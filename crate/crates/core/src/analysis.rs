//! Pre- and post-selected ensembles: weak values, the normalized
//! `|psi><f| / <f|psi>` operator, operator decompositions over named bases and
//! Kirkwood-Dirac quasiprobabilities.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::qcore::{
    apply, inner, outer, Basis, ComplexAmplitude, Operator, StateVector, TOL, ZERO,
};

/// Smallest `|<f|psi>|` accepted by [`PpsEnsemble`].
pub const ANOMALY_THRESHOLD: f64 = 1e-10;

/// A pre-selected input, a post-selected output direction and the circuit
/// connecting them.
#[derive(Debug, Clone)]
pub struct PpsEnsemble {
    circuit: Circuit,
    psi: StateVector,
    f: StateVector,
    overlap: ComplexAmplitude,
}

impl PpsEnsemble {
    pub fn new(circuit: Circuit, psi: StateVector, f: StateVector) -> Result<Self> {
        Self::with_threshold(circuit, psi, f, ANOMALY_THRESHOLD)
    }

    pub fn with_threshold(
        circuit: Circuit,
        psi: StateVector,
        f: StateVector,
        threshold: f64,
    ) -> Result<Self> {
        for v in [&psi, &f] {
            if !v.is_normalized() {
                return Err(Error::NotNormalized(v.norm_sqr()));
            }
        }
        let psi_stage = psi.stage().ok_or(Error::UntaggedState)?;
        let f_on_psi = circuit.transport(&f, psi_stage)?;
        let overlap = inner(&f_on_psi, &psi)?;
        if overlap.norm() <= threshold {
            return Err(Error::AnomalousPostselection {
                overlap: overlap.norm(),
                threshold,
            });
        }
        Ok(Self {
            circuit,
            psi,
            f,
            overlap,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    pub fn f(&self) -> &StateVector {
        &self.f
    }

    /// `<f|psi>`, identical at every stage.
    pub fn transition_amplitude(&self) -> ComplexAmplitude {
        self.overlap
    }

    /// Post-selection probability `|<f|psi>|^2`.
    pub fn success_probability(&self) -> f64 {
        self.overlap.norm_sqr()
    }

    pub fn psi_at(&self, stage: &str) -> Result<StateVector> {
        self.circuit.transport(&self.psi, stage)
    }

    pub fn f_at(&self, stage: &str) -> Result<StateVector> {
        self.circuit.transport(&self.f, stage)
    }
}

/// A weak value together with a description of the observable it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakValue {
    pub value: ComplexAmplitude,
    pub observable: String,
}

/// `<f_s|A|psi_s> / <f_s|psi_s>` with both states carried to `stage`.
pub fn weak_value(e: &PpsEnsemble, a: &Operator, stage: &str) -> Result<WeakValue> {
    weak_value_tagged(e, a, stage, format!("operator@{stage}"))
}

fn weak_value_tagged(
    e: &PpsEnsemble,
    a: &Operator,
    stage: &str,
    observable: String,
) -> Result<WeakValue> {
    let psi = e.psi_at(stage)?;
    let f = e.f_at(stage)?;
    let overlap = inner(&f, &psi)?;
    if overlap.norm() <= ANOMALY_THRESHOLD {
        return Err(Error::AnomalousPostselection {
            overlap: overlap.norm(),
            threshold: ANOMALY_THRESHOLD,
        });
    }
    let numerator = inner(&f, &apply(a, &psi)?)?;
    let value = numerator / overlap;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonFinite("weak value"));
    }
    Ok(WeakValue { value, observable })
}

/// Weak value of the projector onto rail `rail` of `stage`.
pub fn path_weak_value(e: &PpsEnsemble, stage: &str, rail: &str) -> Result<WeakValue> {
    let p = e.circuit().projector(stage, rail)?;
    weak_value_tagged(e, &p, stage, format!("|{rail}><{rail}|@{stage}"))
}

/// `|psi_s><f_s| / <f_s|psi_s>` at `stage`.
pub fn pps_operator(e: &PpsEnsemble, stage: &str) -> Result<Operator> {
    let psi = e.psi_at(stage)?;
    let f = e.f_at(stage)?;
    let overlap = inner(&f, &psi)?;
    if overlap.norm() <= ANOMALY_THRESHOLD {
        return Err(Error::AnomalousPostselection {
            overlap: overlap.norm(),
            threshold: ANOMALY_THRESHOLD,
        });
    }
    Ok(outer(&psi, &f)?.scaled(overlap.inv()))
}

/// Sum of weak values of all projectors of `basis` (given at `stage`).
///
/// Equal to one for any complete orthonormal basis.
pub fn weak_value_sum_check(e: &PpsEnsemble, basis: &Basis, stage: &str) -> Result<ComplexAmplitude> {
    basis.validate()?;
    if !basis.is_complete() {
        return Err(Error::NonOrthonormalBasis {
            name: basis.name().to_string(),
            deviation: (basis.dim() - basis.len()) as f64,
        });
    }
    let mut total = ZERO;
    for (label, v) in basis.elements() {
        let p = outer(v, v)?;
        total += weak_value_tagged(e, &p, stage, label.clone())?.value;
    }
    Ok(total)
}

/// Expansion `A = sum_ij c_ij |left_i><right_j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDecomposition {
    left: Basis,
    right: Basis,
    coeffs: Vec<ComplexAmplitude>,
}

impl OperatorDecomposition {
    pub fn left(&self) -> &Basis {
        &self.left
    }

    pub fn right(&self) -> &Basis {
        &self.right
    }

    pub fn get(&self, i: usize, j: usize) -> ComplexAmplitude {
        self.coeffs[i * self.right.len() + j]
    }

    /// Coefficient of `|left><right|`, by element label.
    pub fn coeff(&self, left: &str, right: &str) -> Option<ComplexAmplitude> {
        let i = self.left.position(left)?;
        let j = self.right.position(right)?;
        Some(self.get(i, j))
    }

    /// All `(left, right, c)` triples in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, ComplexAmplitude)> + '_ {
        self.left.labels().enumerate().flat_map(move |(i, l)| {
            self.right
                .labels()
                .enumerate()
                .map(move |(j, r)| (l, r, self.get(i, j)))
        })
    }

    pub fn reconstruct(&self) -> Operator {
        let dim = self.left.dim();
        let mut op = Operator::zeros(dim);
        for (i, (_, l)) in self.left.elements().iter().enumerate() {
            for (j, (_, r)) in self.right.elements().iter().enumerate() {
                let c = self.get(i, j);
                if c != ZERO {
                    op = &op + &outer(l, r).expect("same dim").scaled(c);
                }
            }
        }
        op
    }
}

/// `c_ij = <left_i|A|right_j>`.
pub fn decompose(a: &Operator, left: &Basis, right: &Basis) -> Result<OperatorDecomposition> {
    left.validate()?;
    right.validate()?;
    for b in [left, right] {
        if b.dim() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
    }
    let mut coeffs = Vec::with_capacity(left.len() * right.len());
    for (_, l) in left.elements() {
        for (_, r) in right.elements() {
            coeffs.push(inner(l, &apply(a, r)?)?);
        }
    }
    Ok(OperatorDecomposition {
        left: left.clone(),
        right: right.clone(),
        coeffs,
    })
}

/// Joint quasiprobability `q(a, b) = <b|a><a|psi><psi|b>` over an
/// intermediate and a final basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KdDistribution {
    intermediate: Vec<String>,
    finals: Vec<String>,
    table: Vec<ComplexAmplitude>,
}

impl KdDistribution {
    pub fn intermediate_labels(&self) -> &[String] {
        &self.intermediate
    }

    pub fn final_labels(&self) -> &[String] {
        &self.finals
    }

    pub fn get(&self, a: usize, b: usize) -> ComplexAmplitude {
        self.table[a * self.finals.len() + b]
    }

    pub fn q(&self, a: &str, b: &str) -> Option<ComplexAmplitude> {
        let i = self.intermediate.iter().position(|l| l == a)?;
        let j = self.finals.iter().position(|l| l == b)?;
        Some(self.get(i, j))
    }

    pub fn total(&self) -> ComplexAmplitude {
        self.table.iter().sum()
    }

    /// `sum_a q(a, b)` for every final outcome `b`.
    pub fn final_marginal(&self) -> Vec<ComplexAmplitude> {
        (0..self.finals.len())
            .map(|b| (0..self.intermediate.len()).map(|a| self.get(a, b)).sum())
            .collect()
    }

    /// `sum_b q(a, b)` for every intermediate outcome `a`.
    pub fn intermediate_marginal(&self) -> Vec<ComplexAmplitude> {
        (0..self.intermediate.len())
            .map(|a| (0..self.finals.len()).map(|b| self.get(a, b)).sum())
            .collect()
    }

    /// `q(a, b) / sum_a q(a, b)` for fixed final outcome `b`.
    pub fn conditional_on_final(&self, b: &str) -> Option<Vec<ComplexAmplitude>> {
        let j = self.finals.iter().position(|l| l == b)?;
        let norm: ComplexAmplitude = (0..self.intermediate.len()).map(|a| self.get(a, j)).sum();
        if norm.norm() <= ANOMALY_THRESHOLD {
            return None;
        }
        Some(
            (0..self.intermediate.len())
                .map(|a| self.get(a, j) / norm)
                .collect(),
        )
    }

    /// Total weight of the real parts below zero.
    pub fn negativity(&self) -> f64 {
        negativity(self)
    }

    /// `sum |Im q(a, b)|`.
    pub fn imaginarity(&self) -> f64 {
        self.table.iter().map(|q| q.im.abs()).sum()
    }
}

pub fn kd_distribution(
    e: &PpsEnsemble,
    intermediate: &Basis,
    finals: &Basis,
    stage: &str,
) -> Result<KdDistribution> {
    intermediate.validate()?;
    finals.validate()?;
    let psi = e.psi_at(stage)?;
    for b in [intermediate, finals] {
        if b.dim() != psi.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi.dim(),
                found: b.dim(),
            });
        }
    }
    let mut table = Vec::with_capacity(intermediate.len() * finals.len());
    for (_, a) in intermediate.elements() {
        let a_psi = inner(a, &psi)?;
        for (_, b) in finals.elements() {
            table.push(inner(b, a)? * a_psi * inner(&psi, b)?);
        }
    }
    Ok(KdDistribution {
        intermediate: intermediate.labels().map(String::from).collect(),
        finals: finals.labels().map(String::from).collect(),
        table,
    })
}

/// `sum max(0, -Re q(a, b))`; positive values witness contextuality.
pub fn negativity(k: &KdDistribution) -> f64 {
    k.table.iter().map(|q| (-q.re).max(0.0)).sum()
}

/// Complete orthonormal basis refining the two-outcome post-selection
/// `{f, not f}` at `stage`.
///
/// The first element is `f`; the second is the normalized part of `psi`
/// orthogonal to `f` (`not_f.psi`), the remainder fill the complement with
/// no overlap with `psi`, so every rejected-outcome cell of a KD table
/// built on this basis collapses onto the single `not f` outcome.
pub fn postselection_basis(e: &PpsEnsemble, stage: &str) -> Result<Basis> {
    let f = e.f_at(stage)?;
    let psi = e.psi_at(stage)?;
    let mut seeds = vec![("f".to_string(), f.clone())];
    let residual = project_out(&psi, std::slice::from_ref(&f))?;
    if residual.norm_sqr().sqrt() > TOL {
        seeds.push(("not_f.psi".to_string(), residual.normalized()?));
    }
    complete_basis(format!("postselection@{stage}"), seeds, "not_f")
}

fn project_out(v: &StateVector, against: &[StateVector]) -> Result<StateVector> {
    let mut amps = v.amps().to_vec();
    for u in against {
        let w = StateVector::new(amps.clone())?;
        let c = inner(u, &w)?;
        for (x, ui) in amps.iter_mut().zip(u.amps()) {
            *x -= c * ui;
        }
    }
    StateVector::new(amps)
}

/// Extend orthonormal `seeds` to a complete basis by Gram-Schmidt over the
/// computational vectors; new elements are labelled `prefix.0`, `prefix.1`, ...
pub fn complete_basis(
    name: impl Into<String>,
    seeds: Vec<(String, StateVector)>,
    prefix: &str,
) -> Result<Basis> {
    let name = name.into();
    let dim = seeds
        .first()
        .map(|(_, v)| v.dim())
        .ok_or_else(|| Error::NonOrthonormalBasis {
            name: name.clone(),
            deviation: f64::INFINITY,
        })?;
    let stage = seeds[0].1.stage().map(String::from);
    let mut elements = seeds;
    let mut k = 0;
    for i in 0..dim {
        if elements.len() == dim {
            break;
        }
        let current: Vec<StateVector> = elements.iter().map(|(_, v)| v.clone()).collect();
        // two passes keep the result orthogonal to working precision
        let once = project_out(&StateVector::basis(dim, i)?, &current)?;
        let twice = project_out(&once, &current)?;
        if twice.norm_sqr().sqrt() > 1e-6 {
            let mut v = twice.normalized()?;
            if let Some(s) = &stage {
                v = v.with_stage(s.clone());
            }
            elements.push((format!("{prefix}.{k}"), v));
            k += 1;
        }
    }
    let basis = Basis::new(name, elements)?;
    basis.validate()?;
    Ok(basis)
}

/// Identity check helper: `max |lhs - rhs|` entrywise.
pub fn residual(lhs: &Operator, rhs: &Operator) -> Result<f64> {
    lhs.max_abs_diff(rhs)
}

/// `|a><b| + |b><a|` built from two rail kets of one stage.
pub fn coherence(c: &Circuit, stage: &str, a: &str, b: &str) -> Result<Operator> {
    let ka = c.rail_state(stage, a)?;
    let kb = c.rail_state(stage, b)?;
    Ok(&outer(&ka, &kb)? + &outer(&kb, &ka)?)
}

/// `|a><a| - |b><b|` built from two rail kets of one stage.
pub fn population_difference(c: &Circuit, stage: &str, a: &str, b: &str) -> Result<Operator> {
    Ok(&c.projector(stage, a)? - &c.projector(stage, b)?)
}
