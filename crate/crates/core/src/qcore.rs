//! Dense complex vectors and operators over small dimensions.
//!
//! Everything here is value-typed and immutable once built. Operators are
//! stored row-major with the row index being the *output* rail and the column
//! index the *input* rail, so `apply(U, e_j)` is column `j` of `U`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single complex amplitude, stored as an explicit `(re, im)` pair.
pub type ComplexAmplitude = Complex64;

/// Tolerance used for every exact-algebra assertion in the crate.
pub const TOL: f64 = 1e-12;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Amplitudes over the rails of a circuit at one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<ComplexAmplitude>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stage: Option<String>,
}

impl StateVector {
    pub fn new(amps: Vec<ComplexAmplitude>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state vector"));
        }
        Ok(Self { amps, stage: None })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The computational basis vector `e_index` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn with_stage(mut self, stage: impl Into<String>) -> Self {
        self.stage = Some(stage.into());
        self
    }

    pub fn without_stage(mut self) -> Self {
        self.stage = None;
        self
    }

    pub fn stage(&self) -> Option<&str> {
        self.stage.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[ComplexAmplitude] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> ComplexAmplitude {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOL
    }

    /// Rescale to unit norm. Fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n <= f64::MIN_POSITIVE {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, k: ComplexAmplitude) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * k).collect(),
            stage: self.stage.clone(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// `<bra|ket> = sum_i conj(bra_i) ket_i`.
pub fn inner(bra: &StateVector, ket: &StateVector) -> Result<ComplexAmplitude> {
    check_dims(bra.dim(), ket.dim())?;
    Ok(bra
        .amps
        .iter()
        .zip(&ket.amps)
        .map(|(b, k)| b.conj() * k)
        .sum())
}

/// `|ket><bra|`.
pub fn outer(ket: &StateVector, bra: &StateVector) -> Result<Operator> {
    check_dims(ket.dim(), bra.dim())?;
    let dim = ket.dim();
    let mut entries = Vec::with_capacity(dim * dim);
    for k in &ket.amps {
        for b in &bra.amps {
            entries.push(k * b.conj());
        }
    }
    Ok(Operator { dim, entries })
}

pub fn apply(op: &Operator, v: &StateVector) -> Result<StateVector> {
    check_dims(op.dim, v.dim())?;
    let amps = (0..op.dim)
        .map(|i| (0..op.dim).map(|j| op.get(i, j) * v.amps[j]).sum())
        .collect();
    Ok(StateVector {
        amps,
        stage: v.stage.clone(),
    })
}

/// Operator product `a * b`: apply `b` first, then `a`.
pub fn compose(a: &Operator, b: &Operator) -> Result<Operator> {
    check_dims(a.dim, b.dim)?;
    let dim = a.dim;
    let mut entries = vec![ZERO; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a.get(i, k);
            if aik == ZERO {
                continue;
            }
            for j in 0..dim {
                entries[i * dim + j] += aik * b.get(k, j);
            }
        }
    }
    Ok(Operator { dim, entries })
}

pub fn adjoint(op: &Operator) -> Operator {
    let dim = op.dim;
    let mut entries = vec![ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            entries[j * dim + i] = op.get(i, j).conj();
        }
    }
    Operator { dim, entries }
}

pub fn trace(op: &Operator) -> ComplexAmplitude {
    (0..op.dim).map(|i| op.get(i, i)).sum()
}

/// Square complex matrix, row = output index, column = input index.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<ComplexAmplitude>,
}

impl Operator {
    /// Build from row-major entries.
    pub fn from_entries(dim: usize, entries: Vec<ComplexAmplitude>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        check_dims(dim * dim, entries.len())?;
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dims(dim, row.len())?;
            entries.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::from_entries(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.entries[i * dim + i] = ONE;
        }
        op
    }

    /// `|e_index><e_index|` in the computational basis.
    pub fn basis_projector(dim: usize, index: usize) -> Result<Self> {
        let e = StateVector::basis(dim, index)?;
        outer(&e, &e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> ComplexAmplitude {
        self.entries[row * self.dim + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: ComplexAmplitude) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[ComplexAmplitude] {
        &self.entries
    }

    pub fn scaled(&self, k: ComplexAmplitude) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * k).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.dim, other.dim)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Entrywise `max |U^dagger U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let product = compose(&adjoint(self), self).expect("same dim");
        product
            .max_abs_diff(&Self::identity(self.dim))
            .expect("same dim")
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= TOL
    }

    /// `U A U^dagger`: re-express `self` after evolving by `u`.
    pub fn conjugated_by(&self, u: &Operator) -> Result<Self> {
        compose(&compose(u, self)?, &adjoint(u))
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(ComplexAmplitude, ComplexAmplitude) -> ComplexAmplitude,
    ) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

// Arithmetic operators panic on dimension mismatch; use the free functions for
// fallible composition.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        compose(self, rhs).expect("operator dimension mismatch")
    }
}

/// A named set of states used as a measurement or decomposition basis.
///
/// Orthonormality is checked when the basis is used, not at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    name: String,
    elements: Vec<(String, StateVector)>,
}

impl Basis {
    pub fn new(name: impl Into<String>, elements: Vec<(String, StateVector)>) -> Result<Self> {
        let name = name.into();
        let Some((_, first)) = elements.first() else {
            return Err(Error::NonOrthonormalBasis {
                name,
                deviation: f64::INFINITY,
            });
        };
        let dim = first.dim();
        for (_, v) in &elements {
            check_dims(dim, v.dim())?;
        }
        Ok(Self { name, elements })
    }

    /// The computational basis with the given element names.
    pub fn computational(name: impl Into<String>, labels: &[String]) -> Result<Self> {
        let dim = labels.len();
        let elements = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Ok((l.clone(), StateVector::basis(dim, i)?)))
            .collect::<Result<_>>()?;
        Self::new(name, elements)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.elements[0].1.dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.dim()
    }

    pub fn elements(&self) -> &[(String, StateVector)] {
        &self.elements
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|(l, _)| l.as_str())
    }

    pub fn get(&self, label: &str) -> Option<&StateVector> {
        self.elements
            .iter()
            .find_map(|(l, v)| (l == label).then_some(v))
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|(l, _)| l == label)
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (_, a)) in self.elements.iter().enumerate() {
            for (j, (_, b)) in self.elements.iter().enumerate() {
                let g = inner(a, b).expect("dims checked at construction");
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let deviation = self.orthonormality_defect();
        if deviation > TOL {
            return Err(Error::NonOrthonormalBasis {
                name: self.name.clone(),
                deviation,
            });
        }
        Ok(())
    }

    /// Projector onto the element `label`.
    pub fn projector(&self, label: &str) -> Option<Operator> {
        self.get(label).map(|v| outer(v, v).expect("same dim"))
    }
}
