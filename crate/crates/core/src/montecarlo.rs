//! Shot-level sampling: Born-rule detection counts and a Gaussian-pointer
//! weak measurement followed by post-selection.
//!
//! Shots are cut into fixed-size blocks and block `k` draws from its own
//! ChaCha stream `(seed, k)`. Blocks are merged in index order, so results are
//! bit-identical for any worker count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{weak_value, PpsEnsemble};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::qcore::{apply, inner, Operator, StateVector, TOL};

/// Shots per RNG stream.
pub const BLOCK_SHOTS: u64 = 1 << 14;

pub const DEFAULT_SHOTS: u64 = 1_000_000;
pub const DEFAULT_COUPLING: f64 = 0.01;
pub const DEFAULT_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotConfig {
    pub shots: u64,
    pub seed: u64,
    pub workers: usize,
}

impl ShotConfig {
    pub fn new(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        Ok(())
    }

    fn blocks(&self) -> Vec<(u64, u64)> {
        let n = self.shots.div_ceil(BLOCK_SHOTS);
        (0..n)
            .map(|k| (k, BLOCK_SHOTS.min(self.shots - k * BLOCK_SHOTS)))
            .collect()
    }

    fn rng(&self, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block);
        rng
    }

    /// Run `f` over every block on `workers` threads, results in block order.
    fn map_blocks<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
    {
        let blocks = self.blocks();
        let run = |&(k, n): &(u64, u64)| f(&mut self.rng(k), n);
        if self.workers == 1 {
            return Ok(blocks.iter().map(run).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(pool.install(|| blocks.par_iter().map(run).collect()))
    }
}

/// Detection counts on the output rails of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionCounts {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub probabilities: Vec<f64>,
    pub shots: u64,
}

impl DetectionCounts {
    pub fn fraction(&self, label: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.counts[i] as f64 / self.shots as f64)
    }

    /// Pearson statistic over rails with nonzero probability, and its degrees
    /// of freedom.
    pub fn chi_squared(&self) -> (f64, usize) {
        let n = self.shots as f64;
        let mut stat = 0.0;
        let mut cells = 0usize;
        for (&c, &p) in self.counts.iter().zip(&self.probabilities) {
            if p > TOL {
                let expected = n * p;
                stat += (c as f64 - expected).powi(2) / expected;
                cells += 1;
            }
        }
        (stat, cells.saturating_sub(1))
    }
}

/// Draw `cfg.shots` detections of `psi` at the output rails of `c`.
pub fn sample_detections(c: &Circuit, psi: &StateVector, cfg: &ShotConfig) -> Result<DetectionCounts> {
    cfg.validate()?;
    if !psi.is_normalized() {
        return Err(Error::NotNormalized(psi.norm_sqr()));
    }
    let out = c.propagate(psi, c.last_stage())?;
    let probabilities: Vec<f64> = out.amps().iter().map(|a| a.norm_sqr()).collect();
    let mut cumulative = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in &probabilities {
        acc += p;
        cumulative.push(acc);
    }
    let fallback = probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("normalized state has support");
    let rails = probabilities.len();

    let per_block = cfg.map_blocks(|rng, n| {
        let mut counts = vec![0u64; rails];
        for _ in 0..n {
            let u: f64 = rng.random();
            let i = cumulative.iter().position(|&c| u < c).unwrap_or(fallback);
            counts[i] += 1;
        }
        counts
    })?;
    let counts = per_block.into_iter().fold(vec![0u64; rails], |mut total, block| {
        for (t, b) in total.iter_mut().zip(block) {
            *t += b;
        }
        total
    });
    Ok(DetectionCounts {
        labels: c.labels(c.last_stage())?.to_vec(),
        counts,
        probabilities,
        shots: cfg.shots,
    })
}

/// A Gaussian pointer of width `width` shifted by `coupling` whenever the
/// system is found in the range of `projector` (given at `stage`).
#[derive(Debug, Clone, PartialEq)]
pub struct PointerConfig {
    pub coupling: f64,
    pub width: f64,
    pub projector: Operator,
    pub stage: String,
    pub observable: String,
}

impl PointerConfig {
    pub fn new(coupling: f64, width: f64, projector: Operator, stage: impl Into<String>) -> Self {
        let stage = stage.into();
        Self {
            coupling,
            width,
            projector,
            observable: format!("projector@{stage}"),
            stage,
        }
    }

    /// Probe the projector onto rail `rail` of `stage`.
    pub fn path(c: &Circuit, stage: &str, rail: &str, coupling: f64, width: f64) -> Result<Self> {
        Ok(Self {
            coupling,
            width,
            projector: c.projector(stage, rail)?,
            stage: stage.to_string(),
            observable: format!("|{rail}><{rail}|@{stage}"),
        })
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self {
            coupling,
            ..self.clone()
        }
    }

    /// `g / sigma <= 1`.
    pub fn is_weak(&self) -> bool {
        self.coupling / self.width <= 1.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "coupling must be positive, got {}",
                self.coupling
            )));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pointer width must be positive, got {}",
                self.width
            )));
        }
        let p = &self.projector;
        let idempotent = (p * p).max_abs_diff(p)?;
        let hermitian = crate::qcore::adjoint(p).max_abs_diff(p)?;
        if idempotent > TOL || hermitian > TOL {
            return Err(Error::InvalidConfig(format!(
                "{} is not an orthogonal projector",
                self.observable
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerRunResult {
    pub shots: u64,
    pub accepted_shots: u64,
    /// Mean pointer reading over accepted shots.
    pub mean_shift: f64,
    /// Sample standard deviation of accepted readings over `sqrt(accepted)`,
    /// in pointer units.
    pub stderr: f64,
    /// `mean_shift / g`.
    pub estimate: f64,
    /// `stderr / g`, the standard error of `estimate`.
    pub estimate_stderr: f64,
    pub weak_regime: bool,
    /// Exact `Re` of the weak value of the probed projector.
    pub exact_weak_value: f64,
    /// Exact post-selection probability with the pointer attached.
    pub exact_acceptance: f64,
    /// Exact `E[x | accepted] / g`.
    pub exact_estimate: f64,
    pub config: PointerConfig,
}

impl PointerRunResult {
    pub fn accepted_fraction(&self) -> f64 {
        self.accepted_shots as f64 / self.shots as f64
    }
}

/// Branch data for one probed projector, all at the probe stage.
#[derive(Debug, Clone, Copy)]
struct PointerModel {
    // <f|P|psi> and <f|(1-P)|psi>
    shifted_amp: Complex64,
    unshifted_amp: Complex64,
    // |P psi|^2 and |(1-P) psi|^2
    shifted_weight: f64,
    unshifted_weight: f64,
    g: f64,
    sigma: f64,
}

impl PointerModel {
    fn new(e: &PpsEnsemble, pc: &PointerConfig) -> Result<Self> {
        let psi = e.psi_at(&pc.stage)?;
        let f = e.f_at(&pc.stage)?;
        let shifted = apply(&pc.projector, &psi)?;
        let unshifted = StateVector::new(
            psi.amps()
                .iter()
                .zip(shifted.amps())
                .map(|(a, b)| a - b)
                .collect(),
        )?;
        Ok(Self {
            shifted_amp: inner(&f, &shifted)?,
            unshifted_amp: inner(&f, &unshifted)?,
            shifted_weight: shifted.norm_sqr(),
            unshifted_weight: unshifted.norm_sqr(),
            g: pc.coupling,
            sigma: pc.width,
        })
    }

    /// Pointer-wavefunction overlap factor `exp(-g^2 / 8 sigma^2)`.
    fn overlap(&self) -> f64 {
        (-self.g * self.g / (8.0 * self.sigma * self.sigma)).exp()
    }

    fn cross(&self) -> f64 {
        (self.shifted_amp * self.unshifted_amp.conj()).re
    }

    fn acceptance(&self) -> f64 {
        self.shifted_amp.norm_sqr() + self.unshifted_amp.norm_sqr() + 2.0 * self.cross() * self.overlap()
    }

    fn conditional_mean(&self) -> f64 {
        self.g * (self.shifted_amp.norm_sqr() + self.cross() * self.overlap()) / self.acceptance()
    }

    /// Probability of passing post-selection given pointer reading `x`.
    fn accept_probability(&self, x: f64) -> f64 {
        let (a, b) = (self.shifted_amp, self.unshifted_amp);
        let (wa, wb) = (self.shifted_weight, self.unshifted_weight);
        if wb <= 0.0 {
            return (a.norm_sqr() / wa).min(1.0);
        }
        if wa <= 0.0 {
            return (b.norm_sqr() / wb).min(1.0);
        }
        // ratio of shifted to unshifted pointer amplitudes at x
        let log_r = (2.0 * x * self.g - self.g * self.g) / (4.0 * self.sigma * self.sigma);
        let p = if log_r <= 0.0 {
            let r = log_r.exp();
            (a * r + b).norm_sqr() / (wa * r * r + wb)
        } else {
            let s = (-log_r).exp();
            (a + b * s).norm_sqr() / (wa + wb * s * s)
        };
        p.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        Self {
            count: self.count + other.count,
            mean: self.mean + d * other.count as f64 / n,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / n,
        }
    }
}

/// Simulate a weak pointer coupled to `pc.projector`, followed by
/// post-selection on `e.f()`.
///
/// Each shot draws the pointer branch with the Born weight of the projector,
/// a Gaussian reading around that branch's mean, and then accepts with the
/// exact conditional post-selection probability for that reading.
pub fn weak_pointer_run(e: &PpsEnsemble, pc: &PointerConfig, cfg: &ShotConfig) -> Result<PointerRunResult> {
    cfg.validate()?;
    pc.validate()?;
    let c = e.circuit();
    let probe = c.stage_index(&pc.stage)?;
    let first = c.stage_index(e.psi().stage().ok_or(Error::UntaggedState)?)?;
    let last = c.stage_index(e.f().stage().ok_or(Error::UntaggedState)?)?;
    if !(first < probe && probe < last) {
        return Err(Error::InvalidConfig(format!(
            "probe stage `{}` must lie strictly between pre- and post-selection",
            pc.stage
        )));
    }
    if !pc.is_weak() {
        log::warn!(
            "weak regime left: g/sigma = {} > 1; estimate is not a weak value",
            pc.coupling / pc.width
        );
    }
    let model = PointerModel::new(e, pc)?;
    let exact = weak_value(e, &pc.projector, &pc.stage)?.value.re;

    let blocks = cfg.map_blocks(|rng, n| {
        let mut m = Moments::default();
        for _ in 0..n {
            let branch: f64 = rng.random();
            let z: f64 = rng.sample(StandardNormal);
            let accept: f64 = rng.random();
            let centre = if branch < model.shifted_weight { model.g } else { 0.0 };
            let x = centre + model.sigma * z;
            if accept < model.accept_probability(x) {
                m.push(x);
            }
        }
        m
    })?;
    let m = blocks.into_iter().fold(Moments::default(), Moments::merge);

    let stderr = if m.count > 1 {
        (m.m2 / (m.count - 1) as f64).sqrt() / (m.count as f64).sqrt()
    } else {
        f64::NAN
    };
    let acceptance = model.acceptance();
    Ok(PointerRunResult {
        shots: cfg.shots,
        accepted_shots: m.count,
        mean_shift: if m.count > 0 { m.mean } else { f64::NAN },
        stderr,
        estimate: if m.count > 0 { m.mean / pc.coupling } else { f64::NAN },
        estimate_stderr: stderr / pc.coupling,
        weak_regime: pc.is_weak(),
        exact_weak_value: exact,
        exact_acceptance: acceptance,
        exact_estimate: model.conditional_mean() / pc.coupling,
        config: pc.clone(),
    })
}

/// One [`weak_pointer_run`] per coupling, all on the same seed.
pub fn coupling_sweep(
    e: &PpsEnsemble,
    pc: &PointerConfig,
    couplings: &[f64],
    cfg: &ShotConfig,
) -> Result<Vec<PointerRunResult>> {
    if couplings.is_empty() {
        return Err(Error::InvalidConfig("empty coupling sweep".into()));
    }
    if couplings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("couplings must be strictly ascending".into()));
    }
    couplings
        .iter()
        .map(|&g| weak_pointer_run(e, &pc.with_coupling(g), cfg))
        .collect()
}
