//! Independent reference computations shared by the integration tests.
//!
//! Nothing here goes through the crate's operator or circuit types: the
//! three-box network is rebuilt from plain `[[f64; 3]; 3]` arrays and the
//! pointer statistics are integrated numerically.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use tribox::circuit::{BeamSplitterSpec, Circuit, SignRail, StageSpec};
use tribox::qcore::{Basis, StateVector};

pub type M3 = [[f64; 3]; 3];
pub type V3 = [f64; 3];

/// Splitter on rails `(a, b)` with the minus sign on the `b` row.
pub fn splitter(a: usize, b: usize, r: f64) -> M3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let (sr, st) = (r.sqrt(), (1.0 - r).sqrt());
    m[a][a] = sr;
    m[a][b] = st;
    m[b][a] = st;
    m[b][b] = -sr;
    m
}

pub fn mat_vec(m: &M3, v: &V3) -> V3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

pub fn transpose(m: &M3) -> M3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[j][i] = m[i][j];
        }
    }
    t
}

pub fn dot(a: &V3, b: &V3) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The four splitters, in order.
pub fn three_box_splitters() -> [M3; 4] {
    [
        splitter(0, 1, 1.0 / 3.0),
        splitter(1, 2, 0.5),
        splitter(0, 2, 0.5),
        splitter(1, 2, 1.0 / 3.0),
    ]
}

/// `psi` carried forward to the path stage (after the second splitter).
pub fn psi_at_paths() -> V3 {
    let [m1, m2, _, _] = three_box_splitters();
    mat_vec(&m2, &mat_vec(&m1, &[1.0, 0.0, 0.0]))
}

/// Output-port kets `S2, f, f_perp` carried back to the path stage.
pub fn outputs_at_paths() -> [V3; 3] {
    let [_, _, m3, m4] = three_box_splitters();
    let back = |v: V3| mat_vec(&transpose(&m3), &mat_vec(&transpose(&m4), &v));
    [
        back([1.0, 0.0, 0.0]),
        back([0.0, 1.0, 0.0]),
        back([0.0, 0.0, 1.0]),
    ]
}

pub fn f_at_paths() -> V3 {
    outputs_at_paths()[1]
}

/// `q(a, b) = <b|a><a|psi><psi|b>` for real vectors and the path basis `a`.
pub fn kd_path_cell(a: usize, b: &V3, psi: &V3) -> f64 {
    b[a] * psi[a] * dot(psi, b)
}

/// `E[x | accepted]` and the acceptance probability for a Gaussian pointer
/// by Simpson integration of `|a phi(x - g) + b phi(x)|^2`.
pub fn pointer_quadrature(a: f64, b: f64, g: f64, sigma: f64) -> (f64, f64) {
    let phi = |x: f64| {
        (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) * (-x * x / (4.0 * sigma * sigma)).exp()
    };
    let density = |x: f64| (a * phi(x - g) + b * phi(x)).powi(2);
    let (lo, hi) = (-14.0 * sigma, g + 14.0 * sigma);
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let (mut mass, mut first) = (0.0, 0.0);
    for i in 0..=n {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let d = density(x);
        mass += w * d;
        first += w * d * x;
    }
    (first / mass, mass * h / 3.0)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random normalized complex state.
pub fn random_state(rng: &mut impl Rng, dim: usize) -> StateVector {
    loop {
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.1 {
            return StateVector::new(amps.into_iter().map(|a| a / n).collect()).unwrap();
        }
    }
}

/// Random orthonormal basis by modified Gram-Schmidt on random vectors.
pub fn random_basis(rng: &mut impl Rng, dim: usize, stage: &str) -> Basis {
    let mut vecs: Vec<Vec<Complex64>> = Vec::new();
    while vecs.len() < dim {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        for _ in 0..2 {
            for u in &vecs {
                let proj: Complex64 = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            vecs.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    let elements = vecs
        .into_iter()
        .enumerate()
        .map(|(i, v)| (format!("b{i}"), StateVector::new(v).unwrap().with_stage(stage)))
        .collect();
    Basis::new("random", elements).unwrap()
}

/// Random network: 2..=6 rails, 2..=5 splitter stages of 1..=3 splitters.
pub fn random_circuit(rng: &mut impl Rng) -> Circuit {
    let rails = rng.random_range(2..=6usize);
    let n_stages = rng.random_range(2..=5usize);
    let labels = |k: usize| (0..rails).map(|r| format!("s{k}r{r}")).collect::<Vec<_>>();
    let mut specs = vec![StageSpec {
        name: "s0".into(),
        labels: labels(0),
        splitters: vec![],
    }];
    for k in 1..=n_stages {
        let count = rng.random_range(1..=3usize);
        let splitters = (0..count)
            .map(|_| {
                let a = rng.random_range(0..rails);
                let mut b = rng.random_range(0..rails - 1);
                if b >= a {
                    b += 1;
                }
                let sign = if rng.random_bool(0.5) { SignRail::A } else { SignRail::B };
                BeamSplitterSpec::new(a, b, rng.random_range(0.0..=1.0), sign).unwrap()
            })
            .collect();
        specs.push(StageSpec {
            name: format!("s{k}"),
            labels: labels(k),
            splitters,
        });
    }
    Circuit::new(rails, specs).unwrap()
}
