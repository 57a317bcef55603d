//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p tribox --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use tribox::analysis::{
    coherence, decompose, kd_distribution, negativity, path_weak_value, population_difference,
    pps_operator, postselection_basis, weak_value_sum_check, PpsEnsemble,
};
use tribox::circuit::three_box::{self, BS1, BS2, BS3};
use tribox::montecarlo::{sample_detections, weak_pointer_run, PointerConfig, ShotConfig};
use tribox::qcore::{inner, Basis, TOL};

use common::*;

const SEED: u64 = 42;
const SHOTS: u64 = 1_000_000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensemble() -> PpsEnsemble {
    let c = three_box::circuit();
    let psi = three_box::psi(&c);
    let f = three_box::f(&c);
    PpsEnsemble::new(c, psi, f).unwrap()
}

fn within(label: &str, actual: Complex64, expected: f64, tol: f64) -> Result<(), String> {
    let d = (actual - Complex64::new(expected, 0.0)).norm();
    if d <= tol {
        Ok(())
    } else {
        Err(format!("{label}: got {actual}, expected {expected} (|diff| {d:.3e} > {tol:.1e})"))
    }
}

fn real_within(label: &str, actual: f64, expected: f64, tol: f64) -> Result<(), String> {
    within(label, Complex64::new(actual, 0.0), expected, tol)
}

fn c1_input_splitting() -> Outcome {
    let c = three_box::circuit();
    let v = c.propagate(&three_box::psi(&c), BS1).map_err(|e| e.to_string())?;
    let oracle = mat_vec(&three_box_splitters()[0], &[1.0, 0.0, 0.0]);
    let one = v.amp(c.rail(BS1, "1").unwrap().index);
    let s1 = v.amp(c.rail(BS1, "S1").unwrap().index);
    within("amp(1)", one, (1.0f64 / 3.0).sqrt(), TOL)?;
    within("amp(S1)", s1, (2.0f64 / 3.0).sqrt(), TOL)?;
    within("oracle amp(1)", one, oracle[0], TOL)?;
    within("oracle amp(S1)", s1, oracle[1], TOL)?;
    Ok(format!("(|1>, |S1>) = ({:.15}, {:.15})", one.re, s1.re))
}

fn c2_d2_dark() -> Outcome {
    let c = three_box::circuit();
    let psi3 = c.propagate(&three_box::psi(&c), BS3).map_err(|e| e.to_string())?;
    let d2 = c.rail_state(BS3, "D2").unwrap();
    let amp = inner(&d2, &psi3).unwrap();
    let oracle = mat_vec(&three_box_splitters()[2], &psi_at_paths())[2];
    real_within("|<D2|psi>|", amp.norm(), 0.0, TOL)?;
    real_within("oracle <D2|psi>", oracle, 0.0, TOL)?;
    Ok(format!("|<D2|psi>| = {:.3e}", amp.norm()))
}

fn c3_f_s1_blocked() -> Outcome {
    let c = three_box::circuit();
    let f1 = c.back_propagate(&three_box::f(&c), BS1).map_err(|e| e.to_string())?;
    let s1 = c.rail_state(BS1, "S1").unwrap();
    let amp = inner(&f1, &s1).unwrap();
    real_within("|<f|S1>|", amp.norm(), 0.0, TOL)?;
    Ok(format!("|<f|S1>| = {:.3e}", amp.norm()))
}

fn c4_weak_values() -> Outcome {
    let e = ensemble();
    let psi = psi_at_paths();
    let f = f_at_paths();
    let norm = dot(&f, &psi);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut shown = Vec::new();
    for (i, rail, target) in [(0, "1", 1.0), (1, "2", 1.0), (2, "3", -1.0)] {
        let w = path_weak_value(&e, BS2, rail).map_err(|x| x.to_string())?.value;
        within(&format!("A_w(|{rail}><{rail}|)"), w, target, TOL)?;
        real_within(&format!("oracle A_w({rail})"), f[i] * psi[i] / norm, target, TOL)?;
        sum += w;
        shown.push(format!("{:+.12}", w.re));
    }
    within("sum", sum, 1.0, TOL)?;
    let basis = e.circuit().rail_basis(BS2, BS2).unwrap();
    within("sum check", weak_value_sum_check(&e, &basis, BS2).unwrap(), 1.0, TOL)?;
    Ok(format!("(1, 2, 3) = ({}), sum = {:+.12}", shown.join(", "), sum.re))
}

fn c5_coherence_identities() -> Outcome {
    let c = three_box::circuit();
    let lhs7 = c
        .transport_operator(&population_difference(&c, BS2, "2", "3").unwrap(), BS2, BS1)
        .unwrap();
    let r7 = lhs7.max_abs_diff(&coherence(&c, BS1, "D1", "S1").unwrap()).unwrap();
    let lhs8 = c
        .transport_operator(&population_difference(&c, BS2, "1", "3").unwrap(), BS2, BS3)
        .unwrap();
    let r8 = lhs8.max_abs_diff(&coherence(&c, BS3, "D2", "S2").unwrap()).unwrap();
    real_within("path-difference/coherence residual (BS2)", r7, 0.0, TOL)?;
    real_within("path-difference/coherence residual (BS3)", r8, 0.0, TOL)?;
    Ok(format!("residuals {r7:.3e}, {r8:.3e}"))
}

fn named_basis(c: &tribox::circuit::Circuit, stage: &str, order: [&str; 3]) -> Basis {
    Basis::new(
        stage,
        order
            .iter()
            .map(|n| (n.to_string(), c.rail_state(stage, n).unwrap()))
            .collect(),
    )
    .unwrap()
}

fn c6_pps_decompositions() -> Outcome {
    let e = ensemble();
    let c = e.circuit();
    let s2 = 2f64.sqrt();
    let check_table = |stage: &str, op: &tribox::qcore::Operator, names: [&str; 3]| -> Result<(), String> {
        let [path, ghost_out, ghost_in] = names;
        let left = named_basis(c, stage, [path, ghost_out, ghost_in]);
        let right = named_basis(c, stage, [path, ghost_in, ghost_out]);
        let d = decompose(op, &left, &right).map_err(|x| x.to_string())?;
        for (l, r, coeff) in d.cells() {
            let expected = if l == path && r == path {
                1.0
            } else if l == ghost_out && r == path || l == path && r == ghost_in {
                s2
            } else if l == ghost_out && r == ghost_in {
                2.0
            } else {
                0.0
            };
            within(&format!("{stage} c({l},{r})"), coeff, expected, TOL)?;
        }
        Ok(())
    };
    let at_bs1 = pps_operator(&e, BS1).unwrap();
    let at_bs3 = pps_operator(&e, BS3).unwrap();
    check_table(BS1, &at_bs1, ["1", "S1", "D1"])?;
    check_table(BS3, &at_bs3, ["2", "S2", "D2"])?;
    let [m1, m2, _, _] = three_box_splitters();
    let psi1 = mat_vec(&m1, &[1.0, 0.0, 0.0]);
    let f1 = mat_vec(&transpose(&m2), &f_at_paths());
    let overlap = dot(&f1, &psi1);
    for (i, p) in psi1.iter().enumerate() {
        for (j, q) in f1.iter().enumerate() {
            let label = format!("oracle entry ({i},{j}) at the first splitter");
            within(&label, at_bs1.get(i, j), p * q / overlap, TOL)?;
        }
    }
    let carried = c.transport_operator(&at_bs1, BS1, BS3).unwrap();
    check_table(BS3, &carried, ["2", "S2", "D2"])?;
    let res = carried.max_abs_diff(&at_bs3).unwrap();
    real_within("transport residual", res, 0.0, TOL)?;
    Ok(format!("both tables {{1, sqrt2, sqrt2, 2}}; transport residual {res:.3e}"))
}

fn c7_kd_negativity() -> Outcome {
    // oracle: real amplitude products at the path stage
    let psi = psi_at_paths();
    let f = f_at_paths();
    let q3f = kd_path_cell(2, &f, &psi);
    real_within("oracle q(3,f)", q3f, -1.0 / 9.0, TOL)?;
    // refine {f, not f}: the part of psi orthogonal to f, then their cross product
    let fp = dot(&f, &psi);
    let mut rest = [psi[0] - fp * f[0], psi[1] - fp * f[1], psi[2] - fp * f[2]];
    let n = dot(&rest, &rest).sqrt();
    rest.iter_mut().for_each(|x| *x /= n);
    let third = [
        f[1] * rest[2] - f[2] * rest[1],
        f[2] * rest[0] - f[0] * rest[2],
        f[0] * rest[1] - f[1] * rest[0],
    ];
    let oracle_neg: f64 = [f, rest, third]
        .iter()
        .flat_map(|b| (0..3).map(move |a| (a, *b)))
        .map(|(a, b)| (-kd_path_cell(a, &b, &psi)).max(0.0))
        .sum();
    real_within("oracle negativity", oracle_neg, 1.0 / 9.0, TOL)?;

    let e = ensemble();
    let paths = e.circuit().rail_basis(BS2, BS2).unwrap();
    let post = postselection_basis(&e, BS2).unwrap();
    let kd = kd_distribution(&e, &paths, &post, BS2).map_err(|x| x.to_string())?;
    let q = kd.q("3", "f").unwrap();
    within("q(3,f)", q, q3f, TOL)?;
    let neg = negativity(&kd);
    real_within("negativity", neg, oracle_neg, TOL)?;
    Ok(format!("q(3,f) = {:+.12}, negativity = {neg:.12}", q.re))
}

fn c8_weak_recovery() -> Outcome {
    let e = ensemble();
    let cfg = ShotConfig::new(SHOTS, SEED);
    let start = Instant::now();
    let mut shown = Vec::new();
    for (rail, target) in [("1", 1.0), ("2", 1.0), ("3", -1.0)] {
        let pc = PointerConfig::path(e.circuit(), BS2, rail, 0.01, 1.0).unwrap();
        let run = weak_pointer_run(&e, &pc, &cfg).map_err(|x| x.to_string())?;
        let tol = (3.0 * run.estimate_stderr).max(1e-3);
        real_within(&format!("path {rail} estimate"), run.estimate, target, tol)?;
        shown.push(format!("{rail}: {:+.3} +/- {:.3}", run.estimate, run.estimate_stderr));
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} in {:.1?}", shown.join(", "), elapsed))
}

fn c9_born_sampling() -> Outcome {
    let c = three_box::circuit();
    let counts = sample_detections(&c, &three_box::psi(&c), &ShotConfig::new(SHOTS, SEED))
        .map_err(|x| x.to_string())?;
    let p = 1.0 / 9.0;
    let tol = 3.0 * (p * (1.0 - p) / SHOTS as f64).sqrt();
    let frac = counts.fraction("f").unwrap();
    real_within("fraction at f", frac, p, tol)?;
    let (chi2, dof) = counts.chi_squared();
    let limit = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.999);
    if chi2 >= limit {
        return Err(format!("chi2 {chi2:.3} >= {limit:.3} (dof {dof})"));
    }
    Ok(format!("f fraction {frac:.6} (tol {tol:.2e}); chi2 {chi2:.3} < {limit:.3}"))
}

fn c10_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut instances = 0;
    while instances < 100 {
        let c = random_circuit(&mut rng);
        let stages: Vec<String> = c.stage_names().map(String::from).collect();
        let first = stages[0].clone();
        let last = stages[stages.len() - 1].clone();
        let psi = random_state(&mut rng, c.rails()).with_stage(first.clone());
        let f = random_state(&mut rng, c.rails()).with_stage(last.clone());
        for (name, defect) in c.unitarity_defects() {
            if defect > TOL {
                return Err(format!("stage {name} unitarity defect {defect:.3e}"));
            }
        }
        let amp0 = inner(&c.back_propagate(&f, &first).unwrap(), &psi).unwrap();
        for s in &stages {
            let a = inner(&c.back_propagate(&f, s).unwrap(), &c.propagate(&psi, s).unwrap()).unwrap();
            if (a - amp0).norm() > TOL {
                return Err(format!("transition amplitude drifts at {s}: {a} vs {amp0}"));
            }
        }
        // keep weak values O(1) so 1e-12 is a meaningful absolute bound
        if amp0.norm() < 0.1 {
            continue;
        }
        let e = PpsEnsemble::new(c.clone(), psi, f).unwrap();
        let stage = &stages[rng.random_range(0..stages.len())];
        let basis = random_basis(&mut rng, c.rails(), stage);
        let sum = weak_value_sum_check(&e, &basis, stage).map_err(|x| x.to_string())?;
        within("weak value completeness", sum, 1.0, TOL)?;
        instances += 1;
    }

    let e = ensemble();
    let pc = PointerConfig::path(e.circuit(), BS2, "3", 0.05, 1.0).unwrap();
    let base = ShotConfig::new(200_000, SEED);
    let run1 = weak_pointer_run(&e, &pc, &base).unwrap();
    let c = three_box::circuit();
    let det1 = sample_detections(&c, &three_box::psi(&c), &base).unwrap();
    for workers in [2, 3, 8] {
        let cfg = base.with_workers(workers);
        let run = weak_pointer_run(&e, &pc, &cfg).unwrap();
        let bits = |r: &tribox::montecarlo::PointerRunResult| {
            (r.accepted_shots, r.mean_shift.to_bits(), r.stderr.to_bits())
        };
        if bits(&run) != bits(&run1) {
            return Err(format!("pointer run differs with {workers} workers"));
        }
        if sample_detections(&c, &three_box::psi(&c), &cfg).unwrap() != det1 {
            return Err(format!("detections differ with {workers} workers"));
        }
    }
    Ok("100 random instances; determinism across 1/2/3/8 workers".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1  input splitting 1/3 : 2/3", c1_input_splitting),
        ("C2  <D2|psi> = 0", c2_d2_dark),
        ("C3  <f|S1> = 0", c3_f_s1_blocked),
        ("C4  weak values +1, +1, -1; sum 1", c4_weak_values),
        ("C5  population difference = empty-path coherence", c5_coherence_identities),
        ("C6  pps decompositions {1, sqrt2, sqrt2, 2}", c6_pps_decompositions),
        ("C7  KD q(3,f) = -1/9, negativity 1/9", c7_kd_negativity),
        ("C8  Monte Carlo weak-value recovery", c8_weak_recovery),
        ("C9  Born-rule detection sampling", c9_born_sampling),
        ("C10 property suites", c10_properties),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
