//! Acceptance suite. Runs each criterion in sequence and prints one
//! PASS/FAIL line per criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qp1qc::oracle::{cross_check, gen_instance, TargetClass};
use qp1qc::pencil::{pencil_interval, sdc_certificate, sdc_residuals, SDC_RESIDUAL_REL};
use qp1qc::slater::slater_holds;
use qp1qc::solver::dual_value;
use qp1qc::{
    classify_and_solve, PencilInterval, Qp1qcInstance, SdcResult, Solution, Status, SymMatrix,
    Tolerance,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn inst(a: &[&[f64]], b: &[&[f64]], mu: f64) -> Qp1qcInstance {
    Qp1qcInstance::from_slices(a, b, &[0.0, 0.0], &[0.0, 0.0], mu).unwrap()
}

fn saddle() -> Qp1qcInstance {
    inst(
        &[&[1.0, 0.0], &[0.0, -1.0]],
        &[&[0.0, 1.0], &[1.0, 0.0]],
        0.0,
    )
}

fn reciprocal_branch() -> Qp1qcInstance {
    inst(
        &[&[0.0, 0.0], &[0.0, 1.0]],
        &[&[0.0, -1.0], &[-1.0, 0.0]],
        -2.0,
    )
}

fn axis_line() -> Qp1qcInstance {
    inst(
        &[&[0.0, 0.0], &[0.0, 1.0]],
        &[&[0.0, 1.0], &[1.0, 0.0]],
        0.0,
    )
}

/// Results from criteria 1 and 4, reused by criteria 5 and 6.
#[derive(Default)]
struct Ledger {
    attained: Vec<(String, Solution)>,
    bounded: Vec<(Qp1qcInstance, Solution)>,
}

fn criterion_1(ledger: &mut Ledger) -> Outcome {
    let mut fails = Vec::new();

    let saddle_inst = saddle();
    let mut best = Duration::MAX;
    let mut s_saddle = None;
    for _ in 0..5 {
        let t = Instant::now();
        let s = classify_and_solve(&saddle_inst, tol()).unwrap();
        best = best.min(t.elapsed());
        s_saddle = Some(s);
    }
    let s_saddle = s_saddle.unwrap();
    if !matches!(s_saddle.status, Status::UnboundedBelow { .. }) {
        fails.push(format!("saddle gave {}", s_saddle.status.kind()));
    }
    if best >= Duration::from_millis(10) {
        fails.push(format!("saddle took {best:?}"));
    }

    let s_branch = classify_and_solve(&reciprocal_branch(), tol()).unwrap();
    match s_branch.status {
        Status::Unattained {
            infimum,
            sigma_star,
        } if infimum.abs() <= 1e-9 && sigma_star.abs() <= 1e-9 => {}
        ref other => fails.push(format!("reciprocal branch gave {other:?}")),
    }

    let s_axis = classify_and_solve(&axis_line(), tol()).unwrap();
    match &s_axis.status {
        Status::Attained { x_star, value, .. }
            if value.abs() <= 1e-9 && x_star[1].abs() <= 1e-8 => {}
        other => fails.push(format!("axis line gave {other:?}")),
    }
    ledger.attained.push(("axis line".into(), s_axis));

    let a = SymMatrix::from_diagonal(&[1.0, 0.0]);
    let b = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    match pencil_interval(&a, &b, tol()).unwrap() {
        PencilInterval::Singleton(s) if s.abs() <= 1e-9 => {}
        other => fails.push(format!("non-SDC pair pencil {other:?}")),
    }
    if !matches!(sdc_certificate(&a, &b, tol()).unwrap(), SdcResult::NotSdc) {
        fails.push("non-SDC pair not refuted as SDC".into());
    }
    outcome(
        fails.is_empty(),
        if fails.is_empty() {
            format!("4 fixtures classified; saddle in {best:?}")
        } else {
            fails.join("; ")
        },
    )
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    normal_matrix(rng, n, n).qr().q()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut ok = 0;
    let mut misses = Vec::new();
    for k in 0..100 {
        let n = 4;
        // C = Q₁·diag(s)·Q₂ with singular values in [1, 10³].
        let s = DVector::from_fn(n, |_, _| 10f64.powf(rng.random_range(0.0..3.0)));
        let c = orthogonal(&mut rng, n) * DMatrix::from_diagonal(&s) * orthogonal(&mut rng, n);
        let da: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let db: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let a = SymMatrix::from_diagonal(&da).congruence(&c);
        let b = SymMatrix::from_diagonal(&db).congruence(&c);
        match sdc_certificate(&a, &b, tol()).unwrap() {
            SdcResult::Sdc(cert) => {
                let (ra, rb) = sdc_residuals(&a, &b, &cert);
                let scale = 1f64.max(a.norm_fro()).max(b.norm_fro());
                if ra.max(rb) <= SDC_RESIDUAL_REL * scale {
                    ok += 1;
                } else {
                    misses.push(format!("#{k} residual {:.1e}", ra.max(rb) / scale));
                }
            }
            other => misses.push(format!("#{k} {}", other.kind())),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok >= 99 && elapsed < Duration::from_secs(5),
        format!("{ok}/100 certified in {elapsed:?} {misses:?}"),
    )
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (SymMatrix, SymMatrix) {
    let sym = |rng: &mut ChaCha8Rng| {
        let m = normal_matrix(rng, n, n);
        SymMatrix::new((&m + m.transpose()) * 0.5).unwrap()
    };
    match rng.random_range(0..5u32) {
        0 => (sym(rng), sym(rng)),
        4 if n >= 2 => {
            // diag(0, a) + (σ − s)·[[0, b], [b, 0]] ⊕ definite block: PSD only at σ = s.
            let s: f64 = rng.random_range(-3.0..3.0);
            let mut b = DMatrix::zeros(n, n);
            let bb: f64 = rng.random_range(0.5..2.0);
            b[(0, 1)] = bb;
            b[(1, 0)] = bb;
            let mut w = DMatrix::zeros(n, n);
            w[(1, 1)] = rng.random_range(0.5..2.0);
            if n > 2 {
                let l = normal_matrix(rng, n - 2, n - 2);
                let blk = &l * l.transpose() + DMatrix::identity(n - 2, n - 2);
                let m = normal_matrix(rng, n - 2, n - 2);
                let bblk = (&m + m.transpose()) * 0.1;
                w.view_mut((2, 2), (n - 2, n - 2)).copy_from(&blk);
                b.view_mut((2, 2), (n - 2, n - 2)).copy_from(&bblk);
            }
            let q = orthogonal(rng, n);
            let a = &q * (w - &b * s) * q.transpose();
            let b = &q * b * q.transpose();
            let sym = |m: DMatrix<f64>| SymMatrix::new((&m + m.transpose()) * 0.5).unwrap();
            (sym(a), sym(b))
        }
        1 => {
            // Definite member at a random σ₀.
            let l = normal_matrix(rng, n, n);
            let p = SymMatrix::new(&l * l.transpose() + DMatrix::identity(n, n) * 0.1).unwrap();
            let b = sym(rng);
            let s0: f64 = rng.random_range(-3.0..3.0);
            (p.combine(1.0, &b, -s0), b)
        }
        2 => {
            let l = normal_matrix(rng, n, n);
            let p = SymMatrix::new(&l * l.transpose()).unwrap();
            (p, sym(rng))
        }
        3 => {
            let l = normal_matrix(rng, n, (n / 2).max(1));
            let b = SymMatrix::new(&l * l.transpose()).unwrap();
            (sym(rng), b)
        }
        _ => (sym(rng), sym(rng)),
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let margin = 1e-6;
    let mut violations = Vec::new();
    let mut kinds = [0usize; 3];
    for k in 0..100 {
        let n = rng.random_range(1..=6);
        let (a, b) = random_pair(&mut rng, n);
        let iv = pencil_interval(&a, &b, tol()).unwrap();
        let (lo, hi) = match iv {
            PencilInterval::Empty => {
                kinds[0] += 1;
                (f64::NAN, f64::NAN)
            }
            PencilInterval::Singleton(s) => {
                kinds[1] += 1;
                (s, s)
            }
            PencilInterval::Interval { lo, hi } => {
                kinds[2] += 1;
                (lo, hi)
            }
        };
        for j in 0..50 {
            let sigma = match j % 3 {
                0 if lo.is_finite() => {
                    lo + rng.random_range(-1.0..1.0) * 10f64.powi(-rng.random_range(0..7))
                }
                1 if hi.is_finite() => {
                    hi + rng.random_range(-1.0..1.0) * 10f64.powi(-rng.random_range(0..7))
                }
                _ => rng.random_range(-10.0..10.0),
            };
            let w = a.pencil(&b, sigma);
            let lam = w.as_matrix().clone().symmetric_eigen().eigenvalues.min();
            let m = margin * (1.0 + sigma.abs());
            let inside = !lo.is_nan() && sigma >= lo + m && sigma <= hi - m;
            let outside = lo.is_nan() || sigma < lo - m || sigma > hi + m;
            // Backward error bound of the symmetric eigensolver.
            let psd = lam >= -10.0 * n as f64 * f64::EPSILON * w.norm_fro().max(1.0);
            if inside && !psd {
                violations.push(format!(
                    "pair {k}: σ={sigma} inside {iv:?} but λmin={lam:.2e}"
                ));
            }
            if outside && psd {
                violations.push(format!(
                    "pair {k}: σ={sigma} outside {iv:?} but λmin={lam:.2e}"
                ));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "empty/singleton/interval = {}/{}/{}; {} violations {:?}",
            kinds[0],
            kinds[1],
            kinds[2],
            violations.len(),
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

const MIXED: [TargetClass; 4] = [
    TargetClass::Unbounded,
    TargetClass::Unattained,
    TargetClass::AttainedInterval,
    TargetClass::AttainedSingleton,
];

fn criterion_4(ledger: &mut Ledger) -> Outcome {
    let start = Instant::now();
    let mut disagreements = Vec::new();
    let mut counts = std::collections::BTreeMap::new();
    for k in 0..300u64 {
        let n = 2 + (k % 2) as usize;
        let class = MIXED[(k / 2 % 4) as usize];
        let gi = gen_instance(1000 + k, n, class);
        let i = &gi.instance;
        let sol = match classify_and_solve(i, tol()) {
            Ok(s) => s,
            Err(e) => {
                disagreements.push(format!("#{k} ({class}) error {e}"));
                continue;
            }
        };
        *counts.entry(sol.status.kind()).or_insert(0) += 1;
        let slater = slater_holds(i, tol()).unwrap();
        match cross_check(i, &sol, slater, 6) {
            Ok(c) if c.passed => {}
            Ok(c) => disagreements.push(format!(
                "#{k} ({class}, {}, {}) {}",
                sol.status.kind(),
                sol.case,
                c.detail
            )),
            Err(e) => disagreements.push(format!("#{k} ({class}) oracle error {e}")),
        }
        if sol.is_attained() {
            ledger
                .attained
                .push((format!("instance #{k} ({class})"), sol.clone()));
        }
        if matches!(
            sol.status,
            Status::Attained { .. } | Status::Unattained { .. }
        ) {
            ledger.bounded.push((i.clone(), sol));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        disagreements.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{:?} in {elapsed:?}; {} disagreements {:?}",
            counts,
            disagreements.len(),
            disagreements
        ),
    )
}

fn criterion_5(ledger: &Ledger) -> Outcome {
    let mut bad = Vec::new();
    for (name, sol) in &ledger.attained {
        match &sol.status {
            Status::Attained {
                certificate: Some(c),
                ..
            } if c.passes() => {}
            Status::Attained { certificate, .. } => bad.push(format!("{name}: {certificate:?}")),
            _ => {}
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{}/{} certificates pass {:?}",
            ledger.attained.len() - bad.len(),
            ledger.attained.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_6(ledger: &Ledger) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (i, sol) in &ledger.bounded {
        let (Some(v), Some(s)) = (sol.status.value(), sol.status.sigma_star()) else {
            bad.push("missing value or σ*".to_string());
            continue;
        };
        match dual_value(i, s, tol()) {
            Ok(d) => {
                let gap = (v - d).abs() / v.abs().max(1.0);
                worst = worst.max(gap);
                if gap > 1e-6 {
                    bad.push(format!("value {v} dual {d} at σ={s}"));
                }
            }
            Err(e) => bad.push(format!("dual undefined at σ={s}: {e}")),
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} bounded instances, worst relative gap {worst:.1e} {:?}",
            ledger.bounded.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut counts = std::collections::BTreeMap::new();
    let mut disagreements = Vec::new();
    for k in 0..100u64 {
        let n = 2 + (k % 2) as usize;
        let class = if k % 4 == 0 {
            TargetClass::Infeasible
        } else {
            TargetClass::NoSlater
        };
        let gi = gen_instance(5000 + k, n, class);
        let i = &gi.instance;
        if slater_holds(i, tol()).unwrap() {
            disagreements.push(format!("#{k}: constructed instance has a Slater point"));
            continue;
        }
        let sol = classify_and_solve(i, tol()).unwrap();
        *counts.entry(sol.status.kind()).or_insert(0) += 1;
        match cross_check(i, &sol, false, 6) {
            Ok(c) if c.passed => {}
            Ok(c) => disagreements.push(format!("#{k}: {}", c.detail)),
            Err(e) => disagreements.push(format!("#{k}: oracle error {e}")),
        }
    }
    outcome(
        disagreements.is_empty(),
        format!(
            "{counts:?}; {} disagreements {:?}",
            disagreements.len(),
            disagreements.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut slowest = Duration::ZERO;
    let mut bad = Vec::new();
    for k in 0..6u64 {
        let class = if k % 2 == 0 {
            TargetClass::AttainedInterval
        } else {
            TargetClass::AttainedSingleton
        };
        let gi = gen_instance(9000 + k, 50, class);
        let t = Instant::now();
        let sol = classify_and_solve(&gi.instance, tol());
        let dt = t.elapsed();
        slowest = slowest.max(dt);
        match sol {
            Ok(s) => {
                if dt >= Duration::from_secs(1) {
                    bad.push(format!("#{k} took {dt:?}"));
                }
                match &s.status {
                    Status::Attained {
                        certificate: Some(c),
                        ..
                    } if !c.passes() => bad.push(format!("#{k} certificate fails")),
                    Status::Attained { .. } => {}
                    other => bad.push(format!("#{k} ({class}) gave {}", other.kind())),
                }
            }
            Err(e) => bad.push(format!("#{k} error {e}")),
        }
    }
    outcome(bad.is_empty(), format!("slowest {slowest:?} {bad:?}"))
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    let results = vec![
        ("1 reference fixtures", criterion_1(&mut ledger)),
        ("2 SDC round trip", criterion_2()),
        ("3 pencil membership", criterion_3()),
        ("4 oracle equivalence", criterion_4(&mut ledger)),
    ];
    let mut results = results;
    results.push(("5 certificate soundness", criterion_5(&ledger)));
    results.push(("6 strong duality", criterion_6(&ledger)));
    results.push(("7 no-Slater branch", criterion_7()));
    results.push(("8 scale smoke test", criterion_8()));
    let mut all = true;
    for (name, o) in &results {
        all &= o.passed;
        println!(
            "criterion {name}: {} ({})",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
