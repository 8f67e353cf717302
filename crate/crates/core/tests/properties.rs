use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use qp1qc::oracle::{gen_instance, path_diverges, TargetClass};
use qp1qc::pencil::pencil_interval;
use qp1qc::slater::slater_holds;
use qp1qc::solver::slater_point;
use qp1qc::{
    classify_and_solve, CaseLabel, PencilInterval, Qp1qcInstance, Status, SymMatrix, Tolerance,
};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn sym(n: usize, xs: &[f64]) -> SymMatrix {
    SymMatrix::new(DMatrix::from_fn(n, n, |i, j| xs[i * n + j])).unwrap()
}

fn orthogonal(seed: u64, n: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng))
        .qr()
        .q()
}

fn class() -> impl Strategy<Value = TargetClass> {
    prop::sample::select(TargetClass::ALL.to_vec())
}

fn generated(max_n: usize) -> impl Strategy<Value = Qp1qcInstance> {
    (any::<u64>(), 1..=max_n, class()).prop_map(|(seed, n, c)| gen_instance(seed, n, c).instance)
}

/// Pairs with a definite member at `σ₀`, so the interval has interior.
fn definite_pair() -> impl Strategy<Value = (SymMatrix, SymMatrix, f64)> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(-2.0..2.0f64, n * n),
                prop::collection::vec(-2.0..2.0f64, n * n),
                -3.0..3.0f64,
            )
        })
        .prop_map(|(n, l, b, s0)| {
            let l = DMatrix::from_row_slice(n, n, &l);
            let b = sym(n, &b);
            let p = SymMatrix::new(&l * l.transpose() + DMatrix::identity(n, n) * 0.1).unwrap();
            (p.combine(1.0, &b, -s0), b, s0)
        })
}

fn lambda_min(w: &SymMatrix) -> f64 {
    w.as_matrix().clone().symmetric_eigen().eigenvalues.min()
}

/// Whether `λ_min` is nonnegative up to the eigensolver's backward error.
fn numerically_psd(w: &SymMatrix) -> bool {
    lambda_min(w) >= -10.0 * w.dim() as f64 * f64::EPSILON * w.norm_fro().max(1.0)
}

fn values_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn pencil_interval_is_the_psd_set(
        n in 1usize..=4,
        a in prop::collection::vec(-3.0..3.0f64, 16),
        b in prop::collection::vec(-3.0..3.0f64, 16),
        probes in prop::collection::vec(-10.0..10.0f64, 20),
    ) {
        let (a, b) = (sym(n, &a), sym(n, &b));
        let iv = pencil_interval(&a, &b, tol()).unwrap();
        for s in probes {
            let m = 1e-6 * (1.0 + s.abs());
            let psd = numerically_psd(&a.pencil(&b, s));
            match iv {
                PencilInterval::Empty => prop_assert!(!psd, "σ={} {:?}", s, iv),
                PencilInterval::Singleton(x) => if (s - x).abs() > m { prop_assert!(!psd) },
                PencilInterval::Interval { lo, hi } => {
                    if s > lo + m && s < hi - m { prop_assert!(psd, "σ={} {:?}", s, iv) }
                    if s < lo - m || s > hi + m { prop_assert!(!psd, "σ={} {:?}", s, iv) }
                }
            }
        }
    }

    #[test]
    fn definite_member_lies_inside((a, b, s0) in definite_pair()) {
        let iv = pencil_interval(&a, &b, tol()).unwrap();
        match iv {
            PencilInterval::Interval { lo, hi } => prop_assert!(lo < s0 && s0 < hi, "{:?} σ₀={}", iv, s0),
            other => prop_assert!(false, "{:?}", other),
        }
        for end in [iv.lo().unwrap(), iv.hi().unwrap()] {
            if end.is_finite() {
                let w = a.pencil(&b, end);
                let scale = a.norm_fro() + end.abs() * b.norm_fro();
                prop_assert!(lambda_min(&w).abs() <= 1e-7 * scale.max(1.0), "λmin at {} = {}", end, lambda_min(&w));
            }
        }
    }

    #[test]
    fn classification_is_deterministic(inst in generated(4)) {
        let s1 = classify_and_solve(&inst, tol()).unwrap();
        let s2 = classify_and_solve(&inst, tol()).unwrap();
        prop_assert_eq!(s1, s2);
    }

    #[test]
    fn case_labels_match_status(inst in generated(5)) {
        use CaseLabel::*;
        let s = classify_and_solve(&inst, tol()).unwrap();
        let ok = match s.status {
            Status::Infeasible => matches!(s.case, NoSlater),
            Status::UnboundedBelow { .. } => matches!(s.case, NoSlater | A | B | C1 | C2),
            Status::Unattained { .. } => matches!(s.case, G1 | G2 | H1 | H2 | H3 | H4),
            Status::Attained { .. } => !matches!(s.case, A | B | C1 | C2),
        };
        prop_assert!(ok, "{:?} with case {}", s.status, s.case);
    }

    #[test]
    fn orthogonal_change_of_variables(inst in generated(4), qseed in any::<u64>()) {
        let q = orthogonal(qseed, inst.dim());
        let moved = inst.transformed(&q).unwrap();
        let s1 = classify_and_solve(&inst, tol()).unwrap();
        let s2 = classify_and_solve(&moved, tol()).unwrap();
        prop_assert_eq!(s1.status.kind(), s2.status.kind());
        if let (Some(v1), Some(v2)) = (s1.status.value(), s2.status.value()) {
            prop_assert!(values_close(v1, v2, 1e-6), "{} vs {}", v1, v2);
        }
        if let (Some(a), Some(b)) = (s1.status.sigma_star(), s2.status.sigma_star()) {
            prop_assert!(values_close(a, b, 1e-5), "σ* {} vs {}", a, b);
        }
    }

    #[test]
    fn slater_test_matches_constraint_minimum(inst in generated(4)) {
        let holds = slater_holds(&inst, tol()).unwrap();
        if holds {
            let x = slater_point(&inst, tol()).unwrap();
            prop_assert!(inst.constraint(&x) < inst.mu, "G = {} vs μ = {}", inst.constraint(&x), inst.mu);
        } else {
            // Without a strictly feasible point, B ⪰ 0 and min G = −gᵀB⁺g ≥ μ.
            let b = inst.b.as_matrix();
            let eig = b.clone().symmetric_eigen();
            let scale = eig.eigenvalues.amax().max(1.0);
            prop_assert!(eig.eigenvalues.min() >= -1e-9 * scale);
            let pinv = b.clone().pseudo_inverse(1e-9 * scale).unwrap();
            let gmin = -inst.g.dot(&(pinv * &inst.g));
            prop_assert!(gmin >= inst.mu - 1e-7 * inst.mu.abs().max(1.0), "min G {} < μ {}", gmin, inst.mu);
        }
    }

    #[test]
    fn constraint_value_decreases_along_the_dual_curve(inst in generated(4), t1 in 0.05..0.95f64, t2 in 0.05..0.95f64) {
        let iv = pencil_interval(&inst.a, &inst.b, tol()).unwrap();
        let PencilInterval::Interval { lo, hi } = iv else { return Ok(()) };
        let lo = lo.max(0.0);
        let hi = if hi.is_finite() { hi } else { lo + 10.0 };
        let (t1, t2) = (t1.min(t2), t1.max(t2));
        if hi - lo <= 1e-3 || t2 - t1 <= 1e-3 {
            return Ok(());
        }
        let psi = |s: f64| {
            let w = inst.a.pencil(&inst.b, s);
            let r = &inst.f + &inst.g * s;
            let x: DVector<f64> = w.as_matrix().clone().cholesky()?.solve(&r);
            Some((inst.constraint(&x) - inst.mu, inst.constraint_magnitude(&x)))
        };
        let (Some((p1, m1)), Some((p2, m2))) = (psi(lo + t1 * (hi - lo)), psi(lo + t2 * (hi - lo))) else {
            return Ok(());
        };
        prop_assert!(p1 >= p2 - 1e-8 * (m1 + m2).max(1.0), "ψ increased: {} → {}", p1, p2);
    }

    #[test]
    fn weak_duality_bounds_reported_values(inst in generated(4), t in 0.0..1.0f64) {
        if !slater_holds(&inst, tol()).unwrap() {
            return Ok(());
        }
        let s = classify_and_solve(&inst, tol()).unwrap();
        let Some(v) = s.status.value() else { return Ok(()) };
        let iv = pencil_interval(&inst.a, &inst.b, tol()).unwrap();
        let PencilInterval::Interval { lo, hi } = iv else { return Ok(()) };
        let lo = lo.max(0.0);
        let hi = if hi.is_finite() { hi } else { lo + 10.0 };
        if hi <= lo {
            return Ok(());
        }
        let sigma = lo + (0.02 + 0.96 * t) * (hi - lo);
        let w = inst.a.pencil(&inst.b, sigma);
        let Some(ch) = w.as_matrix().clone().cholesky() else { return Ok(()) };
        let r = &inst.f + &inst.g * sigma;
        let d = -r.dot(&ch.solve(&r)) - inst.mu * sigma;
        prop_assert!(d <= v + 1e-7 * v.abs().max(1.0), "d({}) = {} above value {}", sigma, d, v);
    }

    #[test]
    fn reported_points_are_consistent(inst in generated(5)) {
        let s = classify_and_solve(&inst, tol()).unwrap();
        match &s.status {
            Status::Attained { x_star, value, certificate } => {
                let slack = 1e-7 * (inst.constraint_magnitude(x_star) + inst.mu.abs()).max(1.0);
                prop_assert!(inst.constraint(x_star) <= inst.mu + slack);
                prop_assert!(values_close(inst.objective(x_star), *value, 1e-12));
                if let Some(c) = certificate {
                    prop_assert!(c.passes(), "{:?}", c);
                } else {
                    prop_assert_eq!(s.case, CaseLabel::NoSlater);
                }
            }
            Status::UnboundedBelow { witness: Some(p) } => {
                prop_assert!(path_diverges(&inst, p, 8));
            }
            _ => {}
        }
    }
}

fn instance(a: &[f64], b: &[f64], f: &[f64], g: &[f64], mu: f64) -> Qp1qcInstance {
    let n = f.len();
    Qp1qcInstance::new(
        sym(n, a),
        sym(n, b),
        DVector::from_row_slice(f),
        DVector::from_row_slice(g),
        mu,
    )
    .unwrap()
}

#[rustfmt::skip]
#[test]
fn tangent_root_at_zero_is_a_singleton() {
    let a = [
        1.38743901398654, 0.14217936585059404, 0.015006460016492418, -0.30437277708106925,
        0.14217936585059404, 1.6975509058161116, 0.09400924112600552, 0.26603762489732435,
        0.015006460016492418, 0.09400924112600552, 1.3866231835029994, -0.3425476752815118,
        -0.30437277708106925, 0.26603762489732435, -0.3425476752815118, 0.21079867056889354,
    ];
    let b = [
        0.12105247454093757, 0.3230931751491291, 0.1294645198783318, 0.5831709270571872,
        0.3230931751491291, -0.6196279485859385, 0.37756943452433456, 1.5288260175335804,
        0.1294645198783318, 0.37756943452433456, 0.10322442197969281, 0.37069613343823016,
        0.5831709270571872, 1.5288260175335804, 0.37069613343823016, 0.17639034566105216,
    ];
    let iv = pencil_interval(&sym(4, &a), &sym(4, &b), tol()).unwrap();
    assert_eq!(iv, PencilInterval::Singleton(0.0));
}

#[rustfmt::skip]
#[test]
fn tangent_root_survives_rotation() {
    let inst = instance(
        &[
            1.8027473631775752, 0.45842821206679474, -0.18363409735408392, -0.6239047204073958,
            0.45842821206679474, 0.9124657421673888, -0.3801222180689965, 0.4504308012107478,
            -0.18363409735408392, -0.3801222180689965, 0.6726543842319869, 0.30607302243054835,
            -0.6239047204073958, 0.4504308012107478, 0.30607302243054835, -0.03991603343682998,
        ],
        &[
            -0.767471009048819, -0.15673589936165908, 0.33081213476864413, -0.035776430228749045,
            -0.15673589936165908, 0.11587998164934615, 0.0601803500708399, -0.43936727261961406,
            0.33081213476864413, 0.0601803500708399, 0.09543065743262676, -0.15265543903667983,
            -0.035776430228749045, -0.43936727261961406, -0.15265543903667983, 0.6232915585445987,
        ],
        &[0.3263894029126444, 1.653016648600898, -0.12411705202621304, 0.45576820588076244],
        &[-0.3540437256428784, -0.7789650499914096, -0.32895302648548774, -0.332875550408115],
        0.6358720859506762,
    );
    let moved = inst.transformed(&orthogonal(464274356125342523, 4)).unwrap();
    let s1 = classify_and_solve(&inst, tol()).unwrap();
    let s2 = classify_and_solve(&moved, tol()).unwrap();
    assert_eq!(s1.status.kind(), "attained");
    assert_eq!(s2.status.kind(), "attained");
    let (p1, p2) = (
        pencil_interval(&inst.a, &inst.b, tol()).unwrap(),
        pencil_interval(&moved.a, &moved.b, tol()).unwrap(),
    );
    assert!((p1.lo().unwrap() - p2.lo().unwrap()).abs() < 1e-12, "{p1:?} {p2:?}");
}
