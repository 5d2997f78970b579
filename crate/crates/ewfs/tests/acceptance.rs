//! Acceptance suite: one test per criterion, each printing a pass line
//! (visible with `cargo test --test acceptance -- --nocapture`). Tolerances
//! are pinned in the assertions.

use ewfs::contextuality::{classify, consistent_globals, HierarchyLevel, LpOutcome};
use ewfs::empirical::{
    canonical_ghz_mermin, canonical_hardy, check_no_signalling, model_from_bell,
    model_from_protocol, possibilistic,
};
use ewfs::qsim::{friend_unitary, Complex, OrthonormalBasis};
use ewfs::rational::snap_probability;
use ewfs::reasoning::{
    check_consistency, derive_statements, external_agent, fr_chain, gf2_sum_check, modified_fr,
    run_nogo, run_nogo_with, specker_triangle, superobserver_agents, superobserver_context,
    AssumptionSet, ConstraintKind, CoreItem, NogoVariant, ProtocolFacts, Statement, Verdict,
};
use ewfs::scenario::{
    chsh_bell, compile_bell_to_ewfs, compiled_deviation, fr_protocol, ghz_bell, ghz_fr_protocol,
    hardy_bell, ok_fail_basis, product_bell,
};
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn pass(criterion: u32, message: &str) {
    println!("[PASS] criterion {criterion}: {message}");
}

fn fr_contexts() -> Vec<Vec<String>> {
    [["A", "B"], ["A", "W"], ["U", "B"], ["U", "W"]]
        .iter()
        .map(|c| c.iter().map(|s| s.to_string()).collect())
        .collect()
}

fn ghz_fr_contexts() -> Vec<Vec<String>> {
    [
        ["U", "B", "C"],
        ["A", "V", "C"],
        ["A", "B", "W"],
        ["U", "V", "W"],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect()
}

#[test]
fn criterion_01_fr_postselection_probability() {
    let p = fr_protocol();
    let dist = p.joint_distribution(&["U", "W"]).unwrap();
    let delta = (dist.probability(&[0, 0]) - 1.0 / 12.0).abs();
    assert!(delta < 1e-12, "|P(ok,ok) - 1/12| = {delta:.3e}");
    pass(
        1,
        &format!("P(u=ok, w=ok) = 1/12 within 1e-12 (Δ = {delta:.1e})"),
    );
}

#[test]
fn criterion_02_table_reproduction() {
    let eps = 1e-9;
    let hardy = possibilistic(&model_from_bell(&hardy_bell()).unwrap(), eps);
    assert_eq!(hardy, canonical_hardy(), "simulated two-party table");
    let ghz = possibilistic(&model_from_bell(&ghz_bell()).unwrap(), eps);
    assert_eq!(ghz, canonical_ghz_mermin(), "simulated three-party table");

    // The protocols reproduce the same tables through supermeasurements.
    let fr = possibilistic(
        &model_from_protocol(&fr_protocol(), &fr_contexts()).unwrap(),
        eps,
    );
    assert_eq!(fr, canonical_hardy(), "protocol-level two-party table");
    let rename: BTreeMap<String, String> = [
        ("U", "X_A"),
        ("V", "X_B"),
        ("W", "X_C"),
        ("A", "Y_A"),
        ("B", "Y_B"),
        ("C", "Y_C"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    let ghz_fr = possibilistic(
        &model_from_protocol(&ghz_fr_protocol(), &ghz_fr_contexts()).unwrap(),
        eps,
    );
    assert!(
        ghz_fr.equivalent_under(&canonical_ghz_mermin(), &rename),
        "protocol-level three-party table"
    );
    pass(
        2,
        "simulated possibilistic models equal both hard-coded tables cell-for-cell (eps = 1e-9)",
    );
}

#[test]
fn criterion_03_modified_fr() {
    let p = fr_protocol();
    let state = p.run(None).unwrap();
    let ok = ok_fail_basis().vector_for(0).unwrap().to_vec();
    let basis_state = |s: u8, l: u8| {
        let mut v = vec![Complex::new(0.0, 0.0); 4];
        v[((s << 1) | l) as usize] = Complex::new(1.0, 0.0);
        v
    };
    // ⟨ok|⟨00|, ⟨11|⟨ok| and ⟨00|⟨11| all annihilate the post-measurement state.
    let projections = [
        (ok.clone(), basis_state(0, 0)),
        (basis_state(1, 1), ok.clone()),
        (basis_state(0, 0), basis_state(1, 1)),
    ];
    for (front, back) in &projections {
        let (p_front, post) = state.project(front, &["S_A", "L_A"]).unwrap();
        let joint = match post {
            Some(post) => p_front * post.project(back, &["S_B", "L_B"]).unwrap().0,
            None => p_front,
        };
        assert!(joint < 1e-12, "projection probability {joint:.3e}");
    }

    let report = modified_fr(&p).unwrap();
    for prediction in &report.predictions {
        assert!(prediction.probability < 1e-12);
    }
    assert!(
        !report.verdict.is_sat(),
        "combined statements must be UNSAT given u=ok, w=ok"
    );
    pass(
        3,
        "three zero-probability projections (< 1e-12) and combined UNSAT over (a,b,u,w)",
    );
}

#[test]
fn criterion_04_hierarchy() {
    let ghz = classify(&model_from_bell(&ghz_bell()).unwrap()).unwrap();
    assert_eq!(ghz.level, HierarchyLevel::Strong);
    assert_eq!(ghz.consistent_global_count, 0);
    let pm = canonical_ghz_mermin();
    assert_eq!(pm.spec.measurements.len(), 6, "64 assignments examined");
    assert!(consistent_globals(&pm).unwrap().is_empty());

    let hardy = classify(&model_from_bell(&hardy_bell()).unwrap()).unwrap();
    assert_eq!(hardy.level, HierarchyLevel::Logical);
    let witness = hardy.logical_witness.unwrap();
    assert_eq!(witness.context, vec!["U".to_string(), "W".to_string()]);
    assert_eq!(witness.section[&"U".to_string()], 0);
    assert_eq!(witness.section[&"W".to_string()], 0);
    let globals = consistent_globals(&canonical_hardy()).unwrap();
    let all_ones: BTreeMap<String, u8> = ["A", "B", "U", "W"]
        .iter()
        .map(|m| (m.to_string(), 1u8))
        .collect();
    assert!(globals.iter().any(|g| g.0 == all_ones));

    let chsh_model = model_from_bell(&chsh_bell()).unwrap();
    let chsh = classify(&chsh_model).unwrap();
    assert_eq!(chsh.level, HierarchyLevel::Probabilistic);
    for support in &possibilistic(&chsh_model, 1e-9).supports {
        assert_eq!(support.len(), 4, "full possibilistic supports");
    }

    let product_model = model_from_bell(&product_bell()).unwrap();
    let product = classify(&product_model).unwrap();
    assert_eq!(product.level, HierarchyLevel::Noncontextual);
    let Some(LpOutcome::Feasible(weights)) = product.lp else {
        panic!("expected an explicit deterministic mixture");
    };
    // The mixture reproduces every snapped table entry exactly.
    let total: BigRational = weights.iter().map(|(_, w)| w.clone()).sum();
    assert!(total.is_one());
    for (c, context) in product_model.spec.contexts.iter().enumerate() {
        for outcome in product_model.spec.context_outcomes(context) {
            let expect = snap_probability(product_model.probability(c, &outcome)).unwrap();
            let got: BigRational = weights
                .iter()
                .filter(|(g, _)| context.iter().zip(&outcome).all(|(m, &v)| g.0[m] == v))
                .map(|(_, w)| w.clone())
                .sum();
            assert_eq!(got, expect);
        }
    }
    pass(4, "STRONG (0/64 globals), LOGICAL with witness {U↦0,W↦0} and all-1s global, PROBABILISTIC, NONCONTEXTUAL with explicit mixture");
}

#[test]
fn criterion_05_truth_nogo() {
    let report = run_nogo(&ghz_fr_protocol(), NogoVariant::Truth).unwrap();
    let Verdict::Unsat { certificate } = &report.verdict else {
        panic!("truth run must be UNSAT");
    };
    assert_eq!(
        certificate.len(),
        4,
        "certificate is the four parity equations"
    );
    let mut parities: Vec<(Vec<String>, u8)> = certificate
        .iter()
        .map(|item| match item {
            CoreItem::Statement(Statement {
                kind: ConstraintKind::Parity { vars, rhs },
                ..
            }) => (vars.clone(), *rhs),
            other => panic!("non-parity in certificate: {other:?}"),
        })
        .collect();
    parities.sort();
    let mut expected = vec![
        (vec!["U".to_string(), "B".into(), "C".into()], 1u8),
        (vec!["A".to_string(), "V".into(), "C".into()], 1),
        (vec!["A".to_string(), "B".into(), "W".into()], 1),
        (vec!["U".to_string(), "V".into(), "W".into()], 0),
    ];
    for (vars, _) in expected.iter_mut() {
        vars.sort();
    }
    expected.sort();
    let mut got = parities.clone();
    for (vars, _) in got.iter_mut() {
        vars.sort();
    }
    got.sort();
    assert_eq!(got, expected);

    let check = report.gf2_check.expect("GF(2) check present");
    assert!(check.lhs_cancels, "left-hand sides cancel");
    assert_eq!(check.rhs_sum, 1, "right-hand sides sum to 1 (0 = 1)");

    // Each assumption is necessary: dropping either flag flips the verdict.
    for weakened in [
        AssumptionSet {
            born_compat_aoe: false,
            ..AssumptionSet::truth()
        },
        AssumptionSet::default(), // AOE off forces Born compatibility off too
    ] {
        let run = run_nogo_with(&ghz_fr_protocol(), NogoVariant::Truth, weakened).unwrap();
        assert!(run.verdict.is_sat());
    }
    pass(
        5,
        "auto-derived statements UNSAT with the four-parity certificate and 0=1 GF(2) sum",
    );
}

#[test]
fn criterion_06_agreement_nogo() {
    let report = run_nogo(&ghz_fr_protocol(), NogoVariant::Agreement).unwrap();
    assert!(!report.verdict.is_sat(), "agreement run must be UNSAT");
    let rendered: Vec<String> = report.equalities.iter().map(|e| e.to_string()).collect();
    for expect in [
        "f_Ursula(C) = f_Valentina(C)",
        "f_Ursula(B) = f_Wigner(B)",
        "f_Valentina(A) = f_Wigner(A)",
        "f_Ursula(U) = f_Zeno(U)",
        "f_Valentina(V) = f_Zeno(V)",
        "f_Wigner(W) = f_Zeno(W)",
    ] {
        assert!(rendered.contains(&expect.to_string()), "missing {expect}");
    }
    assert_eq!(report.equalities.len(), 6);

    let weakened = AssumptionSet {
        classical_agreement: false,
        ..AssumptionSet::agreement()
    };
    let run = run_nogo_with(&ghz_fr_protocol(), NogoVariant::Agreement, weakened).unwrap();
    assert!(
        run.verdict.is_sat(),
        "removing classical agreement flips to SAT"
    );
    pass(
        6,
        "per-agent variables with six overlap equalities UNSAT; removing agreement flips to SAT",
    );
}

#[test]
fn criterion_07_born_practicality_resolution() {
    for (name, protocol) in [("ghz-fr", ghz_fr_protocol()), ("fr", fr_protocol())] {
        let report = run_nogo(&protocol, NogoVariant::Practicality).unwrap();
        assert!(
            report.verdict.is_sat(),
            "{name} practicality run must be SAT"
        );
        assert!(!report.resolutions.is_empty());
        for r in &report.resolutions {
            assert!(!r.scope.is_empty(), "scope populated");
            assert!(!r.condition.is_empty(), "condition populated");
            assert!(!r.caveat.is_empty(), "caveat populated");
            assert!(!r.claim.is_empty(), "claim populated");
        }
        if name == "ghz-fr" {
            if let Verdict::Sat { model, .. } = &report.verdict {
                let parity = model.values().fold(0u8, |acc, &v| acc ^ v);
                assert_eq!(parity, 0, "SAT model satisfies u⊕v⊕w=0");
            }
        }
    }
    // The two-superobserver resolution unrolls into the chained conditionals.
    let report = run_nogo(&fr_protocol(), NogoVariant::Practicality).unwrap();
    let ursula: Vec<_> = report
        .resolutions
        .iter()
        .filter(|r| r.speaker == "Ursula")
        .collect();
    assert_eq!(ursula.len(), 3);
    assert!(ursula[0].claim.contains("b = 1"));
    assert!(ursula[1].claim.contains("a = 1"));
    assert!(ursula[2].claim.contains("w = fail"));
    pass(
        7,
        "practicality verdict SAT for both protocols with fully populated conditional statements",
    );
}

#[test]
fn criterion_08_specker_triangle() {
    let p = ghz_fr_protocol();
    for (u, v, w) in [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)] {
        let report = specker_triangle(&p, u, v, w).unwrap();
        assert_eq!(report.parities.len(), 3);
        for statement in &report.parities {
            match &statement.kind {
                ConstraintKind::Parity { vars, .. } => assert_eq!(vars.len(), 2),
                other => panic!("expected pairwise parity, got {other:?}"),
            }
        }
        assert!(
            !report.verdict.is_sat(),
            "triple ({u},{v},{w}) must be UNSAT over the 8 assignments"
        );
    }
    pass(
        8,
        "every even-parity post-selection induces three pairwise parities, jointly UNSAT",
    );
}

#[test]
fn criterion_09_compiler_equivalence() {
    for (name, bell) in [("hardy", hardy_bell()), ("ghz", ghz_bell())] {
        let compiled = compile_bell_to_ewfs(&bell).unwrap();
        let deviations = compiled_deviation(&bell, &compiled).unwrap();
        let max = deviations.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        assert!(max < 1e-12, "{name}: max deviation {max:.3e}");
    }
    pass(
        9,
        "compiled protocol statistics equal direct Bell statistics within 1e-12 per entry",
    );
}

#[test]
fn criterion_10_property_suites() {
    // Norm preservation and undo through every canonical protocol.
    for protocol in [fr_protocol(), ghz_fr_protocol()] {
        let state = protocol.run(None).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
    }
    let bases = [
        OrthonormalBasis::z(),
        OrthonormalBasis::x(),
        OrthonormalBasis::y(),
        OrthonormalBasis::xz_plane(0.7),
        OrthonormalBasis::xz_plane(-1.3),
    ];
    let state =
        ewfs::qsim::StateVector::from_reals(vec!["S", "L"], &[0.5, -0.5, 0.5, 0.5]).unwrap();
    for basis in &bases {
        let u = friend_unitary(basis).unwrap();
        assert!(u.unitarity_deviation() < 1e-10, "U†U = I within 1e-10");
        let forward = state.apply_unitary(&u, &["S", "L"]).unwrap();
        assert!((forward.norm() - 1.0).abs() < 1e-12, "norm preserved");
        let back = forward.apply_unitary(&u.dagger(), &["S", "L"]).unwrap();
        assert!(back.max_amp_diff(&state) < 1e-12, "undo restores the state");
    }

    // No-signalling on every canonical model.
    for model in [
        model_from_bell(&hardy_bell()).unwrap(),
        model_from_bell(&ghz_bell()).unwrap(),
        model_from_bell(&chsh_bell()).unwrap(),
        model_from_bell(&product_bell()).unwrap(),
        model_from_protocol(&fr_protocol(), &fr_contexts()).unwrap(),
        model_from_protocol(&ghz_fr_protocol(), &ghz_fr_contexts()).unwrap(),
    ] {
        let report = check_no_signalling(&model, 1e-10);
        assert!(
            report.ok,
            "no-signalling deviation {:.3e}",
            report.max_deviation
        );
    }

    // Solver agreement with an independent truth-table oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(20240917);
    let facts = ProtocolFacts::default();
    for round in 0..200 {
        let n_vars = rng.gen_range(2..=10usize);
        let vars: Vec<String> = (0..n_vars).map(|i| format!("M{i}")).collect();
        let n_constraints = rng.gen_range(1..=6usize);
        let mut statements = Vec::new();
        for _ in 0..n_constraints {
            let scope_size = rng.gen_range(1..=3.min(n_vars));
            let mut scope: Vec<String> = Vec::new();
            while scope.len() < scope_size {
                let v = vars[rng.gen_range(0..n_vars)].clone();
                if !scope.contains(&v) {
                    scope.push(v);
                }
            }
            let kind = if rng.gen_bool(0.5) {
                ConstraintKind::Parity {
                    vars: scope.clone(),
                    rhs: rng.gen_range(0..2),
                }
            } else {
                let n_excluded = rng.gen_range(1..(1usize << scope.len()).max(2));
                let mut excluded: Vec<Vec<u8>> = Vec::new();
                for _ in 0..n_excluded {
                    let t: Vec<u8> = (0..scope.len()).map(|_| rng.gen_range(0..2)).collect();
                    if !excluded.contains(&t) {
                        excluded.push(t);
                    }
                }
                ConstraintKind::Forbidden {
                    vars: scope.clone(),
                    excluded,
                }
            };
            statements.push(Statement {
                owner: "Oracle".into(),
                scope,
                kind,
                condition: ewfs::reasoning::Condition::Unconditional,
            });
        }
        let verdict = check_consistency(&statements, &[], &AssumptionSet::truth(), &facts).unwrap();
        let oracle_sat = truth_table_oracle(&vars, &statements);
        assert_eq!(
            verdict.is_sat(),
            oracle_sat,
            "round {round}: solver disagrees with the truth-table oracle"
        );
    }
    pass(
        10,
        "norm/unitarity/undo properties, no-signalling < 1e-10, and 200 oracle agreements",
    );
}

/// Independent oracle: evaluate constraints directly over full truth tables.
fn truth_table_oracle(all_vars: &[String], statements: &[Statement]) -> bool {
    // Only variables that occur in some statement are free in the solver.
    let used: Vec<&String> = all_vars
        .iter()
        .filter(|v| statements.iter().any(|s| s.scope.contains(v)))
        .collect();
    let n = used.len();
    'outer: for assignment in 0..(1u64 << n) {
        let value = |name: &String| -> u8 {
            let i = used.iter().position(|v| *v == name).unwrap();
            (assignment >> i & 1) as u8
        };
        for statement in statements {
            let holds = match &statement.kind {
                ConstraintKind::Parity { vars, rhs } => {
                    vars.iter().map(value).fold(0u8, |a, b| a ^ b) == *rhs
                }
                ConstraintKind::Forbidden { vars, excluded } => {
                    let tuple: Vec<u8> = vars.iter().map(value).collect();
                    !excluded.contains(&tuple)
                }
            };
            if !holds {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

#[test]
fn criterion_misc_fr_chain_and_derivations() {
    // Supporting checks tying the criteria to the reasoning pipeline.
    let p = fr_protocol();
    let chain = fr_chain(&p, 0, 0).unwrap();
    assert!((chain.postselect_probability - 1.0 / 12.0).abs() < 1e-12);
    assert!(chain.contradiction.is_some());

    let ghz = ghz_fr_protocol();
    let agents = superobserver_agents(&ghz);
    let ursula = agents.iter().find(|a| a.name == "Ursula").unwrap();
    let ctx = superobserver_context(&ghz, ursula);
    let statements = derive_statements(&ghz, ursula, &[ctx]).unwrap();
    assert_eq!(statements[0].render(Some("U")), "b ⊕ c = 1 ⊕ u");

    let zeno = external_agent(&ghz, "Zeno");
    let statements =
        derive_statements(&ghz, &zeno, &[zeno.accessible.iter().cloned().collect()]).unwrap();
    assert_eq!(statements[0].render(None), "u ⊕ v ⊕ w = 0");

    let certificate: Vec<CoreItem> = run_nogo(&ghz, NogoVariant::Truth)
        .unwrap()
        .verdict
        .certificate();
    assert!(gf2_sum_check(&certificate).is_some());
}

trait VerdictExt {
    fn certificate(self) -> Vec<CoreItem>;
}

impl VerdictExt for Verdict {
    fn certificate(self) -> Vec<CoreItem> {
        match self {
            Verdict::Unsat { certificate } => certificate,
            Verdict::Sat { .. } => Vec::new(),
        }
    }
}
