use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::compile::GroundedTheory;
use crate::logic::{LinAtom, ThetaForm};
use crate::model::{ExchangePolicy, OracleConfig};
use crate::muac::parse_ruleset;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn user(n: &str) -> UserId {
    UserId::new(n)
}

fn res(n: &str) -> ResourceId {
    ResourceId::new(n)
}

fn atom(r: &str, u: &str) -> LinAtom {
    LinAtom::new(res(r), user(u))
}

fn imp(r: &str, from: &str, to: &str) -> LinImp {
    LinImp::new(atom(r, from), atom(r, to))
}

fn tr(g: &str, r: &str, v: &str) -> Transfer {
    Transfer { giver: user(g), resource: res(r), receiver: user(v) }
}

fn exchange(trs: &[(&str, &str, &str)]) -> Exchange {
    trs.iter().map(|(g, r, v)| tr(g, r, v)).collect()
}

fn ints(v: &[i64]) -> Vec<Int> {
    v.iter().map(|&x| Int::from(x)).collect()
}

/// The three contract instances behind the circular exchange.
fn circular_theory() -> GroundedTheory {
    let a1 = ThetaForm::new(
        DeltaForm::singleton(imp("hw", "Carl", "Alice")),
        DeltaForm::singleton(imp("sb", "Alice", "Bob")),
    );
    let b1 = ThetaForm::new(
        DeltaForm::singleton(imp("sb", "Alice", "Bob")),
        DeltaForm::singleton(imp("lw", "Bob", "Carl")),
    );
    let c1 = ThetaForm::new(
        DeltaForm::singleton(imp("lw", "Bob", "Carl")),
        DeltaForm::singleton(imp("hw", "Carl", "Alice")),
    );
    GroundedTheory::from_formulas([
        OmegaForm::GTheta(a1),
        OmegaForm::GTheta(b1),
        OmegaForm::GTheta(c1),
    ])
}

#[test]
fn circular_system_has_permutation_matrices() {
    let sys = build_system(&circular_theory());
    assert_eq!(
        sys.basis.implications,
        vec![imp("hw", "Carl", "Alice"), imp("lw", "Bob", "Carl"), imp("sb", "Alice", "Bob")]
    );
    assert!(sys.delta_columns.is_empty());
    assert_eq!(sys.theta_columns.len(), 3);
    // Theory order sorts contracts by their requirement.
    assert_eq!(
        sys.b_matrix.columns,
        vec![ints(&[1, 0, 0]), ints(&[0, 1, 0]), ints(&[0, 0, 1])]
    );
    assert_eq!(
        sys.c_matrix.columns,
        vec![ints(&[0, 0, 1]), ints(&[1, 0, 0]), ints(&[0, 1, 0])]
    );
}

#[test]
fn empty_theory_builds_an_empty_system() {
    let sys = build_system(&GroundedTheory::from_formulas([]));
    assert!(sys.basis.is_empty());
    assert_eq!(sys.column_count(), 0);
}

#[test]
fn reflexive_contract_has_equal_columns() {
    let d = DeltaForm::singleton(imp("x", "A", "B"));
    let theory =
        GroundedTheory::from_formulas([OmegaForm::GTheta(ThetaForm::new(d.clone(), d))]);
    let sys = build_system(&theory);
    assert_eq!(sys.b_matrix.columns, sys.c_matrix.columns);
}

#[test]
fn circular_exchange_is_the_unique_unit_solution() {
    let sys = build_system(&circular_theory());
    let target = ints(&[1, 1, 1]);
    let solutions = solve_fair_system(&sys, &target, &DecideConfig::default()).unwrap();
    assert_eq!(solutions, vec![ints(&[1, 1, 1])]);
    // By hand: [A|C]·(1,1,1) performs each transfer once and the slack
    // (C−B)·(1,1,1) vanishes.
    assert_eq!(sys.performed(&solutions[0]), target);
    assert_eq!(sys.slack(&solutions[0]), ints(&[0, 0, 0]));
}

#[test]
fn zero_target_has_the_zero_solution() {
    let sys = build_system(&circular_theory());
    let solutions = solve_fair_system(&sys, &ints(&[0, 0, 0]), &DecideConfig::default()).unwrap();
    assert_eq!(solutions, vec![ints(&[0, 0, 0])]);
}

#[test]
fn double_spending_has_no_solution() {
    // One healing potion, two payments: both payers' contracts require
    // the same single transfer.
    let a3 = ThetaForm::new(
        DeltaForm::singleton(imp("hp", "Carl", "Bob")),
        DeltaForm::singleton(imp("lw", "Alice", "Carl")),
    );
    let b3 = ThetaForm::new(
        DeltaForm::singleton(imp("hp", "Carl", "Bob")),
        DeltaForm::singleton(imp("lw", "Bob", "Carl")),
    );
    let c2 = ThetaForm::new(
        DeltaForm::singleton(imp("lw", "Bob", "Carl")),
        DeltaForm::singleton(imp("hp", "Carl", "Bob")),
    );
    let theory = GroundedTheory::from_formulas([
        OmegaForm::GTheta(a3),
        OmegaForm::GTheta(b3),
        OmegaForm::GTheta(c2),
    ]);
    let sys = build_system(&theory);
    let target = sys
        .basis
        .vector_of(&encode_exchange(&exchange(&[
            ("Carl", "hp", "Bob"),
            ("Alice", "lw", "Carl"),
            ("Bob", "lw", "Carl"),
        ])))
        .unwrap();
    let solutions = solve_fair_system(&sys, &target, &DecideConfig::default()).unwrap();
    assert!(solutions.is_empty());
}

fn fixture_state() -> State {
    let mut st = State::new();
    st.set(user("Alice"), res("sb"), 1);
    st.set(user("Bob"), res("lw"), 1);
    st.set(user("Carl"), res("hw"), 3);
    st.set(user("Carl"), res("hp"), 2);
    st
}

#[test]
fn single_step_feasibility_follows_the_environment() {
    let st = fixture_state();
    let circular =
        exchange(&[("Alice", "sb", "Bob"), ("Bob", "lw", "Carl"), ("Carl", "hw", "Alice")]);
    assert!(feasible_single_step(&circular, &st).is_ok());

    // Bob has no healing potion at the start.
    let supplier = exchange(&[
        ("Bob", "lw", "Carl"),
        ("Carl", "hp", "Bob"),
        ("Bob", "hp", "Alice"),
        ("Alice", "sb", "Bob"),
    ]);
    assert!(feasible_single_step(&supplier, &st).is_err());
    assert_eq!(feasible_single_step(&Exchange::new(), &st).unwrap(), st);
}

#[test]
fn supplier_exchange_fires_in_two_steps() {
    let st = fixture_state();
    let supplier = exchange(&[
        ("Bob", "lw", "Carl"),
        ("Carl", "hp", "Bob"),
        ("Bob", "hp", "Alice"),
        ("Alice", "sb", "Bob"),
    ]);
    let steps = firing_sequence(&supplier, &st, 8).unwrap().unwrap();
    assert_eq!(steps.len(), 2);
    // The steps partition the exchange and each is feasible in order.
    let mut union = Exchange::new();
    let mut running = st.clone();
    for step in &steps {
        running = apply_exchange(&running, step).unwrap();
        union = union.union(step);
    }
    assert_eq!(union, supplier);
    // The second step needs the potion obtained in the first.
    assert!(steps[1].contains(&tr("Bob", "hp", "Alice")));
}

#[test]
fn feasible_exchanges_fire_in_one_step() {
    let st = fixture_state();
    let circular =
        exchange(&[("Alice", "sb", "Bob"), ("Bob", "lw", "Carl"), ("Carl", "hw", "Alice")]);
    let steps = firing_sequence(&circular, &st, 8).unwrap().unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0], circular);
}

#[test]
fn unownable_resources_never_fire() {
    let st = fixture_state();
    let impossible = exchange(&[("Alice", "hp", "Bob"), ("Bob", "hp", "Alice")]);
    assert_eq!(firing_sequence(&impossible, &st, 8).unwrap(), None);
    assert!(matches!(
        firing_sequence(&impossible, &st, 1),
        Err(DecideError::SearchCap { limit: 1 })
    ));
}

fn fixture_rulesets() -> BTreeMap<UserId, Ruleset> {
    let alice = parse_ruleset(
        "Gives(Me, sb, u) :- Gives(u', hw, Me)\nGives(Me, sb, u) :- Gives(u', hp, Me)",
        user("Alice"),
    )
    .unwrap();
    let bob = parse_ruleset(
        "Gives(Me, lw, u) :- Gives(u', sb, Me)\nGives(Me, hp, u) :- Gives(u, sb, Me)\nGives(Me, lw, u) :- Gives(u, hp, Me) with is_paladin(u)",
        user("Bob"),
    )
    .unwrap();
    let carl = parse_ruleset(
        "Gives(Me, hw, u) :- Gives(u', lw, Me)\nGives(Me, hp, u) :- Gives(u, lw, Me)\nGives(Me, hp, u) :- Gives(u, sb, u') with is_paladin(u')",
        user("Carl"),
    )
    .unwrap();
    [(user("Alice"), alice), (user("Bob"), bob), (user("Carl"), carl)].into_iter().collect()
}

fn fixture_context() -> Context {
    let mut ctx = Context::new();
    ctx.add_fact("is_paladin", vec![user("Bob")]).unwrap();
    ctx.add_fact("is_paladin", vec![user("Carl")]).unwrap();
    ctx
}

fn universe3() -> BTreeSet<UserId> {
    ["Alice", "Bob", "Carl"].into_iter().map(UserId::new).collect()
}

#[test]
fn the_circular_transition_is_fair_in_strict_mode() {
    let setting = DecisionSetting::new(&fixture_rulesets(), &fixture_context(), &universe3());
    let st = fixture_state();
    let circular =
        exchange(&[("Alice", "sb", "Bob"), ("Bob", "lw", "Carl"), ("Carl", "hw", "Alice")]);
    let st2 = apply_exchange(&st, &circular).unwrap();
    let cert = decide(&setting, &st, &st2, ProofMode::Strict, &DecideConfig::default())
        .unwrap()
        .expect("the circular exchange is fair");
    assert_eq!(cert.exchange, circular);
    // One occurrence each of the three contracts.
    let selected = selected_formulas(&setting.system, &cert.y);
    assert_eq!(selected.len(), 3);
    assert!(selected.iter().all(|(_, k)| *k == 1));
    assert!(all_nonneg(&cert.slack));
    assert!(cert.firing.is_none());
}

#[test]
fn the_supplier_exchange_needs_star_cut() {
    let setting = DecisionSetting::new(&fixture_rulesets(), &fixture_context(), &universe3());
    let st = fixture_state();
    let supplier = exchange(&[
        ("Bob", "lw", "Carl"),
        ("Carl", "hp", "Bob"),
        ("Bob", "hp", "Alice"),
        ("Alice", "sb", "Bob"),
    ]);
    let st2 = crate::model::apply_net(&st, &supplier).unwrap();
    let config = DecideConfig::default();
    assert!(decide(&setting, &st, &st2, ProofMode::Strict, &config).unwrap().is_none());
    let cert = decide(&setting, &st, &st2, ProofMode::StarCut, &config)
        .unwrap()
        .expect("eventually fair");
    assert_eq!(cert.exchange, supplier);
    assert_eq!(cert.firing.as_ref().map(Vec::len), Some(2));
}

#[test]
fn identity_targets_yield_the_empty_certificate() {
    let setting = DecisionSetting::new(&fixture_rulesets(), &fixture_context(), &universe3());
    let st = fixture_state();
    let cert = decide(&setting, &st, &st, ProofMode::Strict, &DecideConfig::default())
        .unwrap()
        .expect("staying put is fair");
    assert!(cert.exchange.is_empty());
    assert!(cert.y.iter().all(|c| c.is_zero()));
}

#[test]
fn conservation_gate_rejects_unbalanced_targets() {
    let setting = DecisionSetting::new(&fixture_rulesets(), &fixture_context(), &universe3());
    let st = fixture_state();
    let mut st2 = st.clone();
    st2.add(&user("Alice"), &res("sb"), 1);
    assert!(decide(&setting, &st, &st2, ProofMode::StarCut, &DecideConfig::default())
        .unwrap()
        .is_none());
}

#[test]
fn hilbert_basis_properties_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let rows = rng.gen_range(1..=3);
        let cols = rng.gen_range(1..=4);
        let m = IntMatrix::new(
            rows,
            (0..cols)
                .map(|_| (0..rows).map(|_| Int::from(rng.gen_range(-3i64..=3))).collect())
                .collect(),
        );
        let h = hilbert_basis(&m, 200_000).unwrap();
        for a in &h {
            assert!(all_nonneg(&m.mul_vec(a)), "unsound generator");
            for b in &h {
                if a != b {
                    assert!(
                        !(leq(a, b) && leq(&m.mul_vec(a), &m.mul_vec(b))),
                        "{a:?} dominates {b:?}"
                    );
                }
            }
        }
        // Every bounded solution is a nonnegative combination.
        for sol in bounded_solutions(&m, 2) {
            assert!(representable(&sol, &h), "{sol:?} not generated");
        }
    }
}

/// Bounded-knapsack check: can `target` be written as a nonnegative
/// integer combination of `gens`?
fn representable(target: &[Int], gens: &[Vec<Int>]) -> bool {
    fn rec(target: &mut Vec<Int>, gens: &[Vec<Int>], idx: usize) -> bool {
        if target.iter().all(|x| x.is_zero()) {
            return true;
        }
        if idx == gens.len() {
            return false;
        }
        let g = &gens[idx];
        let mut taken = Int::zero();
        loop {
            if rec(target, gens, idx + 1) {
                for (t, gi) in target.iter_mut().zip(g) {
                    *t += gi * (&taken);
                }
                return true;
            }
            if !leq(g, target) || g.iter().all(|x| x.is_zero()) {
                break;
            }
            for (t, gi) in target.iter_mut().zip(g) {
                *t -= gi;
            }
            taken += 1;
        }
        for (t, gi) in target.iter_mut().zip(g) {
            *t += gi * (&taken);
        }
        false
    }
    rec(&mut target.to_vec(), gens, 0)
}

// ---------------------------------------------------------------------------
// Randomized equivalence against the brute-force oracle.

struct RandomInstance {
    rulesets: BTreeMap<UserId, Ruleset>,
    ctx: Context,
    universe: BTreeSet<UserId>,
    st: State,
    exc: Exchange,
}

fn random_instance(rng: &mut ChaCha8Rng) -> RandomInstance {
    use crate::muac::{GiveAtom, PredAtom, RuleAst, UserTerm};
    let users: Vec<UserId> = (0..3).map(|i| user(&format!("u{i}"))).collect();
    let resources: Vec<ResourceId> = (0..3).map(|i| res(&format!("r{i}"))).collect();
    let vars = ["x", "y", "z"];

    let mut rulesets = BTreeMap::new();
    for owner in &users {
        let mut rules = Vec::new();
        for _ in 0..rng.gen_range(0..=2usize) {
            let head_resource = resources[rng.gen_range(0..resources.len())].clone();
            let mut gives = Vec::new();
            for _ in 0..rng.gen_range(0..=2usize) {
                let giver = UserTerm::Var(vars[rng.gen_range(0..vars.len())].into());
                let receiver = loop {
                    let t = if rng.gen_bool(0.3) {
                        UserTerm::Me
                    } else {
                        UserTerm::Var(vars[rng.gen_range(0..vars.len())].into())
                    };
                    if t != giver {
                        break t;
                    }
                };
                gives.push(GiveAtom {
                    giver,
                    resource: resources[rng.gen_range(0..resources.len())].clone(),
                    receiver,
                });
            }
            let preds = if rng.gen_bool(0.3) {
                vec![PredAtom {
                    name: "p".into(),
                    args: vec![UserTerm::Var(vars[rng.gen_range(0..vars.len())].into())],
                }]
            } else {
                vec![]
            };
            rules.push(RuleAst { head_resource, head_requester: "x".into(), gives, preds });
        }
        rulesets.insert(owner.clone(), Ruleset { owner: owner.clone(), rules });
    }

    let mut ctx = Context::new();
    for u in &users {
        if rng.gen_bool(0.5) {
            ctx.add_fact("p", vec![u.clone()]).unwrap();
        }
    }

    let mut st = State::new();
    for u in &users {
        for r in &resources {
            st.set(u.clone(), r.clone(), rng.gen_range(0..=2));
        }
    }

    let mut exc = Exchange::new();
    for _ in 0..rng.gen_range(0..=4usize) {
        let g = rng.gen_range(0..users.len());
        let v = loop {
            let v = rng.gen_range(0..users.len());
            if v != g {
                break v;
            }
        };
        exc.insert(tr(&users[g].0, &resources[rng.gen_range(0..resources.len())].0, &users[v].0), 1);
    }

    RandomInstance { rulesets, ctx, universe: users.into_iter().collect(), st, exc }
}

/// Runs `count` random instances and checks that the linear-system
/// decision agrees with the exhaustive oracle on both verdict and, when
/// fair, on the certificate's own exchange.
pub(crate) fn equivalence_run(seed: u64, count: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = DecideConfig { exchange_cap: 4, ..DecideConfig::default() };
    let mut done = 0;
    while done < count {
        let inst = random_instance(&mut rng);
        let Ok(st_target) = apply_exchange(&inst.st, &inst.exc) else {
            continue;
        };
        done += 1;

        let setting = DecisionSetting::new(&inst.rulesets, &inst.ctx, &inst.universe);
        let verdict = decide(&setting, &inst.st, &st_target, ProofMode::Strict, &config)
            .expect("small instances stay within caps");

        let policies: BTreeMap<UserId, ExchangePolicy> = inst
            .rulesets
            .iter()
            .map(|(u, rs)| {
                (u.clone(), crate::muac::interpret_ruleset(rs, &inst.ctx, &inst.universe))
            })
            .collect();
        let oracle = crate::model::fair_exchange_between(&inst.st, &st_target, &policies, 4)
            .expect("oracle within cap");

        match (&verdict, &oracle) {
            (Some(cert), Some(_)) => {
                // The certificate's exchange must itself be oracle-fair.
                assert_eq!(apply_exchange(&inst.st, &cert.exchange).unwrap(), st_target);
                let cfg = OracleConfig { max_exchange_size: 4 };
                assert!(crate::model::is_fair_label(&policies, &cert.exchange, &cfg)
                    .unwrap()
                    .is_fair());
            }
            (None, None) => {}
            (d, o) => panic!(
                "disagreement on instance {done}: decide={:?} oracle={:?} exc={:?}",
                d.is_some(),
                o.is_some(),
                inst.exc
            ),
        }
    }
}

#[test]
fn decision_matches_the_oracle_on_random_instances() {
    equivalence_run(7, 60);
}
