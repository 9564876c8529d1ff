//! Encodings between the exchange world and the logic.
//!
//! A MuAC rule compiles to a finitely-quantified non-linear formula
//! `Λ[u]. ω → G(δ ⊸* δ')` where `ω` is the conjunction of the rule's
//! predicate conditions (`⊤` when there are none), `δ` the required
//! transfers, and `δ'` the owner's promised transfer. States become atom
//! multisets, contexts become predicate-atom sets, and exchanges become
//! exchange formulas, all invertibly.
//!
//! Grounding replaces the quantifier by explicit instances over the user
//! universe. The deduplicated set of instances whose preconditions hold
//! in the context is the reusable theory the decision procedure works
//! on; the quantifier itself never reaches a proof.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{DeltaForm, LinAtom, LinImp, OmegaForm, SigmaForm, ThetaForm};
use crate::model::{Exchange, ResourceId, State, Transfer, UserId};
use crate::muac::{Context, Ruleset, UserTerm};
use crate::multiset::Multiset;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("implication is not a transfer: {0}")]
    NotATransfer(String),
}

/// A user position in a compiled template: already-resolved owner or a
/// still-quantified variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum TemplateUser {
    Concrete(UserId),
    Var(String),
}

impl fmt::Display for TemplateUser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateUser::Concrete(u) => write!(f, "{u}"),
            TemplateUser::Var(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateImp {
    pub resource: ResourceId,
    pub from: TemplateUser,
    pub to: TemplateUser,
}

impl fmt::Display for TemplateImp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{} ⊸ {}@{}", self.resource, self.from, self.resource, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredTemplate {
    pub name: String,
    pub args: Vec<TemplateUser>,
}

impl fmt::Display for PredTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

/// One compiled MuAC rule: `Λ variables. precondition → G(lhs ⊸* rhs)`.
///
/// Variables are canonically renamed `u, u', u'', …` in order of first
/// appearance in the contract (requirement side first). `distinct_pairs`
/// records the giver/receiver pairs that co-occur in one `Gives` atom and
/// therefore may not collapse to the same user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledRule {
    pub owner: UserId,
    pub variables: Vec<String>,
    pub precondition: Vec<PredTemplate>,
    pub contract_lhs: Vec<TemplateImp>,
    pub contract_rhs: Vec<TemplateImp>,
    pub distinct_pairs: Vec<(TemplateUser, TemplateUser)>,
}

impl fmt::Display for CompiledRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.variables.is_empty() {
            write!(f, "Λ{}. ", self.variables.join(", "))?;
        }
        if self.precondition.is_empty() {
            write!(f, "⊤ → ")?;
        } else {
            let preds: Vec<String> = self.precondition.iter().map(|p| p.to_string()).collect();
            write!(f, "{} → ", preds.join(" ∧ "))?;
        }
        let side = |imps: &[TemplateImp]| -> String {
            if imps.is_empty() {
                "I".to_string()
            } else {
                imps.iter().map(|i| format!("({i})")).collect::<Vec<_>>().join(" ⊗ ")
            }
        };
        write!(f, "G({} ⊸* {})", side(&self.contract_lhs), side(&self.contract_rhs))
    }
}

/// A fully instantiated rule: the ground formula, its flattened
/// precondition atoms, and the contract it yields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundInstance {
    pub formula: OmegaForm,
    pub precondition: Vec<OmegaForm>,
    pub theta: ThetaForm,
    pub owner: UserId,
}

/// The deduplicated, precondition-discharged theory: one occurrence of
/// every grounded `G(θ)` (and `G(δ)` for hand-written theories), with a
/// representative instance recorded for proof construction.
#[derive(Debug, Clone, Default)]
pub struct GroundedTheory {
    formulas: BTreeSet<OmegaForm>,
    origins: BTreeMap<OmegaForm, GroundInstance>,
}

impl GroundedTheory {
    /// A theory from bare `G` formulas, without rule provenance.
    pub fn from_formulas(formulas: impl IntoIterator<Item = OmegaForm>) -> Self {
        GroundedTheory { formulas: formulas.into_iter().collect(), origins: BTreeMap::new() }
    }

    pub fn formulas(&self) -> impl Iterator<Item = &OmegaForm> {
        self.formulas.iter()
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn origin(&self, formula: &OmegaForm) -> Option<&GroundInstance> {
        self.origins.get(formula)
    }
}

fn rename_term(term: &UserTerm, owner: &UserId, names: &BTreeMap<String, String>) -> TemplateUser {
    match term {
        UserTerm::Me => TemplateUser::Concrete(owner.clone()),
        UserTerm::Var(v) => TemplateUser::Var(names[v].clone()),
    }
}

fn canonical_var_name(index: usize) -> String {
    format!("u{}", "'".repeat(index))
}

/// Compiles every rule of a ruleset.
pub fn compile_ruleset(rs: &Ruleset) -> Vec<CompiledRule> {
    rs.rules
        .iter()
        .map(|rule| {
            // Canonical names follow first appearance in the contract:
            // requirement side, then promise, then predicates.
            let mut order: Vec<String> = Vec::new();
            let mut note = |t: &UserTerm| {
                if let UserTerm::Var(v) = t {
                    if !order.contains(v) {
                        order.push(v.clone());
                    }
                }
            };
            for g in &rule.gives {
                note(&g.giver);
                note(&g.receiver);
            }
            note(&UserTerm::Var(rule.head_requester.clone()));
            for p in &rule.preds {
                for a in &p.args {
                    note(a);
                }
            }
            let names: BTreeMap<String, String> = order
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), canonical_var_name(i)))
                .collect();
            let variables: Vec<String> = (0..order.len()).map(canonical_var_name).collect();

            let owner = &rs.owner;
            let mut distinct_pairs = Vec::new();
            let head_requester = UserTerm::Var(rule.head_requester.clone());
            distinct_pairs.push((
                TemplateUser::Concrete(owner.clone()),
                rename_term(&head_requester, owner, &names),
            ));

            let contract_lhs: Vec<TemplateImp> = rule
                .gives
                .iter()
                .map(|g| {
                    let from = rename_term(&g.giver, owner, &names);
                    let to = rename_term(&g.receiver, owner, &names);
                    distinct_pairs.push((from.clone(), to.clone()));
                    TemplateImp { resource: g.resource.clone(), from, to }
                })
                .collect();

            let contract_rhs = vec![TemplateImp {
                resource: rule.head_resource.clone(),
                from: TemplateUser::Concrete(owner.clone()),
                to: rename_term(&head_requester, owner, &names),
            }];

            let precondition = rule
                .preds
                .iter()
                .map(|p| PredTemplate {
                    name: p.name.clone(),
                    args: p.args.iter().map(|a| rename_term(a, owner, &names)).collect(),
                })
                .collect();

            CompiledRule {
                owner: owner.clone(),
                variables,
                precondition,
                contract_lhs,
                contract_rhs,
                distinct_pairs,
            }
        })
        .collect()
}

/// `⟦st⟧(res@usr) = st(usr)(res)`.
pub fn compile_state(st: &State) -> SigmaForm {
    st.entries()
        .map(|(u, r, c)| (LinAtom::new(r.clone(), u.clone()), c))
        .collect()
}

/// Inverse of [`compile_state`] up to zero-count normalization.
pub fn decompile_state(sigma: &SigmaForm) -> State {
    let mut st = State::new();
    for (atom, n) in sigma.iter() {
        st.add(&atom.user, &atom.resource, n);
    }
    st
}

/// The predicate atoms holding in a context.
pub fn compile_context(ctx: &Context) -> BTreeSet<OmegaForm> {
    ctx.facts()
        .map(|(name, args)| OmegaForm::pred(name, args.to_vec()))
        .collect()
}

/// One implication per transfer occurrence.
pub fn encode_exchange(exc: &Exchange) -> DeltaForm {
    exc.iter()
        .map(|(tr, n)| {
            (
                LinImp::new(
                    LinAtom::new(tr.resource.clone(), tr.giver.clone()),
                    LinAtom::new(tr.resource.clone(), tr.receiver.clone()),
                ),
                n,
            )
        })
        .collect()
}

/// Inverse of [`encode_exchange`]; rejects implications that do not
/// preserve the resource or that move it nowhere.
pub fn decode_exchange(delta: &DeltaForm) -> Result<Exchange, CompileError> {
    let mut out = Exchange::new();
    for (imp, n) in delta.iter() {
        if imp.from.resource != imp.to.resource || imp.from.user == imp.to.user {
            return Err(CompileError::NotATransfer(imp.to_string()));
        }
        out.insert(
            Transfer {
                giver: imp.from.user.clone(),
                resource: imp.from.resource.clone(),
                receiver: imp.to.user.clone(),
            },
            n,
        );
    }
    Ok(out)
}

fn resolve_template(
    t: &TemplateUser,
    assignment: &BTreeMap<String, UserId>,
) -> UserId {
    match t {
        TemplateUser::Concrete(u) => u.clone(),
        TemplateUser::Var(v) => assignment[v].clone(),
    }
}

/// Folds predicate atoms into the precondition formula; `⊤` when empty,
/// right-nested conjunction otherwise.
pub fn precondition_formula(atoms: &[OmegaForm]) -> OmegaForm {
    match atoms {
        [] => OmegaForm::Top,
        [one] => one.clone(),
        [head, rest @ ..] => OmegaForm::and(head.clone(), precondition_formula(rest)),
    }
}

fn instances_of(rule: &CompiledRule, universe: &BTreeSet<UserId>) -> Vec<GroundInstance> {
    let users: Vec<UserId> = universe.iter().cloned().collect();
    let mut out = Vec::new();
    let mut assignment: BTreeMap<String, UserId> = BTreeMap::new();
    ground_assignments(rule, &users, 0, &mut assignment, &mut out);
    out
}

fn ground_assignments(
    rule: &CompiledRule,
    users: &[UserId],
    idx: usize,
    assignment: &mut BTreeMap<String, UserId>,
    out: &mut Vec<GroundInstance>,
) {
    if idx == rule.variables.len() {
        if let Some(inst) = instantiate_rule(rule, assignment) {
            out.push(inst);
        }
        return;
    }
    for u in users {
        assignment.insert(rule.variables[idx].clone(), u.clone());
        ground_assignments(rule, users, idx + 1, assignment, out);
    }
    assignment.remove(&rule.variables[idx]);
}

fn instantiate_rule(
    rule: &CompiledRule,
    assignment: &BTreeMap<String, UserId>,
) -> Option<GroundInstance> {
    for (a, b) in &rule.distinct_pairs {
        if resolve_template(a, assignment) == resolve_template(b, assignment) {
            return None;
        }
    }
    let ground_imp = |t: &TemplateImp| {
        LinImp::new(
            LinAtom::new(t.resource.clone(), resolve_template(&t.from, assignment)),
            LinAtom::new(t.resource.clone(), resolve_template(&t.to, assignment)),
        )
    };
    let lhs: DeltaForm = rule.contract_lhs.iter().map(ground_imp).collect();
    // The owner never pays herself: such assignments denote no approval.
    if lhs.keys().any(|i| i.from.user == rule.owner) {
        return None;
    }
    let rhs: DeltaForm = rule.contract_rhs.iter().map(ground_imp).collect();
    let theta = ThetaForm::new(lhs, rhs);
    let precondition: Vec<OmegaForm> = rule
        .precondition
        .iter()
        .map(|p| {
            OmegaForm::pred(
                p.name.clone(),
                p.args.iter().map(|a| resolve_template(a, assignment)).collect(),
            )
        })
        .collect();
    let formula = OmegaForm::imp(
        precondition_formula(&precondition),
        OmegaForm::GTheta(theta.clone()),
    );
    Some(GroundInstance { formula, precondition, theta, owner: rule.owner.clone() })
}

/// All syntactic instances of the compiled rules over a universe,
/// preconditions kept. This is the full theory a proof's non-linear
/// context must be drawn from.
pub fn ground_instances(
    rules: &[CompiledRule],
    universe: &BTreeSet<UserId>,
) -> Vec<GroundInstance> {
    rules.iter().flat_map(|r| instances_of(r, universe)).collect()
}

/// The reusable theory: instances whose precondition atoms all hold in
/// `ctx_atoms`, deduplicated to a single occurrence per formula.
pub fn ground_rules(
    rules: &[CompiledRule],
    universe: &BTreeSet<UserId>,
    ctx_atoms: &BTreeSet<OmegaForm>,
) -> GroundedTheory {
    let mut theory = GroundedTheory::default();
    for inst in ground_instances(rules, universe) {
        if !inst.precondition.iter().all(|p| ctx_atoms.contains(p)) {
            continue;
        }
        let formula = OmegaForm::GTheta(inst.theta.clone());
        if theory.formulas.insert(formula.clone()) {
            theory.origins.insert(formula, inst);
        }
    }
    theory
}

/// Everything a valid proof may cite: every syntactic rule instance plus
/// every context atom, one occurrence each.
pub fn full_theory_omega(
    rulesets: &BTreeMap<UserId, Ruleset>,
    ctx: &Context,
    universe: &BTreeSet<UserId>,
) -> Multiset<OmegaForm> {
    let mut set: BTreeSet<OmegaForm> = BTreeSet::new();
    for rs in rulesets.values() {
        let compiled = compile_ruleset(rs);
        for inst in ground_instances(&compiled, universe) {
            set.insert(inst.formula);
        }
    }
    set.extend(compile_context(ctx));
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::muac::parse_ruleset;
    use proptest::prelude::*;

    fn user(n: &str) -> UserId {
        UserId::new(n)
    }

    fn universe3() -> BTreeSet<UserId> {
        ["Alice", "Bob", "Carl"].into_iter().map(UserId::new).collect()
    }

    #[test]
    fn rule_a1_compiles_to_the_expected_formula() {
        let rs = parse_ruleset("Gives(Me, sb, u) :- Gives(u', hw, Me)", user("Alice")).unwrap();
        let compiled = compile_ruleset(&rs);
        assert_eq!(compiled.len(), 1);
        assert_eq!(
            compiled[0].to_string(),
            "Λu, u'. ⊤ → G((hw@u ⊸ hw@Alice) ⊸* (sb@Alice ⊸ sb@u'))"
        );
    }

    #[test]
    fn rule_b3_keeps_its_predicate_guard() {
        let rs = parse_ruleset(
            "Gives(Me, lw, u) :- Gives(u, hp, Me) with is_paladin(u)",
            user("Bob"),
        )
        .unwrap();
        let compiled = compile_ruleset(&rs);
        assert_eq!(
            compiled[0].to_string(),
            "Λu. is_paladin(u) → G((hp@u ⊸ hp@Bob) ⊸* (lw@Bob ⊸ lw@u))"
        );
    }

    #[test]
    fn empty_body_compiles_to_unit_requirement() {
        let rs = parse_ruleset("Gives(Me, apple, u)", user("Alice")).unwrap();
        let compiled = compile_ruleset(&rs);
        assert_eq!(compiled[0].to_string(), "Λu. ⊤ → G(I ⊸* (apple@Alice ⊸ apple@u))");
    }

    #[test]
    fn fixture_state_compiles_to_the_expected_atoms() {
        let mut st = State::new();
        st.set(user("Alice"), ResourceId::new("sb"), 1);
        st.set(user("Bob"), ResourceId::new("lw"), 1);
        st.set(user("Carl"), ResourceId::new("hw"), 3);
        st.set(user("Carl"), ResourceId::new("hp"), 2);
        let sigma = compile_state(&st);
        let expect: SigmaForm = [
            (LinAtom::new(ResourceId::new("sb"), user("Alice")), 1),
            (LinAtom::new(ResourceId::new("lw"), user("Bob")), 1),
            (LinAtom::new(ResourceId::new("hw"), user("Carl")), 3),
            (LinAtom::new(ResourceId::new("hp"), user("Carl")), 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(sigma, expect);
        assert_eq!(decompile_state(&sigma), st);
    }

    #[test]
    fn empty_state_compiles_to_the_unit() {
        assert!(compile_state(&State::new()).is_empty());
    }

    #[test]
    fn paladin_context_compiles_to_two_atoms() {
        let mut ctx = Context::new();
        ctx.add_fact("is_paladin", vec![user("Bob")]).unwrap();
        ctx.add_fact("is_paladin", vec![user("Carl")]).unwrap();
        let atoms = compile_context(&ctx);
        let expect: BTreeSet<OmegaForm> = [
            OmegaForm::pred("is_paladin", vec![user("Bob")]),
            OmegaForm::pred("is_paladin", vec![user("Carl")]),
        ]
        .into_iter()
        .collect();
        assert_eq!(atoms, expect);
        assert!(compile_context(&Context::new()).is_empty());
    }

    #[test]
    fn binary_facts_keep_argument_order() {
        let mut ctx = Context::new();
        ctx.add_fact("friend", vec![user("Alice"), user("Bob")]).unwrap();
        let atoms = compile_context(&ctx);
        assert!(atoms.contains(&OmegaForm::pred("friend", vec![user("Alice"), user("Bob")])));
        assert!(!atoms.contains(&OmegaForm::pred("friend", vec![user("Bob"), user("Alice")])));
    }

    fn tr(g: &str, r: &str, v: &str) -> Transfer {
        Transfer { giver: user(g), resource: ResourceId::new(r), receiver: user(v) }
    }

    #[test]
    fn exchanges_encode_and_decode() {
        let exc: Exchange = [tr("Alice", "sb", "Bob")].into_iter().collect();
        let delta = encode_exchange(&exc);
        assert_eq!(delta.len(), 1);
        assert_eq!(decode_exchange(&delta).unwrap(), exc);
        assert!(encode_exchange(&Exchange::new()).is_empty());

        let circular: Exchange =
            [tr("Alice", "sb", "Bob"), tr("Bob", "lw", "Carl"), tr("Carl", "hw", "Alice")]
                .into_iter()
                .collect();
        let delta = encode_exchange(&circular);
        assert_eq!(delta.len(), 3);
        assert_eq!(decode_exchange(&delta).unwrap(), circular);
    }

    #[test]
    fn non_transfer_implications_are_rejected() {
        let bad = DeltaForm::singleton(LinImp::new(
            LinAtom::new(ResourceId::new("sb"), user("Alice")),
            LinAtom::new(ResourceId::new("lw"), user("Bob")),
        ));
        assert!(decode_exchange(&bad).is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_is_the_identity(pairs in proptest::collection::vec(
            (0u8..3, 0u8..3, 0u8..3, 1u64..3), 0..6)) {
            let mut exc = Exchange::new();
            for (g, r, v, n) in pairs {
                if g != v {
                    exc.insert(tr(&format!("u{g}"), &format!("r{r}"), &format!("u{v}")), n);
                }
            }
            prop_assert_eq!(decode_exchange(&encode_exchange(&exc)).unwrap(), exc);
        }
    }

    #[test]
    fn a1_grounds_to_four_instances() {
        let rs = parse_ruleset("Gives(Me, sb, u) :- Gives(u', hw, Me)", user("Alice")).unwrap();
        let compiled = compile_ruleset(&rs);
        let theory = ground_rules(&compiled, &universe3(), &BTreeSet::new());
        assert_eq!(theory.len(), 4);
        for f in theory.formulas() {
            assert!(matches!(f, OmegaForm::GTheta(_)));
        }
    }

    #[test]
    fn unsatisfied_preconditions_are_not_grounded() {
        let rs = parse_ruleset(
            "Gives(Me, lw, u) :- Gives(u, hp, Me) with is_paladin(u)",
            user("Bob"),
        )
        .unwrap();
        let compiled = compile_ruleset(&rs);
        assert!(ground_rules(&compiled, &universe3(), &BTreeSet::new()).is_empty());

        let ctx: BTreeSet<OmegaForm> =
            [OmegaForm::pred("is_paladin", vec![user("Carl")])].into_iter().collect();
        let theory = ground_rules(&compiled, &universe3(), &ctx);
        assert_eq!(theory.len(), 1);
    }

    #[test]
    fn unconditional_rules_ground_to_every_assignment() {
        let rs = parse_ruleset("Gives(Me, apple, u)", user("Alice")).unwrap();
        let compiled = compile_ruleset(&rs);
        let theory = ground_rules(&compiled, &universe3(), &BTreeSet::new());
        // One variable over three users, minus the owner.
        assert_eq!(theory.len(), 2);
    }

    #[test]
    fn grounding_matches_the_interpretation() {
        // Approvals of the interpreted ruleset correspond one-to-one to
        // grounded instances via payoff ⊸* grant.
        let sources = [
            ("Alice", "Gives(Me, sb, u) :- Gives(u', hw, Me)\nGives(Me, sb, u) :- Gives(u', hp, Me)"),
            ("Bob", "Gives(Me, lw, u) :- Gives(u', sb, Me)\nGives(Me, hp, u) :- Gives(u, sb, Me)"),
            ("Carl", "Gives(Me, hp, u) :- Gives(u, sb, u') with is_paladin(u')"),
        ];
        let mut ctx = Context::new();
        ctx.add_fact("is_paladin", vec![user("Bob")]).unwrap();
        ctx.add_fact("is_paladin", vec![user("Carl")]).unwrap();
        let ctx_atoms = compile_context(&ctx);

        for (owner, src) in sources {
            let rs = parse_ruleset(src, user(owner)).unwrap();
            let pol = crate::muac::interpret_ruleset(&rs, &ctx, &universe3());
            let theory = ground_rules(&compile_ruleset(&rs), &universe3(), &ctx_atoms);
            let from_approvals: BTreeSet<ThetaForm> = pol
                .approvals
                .iter()
                .map(|a| {
                    ThetaForm::new(
                        encode_exchange(&a.payoff),
                        encode_exchange(&Exchange::singleton(a.grant.clone())),
                    )
                })
                .collect();
            let from_grounding: BTreeSet<ThetaForm> = theory
                .formulas()
                .map(|f| match f {
                    OmegaForm::GTheta(t) => t.clone(),
                    other => panic!("unexpected formula {other}"),
                })
                .collect();
            assert_eq!(from_approvals, from_grounding, "mismatch for {owner}");
        }
    }

    #[test]
    fn grounding_is_monotone_in_the_context() {
        let rs = parse_ruleset(
            "Gives(Me, x, u) :- Gives(u, y, u') with p(u')",
            user("Alice"),
        )
        .unwrap();
        let compiled = compile_ruleset(&rs);
        let small: BTreeSet<OmegaForm> =
            [OmegaForm::pred("p", vec![user("Bob")])].into_iter().collect();
        let mut big = small.clone();
        big.insert(OmegaForm::pred("p", vec![user("Carl")]));
        let t_small: BTreeSet<OmegaForm> =
            ground_rules(&compiled, &universe3(), &small).formulas().cloned().collect();
        let t_big: BTreeSet<OmegaForm> =
            ground_rules(&compiled, &universe3(), &big).formulas().cloned().collect();
        assert!(t_small.is_subset(&t_big));
    }
}
