//! Proof synthesis and goal-directed search.
//!
//! A fairness certificate is turned into an explicit proof in the
//! canonical layered shape: weakenings and contractions arrange the
//! non-linear context, implications discharge rule preconditions,
//! `G`-eliminations move the selected contracts into the linear zone, a
//! chain of contract merges followed by one contract elimination
//! produces the performed exchange, and a linear leaf of tensor rules,
//! implication firings and axioms transforms the state. Multi-step
//! computations join per-step leaves with the linear cut, nesting to the
//! left.
//!
//! The same builder, fed reduced contexts, yields *sliced* proofs that
//! mention only the rule instances, context facts and atoms an exchange
//! actually touches; such proofs stay valid against the full theory by
//! monotonicity and keep their size proportional to the exchange, not to
//! the community.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;

use crate::compile::{compile_state, encode_exchange, full_theory_omega, GroundInstance};
use crate::decide::{decide, DecideConfig, DecideError, DecisionSetting, FairnessCertificate};
use crate::logic::{
    DeltaForm, LinAtom, LinImp, NLSequent, NodeSequent, OmegaForm, ProofMode, ProofNode, RuleId,
    Sequent, SigmaForm, ThetaForm,
};
use crate::model::{apply_net, Exchange, ResourceId, State, Transfer, UserId};
use crate::muac::{Context, Ruleset};
use crate::multiset::Multiset;

/// The skeleton of a synthesized proof: which grounded contracts are
/// used how often, their merge, the exchange the leaf performs, and an
/// optional step decomposition.
#[derive(Debug, Clone)]
pub struct ProofPlan {
    pub rule_instances: Vec<(GroundInstance, u64)>,
    pub merged_contract: Option<ThetaForm>,
    pub leaf_delta: DeltaForm,
    pub steps: Option<Vec<Exchange>>,
}

impl ProofPlan {
    /// Reads the plan off a certificate: selected contract columns with
    /// their provenance, merged componentwise.
    pub fn from_certificate(setting: &DecisionSetting, cert: &FairnessCertificate) -> ProofPlan {
        let sys = &setting.system;
        let mut rule_instances = Vec::new();
        for (j, coeff) in cert.y.iter().enumerate() {
            let k = coeff.to_u64().expect("small multiplicities");
            if k == 0 {
                continue;
            }
            let formula = sys.column_formula(j);
            assert!(
                matches!(formula, OmegaForm::GTheta(_)),
                "policy theories provide contracts only"
            );
            let origin = setting
                .theory
                .origin(formula)
                .expect("certificate columns come from the grounded theory")
                .clone();
            rule_instances.push((origin, k));
        }
        let merged_contract = merge_instances(&rule_instances);
        ProofPlan {
            leaf_delta: encode_exchange(&cert.exchange),
            merged_contract,
            rule_instances,
            steps: cert.firing.clone(),
        }
    }
}

fn merge_instances(instances: &[(GroundInstance, u64)]) -> Option<ThetaForm> {
    if instances.is_empty() {
        return None;
    }
    let mut lhs = DeltaForm::new();
    let mut rhs = DeltaForm::new();
    for (inst, k) in instances {
        for _ in 0..*k {
            lhs = lhs.union(&inst.theta.lhs);
            rhs = rhs.union(&inst.theta.rhs);
        }
    }
    Some(ThetaForm::new(lhs, rhs))
}

fn linear_sequent(
    omega: Multiset<OmegaForm>,
    theta: Multiset<ThetaForm>,
    delta: Multiset<DeltaForm>,
    sigma: Multiset<SigmaForm>,
    goal: SigmaForm,
) -> NodeSequent {
    NodeSequent::Linear(Sequent { omega, theta, delta, sigma, goal })
}

/// Proves `atoms ⊩ conjunction(atoms)` with axioms and right
/// conjunctions; `⊤` for the empty list.
fn nl_precondition_proof(atoms: &[OmegaForm]) -> ProofNode {
    match atoms {
        [] => ProofNode::new(
            RuleId::TopRight,
            NodeSequent::NonLinear(NLSequent { omega: Multiset::new(), goal: OmegaForm::Top }),
            vec![],
        ),
        [single] => ProofNode::new(
            RuleId::OmegaAx,
            NodeSequent::NonLinear(NLSequent {
                omega: Multiset::singleton(single.clone()),
                goal: single.clone(),
            }),
            vec![],
        ),
        [head, rest @ ..] => {
            let left = nl_precondition_proof(std::slice::from_ref(head));
            let right = nl_precondition_proof(rest);
            let l_seq = left.conclusion.as_nonlinear().unwrap();
            let r_seq = right.conclusion.as_nonlinear().unwrap();
            let conclusion = NLSequent {
                omega: l_seq.omega.union(&r_seq.omega),
                goal: OmegaForm::and(l_seq.goal.clone(), r_seq.goal.clone()),
            };
            ProofNode::new(
                RuleId::AndRight,
                NodeSequent::NonLinear(conclusion),
                vec![left, right],
            )
        }
    }
}

/// The linear leaf: fires each implication from its source atom and
/// passes the remaining atoms through, joined by right tensors.
fn linear_leaf(imps: &[LinImp], pool: &SigmaForm, goal: &SigmaForm) -> ProofNode {
    match imps.split_first() {
        Some((imp, rest)) => {
            let source = SigmaForm::singleton(imp.from.clone());
            let produced = SigmaForm::singleton(imp.to.clone());
            let axiom = ProofNode::new(
                RuleId::SigmaAx,
                linear_sequent(
                    Multiset::new(),
                    Multiset::new(),
                    Multiset::new(),
                    Multiset::singleton(source.clone()),
                    source.clone(),
                ),
                vec![],
            );
            let fired = ProofNode::new(
                RuleId::LimpLeft,
                linear_sequent(
                    Multiset::new(),
                    Multiset::new(),
                    Multiset::singleton(DeltaForm::singleton(imp.clone())),
                    Multiset::singleton(source.clone()),
                    produced.clone(),
                ),
                vec![axiom],
            );
            let rest_pool = pool
                .checked_sub(&source)
                .expect("every fired implication consumes an available atom");
            let rest_goal = goal
                .checked_sub(&produced)
                .expect("every produced atom appears in the goal");
            if rest.is_empty() && rest_pool.is_empty() && rest_goal.is_empty() {
                return fired;
            }
            let remainder = linear_leaf(rest, &rest_pool, &rest_goal);
            tensor_join(fired, remainder)
        }
        None => {
            if pool.is_empty() {
                debug_assert!(goal.is_empty());
                return ProofNode::new(
                    RuleId::IRight,
                    linear_sequent(
                        Multiset::new(),
                        Multiset::new(),
                        Multiset::new(),
                        Multiset::new(),
                        SigmaForm::new(),
                    ),
                    vec![],
                );
            }
            let atom = pool.keys().next().cloned().expect("nonempty pool");
            let single = SigmaForm::singleton(atom);
            let axiom = ProofNode::new(
                RuleId::SigmaAx,
                linear_sequent(
                    Multiset::new(),
                    Multiset::new(),
                    Multiset::new(),
                    Multiset::singleton(single.clone()),
                    single.clone(),
                ),
                vec![],
            );
            let rest_pool = pool.checked_sub(&single).unwrap();
            if rest_pool.is_empty() {
                return axiom;
            }
            let rest_goal = goal
                .checked_sub(&single)
                .expect("pass-through atoms appear in the goal");
            let remainder = linear_leaf(&[], &rest_pool, &rest_goal);
            tensor_join(axiom, remainder)
        }
    }
}

fn tensor_join(left: ProofNode, right: ProofNode) -> ProofNode {
    let l = left.conclusion.as_linear().unwrap();
    let r = right.conclusion.as_linear().unwrap();
    debug_assert_eq!(l.omega, r.omega);
    let conclusion = linear_sequent(
        l.omega.clone(),
        l.theta.union(&r.theta),
        l.delta.union(&r.delta),
        l.sigma.union(&r.sigma),
        l.goal.union(&r.goal),
    );
    ProofNode::new(RuleId::OtimesRight, conclusion, vec![left, right])
}

/// Adds a node below `premise`, replacing two Σ elements by their join.
fn wrap_sigma_join(premise: ProofNode, part1: &SigmaForm, part2: &SigmaForm) -> ProofNode {
    let p = premise.conclusion.as_linear().unwrap();
    let mut sigma = p.sigma.clone();
    assert!(sigma.remove(part1, 1) == 1 && sigma.remove(part2, 1) == 1);
    sigma.insert(part1.union(part2), 1);
    let conclusion = linear_sequent(
        p.omega.clone(),
        p.theta.clone(),
        p.delta.clone(),
        sigma,
        p.goal.clone(),
    );
    ProofNode::new(RuleId::OtimesLeftSigma, conclusion, vec![premise])
}

fn wrap_delta_join(premise: ProofNode, part1: &DeltaForm, part2: &DeltaForm) -> ProofNode {
    let p = premise.conclusion.as_linear().unwrap();
    let mut delta = p.delta.clone();
    assert!(delta.remove(part1, 1) == 1 && delta.remove(part2, 1) == 1);
    delta.insert(part1.union(part2), 1);
    let conclusion = linear_sequent(
        p.omega.clone(),
        p.theta.clone(),
        delta,
        p.sigma.clone(),
        p.goal.clone(),
    );
    ProofNode::new(RuleId::OtimesLeftDelta, conclusion, vec![premise])
}

fn wrap_contract_left(premise: ProofNode, theta: &ThetaForm) -> ProofNode {
    let p = premise.conclusion.as_linear().unwrap();
    let mut delta = p.delta.clone();
    delta.remove(&theta.rhs, 1);
    let conclusion = linear_sequent(
        p.omega.clone(),
        p.theta.union(&Multiset::singleton(theta.clone())),
        delta,
        p.sigma.clone(),
        p.goal.clone(),
    );
    ProofNode::new(RuleId::ContractLeft, conclusion, vec![premise])
}

fn wrap_contract_split(premise: ProofNode, merged: &ThetaForm, t1: &ThetaForm, t2: &ThetaForm) -> ProofNode {
    let p = premise.conclusion.as_linear().unwrap();
    let mut theta = p.theta.clone();
    theta.remove(merged, 1);
    theta.insert(t1.clone(), 1);
    theta.insert(t2.clone(), 1);
    let conclusion = linear_sequent(
        p.omega.clone(),
        theta,
        p.delta.clone(),
        p.sigma.clone(),
        p.goal.clone(),
    );
    ProofNode::new(RuleId::ContractSplit, conclusion, vec![premise])
}

fn wrap_g_left_theta(premise: ProofNode, theta: &ThetaForm) -> ProofNode {
    let p = premise.conclusion.as_linear().unwrap();
    let mut theta_ctx = p.theta.clone();
    theta_ctx.remove(theta, 1);
    let conclusion = linear_sequent(
        p.omega.union(&Multiset::singleton(OmegaForm::GTheta(theta.clone()))),
        theta_ctx,
        p.delta.clone(),
        p.sigma.clone(),
        p.goal.clone(),
    );
    ProofNode::new(RuleId::GLeftTheta, conclusion, vec![premise])
}

fn wrap_imp_left(premise: ProofNode, inst: &GroundInstance) -> ProofNode {
    let nl = nl_precondition_proof(&inst.precondition);
    let nl_omega = nl.conclusion.as_nonlinear().unwrap().omega.clone();
    let p = premise.conclusion.as_linear().unwrap();
    let mut omega = p.omega.clone();
    omega.remove(&OmegaForm::GTheta(inst.theta.clone()), 1);
    omega = omega.union(&nl_omega);
    omega.insert(inst.formula.clone(), 1);
    let conclusion = linear_sequent(
        omega,
        p.theta.clone(),
        p.delta.clone(),
        p.sigma.clone(),
        p.goal.clone(),
    );
    ProofNode::new(RuleId::LImpLeft, conclusion, vec![nl, premise])
}

fn wrap_l_cont(premise: ProofNode, formula: &OmegaForm) -> ProofNode {
    let p = premise.conclusion.as_linear().unwrap();
    let mut omega = p.omega.clone();
    omega.remove(formula, 1);
    let conclusion = linear_sequent(
        omega,
        p.theta.clone(),
        p.delta.clone(),
        p.sigma.clone(),
        p.goal.clone(),
    );
    ProofNode::new(RuleId::LCont, conclusion, vec![premise])
}

fn wrap_l_weak(premise: ProofNode, formula: &OmegaForm) -> ProofNode {
    let p = premise.conclusion.as_linear().unwrap();
    let conclusion = linear_sequent(
        p.omega.union(&Multiset::singleton(formula.clone())),
        p.theta.clone(),
        p.delta.clone(),
        p.sigma.clone(),
        p.goal.clone(),
    );
    ProofNode::new(RuleId::LWeak, conclusion, vec![premise])
}

fn wrap_star_cut(left: ProofNode, right: ProofNode) -> ProofNode {
    let l = left.conclusion.as_linear().unwrap();
    let r = right.conclusion.as_linear().unwrap();
    let mut sigma = r.sigma.clone();
    assert_eq!(sigma.remove(&l.goal, 1), 1, "the cut state must chain");
    let conclusion = linear_sequent(
        l.omega.union(&r.omega),
        l.theta.union(&r.theta),
        l.delta.union(&r.delta),
        l.sigma.union(&sigma),
        r.goal.clone(),
    );
    ProofNode::new(RuleId::StarCut, conclusion, vec![left, right])
}

/// Builds the proof tree a plan describes, mechanically: no side
/// condition is verified here — the checker is the judge. `sigma_pool`
/// is the multiset of state atoms placed in the root context, and must
/// cover what the leaf consumes; `goal` is the root goal.
pub fn proof_from_plan(
    plan: &ProofPlan,
    omega_root: &Multiset<OmegaForm>,
    sigma_pool: &SigmaForm,
    goal: &SigmaForm,
) -> ProofNode {
    // Step decomposition; a single step means no linear cut.
    let steps: Vec<Exchange> = match &plan.steps {
        Some(steps) if steps.len() > 1 => steps.clone(),
        _ => {
            let mut only = Vec::new();
            let exchange = crate::compile::decode_exchange(&plan.leaf_delta)
                .expect("leaf exchanges decode");
            if !exchange.is_empty() {
                only.push(exchange);
            }
            only
        }
    };

    let mut node = build_leaf_chain(&steps, sigma_pool, goal);

    if let Some(merged) = &plan.merged_contract {
        // Join the fired implications into the single promised exchange.
        let occurrences: Vec<LinImp> = plan.leaf_delta.occurrences().cloned().collect();
        let mut combined = DeltaForm::new();
        for (i, imp) in occurrences.iter().enumerate() {
            let single = DeltaForm::singleton(imp.clone());
            if i == 0 {
                combined = single;
            } else {
                node = wrap_delta_join(node, &combined, &single);
                combined = combined.union(&single);
            }
        }
        node = wrap_contract_left(node, merged);

        // Split the merged contract back into instance occurrences.
        let mut occurrences: Vec<ThetaForm> = Vec::new();
        for (inst, k) in &plan.rule_instances {
            for _ in 0..*k {
                occurrences.push(inst.theta.clone());
            }
        }
        let mut combined = merged.clone();
        for i in (1..occurrences.len()).rev() {
            let rest = ThetaForm::new(
                combined.lhs.checked_sub(&occurrences[i].lhs).unwrap_or_default(),
                combined.rhs.checked_sub(&occurrences[i].rhs).unwrap_or_default(),
            );
            node = wrap_contract_split(node, &combined, &rest, &occurrences[i]);
            combined = rest;
        }

        // Move every occurrence out of the reusable zone, then discharge
        // its precondition.
        for theta in &occurrences {
            node = wrap_g_left_theta(node, theta);
        }
        for (inst, k) in &plan.rule_instances {
            for _ in 0..*k {
                node = wrap_imp_left(node, inst);
            }
        }
    }

    // Contract duplicates down to single occurrences, then weaken in the
    // rest of the root context.
    let current: Vec<(OmegaForm, u64)> = node
        .conclusion
        .as_linear()
        .unwrap()
        .omega
        .iter()
        .map(|(w, n)| (w.clone(), n))
        .collect();
    for (w, n) in current {
        let keep = omega_root.count(&w).max(1);
        for _ in keep..n {
            node = wrap_l_cont(node, &w);
        }
    }
    let have = node.conclusion.as_linear().unwrap().omega.clone();
    for (w, n) in omega_root.iter() {
        for _ in have.count(w)..n {
            node = wrap_l_weak(node, w);
        }
    }
    node
}

/// Per-step leaves chained by linear cuts, nesting left. `sigma_pool` is
/// distributed to the steps: each draws what it needs first from the
/// chained state, then from the pool.
fn build_leaf_chain(steps: &[Exchange], sigma_pool: &SigmaForm, goal: &SigmaForm) -> ProofNode {
    if steps.is_empty() {
        return linear_leaf(&[], sigma_pool, goal);
    }
    let mut remaining_pool = sigma_pool.clone();
    let mut chain: Option<ProofNode> = None;
    let mut carried = SigmaForm::new();
    for (i, step) in steps.iter().enumerate() {
        let delta = encode_exchange(step);
        let imps: Vec<LinImp> = delta.occurrences().cloned().collect();
        let sources: SigmaForm = imps.iter().map(|imp| imp.from.clone()).collect();
        let produced: SigmaForm = imps.iter().map(|imp| imp.to.clone()).collect();

        // What this step takes from the chained state vs fresh atoms.
        let from_chain = if i == 0 { SigmaForm::new() } else { carried.clone() };
        let fresh_need = sources.saturating_sub(&from_chain);
        let fresh: SigmaForm = if i + 1 == steps.len() {
            // The last step absorbs every remaining root atom.
            std::mem::take(&mut remaining_pool)
        } else {
            let taken = fresh_need.clone();
            remaining_pool = remaining_pool
                .checked_sub(&taken)
                .expect("the pool covers each step's fresh needs");
            taken
        };
        let pool_i = from_chain.union(&fresh);
        let value = pool_i
            .checked_sub(&sources)
            .expect("each step consumes available atoms")
            .union(&produced);

        let mut leaf = linear_leaf(&imps, &pool_i, &value);
        if i > 0 && !carried.is_empty() {
            // Merge the chained atoms back into the single cut formula.
            let parts: Vec<LinAtom> = carried.occurrences().cloned().collect();
            let mut combined = SigmaForm::singleton(parts[0].clone());
            for atom in &parts[1..] {
                let single = SigmaForm::singleton(atom.clone());
                leaf = wrap_sigma_join(leaf, &combined, &single);
                combined = combined.union(&single);
            }
        }
        chain = Some(match chain {
            None => leaf,
            Some(prev) => wrap_star_cut(prev, leaf),
        });
        carried = value;
    }
    let node = chain.expect("at least one step");
    debug_assert_eq!(node.conclusion.as_linear().unwrap().goal, *goal);
    node
}

/// Synthesizes the full proof of a certificate: the conclusion carries
/// every rule instance and context fact, the whole starting state, and
/// the complete target state.
pub fn synthesize_proof(
    cert: &FairnessCertificate,
    setting: &DecisionSetting,
    rulesets: &BTreeMap<UserId, Ruleset>,
    ctx: &Context,
    universe: &BTreeSet<UserId>,
    st: &State,
    st_target: &State,
    mode: ProofMode,
) -> ProofNode {
    let mut plan = ProofPlan::from_certificate(setting, cert);
    if mode == ProofMode::Strict {
        plan.steps = None;
    }
    let omega_root = full_theory_omega(rulesets, ctx, universe);
    let sigma = compile_state(st);
    let goal = compile_state(st_target);
    let proof = proof_from_plan(&plan, &omega_root, &sigma, &goal);
    debug_assert!(crate::logic::check_proof(&proof, mode).is_ok());
    proof
}

/// The reduced contexts a certificate actually uses: its rule instances
/// and their context facts, the atoms the exchange consumes, and the
/// atoms it produces.
pub fn slice(
    setting: &DecisionSetting,
    cert: &FairnessCertificate,
    st: &State,
) -> (Multiset<OmegaForm>, SigmaForm, ProofNode) {
    let plan = ProofPlan::from_certificate(setting, cert);

    let mut omega_min: BTreeSet<OmegaForm> = BTreeSet::new();
    for (inst, _) in &plan.rule_instances {
        omega_min.insert(inst.formula.clone());
        omega_min.extend(inst.precondition.iter().cloned());
    }
    let omega_min: Multiset<OmegaForm> = omega_min.into_iter().collect();

    // Fresh atoms drawn from the state, step by step; later steps feed
    // on earlier products first.
    let steps: Vec<Exchange> = match &plan.steps {
        Some(steps) if steps.len() > 1 => steps.clone(),
        _ if plan.leaf_delta.is_empty() => Vec::new(),
        _ => vec![crate::compile::decode_exchange(&plan.leaf_delta).unwrap()],
    };
    let mut sigma_min = SigmaForm::new();
    let mut carried = SigmaForm::new();
    for step in &steps {
        let delta = encode_exchange(step);
        let sources: SigmaForm = delta.occurrences().map(|i| i.from.clone()).collect();
        let produced: SigmaForm = delta.occurrences().map(|i| i.to.clone()).collect();
        let fresh = sources.saturating_sub(&carried);
        sigma_min = sigma_min.union(&fresh);
        carried = carried.union(&fresh).checked_sub(&sources).unwrap().union(&produced);
    }
    let goal_min = carried;
    debug_assert!(sigma_min.is_subset(&compile_state(st)));

    let proof = proof_from_plan(&plan, &omega_min, &sigma_min, &goal_min);
    (omega_min, sigma_min, proof)
}

/// Successful outcome of the goal-directed search: a step decomposition,
/// the state it reaches, and its verifying proof.
#[derive(Debug, Clone)]
pub struct FairStOutcome {
    pub firing: Vec<Exchange>,
    pub st_target: State,
    pub proof: ProofNode,
    pub certificate: FairnessCertificate,
}

/// Finds a fair computation granting `usr` at least one of each
/// requested resource, trying exchanges in increasing size up to `cap`
/// transfers, and returns the first hit with its proof. In strict mode
/// only single-transition computations qualify. `Ok(None)` means no such
/// computation exists within the cap.
pub fn fair_st(
    rulesets: &BTreeMap<UserId, Ruleset>,
    ctx: &Context,
    universe: &BTreeSet<UserId>,
    st: &State,
    usr: &UserId,
    goals: &[ResourceId],
    cap: u64,
    mode: ProofMode,
) -> Result<Option<FairStOutcome>, DecideError> {
    assert!(!goals.is_empty(), "the request must name at least one resource");
    let setting = DecisionSetting::new(rulesets, ctx, universe);
    let config = DecideConfig { exchange_cap: cap, ..DecideConfig::default() };

    let satisfied = |state: &State| goals.iter().all(|r| state.count(usr, r) >= 1);

    if satisfied(st) {
        let cert = decide(&setting, st, st, mode, &config)?.expect("staying put is always fair");
        let proof = synthesize_proof(&cert, &setting, rulesets, ctx, universe, st, st, mode);
        return Ok(Some(FairStOutcome {
            firing: Vec::new(),
            st_target: st.clone(),
            proof,
            certificate: cert,
        }));
    }

    let mut candidates = candidate_multisets(&setting, cap);
    candidates.sort_by_key(|exc| (exc.len(), exc.clone()));

    for exc in candidates {
        let Some(st_target) = apply_net(st, &exc) else { continue };
        if !satisfied(&st_target) {
            continue;
        }
        let Some(cert) = crate::decide::certificate_for_exchange(&setting, st, &exc, mode, &config)?
        else {
            continue;
        };
        let steps = match &cert.firing {
            Some(steps) => steps.clone(),
            None => vec![cert.exchange.clone()],
        };
        let proof =
            synthesize_proof(&cert, &setting, rulesets, ctx, universe, st, &st_target, mode);
        return Ok(Some(FairStOutcome { firing: steps, st_target, proof, certificate: cert }));
    }
    Ok(None)
}

/// Every multiset of performable transfers with at most `cap`
/// occurrences.
fn candidate_multisets(setting: &DecisionSetting, cap: u64) -> Vec<Exchange> {
    let mut performable: BTreeSet<Transfer> = BTreeSet::new();
    for j in 0..setting.system.column_count() {
        let formula = setting.system.column_formula(j);
        let delta = match formula {
            OmegaForm::GDelta(d) => d.clone(),
            OmegaForm::GTheta(t) => t.rhs.clone(),
            _ => continue,
        };
        if let Ok(exc) = crate::compile::decode_exchange(&delta) {
            performable.extend(exc.keys().cloned());
        }
    }
    let transfers: Vec<Transfer> = performable.into_iter().collect();
    let mut out = Vec::new();
    let mut current = Exchange::new();
    fn rec(transfers: &[Transfer], idx: usize, budget: u64, current: &mut Exchange, out: &mut Vec<Exchange>) {
        if idx == transfers.len() {
            out.push(current.clone());
            return;
        }
        for n in 0..=budget {
            if n > 0 {
                current.insert(transfers[idx].clone(), 1);
            }
            rec(transfers, idx + 1, budget - n, current, out);
        }
        current.remove(&transfers[idx], budget);
    }
    rec(&transfers, 0, cap, &mut current, &mut out);
    out
}
