//! Local, per-node proof validation.
//!
//! Every node carries its full conclusion, so a node is checked by
//! relating its conclusion to its premises' conclusions through multiset
//! differences — no search over the tree and no re-derivation of
//! intermediate sequents. The whole check visits each node exactly once.

use std::collections::BTreeSet;

use crate::multiset::Multiset;

use super::{
    asub_delta, asub_omega, quantity, LinAtom, NLSequent, NodeSequent, OmegaForm, ProofMode,
    ProofNode, RuleId, Sequent, SigmaForm, ThetaForm,
};

/// Why a node failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvalidReason {
    RuleMismatch(String),
    SideConditionFailed(String),
    ArityMismatch { expected: usize, found: usize },
    StarCutForbidden,
}

/// A failing node, addressed by the premise indices from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invalid {
    pub path: Vec<usize>,
    pub reason: InvalidReason,
}

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let path: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        let reason = match &self.reason {
            InvalidReason::RuleMismatch(m) => format!("rule mismatch: {m}"),
            InvalidReason::SideConditionFailed(m) => format!("side condition failed: {m}"),
            InvalidReason::ArityMismatch { expected, found } => {
                format!("premise arity mismatch: expected {expected}, found {found}")
            }
            InvalidReason::StarCutForbidden => "star-cut is forbidden in strict mode".into(),
        };
        write!(f, "invalid proof node at [{}]: {}", path.join("."), reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckStats {
    pub nodes: usize,
}

type NodeResult = Result<(), InvalidReason>;

/// Checks every node of a proof. In [`ProofMode::Strict`] any `star-cut`
/// node is rejected.
pub fn check_proof(p: &ProofNode, mode: ProofMode) -> Result<CheckStats, Invalid> {
    let mut nodes = 0usize;
    let mut path = Vec::new();
    walk(p, mode, &mut path, &mut nodes)?;
    debug_assert!(initial_sequent_invariants(p).is_ok(), "accepted proof breaks conservation");
    Ok(CheckStats { nodes })
}

fn walk(
    p: &ProofNode,
    mode: ProofMode,
    path: &mut Vec<usize>,
    nodes: &mut usize,
) -> Result<(), Invalid> {
    *nodes += 1;
    check_node(p, mode).map_err(|reason| Invalid { path: path.clone(), reason })?;
    for (i, prem) in p.premises.iter().enumerate() {
        path.push(i);
        walk(prem, mode, path, nodes)?;
        path.pop();
    }
    Ok(())
}

fn mismatch(msg: impl Into<String>) -> InvalidReason {
    InvalidReason::RuleMismatch(msg.into())
}

fn arity(p: &ProofNode, expected: usize) -> NodeResult {
    if p.premises.len() != expected {
        return Err(InvalidReason::ArityMismatch { expected, found: p.premises.len() });
    }
    Ok(())
}

fn linear<'a>(p: &'a ProofNode) -> Result<&'a Sequent, InvalidReason> {
    p.conclusion.as_linear().ok_or_else(|| mismatch("expected a linear sequent"))
}

fn nonlinear<'a>(p: &'a ProofNode) -> Result<&'a NLSequent, InvalidReason> {
    p.conclusion.as_nonlinear().ok_or_else(|| mismatch("expected a non-linear sequent"))
}

/// Both one-sided multiset differences.
fn diff<T: Ord + Clone>(a: &Multiset<T>, b: &Multiset<T>) -> (Multiset<T>, Multiset<T>) {
    (a.saturating_sub(b), b.saturating_sub(a))
}

fn sole<T: Ord + Clone>(m: &Multiset<T>) -> Option<T> {
    if m.len() == 1 {
        m.keys().next().cloned()
    } else {
        None
    }
}

fn check_node(p: &ProofNode, mode: ProofMode) -> NodeResult {
    match p.rule {
        RuleId::TopRight => {
            arity(p, 0)?;
            let c = nonlinear(p)?;
            if c.goal != OmegaForm::Top {
                return Err(mismatch("goal is not ⊤"));
            }
            if !c.omega.is_empty() {
                return Err(mismatch("top-right requires an empty context"));
            }
            Ok(())
        }
        RuleId::OmegaAx => {
            arity(p, 0)?;
            let c = nonlinear(p)?;
            if c.omega != Multiset::singleton(c.goal.clone()) {
                return Err(mismatch("omega-ax requires context = goal"));
            }
            Ok(())
        }
        RuleId::Cont => {
            arity(p, 1)?;
            let c = nonlinear(p)?;
            let q = nonlinear(&p.premises[0])?;
            if c.goal != q.goal {
                return Err(mismatch("goal changed"));
            }
            nl_contraction(&c.omega, &q.omega)
        }
        RuleId::Weak => {
            arity(p, 1)?;
            let c = nonlinear(p)?;
            let q = nonlinear(&p.premises[0])?;
            if c.goal != q.goal {
                return Err(mismatch("goal changed"));
            }
            nl_weakening(&c.omega, &q.omega)
        }
        RuleId::AndLeft1 | RuleId::AndLeft2 => {
            arity(p, 1)?;
            let c = nonlinear(p)?;
            let q = nonlinear(&p.premises[0])?;
            if c.goal != q.goal {
                return Err(mismatch("goal changed"));
            }
            nl_and_left(&c.omega, &q.omega, p.rule == RuleId::AndLeft1)
        }
        RuleId::AndRight => {
            arity(p, 2)?;
            let c = nonlinear(p)?;
            let l = nonlinear(&p.premises[0])?;
            let r = nonlinear(&p.premises[1])?;
            let OmegaForm::And(a, b) = &c.goal else {
                return Err(mismatch("goal is not a conjunction"));
            };
            if l.goal != **a || r.goal != **b {
                return Err(mismatch("premise goals do not match the conjuncts"));
            }
            if c.omega != l.omega.union(&r.omega) {
                return Err(mismatch("context is not the union of the premises"));
            }
            Ok(())
        }
        RuleId::ImpLeft => {
            arity(p, 2)?;
            let c = nonlinear(p)?;
            let l = nonlinear(&p.premises[0])?;
            let r = nonlinear(&p.premises[1])?;
            if c.goal != r.goal {
                return Err(mismatch("goal changed"));
            }
            nl_imp_left(&c.omega, &l.omega, &l.goal, &r.omega)
        }
        RuleId::ImpRight => {
            arity(p, 1)?;
            let c = nonlinear(p)?;
            let q = nonlinear(&p.premises[0])?;
            let OmegaForm::Imp(a, b) = &c.goal else {
                return Err(mismatch("goal is not an implication"));
            };
            if q.goal != **b {
                return Err(mismatch("premise goal is not the consequent"));
            }
            if q.omega != c.omega.union(&Multiset::singleton((**a).clone())) {
                return Err(mismatch("premise context must add the antecedent"));
            }
            Ok(())
        }
        RuleId::LCont | RuleId::LWeak | RuleId::LAndLeft1 | RuleId::LAndLeft2 => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if (c.theta.clone(), c.delta.clone(), c.sigma.clone(), c.goal.clone())
                != (q.theta.clone(), q.delta.clone(), q.sigma.clone(), q.goal.clone())
            {
                return Err(mismatch("linear compartments changed"));
            }
            match p.rule {
                RuleId::LCont => nl_contraction(&c.omega, &q.omega),
                RuleId::LWeak => nl_weakening(&c.omega, &q.omega),
                RuleId::LAndLeft1 => nl_and_left(&c.omega, &q.omega, true),
                _ => nl_and_left(&c.omega, &q.omega, false),
            }
        }
        RuleId::LImpLeft => {
            arity(p, 2)?;
            let c = linear(p)?;
            let l = nonlinear(&p.premises[0])?;
            let r = linear(&p.premises[1])?;
            if (c.theta.clone(), c.delta.clone(), c.sigma.clone(), c.goal.clone())
                != (r.theta.clone(), r.delta.clone(), r.sigma.clone(), r.goal.clone())
            {
                return Err(mismatch("linear compartments changed"));
            }
            nl_imp_left(&c.omega, &l.omega, &l.goal, &r.omega)
        }
        RuleId::OmegaCut => {
            arity(p, 2)?;
            let c = linear(p)?;
            let l = nonlinear(&p.premises[0])?;
            let r = linear(&p.premises[1])?;
            if (c.theta.clone(), c.delta.clone(), c.sigma.clone(), c.goal.clone())
                != (r.theta.clone(), r.delta.clone(), r.sigma.clone(), r.goal.clone())
            {
                return Err(mismatch("linear compartments changed"));
            }
            if !r.omega.contains(&l.goal) {
                return Err(mismatch("cut formula missing from the right premise"));
            }
            let mut rest = r.omega.clone();
            rest.remove(&l.goal, 1);
            if c.omega != l.omega.union(&rest) {
                return Err(mismatch("context is not the union after the cut"));
            }
            Ok(())
        }
        RuleId::IRight => {
            arity(p, 0)?;
            let c = linear(p)?;
            if !(c.omega.is_empty()
                && c.theta.is_empty()
                && c.delta.is_empty()
                && c.sigma.is_empty()
                && c.goal.is_empty())
            {
                return Err(mismatch("i-right proves exactly ⊢ I"));
            }
            Ok(())
        }
        RuleId::SigmaAx => {
            arity(p, 0)?;
            let c = linear(p)?;
            if !c.theta.is_empty() || !c.delta.is_empty() {
                return Err(mismatch("sigma-ax allows no contracts or exchanges"));
            }
            let Some(element) = sole(&c.sigma) else {
                return Err(mismatch("sigma-ax requires a single context formula"));
            };
            if element.len() != 1 || element != c.goal {
                return Err(mismatch("sigma-ax proves an atom from itself"));
            }
            Ok(())
        }
        RuleId::OtimesLeftTheta => {
            // Contracts are not tensor-closed; with tensors read as
            // multisets the rule degenerates to the identity.
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if c != q {
                return Err(mismatch("theta contexts are already in multiset form"));
            }
            Ok(())
        }
        RuleId::OtimesLeftDelta => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if (c.omega.clone(), c.theta.clone(), c.sigma.clone(), c.goal.clone())
                != (q.omega.clone(), q.theta.clone(), q.sigma.clone(), q.goal.clone())
            {
                return Err(mismatch("other compartments changed"));
            }
            tensor_split(&c.delta, &q.delta)
        }
        RuleId::OtimesLeftSigma => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if (c.omega.clone(), c.theta.clone(), c.delta.clone(), c.goal.clone())
                != (q.omega.clone(), q.theta.clone(), q.delta.clone(), q.goal.clone())
            {
                return Err(mismatch("other compartments changed"));
            }
            tensor_split(&c.sigma, &q.sigma)
        }
        RuleId::OtimesRight => {
            arity(p, 2)?;
            let c = linear(p)?;
            let l = linear(&p.premises[0])?;
            let r = linear(&p.premises[1])?;
            if l.omega != c.omega || r.omega != c.omega {
                return Err(mismatch("otimes-right shares the non-linear context"));
            }
            if c.theta != l.theta.union(&r.theta)
                || c.delta != l.delta.union(&r.delta)
                || c.sigma != l.sigma.union(&r.sigma)
            {
                return Err(mismatch("linear contexts do not split"));
            }
            if c.goal != l.goal.union(&r.goal) {
                return Err(mismatch("goal is not the tensor of the premise goals"));
            }
            Ok(())
        }
        RuleId::LimpLeft => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if !c.theta.is_empty() {
                return Err(mismatch("limp-left carries no contracts"));
            }
            let Some(delta_elem) = sole(&c.delta) else {
                return Err(mismatch("limp-left consumes exactly one implication"));
            };
            let Some(imp) = sole(&delta_elem) else {
                return Err(mismatch("the consumed exchange must be a single implication"));
            };
            if !q.theta.is_empty() || !q.delta.is_empty() {
                return Err(mismatch("premise must have no contracts or exchanges"));
            }
            if q.omega != c.omega || q.sigma != c.sigma {
                return Err(mismatch("contexts changed"));
            }
            if q.goal != SigmaForm::singleton(imp.from.clone())
                || c.goal != SigmaForm::singleton(imp.to.clone())
            {
                return Err(mismatch("goals do not follow the implication"));
            }
            Ok(())
        }
        RuleId::ContractLeft => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if c.omega != q.omega || c.sigma != q.sigma || c.goal != q.goal {
                return Err(mismatch("other compartments changed"));
            }
            let (removed_theta, added_theta) = diff(&c.theta, &q.theta);
            if !added_theta.is_empty() {
                return Err(mismatch("premise gained contracts"));
            }
            let Some(theta) = sole(&removed_theta) else {
                return Err(mismatch("exactly one contract must be consumed"));
            };
            let (removed_delta, added_delta) = diff(&c.delta, &q.delta);
            if !removed_delta.is_empty() || added_delta != Multiset::singleton(theta.rhs.clone()) {
                return Err(mismatch("premise must gain exactly the promised exchange"));
            }
            if !theta.lhs.is_subset(&theta.rhs) {
                return Err(InvalidReason::SideConditionFailed(format!(
                    "required exchange not covered by the promise: {theta}"
                )));
            }
            Ok(())
        }
        RuleId::ContractSplit => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if c.omega != q.omega
                || c.delta != q.delta
                || c.sigma != q.sigma
                || c.goal != q.goal
            {
                return Err(mismatch("other compartments changed"));
            }
            let (removed, added) = diff(&c.theta, &q.theta);
            let Some(merged) = sole(&added) else {
                return Err(mismatch("premise must gain exactly one merged contract"));
            };
            if removed.len() != 2 {
                return Err(mismatch("exactly two contracts merge"));
            }
            let parts: Vec<ThetaForm> = removed.occurrences().cloned().collect();
            if merged.lhs != parts[0].lhs.union(&parts[1].lhs)
                || merged.rhs != parts[0].rhs.union(&parts[1].rhs)
            {
                return Err(mismatch("merged contract is not the componentwise union"));
            }
            Ok(())
        }
        RuleId::GLeftTheta => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if c.delta != q.delta || c.sigma != q.sigma || c.goal != q.goal {
                return Err(mismatch("other compartments changed"));
            }
            let (removed, added) = diff(&c.omega, &q.omega);
            if !added.is_empty() {
                return Err(mismatch("premise gained non-linear formulas"));
            }
            let Some(OmegaForm::GTheta(theta)) = sole(&removed) else {
                return Err(mismatch("exactly one G(θ) must move"));
            };
            if q.theta != c.theta.union(&Multiset::singleton(theta)) {
                return Err(mismatch("the contract does not appear in the premise"));
            }
            Ok(())
        }
        RuleId::GLeftDelta => {
            arity(p, 1)?;
            let c = linear(p)?;
            let q = linear(&p.premises[0])?;
            if c.theta != q.theta || c.sigma != q.sigma || c.goal != q.goal {
                return Err(mismatch("other compartments changed"));
            }
            let (removed, added) = diff(&c.omega, &q.omega);
            if !added.is_empty() {
                return Err(mismatch("premise gained non-linear formulas"));
            }
            let Some(OmegaForm::GDelta(delta)) = sole(&removed) else {
                return Err(mismatch("exactly one G(δ) must move"));
            };
            if q.delta != c.delta.union(&Multiset::singleton(delta)) {
                return Err(mismatch("the exchange does not appear in the premise"));
            }
            Ok(())
        }
        RuleId::StarCut => {
            if mode == ProofMode::Strict {
                return Err(InvalidReason::StarCutForbidden);
            }
            arity(p, 2)?;
            let c = linear(p)?;
            let l = linear(&p.premises[0])?;
            let r = linear(&p.premises[1])?;
            if c.goal != r.goal {
                return Err(mismatch("goal changed"));
            }
            if !r.sigma.contains(&l.goal) {
                return Err(mismatch("cut state missing from the right premise"));
            }
            let mut right_sigma = r.sigma.clone();
            right_sigma.remove(&l.goal, 1);
            if c.omega != l.omega.union(&r.omega)
                || c.theta != l.theta.union(&r.theta)
                || c.delta != l.delta.union(&r.delta)
                || c.sigma != l.sigma.union(&right_sigma)
            {
                return Err(mismatch("contexts do not split across the cut"));
            }
            Ok(())
        }
    }
}

fn nl_contraction(conclusion: &Multiset<OmegaForm>, premise: &Multiset<OmegaForm>) -> NodeResult {
    let (removed, added) = diff(conclusion, premise);
    if !removed.is_empty() {
        return Err(mismatch("contraction cannot drop formulas"));
    }
    let Some(w) = sole(&added) else {
        return Err(mismatch("contraction duplicates exactly one formula"));
    };
    if !conclusion.contains(&w) {
        return Err(mismatch("the duplicated formula must be present"));
    }
    Ok(())
}

fn nl_weakening(conclusion: &Multiset<OmegaForm>, premise: &Multiset<OmegaForm>) -> NodeResult {
    let (removed, added) = diff(conclusion, premise);
    if !added.is_empty() {
        return Err(mismatch("weakening cannot add formulas"));
    }
    if sole(&removed).is_none() {
        return Err(mismatch("weakening discards exactly one formula"));
    }
    Ok(())
}

fn nl_and_left(
    conclusion: &Multiset<OmegaForm>,
    premise: &Multiset<OmegaForm>,
    left_side: bool,
) -> NodeResult {
    let (removed, added) = diff(conclusion, premise);
    let Some(OmegaForm::And(a, b)) = sole(&removed) else {
        return Err(mismatch("exactly one conjunction must be consumed"));
    };
    let expected = if left_side { *a } else { *b };
    if added != Multiset::singleton(expected) {
        return Err(mismatch("premise must gain the selected conjunct"));
    }
    Ok(())
}

fn nl_imp_left(
    conclusion: &Multiset<OmegaForm>,
    left_omega: &Multiset<OmegaForm>,
    left_goal: &OmegaForm,
    right_omega: &Multiset<OmegaForm>,
) -> NodeResult {
    // The consequent is not identified by the node; try every candidate.
    for b in right_omega.keys() {
        let imp = OmegaForm::imp(left_goal.clone(), b.clone());
        let mut rest = right_omega.clone();
        rest.remove(b, 1);
        if *conclusion == left_omega.union(&rest).union(&Multiset::singleton(imp)) {
            return Ok(());
        }
    }
    Err(mismatch("no implication matches the premises"))
}

/// One context element replaced by two whose union it is (splitting off a
/// unit accounts for the `⊗ I` case).
fn tensor_split<T: Ord + Clone>(
    conclusion: &Multiset<Multiset<T>>,
    premise: &Multiset<Multiset<T>>,
) -> NodeResult {
    let (removed, added) = diff(conclusion, premise);
    if removed.is_empty() && added == Multiset::singleton(Multiset::new()) {
        return Ok(());
    }
    let Some(whole) = sole(&removed) else {
        return Err(mismatch("exactly one formula splits"));
    };
    if added.len() != 2 {
        return Err(mismatch("a split yields exactly two formulas"));
    }
    let parts: Vec<Multiset<T>> = added.occurrences().cloned().collect();
    if parts[0].union(&parts[1]) != whole {
        return Err(mismatch("the parts do not recompose the split formula"));
    }
    Ok(())
}

/// Conservation facts that hold for every valid initial sequent: the
/// context and the goal carry the same number of atoms, and every goal
/// atom occurs among the atomic subformulas of the context.
pub fn initial_sequent_invariants(p: &ProofNode) -> Result<(), String> {
    let NodeSequent::Linear(seq) = &p.conclusion else {
        return Ok(());
    };
    if !seq.is_initial() {
        return Ok(());
    }
    let ctx_atoms = seq.sigma_atoms();
    if quantity(&ctx_atoms) != quantity(&seq.goal) {
        return Err(format!(
            "quantity not conserved: {} context atoms vs {} goal atoms",
            quantity(&ctx_atoms),
            quantity(&seq.goal)
        ));
    }
    let mut closure: BTreeSet<LinAtom> = ctx_atoms.keys().cloned().collect();
    for w in seq.omega.keys() {
        asub_omega(w, &mut closure);
    }
    for d in seq.delta.keys() {
        asub_delta(d, &mut closure);
    }
    for atom in seq.goal.keys() {
        if !closure.contains(atom) {
            return Err(format!("goal atom {atom} escapes the atomic subformulas"));
        }
    }
    Ok(())
}

/// Validates a checked proof against a larger theory and state: the
/// conclusion's non-linear context must be included in `full_omega` and
/// its state atoms in `full_sigma`. By monotonicity and compositionality
/// the proof then certifies the full initial sequent.
pub fn check_reduced_against(
    p: &ProofNode,
    full_omega: &Multiset<OmegaForm>,
    full_sigma: &SigmaForm,
) -> Result<(), Invalid> {
    let NodeSequent::Linear(seq) = &p.conclusion else {
        return Err(Invalid {
            path: vec![],
            reason: InvalidReason::RuleMismatch("conclusion is not a linear sequent".into()),
        });
    };
    if !seq.is_initial() {
        return Err(Invalid {
            path: vec![],
            reason: InvalidReason::RuleMismatch("conclusion is not an initial sequent".into()),
        });
    }
    if let Some((w, _)) = seq.omega.iter().find(|(w, n)| full_omega.count(w) < *n) {
        return Err(Invalid {
            path: vec![],
            reason: InvalidReason::SideConditionFailed(format!("formula not subsumed: {w}")),
        });
    }
    let atoms = seq.sigma_atoms();
    if let Some((a, _)) = atoms.iter().find(|(a, n)| full_sigma.count(a) < *n) {
        return Err(Invalid {
            path: vec![],
            reason: InvalidReason::SideConditionFailed(format!("state atom not subsumed: {a}")),
        });
    }
    Ok(())
}
