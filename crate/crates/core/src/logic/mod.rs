//! MuACL: a mixed linear/non-linear logic with a contractual implication.
//!
//! Linear atoms `res@usr` record ownership; `σ` formulas are atom
//! multisets (states), `δ` formulas are multisets of one-step
//! implications (exchanges), and a contract `θ = δ ⊸* δ'` promises the
//! exchange `δ'` provided `δ` is performed. Non-linear `ω` formulas carry
//! predicates, conjunction, implication, and the `G` operator that lifts
//! linear formulas into reusable knowledge.
//!
//! Tensor products are kept canonical: a tensor of atoms *is* the
//! multiset of its atoms, with `I` the empty multiset, so associativity
//! and commutativity never matter. Only the non-linear `∧`/`→` keep
//! their tree shape, because the left rules distinguish the two sides.
//!
//! Proof objects ([`ProofNode`]) carry the full conclusion sequent at
//! every node, so the checker in [`check`] validates each node locally
//! against its premises and runs in time linear in the number of nodes.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{ResourceId, UserId};
use crate::multiset::Multiset;

mod check;
mod json;

pub use check::{check_proof, check_reduced_against, initial_sequent_invariants, CheckStats, Invalid, InvalidReason};
pub use json::{proof_from_json, proof_from_str, proof_to_json, proof_to_string, FormatError};

/// `res@usr`: the resource `res` belongs to `usr`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinAtom {
    pub resource: ResourceId,
    pub user: UserId,
}

impl LinAtom {
    pub fn new(resource: ResourceId, user: UserId) -> Self {
        LinAtom { resource, user }
    }
}

impl fmt::Debug for LinAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.resource, self.user)
    }
}

impl fmt::Display for LinAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.resource, self.user)
    }
}

/// A one-step linear implication between atoms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinImp {
    pub from: LinAtom,
    pub to: LinAtom,
}

impl LinImp {
    pub fn new(from: LinAtom, to: LinAtom) -> Self {
        LinImp { from, to }
    }
}

impl fmt::Debug for LinImp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊸ {}", self.from, self.to)
    }
}

impl fmt::Display for LinImp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊸ {}", self.from, self.to)
    }
}

/// Canonical σ: a multiset of atoms. `I` is the empty multiset.
pub type SigmaForm = Multiset<LinAtom>;

/// Canonical δ: a multiset of one-step implications.
pub type DeltaForm = Multiset<LinImp>;

/// The linear contractual implication `δ ⊸* δ'`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaForm {
    pub lhs: DeltaForm,
    pub rhs: DeltaForm,
}

impl ThetaForm {
    pub fn new(lhs: DeltaForm, rhs: DeltaForm) -> Self {
        ThetaForm { lhs, rhs }
    }
}

impl fmt::Debug for ThetaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊸* {}", display_delta(&self.lhs), display_delta(&self.rhs))
    }
}

impl fmt::Display for ThetaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊸* {}", display_delta(&self.lhs), display_delta(&self.rhs))
    }
}

/// Non-linear formulas. `∧` and `→` keep their tree form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OmegaForm {
    Top,
    Pred { name: String, args: Vec<UserId> },
    And(Box<OmegaForm>, Box<OmegaForm>),
    Imp(Box<OmegaForm>, Box<OmegaForm>),
    GTheta(ThetaForm),
    GDelta(DeltaForm),
}

impl OmegaForm {
    pub fn and(a: OmegaForm, b: OmegaForm) -> Self {
        OmegaForm::And(Box::new(a), Box::new(b))
    }

    pub fn imp(a: OmegaForm, b: OmegaForm) -> Self {
        OmegaForm::Imp(Box::new(a), Box::new(b))
    }

    pub fn pred(name: impl Into<String>, args: Vec<UserId>) -> Self {
        OmegaForm::Pred { name: name.into(), args }
    }
}

impl fmt::Display for OmegaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaForm::Top => f.write_str("⊤"),
            OmegaForm::Pred { name, args } => {
                let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                write!(f, "{}({})", name, args.join(", "))
            }
            OmegaForm::And(a, b) => write!(f, "({a} ∧ {b})"),
            OmegaForm::Imp(a, b) => write!(f, "{a} → {b}"),
            OmegaForm::GTheta(t) => write!(f, "G({t})"),
            OmegaForm::GDelta(d) => write!(f, "G({})", display_delta(d)),
        }
    }
}

impl fmt::Debug for OmegaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn display_sigma(s: &SigmaForm) -> String {
    if s.is_empty() {
        return "I".to_string();
    }
    s.occurrences().map(|a| a.to_string()).collect::<Vec<_>>().join(" ⊗ ")
}

pub fn display_delta(d: &DeltaForm) -> String {
    if d.is_empty() {
        return "I".to_string();
    }
    d.occurrences().map(|i| format!("({i})")).collect::<Vec<_>>().join(" ⊗ ")
}

/// A mixed sequent `Ω; Θ, Δ, Σ ⊢ σ`. The Σ compartment is a multiset of
/// σ formulas; the goal is a single σ.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Sequent {
    pub omega: Multiset<OmegaForm>,
    pub theta: Multiset<ThetaForm>,
    pub delta: Multiset<DeltaForm>,
    pub sigma: Multiset<SigmaForm>,
    pub goal: SigmaForm,
}

impl Sequent {
    pub fn initial(omega: Multiset<OmegaForm>, sigma: Multiset<SigmaForm>, goal: SigmaForm) -> Self {
        Sequent { omega, theta: Multiset::new(), delta: Multiset::new(), sigma, goal }
    }

    pub fn is_initial(&self) -> bool {
        self.theta.is_empty() && self.delta.is_empty()
    }

    /// All atoms of the Σ compartment, flattened to one multiset.
    pub fn sigma_atoms(&self) -> SigmaForm {
        let mut out = SigmaForm::new();
        for (s, n) in self.sigma.iter() {
            for _ in 0..n {
                out = out.union(s);
            }
        }
        out
    }
}

impl fmt::Debug for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let omega: Vec<String> = self.omega.occurrences().map(|w| w.to_string()).collect();
        let theta: Vec<String> = self.theta.occurrences().map(|t| t.to_string()).collect();
        let delta: Vec<String> = self.delta.occurrences().map(display_delta).collect();
        let sigma: Vec<String> = self.sigma.occurrences().map(display_sigma).collect();
        write!(
            f,
            "{}; {} | {} | {} ⊢ {}",
            omega.join(", "),
            theta.join(", "),
            delta.join(", "),
            sigma.join(", "),
            display_sigma(&self.goal)
        )
    }
}

/// A purely non-linear sequent `Ω ⊩ ω`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NLSequent {
    pub omega: Multiset<OmegaForm>,
    pub goal: OmegaForm,
}

impl fmt::Debug for NLSequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let omega: Vec<String> = self.omega.occurrences().map(|w| w.to_string()).collect();
        write!(f, "{} ⊩ {}", omega.join(", "), self.goal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeSequent {
    Linear(Sequent),
    NonLinear(NLSequent),
}

impl NodeSequent {
    pub fn as_linear(&self) -> Option<&Sequent> {
        match self {
            NodeSequent::Linear(s) => Some(s),
            NodeSequent::NonLinear(_) => None,
        }
    }

    pub fn as_nonlinear(&self) -> Option<&NLSequent> {
        match self {
            NodeSequent::NonLinear(s) => Some(s),
            NodeSequent::Linear(_) => None,
        }
    }
}

/// The inference rules, one identifier per rule of the calculus plus the
/// linear cut used for multi-step computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    TopRight,
    OmegaAx,
    Cont,
    Weak,
    AndLeft1,
    AndLeft2,
    AndRight,
    ImpLeft,
    ImpRight,
    LCont,
    LWeak,
    LAndLeft1,
    LAndLeft2,
    LImpLeft,
    IRight,
    SigmaAx,
    OtimesLeftTheta,
    OtimesLeftDelta,
    OtimesLeftSigma,
    OtimesRight,
    LimpLeft,
    ContractLeft,
    ContractSplit,
    GLeftTheta,
    GLeftDelta,
    OmegaCut,
    StarCut,
}

impl RuleId {
    pub const ALL: [RuleId; 27] = [
        RuleId::TopRight,
        RuleId::OmegaAx,
        RuleId::Cont,
        RuleId::Weak,
        RuleId::AndLeft1,
        RuleId::AndLeft2,
        RuleId::AndRight,
        RuleId::ImpLeft,
        RuleId::ImpRight,
        RuleId::LCont,
        RuleId::LWeak,
        RuleId::LAndLeft1,
        RuleId::LAndLeft2,
        RuleId::LImpLeft,
        RuleId::IRight,
        RuleId::SigmaAx,
        RuleId::OtimesLeftTheta,
        RuleId::OtimesLeftDelta,
        RuleId::OtimesLeftSigma,
        RuleId::OtimesRight,
        RuleId::LimpLeft,
        RuleId::ContractLeft,
        RuleId::ContractSplit,
        RuleId::GLeftTheta,
        RuleId::GLeftDelta,
        RuleId::OmegaCut,
        RuleId::StarCut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::TopRight => "top-right",
            RuleId::OmegaAx => "omega-ax",
            RuleId::Cont => "cont",
            RuleId::Weak => "weak",
            RuleId::AndLeft1 => "and-left1",
            RuleId::AndLeft2 => "and-left2",
            RuleId::AndRight => "and-right",
            RuleId::ImpLeft => "imp-left",
            RuleId::ImpRight => "imp-right",
            RuleId::LCont => "l-cont",
            RuleId::LWeak => "l-weak",
            RuleId::LAndLeft1 => "l-and-left1",
            RuleId::LAndLeft2 => "l-and-left2",
            RuleId::LImpLeft => "l-imp-left",
            RuleId::IRight => "i-right",
            RuleId::SigmaAx => "sigma-ax",
            RuleId::OtimesLeftTheta => "otimes-left-theta",
            RuleId::OtimesLeftDelta => "otimes-left-delta",
            RuleId::OtimesLeftSigma => "otimes-left-sigma",
            RuleId::OtimesRight => "otimes-right",
            RuleId::LimpLeft => "limp-left",
            RuleId::ContractLeft => "contract-left",
            RuleId::ContractSplit => "contract-split",
            RuleId::GLeftTheta => "g-left-theta",
            RuleId::GLeftDelta => "g-left-delta",
            RuleId::OmegaCut => "omega-cut",
            RuleId::StarCut => "star-cut",
        }
    }

    pub fn from_str(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One node of a proof tree. The conclusion is explicit so validation is
/// local; `principal` is a free-form label kept for readability and never
/// consulted by the checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub rule: RuleId,
    pub conclusion: NodeSequent,
    pub principal: Option<String>,
    pub premises: Vec<ProofNode>,
}

impl ProofNode {
    pub fn new(rule: RuleId, conclusion: NodeSequent, premises: Vec<ProofNode>) -> Self {
        ProofNode { rule, conclusion, principal: None, premises }
    }

    pub fn node_count(&self) -> usize {
        1 + self.premises.iter().map(|p| p.node_count()).sum::<usize>()
    }

    pub fn count_rule(&self, rule: RuleId) -> usize {
        let here = usize::from(self.rule == rule);
        here + self.premises.iter().map(|p| p.count_rule(rule)).sum::<usize>()
    }
}

/// Proof acceptance mode: `Strict` rejects the linear cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ProofMode {
    Strict,
    StarCut,
}

// ---------------------------------------------------------------------------
// Canonicalization of tensor trees

/// A σ expression as written, before flattening.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SigmaExpr {
    I,
    Atom(LinAtom),
    Tensor(Box<SigmaExpr>, Box<SigmaExpr>),
}

/// A δ expression as written, before flattening.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeltaExpr {
    I,
    Imp(LinImp),
    Tensor(Box<DeltaExpr>, Box<DeltaExpr>),
}

/// Flattens a tensor tree of atoms into the canonical multiset,
/// eliminating `I`. Idempotent: canonical forms are their own image.
pub fn canonicalize_sigma(expr: &SigmaExpr) -> SigmaForm {
    let mut out = SigmaForm::new();
    fn walk(e: &SigmaExpr, out: &mut SigmaForm) {
        match e {
            SigmaExpr::I => {}
            SigmaExpr::Atom(a) => out.insert(a.clone(), 1),
            SigmaExpr::Tensor(l, r) => {
                walk(l, out);
                walk(r, out);
            }
        }
    }
    walk(expr, &mut out);
    out
}

pub fn canonicalize_delta(expr: &DeltaExpr) -> DeltaForm {
    let mut out = DeltaForm::new();
    fn walk(e: &DeltaExpr, out: &mut DeltaForm) {
        match e {
            DeltaExpr::I => {}
            DeltaExpr::Imp(i) => out.insert(i.clone(), 1),
            DeltaExpr::Tensor(l, r) => {
                walk(l, out);
                walk(r, out);
            }
        }
    }
    walk(expr, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Quantity and atomic subformulas

/// Number of occurrences of atomic linear propositions in a σ.
pub fn quantity(s: &SigmaForm) -> u64 {
    s.len()
}

/// Atomic linear subformulas of a non-linear formula.
pub fn asub_omega(w: &OmegaForm, out: &mut BTreeSet<LinAtom>) {
    match w {
        OmegaForm::Top | OmegaForm::Pred { .. } => {}
        OmegaForm::And(a, b) | OmegaForm::Imp(a, b) => {
            asub_omega(a, out);
            asub_omega(b, out);
        }
        OmegaForm::GTheta(t) => {
            asub_delta(&t.lhs, out);
            asub_delta(&t.rhs, out);
        }
        OmegaForm::GDelta(d) => asub_delta(d, out),
    }
}

pub fn asub_delta(d: &DeltaForm, out: &mut BTreeSet<LinAtom>) {
    for i in d.keys() {
        out.insert(i.from.clone());
        out.insert(i.to.clone());
    }
}

/// Stable content hash of a proof over its canonical serialization.
pub fn proof_hash(p: &ProofNode) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(proof_to_string(p).as_bytes());
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn atom(r: &str, u: &str) -> LinAtom {
        LinAtom::new(ResourceId::new(r), UserId::new(u))
    }

    #[test]
    fn tensor_trees_flatten_to_multisets() {
        // hp@Alice ⊗ hw@Bob ⊗ hw@Bob
        let e = SigmaExpr::Tensor(
            Box::new(SigmaExpr::Tensor(
                Box::new(SigmaExpr::Atom(atom("hp", "Alice"))),
                Box::new(SigmaExpr::Atom(atom("hw", "Bob"))),
            )),
            Box::new(SigmaExpr::Atom(atom("hw", "Bob"))),
        );
        let s = canonicalize_sigma(&e);
        assert_eq!(s.count(&atom("hp", "Alice")), 1);
        assert_eq!(s.count(&atom("hw", "Bob")), 2);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn unit_tensor_is_empty() {
        let e = SigmaExpr::Tensor(Box::new(SigmaExpr::I), Box::new(SigmaExpr::I));
        assert!(canonicalize_sigma(&e).is_empty());
    }

    #[test]
    fn associativity_is_invisible() {
        let a = || Box::new(SigmaExpr::Atom(atom("a", "x")));
        let b = || Box::new(SigmaExpr::Atom(atom("b", "x")));
        let c = || Box::new(SigmaExpr::Atom(atom("c", "x")));
        let left = SigmaExpr::Tensor(Box::new(SigmaExpr::Tensor(a(), b())), c());
        let right = SigmaExpr::Tensor(a(), Box::new(SigmaExpr::Tensor(b(), c())));
        assert_eq!(canonicalize_sigma(&left), canonicalize_sigma(&right));
    }

    fn arb_sigma_expr() -> impl Strategy<Value = SigmaExpr> {
        let leaf = prop_oneof![
            Just(SigmaExpr::I),
            (0u8..3, 0u8..3).prop_map(|(r, u)| SigmaExpr::Atom(atom(
                &format!("r{r}"),
                &format!("u{u}")
            ))),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            (inner.clone(), inner)
                .prop_map(|(l, r)| SigmaExpr::Tensor(Box::new(l), Box::new(r)))
        })
    }

    proptest! {
        #[test]
        fn canonicalize_is_permutation_invariant(e in arb_sigma_expr()) {
            let s = canonicalize_sigma(&e);
            // Swapping the halves of every tensor never changes the form.
            fn mirror(e: &SigmaExpr) -> SigmaExpr {
                match e {
                    SigmaExpr::Tensor(l, r) => SigmaExpr::Tensor(
                        Box::new(mirror(r)),
                        Box::new(mirror(l)),
                    ),
                    other => other.clone(),
                }
            }
            prop_assert_eq!(canonicalize_sigma(&mirror(&e)), s);
        }
    }
}
