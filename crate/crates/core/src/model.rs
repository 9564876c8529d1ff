//! Exchange environments: states, transfers, exchanges, per-user exchange
//! policies, and a brute-force fairness oracle.
//!
//! The oracle here is deliberately naive — exhaustive matching of grants
//! against approvals — and is the ground truth that the [`crate::decide`]
//! procedure is validated against. It is capped at small exchange sizes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiset::Multiset;

/// Name of a resource kind, drawn from a declared finite universe.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub String);

/// Name of a user, drawn from a declared finite universe.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl ResourceId {
    pub fn new(name: impl Into<String>) -> Self {
        ResourceId(name.into())
    }
}

impl UserId {
    pub fn new(name: impl Into<String>) -> Self {
        UserId(name.into())
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The declared finite sets of users and resources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe {
    pub users: BTreeSet<UserId>,
    pub resources: BTreeSet<ResourceId>,
}

impl Universe {
    pub fn new<U, R>(users: U, resources: R) -> Self
    where
        U: IntoIterator,
        U::Item: Into<String>,
        R: IntoIterator,
        R::Item: Into<String>,
    {
        Universe {
            users: users.into_iter().map(|u| UserId::new(u)).collect(),
            resources: resources.into_iter().map(|r| ResourceId::new(r)).collect(),
        }
    }
}

/// Resource ownership: a total map from users to resource multisets.
/// Absent entries read as zero; zero counts are dropped on insertion so
/// equality compares normalized forms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State {
    ownership: BTreeMap<UserId, BTreeMap<ResourceId, u64>>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, user: UserId, res: ResourceId, count: u64) {
        if count == 0 {
            if let Some(m) = self.ownership.get_mut(&user) {
                m.remove(&res);
                if m.is_empty() {
                    self.ownership.remove(&user);
                }
            }
        } else {
            self.ownership.entry(user).or_default().insert(res, count);
        }
    }

    pub fn add(&mut self, user: &UserId, res: &ResourceId, n: u64) {
        if n == 0 {
            return;
        }
        *self
            .ownership
            .entry(user.clone())
            .or_default()
            .entry(res.clone())
            .or_insert(0) += n;
    }

    /// Removes `n` occurrences; fails without modifying anything if the
    /// user holds fewer.
    pub fn take(&mut self, user: &UserId, res: &ResourceId, n: u64) -> Result<(), ModelError> {
        if n == 0 {
            return Ok(());
        }
        let have = self.count(user, res);
        if have < n {
            return Err(ModelError::InsufficientResources {
                user: user.clone(),
                resource: res.clone(),
            });
        }
        self.set(user.clone(), res.clone(), have - n);
        Ok(())
    }

    pub fn count(&self, user: &UserId, res: &ResourceId) -> u64 {
        self.ownership
            .get(user)
            .and_then(|m| m.get(res))
            .copied()
            .unwrap_or(0)
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.ownership.keys()
    }

    /// All (user, resource, count) entries with positive count.
    pub fn entries(&self) -> impl Iterator<Item = (&UserId, &ResourceId, u64)> {
        self.ownership
            .iter()
            .flat_map(|(u, m)| m.iter().map(move |(r, &c)| (u, r, c)))
    }

    /// The total resource multiset, ignoring who owns what.
    pub fn total_resources(&self) -> Multiset<ResourceId> {
        self.entries().map(|(_, r, c)| (r.clone(), c)).collect()
    }

    /// Total number of resource tokens in the state.
    pub fn total_count(&self) -> u64 {
        self.entries().map(|(_, _, c)| c).sum()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.ownership.iter()).finish()
    }
}

/// One user sending one resource to another user.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transfer {
    pub giver: UserId,
    pub resource: ResourceId,
    pub receiver: UserId,
}

impl Transfer {
    /// Builds a transfer, rejecting self-transfers.
    pub fn new(giver: UserId, resource: ResourceId, receiver: UserId) -> Result<Self, ModelError> {
        if giver == receiver {
            return Err(ModelError::SelfTransfer { user: giver, resource });
        }
        Ok(Transfer { giver, resource, receiver })
    }
}

impl fmt::Debug for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.giver, self.resource, self.receiver)
    }
}

impl fmt::Display for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.giver, self.resource, self.receiver)
    }
}

/// A finite multiset of transfers.
pub type Exchange = Multiset<Transfer>;

/// "I give `grant` in return for `payoff`."
///
/// The giver never appears as a giver inside her own payoff.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExchangeApproval {
    pub grant: Transfer,
    pub payoff: Exchange,
}

impl ExchangeApproval {
    pub fn new(grant: Transfer, payoff: Exchange) -> Result<Self, ModelError> {
        if payoff.keys().any(|t| t.giver == grant.giver) {
            return Err(ModelError::OwnerPaysHerself { owner: grant.giver });
        }
        Ok(ExchangeApproval { grant, payoff })
    }
}

/// A user's set of exchange approvals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangePolicy {
    pub owner: UserId,
    pub approvals: BTreeSet<ExchangeApproval>,
}

impl ExchangePolicy {
    pub fn empty(owner: UserId) -> Self {
        ExchangePolicy { owner, approvals: BTreeSet::new() }
    }

    pub fn insert(&mut self, approval: ExchangeApproval) -> Result<(), ModelError> {
        if approval.grant.giver != self.owner {
            return Err(ModelError::ForeignGrant {
                owner: self.owner.clone(),
                giver: approval.grant.giver,
            });
        }
        self.approvals.insert(approval);
        Ok(())
    }
}

/// Per-user witnesses showing an exchange fair: each user's accepted
/// payoffs, pairwise disjoint inside the judged exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessWitness {
    pub per_user: BTreeMap<UserId, Exchange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{user} does not hold enough {resource}")]
    InsufficientResources { user: UserId, resource: ResourceId },
    #[error("transfer from {user} to herself ({resource})")]
    SelfTransfer { user: UserId, resource: ResourceId },
    #[error("approval of {owner} pays with her own resources")]
    OwnerPaysHerself { owner: UserId },
    #[error("approval granted by {giver} inserted in policy of {owner}")]
    ForeignGrant { owner: UserId, giver: UserId },
    #[error("exchange size {size} exceeds the oracle cap {cap}")]
    CapExceeded { size: u64, cap: u64 },
}

/// Search caps for the brute-force oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Maximum exchange size (total transfer occurrences) the oracle will
    /// judge.
    pub max_exchange_size: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_exchange_size: 6 }
    }
}

/// Applies an exchange to a state. Every giver must own what she gives;
/// the total resource multiset is conserved.
pub fn apply_exchange(st: &State, exc: &Exchange) -> Result<State, ModelError> {
    let mut out = st.clone();
    for (tr, n) in exc.iter() {
        out.take(&tr.giver, &tr.resource, n)?;
    }
    for (tr, n) in exc.iter() {
        out.add(&tr.receiver, &tr.resource, n);
    }
    Ok(out)
}

/// The state reached by an exchange ignoring intermediate feasibility:
/// per user/resource, holdings minus outgoing plus incoming. `None` when
/// some count would go negative overall.
pub fn apply_net(st: &State, exc: &Exchange) -> Option<State> {
    let mut out = st.clone();
    for (tr, n) in exc.iter() {
        out.add(&tr.receiver, &tr.resource, n);
    }
    for (tr, n) in exc.iter() {
        if out.take(&tr.giver, &tr.resource, n).is_err() {
            return None;
        }
    }
    Some(out)
}

/// All witnesses `w` with `pol ⊨_w exc`: every outgoing transfer of the
/// owner is matched by an approval whose payoff is drawn disjointly from
/// the rest of the exchange; the witness is the union of those payoffs.
pub fn acceptance_witnesses(pol: &ExchangePolicy, exc: &Exchange) -> BTreeSet<Exchange> {
    let mut out = BTreeSet::new();
    match_grants(pol, exc.clone(), Exchange::new(), &mut out);
    out
}

fn match_grants(
    pol: &ExchangePolicy,
    remaining: Exchange,
    acc: Exchange,
    out: &mut BTreeSet<Exchange>,
) {
    // Handling order does not matter: every outgoing occurrence of the
    // owner must be justified, so we always pick the least one.
    let grant = remaining
        .keys()
        .find(|t| t.giver == pol.owner)
        .cloned();
    let Some(grant) = grant else {
        out.insert(acc);
        return;
    };
    let mut rest = remaining;
    rest.remove(&grant, 1);
    for approval in &pol.approvals {
        if approval.grant != grant {
            continue;
        }
        if let Some(after_payoff) = rest.checked_sub(&approval.payoff) {
            match_grants(pol, after_payoff, acc.union(&approval.payoff), out);
        }
    }
}

/// Verdict of the fairness oracle on an exchange label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FairVerdict {
    Fair(FairnessWitness),
    Unfair,
}

impl FairVerdict {
    pub fn is_fair(&self) -> bool {
        matches!(self, FairVerdict::Fair(_))
    }
}

/// Judges an exchange label against every user's policy: fair when each
/// user has a witness and the disjoint union of witnesses fits inside the
/// exchange. Users missing from `policies` get the empty policy.
pub fn is_fair_label(
    policies: &BTreeMap<UserId, ExchangePolicy>,
    exc: &Exchange,
    cfg: &OracleConfig,
) -> Result<FairVerdict, ModelError> {
    if exc.len() > cfg.max_exchange_size {
        return Err(ModelError::CapExceeded { size: exc.len(), cap: cfg.max_exchange_size });
    }
    // Only givers can reject: a user giving nothing always has the empty
    // witness, which never constrains the disjoint union.
    let mut givers: BTreeSet<&UserId> = exc.keys().map(|t| &t.giver).collect();
    let receivers: BTreeSet<&UserId> = exc.keys().map(|t| &t.receiver).collect();
    givers.extend(receivers);

    let mut witness_sets: Vec<(UserId, Vec<Exchange>)> = Vec::new();
    for user in givers {
        let empty;
        let pol = match policies.get(user) {
            Some(p) => p,
            None => {
                empty = ExchangePolicy::empty(user.clone());
                &empty
            }
        };
        let ws = acceptance_witnesses(pol, exc);
        if ws.is_empty() {
            return Ok(FairVerdict::Unfair);
        }
        witness_sets.push((user.clone(), ws.into_iter().collect()));
    }

    let mut chosen: BTreeMap<UserId, Exchange> = BTreeMap::new();
    if pick_witnesses(&witness_sets, 0, Exchange::new(), exc, &mut chosen) {
        Ok(FairVerdict::Fair(FairnessWitness { per_user: chosen }))
    } else {
        Ok(FairVerdict::Unfair)
    }
}

fn pick_witnesses(
    sets: &[(UserId, Vec<Exchange>)],
    idx: usize,
    used: Exchange,
    exc: &Exchange,
    chosen: &mut BTreeMap<UserId, Exchange>,
) -> bool {
    if idx == sets.len() {
        return true;
    }
    let (user, options) = &sets[idx];
    for w in options {
        let candidate = used.union(w);
        if candidate.is_subset(exc) {
            chosen.insert(user.clone(), w.clone());
            if pick_witnesses(sets, idx + 1, candidate, exc, chosen) {
                return true;
            }
            chosen.remove(user);
        }
    }
    false
}

/// A transition is fair when the exchange is feasible from `st` and its
/// label is fair.
pub fn is_fair_transition(
    st: &State,
    exc: &Exchange,
    policies: &BTreeMap<UserId, ExchangePolicy>,
    cfg: &OracleConfig,
) -> Result<bool, ModelError> {
    if apply_exchange(st, exc).is_err() {
        return Ok(false);
    }
    Ok(is_fair_label(policies, exc, cfg)?.is_fair())
}

/// Exhaustively searches for a fair, single-step-feasible exchange
/// transforming `st` into `st_target`, trying multisets of approval
/// grants up to `cap` transfers. Ground truth for the decision procedure.
pub fn fair_exchange_between(
    st: &State,
    st_target: &State,
    policies: &BTreeMap<UserId, ExchangePolicy>,
    cap: u64,
) -> Result<Option<Exchange>, ModelError> {
    // Every transfer of a fair exchange is some owner's approval grant.
    let grants: BTreeSet<Transfer> = policies
        .values()
        .flat_map(|p| p.approvals.iter().map(|a| a.grant.clone()))
        .collect();
    let grants: Vec<Transfer> = grants.into_iter().collect();
    let mut current = Exchange::new();
    search_exchange(st, st_target, policies, cap, &grants, 0, &mut current)
}

fn search_exchange(
    st: &State,
    st_target: &State,
    policies: &BTreeMap<UserId, ExchangePolicy>,
    budget: u64,
    grants: &[Transfer],
    idx: usize,
    current: &mut Exchange,
) -> Result<Option<Exchange>, ModelError> {
    if idx == grants.len() {
        if let Ok(reached) = apply_exchange(st, current) {
            if &reached == st_target
                && is_fair_label(policies, current, &OracleConfig { max_exchange_size: budget + current.len() })?
                    .is_fair()
            {
                return Ok(Some(current.clone()));
            }
        }
        return Ok(None);
    }
    let tr = &grants[idx];
    // Condition (1) bounds repetitions by the giver's stock.
    let stock = st.count(&tr.giver, &tr.resource);
    let already: u64 = current
        .iter()
        .filter(|(t, _)| t.giver == tr.giver && t.resource == tr.resource)
        .map(|(_, n)| n)
        .sum();
    let max_n = budget.min(stock.saturating_sub(already));
    for n in 0..=max_n {
        if n > 0 {
            current.insert(tr.clone(), 1);
        }
        if let Some(found) =
            search_exchange(st, st_target, policies, budget - n, grants, idx + 1, current)?
        {
            current.remove(tr, n);
            return Ok(Some(found));
        }
    }
    current.remove(tr, max_n);
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(n: &str) -> UserId {
        UserId::new(n)
    }

    fn res(n: &str) -> ResourceId {
        ResourceId::new(n)
    }

    fn tr(g: &str, r: &str, v: &str) -> Transfer {
        Transfer::new(user(g), res(r), user(v)).unwrap()
    }

    fn exchange(trs: &[(&str, &str, &str)]) -> Exchange {
        trs.iter().map(|(g, r, v)| tr(g, r, v)).collect()
    }

    /// Initial state of the card-game fixture.
    fn fixture_state() -> State {
        let mut st = State::new();
        st.set(user("Alice"), res("sb"), 1);
        st.set(user("Bob"), res("lw"), 1);
        st.set(user("Carl"), res("hw"), 3);
        st.set(user("Carl"), res("hp"), 2);
        st
    }

    /// The lw-for-hp policies where Carl accepts payment from anyone.
    fn lw_for_hp_policies() -> BTreeMap<UserId, ExchangePolicy> {
        let mut alice = ExchangePolicy::empty(user("Alice"));
        alice
            .insert(
                ExchangeApproval::new(tr("Alice", "lw", "Carl"), exchange(&[("Carl", "hp", "Bob")]))
                    .unwrap(),
            )
            .unwrap();
        let mut bob = ExchangePolicy::empty(user("Bob"));
        bob.insert(
            ExchangeApproval::new(tr("Bob", "lw", "Carl"), exchange(&[("Carl", "hp", "Bob")]))
                .unwrap(),
        )
        .unwrap();
        let mut carl = ExchangePolicy::empty(user("Carl"));
        carl.insert(
            ExchangeApproval::new(tr("Carl", "hp", "Bob"), exchange(&[("Alice", "lw", "Carl")]))
                .unwrap(),
        )
        .unwrap();
        carl.insert(
            ExchangeApproval::new(tr("Carl", "hp", "Bob"), exchange(&[("Bob", "lw", "Carl")]))
                .unwrap(),
        )
        .unwrap();
        [(user("Alice"), alice), (user("Bob"), bob), (user("Carl"), carl)]
            .into_iter()
            .collect()
    }

    #[test]
    fn apply_circular_exchange() {
        let st = fixture_state();
        let exc = exchange(&[("Alice", "sb", "Bob"), ("Bob", "lw", "Carl"), ("Carl", "hw", "Alice")]);
        let st2 = apply_exchange(&st, &exc).unwrap();
        let mut expect = State::new();
        expect.set(user("Alice"), res("hw"), 1);
        expect.set(user("Bob"), res("sb"), 1);
        expect.set(user("Carl"), res("lw"), 1);
        expect.set(user("Carl"), res("hw"), 2);
        expect.set(user("Carl"), res("hp"), 2);
        assert_eq!(st2, expect);
        assert_eq!(st.total_resources(), st2.total_resources());
    }

    #[test]
    fn apply_empty_is_identity() {
        let st = fixture_state();
        assert_eq!(apply_exchange(&st, &Exchange::new()).unwrap(), st);
    }

    #[test]
    fn apply_without_holdings_fails() {
        let mut st = State::new();
        st.set(user("Alice"), res("hp"), 0);
        let exc = exchange(&[("Alice", "sb", "Bob")]);
        assert_eq!(
            apply_exchange(&st, &exc),
            Err(ModelError::InsufficientResources { user: user("Alice"), resource: res("sb") })
        );
    }

    /// Definitional re-check of the acceptance relation, unfolding every
    /// possible decomposition. Independent of the matching algorithm in
    /// `acceptance_witnesses`.
    fn relation_holds(pol: &ExchangePolicy, witness: &Exchange, exc: &Exchange) -> bool {
        if witness.is_empty() && exc.keys().all(|t| t.giver != pol.owner) {
            return true;
        }
        for approval in &pol.approvals {
            let Some(rest) = exc.checked_sub(&Exchange::singleton(approval.grant.clone())) else {
                continue;
            };
            let Some(residual_exc) = rest.checked_sub(&approval.payoff) else {
                continue;
            };
            let Some(residual_wit) = witness.checked_sub(&approval.payoff) else {
                continue;
            };
            if relation_holds(pol, &residual_wit, &residual_exc) {
                return true;
            }
        }
        false
    }

    fn brute_force_witnesses(pol: &ExchangePolicy, exc: &Exchange) -> BTreeSet<Exchange> {
        // Enumerate all sub-multisets of exc and test the relation.
        let items: Vec<(Transfer, u64)> = exc.iter().map(|(t, n)| (t.clone(), n)).collect();
        let mut out = BTreeSet::new();
        let mut stack = vec![(0usize, Exchange::new())];
        while let Some((idx, partial)) = stack.pop() {
            if idx == items.len() {
                if relation_holds(pol, &partial, exc) {
                    out.insert(partial);
                }
                continue;
            }
            let (t, max) = &items[idx];
            for n in 0..=*max {
                let mut next = partial.clone();
                next.insert(t.clone(), n);
                stack.push((idx + 1, next));
            }
        }
        out
    }

    #[test]
    fn carl_accepts_the_two_hp_exchange() {
        let pols = lw_for_hp_policies();
        let exc = exchange(&[
            ("Carl", "hp", "Bob"),
            ("Carl", "hp", "Bob"),
            ("Alice", "lw", "Carl"),
            ("Bob", "lw", "Carl"),
        ]);
        let ws = acceptance_witnesses(&pols[&user("Carl")], &exc);
        assert!(ws.contains(&exchange(&[("Alice", "lw", "Carl"), ("Bob", "lw", "Carl")])));
        assert_eq!(ws, brute_force_witnesses(&pols[&user("Carl")], &exc));
    }

    #[test]
    fn non_giver_accepts_with_empty_witness() {
        let pols = lw_for_hp_policies();
        let exc = exchange(&[("Carl", "hp", "Bob")]);
        let ws = acceptance_witnesses(&pols[&user("Bob")], &exc);
        assert_eq!(ws.len(), 1);
        assert!(ws.contains(&Exchange::new()));
    }

    #[test]
    fn alice_single_payment_witness_matches_brute_force() {
        let pols = lw_for_hp_policies();
        let exc = exchange(&[("Carl", "hp", "Bob"), ("Alice", "lw", "Carl"), ("Bob", "lw", "Carl")]);
        let alice = &pols[&user("Alice")];
        let ws = acceptance_witnesses(alice, &exc);
        let expect: BTreeSet<Exchange> =
            [exchange(&[("Carl", "hp", "Bob")])].into_iter().collect();
        assert_eq!(ws, expect);
        assert_eq!(ws, brute_force_witnesses(alice, &exc));
    }

    #[test]
    fn two_hp_label_is_fair_and_single_hp_is_double_spending() {
        let pols = lw_for_hp_policies();
        let cfg = OracleConfig::default();
        let fair_exc = exchange(&[
            ("Carl", "hp", "Bob"),
            ("Carl", "hp", "Bob"),
            ("Alice", "lw", "Carl"),
            ("Bob", "lw", "Carl"),
        ]);
        match is_fair_label(&pols, &fair_exc, &cfg).unwrap() {
            FairVerdict::Fair(w) => {
                assert_eq!(w.per_user[&user("Alice")], exchange(&[("Carl", "hp", "Bob")]));
                assert_eq!(w.per_user[&user("Bob")], exchange(&[("Carl", "hp", "Bob")]));
                assert_eq!(
                    w.per_user[&user("Carl")],
                    exchange(&[("Alice", "lw", "Carl"), ("Bob", "lw", "Carl")])
                );
            }
            FairVerdict::Unfair => panic!("two-hp exchange should be fair"),
        }

        let unfair_exc =
            exchange(&[("Carl", "hp", "Bob"), ("Alice", "lw", "Carl"), ("Bob", "lw", "Carl")]);
        assert_eq!(is_fair_label(&pols, &unfair_exc, &cfg).unwrap(), FairVerdict::Unfair);
    }

    #[test]
    fn empty_exchange_is_fair_everywhere() {
        let pols = lw_for_hp_policies();
        let v = is_fair_label(&pols, &Exchange::new(), &OracleConfig::default()).unwrap();
        match v {
            FairVerdict::Fair(w) => assert!(w.per_user.values().all(|e| e.is_empty())),
            FairVerdict::Unfair => panic!("empty exchange must be fair"),
        }
    }

    #[test]
    fn oracle_cap_is_reported() {
        let pols = lw_for_hp_policies();
        let exc: Exchange = (0..7).map(|_| tr("Carl", "hp", "Bob")).collect();
        let small = OracleConfig { max_exchange_size: 6 };
        assert!(matches!(
            is_fair_label(&pols, &exc, &small),
            Err(ModelError::CapExceeded { size: 7, cap: 6 })
        ));
    }

    #[test]
    fn fair_transition_requires_feasibility_and_fair_label() {
        // Two users, one rule: a gives x for y.
        let a = user("a");
        let b = user("b");
        let mut pol_a = ExchangePolicy::empty(a.clone());
        pol_a
            .insert(
                ExchangeApproval::new(tr("a", "x", "b"), exchange(&[("b", "y", "a")])).unwrap(),
            )
            .unwrap();
        let pols: BTreeMap<_, _> =
            [(a.clone(), pol_a), (b.clone(), ExchangePolicy::empty(b.clone()))].into_iter().collect();
        let cfg = OracleConfig::default();

        let mut st = State::new();
        st.set(a.clone(), res("x"), 1);
        st.set(b.clone(), res("y"), 1);
        let exc = exchange(&[("a", "x", "b"), ("b", "y", "a")]);
        // b gives y without anything required in return: b has no policy,
        // hence no approval, so the label is unfair.
        assert!(!is_fair_transition(&st, &exc, &pols, &cfg).unwrap());

        // Grant b's side too and it becomes fair.
        let mut pol_b = ExchangePolicy::empty(b.clone());
        pol_b
            .insert(
                ExchangeApproval::new(tr("b", "y", "a"), exchange(&[("a", "x", "b")])).unwrap(),
            )
            .unwrap();
        let mut pols2 = pols.clone();
        pols2.insert(b.clone(), pol_b);
        assert!(is_fair_transition(&st, &exc, &pols2, &cfg).unwrap());

        // Fair label but infeasible: a does not own x.
        let mut poor = State::new();
        poor.set(b.clone(), res("y"), 1);
        assert!(!is_fair_transition(&poor, &exc, &pols2, &cfg).unwrap());
    }

    #[test]
    fn fair_labels_compose_under_union() {
        let pols = lw_for_hp_policies();
        let cfg = OracleConfig { max_exchange_size: 8 };
        let e1 = exchange(&[
            ("Carl", "hp", "Bob"),
            ("Carl", "hp", "Bob"),
            ("Alice", "lw", "Carl"),
            ("Bob", "lw", "Carl"),
        ]);
        let e2 = Exchange::new();
        assert!(is_fair_label(&pols, &e1, &cfg).unwrap().is_fair());
        assert!(is_fair_label(&pols, &e2, &cfg).unwrap().is_fair());
        assert!(is_fair_label(&pols, &e1.union(&e2), &cfg).unwrap().is_fair());
    }

    #[test]
    fn witnesses_are_contained_in_the_exchange() {
        let pols = lw_for_hp_policies();
        let exc = exchange(&[
            ("Carl", "hp", "Bob"),
            ("Carl", "hp", "Bob"),
            ("Alice", "lw", "Carl"),
            ("Bob", "lw", "Carl"),
        ]);
        for pol in pols.values() {
            for w in acceptance_witnesses(pol, &exc) {
                assert!(w.is_subset(&exc));
            }
        }
    }

    #[test]
    fn no_approvals_means_no_witness_for_a_giver() {
        let pol = ExchangePolicy::empty(user("Alice"));
        let exc = exchange(&[("Alice", "sb", "Bob")]);
        assert!(acceptance_witnesses(&pol, &exc).is_empty());
    }
}
