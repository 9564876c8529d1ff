//! Deciding fairness through integer linear systems.
//!
//! The grounded theory is encoded over its *transfer basis* — the
//! distinct one-step implications occurring in it. Each reusable
//! exchange formula `G(δ)` becomes a column of A (the transfers it
//! performs); each contract `G(θ)` becomes a column of B (required
//! transfers) and of C (promised transfers). An exchange vector `u` is a
//! fair agreement exactly when `u = [A|C]·y` for some nonnegative
//! integer `y` with `(C−B)·y ≥ 0`: every requirement is covered by the
//! promises, so no payment justifies two grants.
//!
//! [`solve_fair_system`] solves that system along two independent
//! routes — through the Hilbert basis of the slack cone, and by direct
//! bounded enumeration — and insists they agree. [`decide`] searches
//! candidate exchanges consistent with the requested state change,
//! checks solvability, and validates feasibility in the requested mode
//! (single transition, or a multi-step firing order).

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::compile::{
    compile_context, compile_ruleset, decode_exchange, encode_exchange, ground_rules,
    GroundedTheory,
};
use crate::logic::{DeltaForm, LinImp, OmegaForm, ProofMode};
use crate::model::{
    apply_exchange, Exchange, FairnessWitness, ModelError, ResourceId, State, Transfer, UserId,
};
use crate::muac::{Context, Ruleset};

mod hilbert;

pub use hilbert::{bounded_solutions, hilbert_basis, Int, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("completion frontier exceeded the configured bound of {limit} vectors")]
    ResourceCap { limit: usize },
    #[error("exchange size exceeds the configured search bound of {limit}")]
    SearchCap { limit: u64 },
}

/// Engineering bounds for the search, overridable by callers.
#[derive(Debug, Clone, Copy)]
pub struct DecideConfig {
    /// Largest exchange (total transfer occurrences) considered.
    pub exchange_cap: u64,
    /// Largest number of vectors the Hilbert completion may enqueue.
    pub hilbert_frontier_cap: usize,
}

impl Default for DecideConfig {
    fn default() -> Self {
        DecideConfig { exchange_cap: 8, hilbert_frontier_cap: 100_000 }
    }
}

/// The distinct one-step implications of a grounded theory, in a fixed
/// order; all vectors and matrix rows are indexed by it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferBasis {
    pub implications: Vec<LinImp>,
}

impl TransferBasis {
    pub fn len(&self) -> usize {
        self.implications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.implications.is_empty()
    }

    pub fn index_of(&self, imp: &LinImp) -> Option<usize> {
        self.implications.binary_search(imp).ok()
    }

    /// The coordinate vector of an exchange formula; `None` when it uses
    /// an implication outside the basis.
    pub fn vector_of(&self, delta: &DeltaForm) -> Option<Vec<Int>> {
        let mut v = vec![Int::zero(); self.len()];
        for (imp, n) in delta.iter() {
            let idx = self.index_of(imp)?;
            v[idx] += Int::from(n);
        }
        Some(v)
    }

    pub fn to_delta(&self, v: &[Int]) -> DeltaForm {
        let mut out = DeltaForm::new();
        for (imp, n) in self.implications.iter().zip(v) {
            if let Some(n) = n.to_u64() {
                out.insert(imp.clone(), n);
            }
        }
        out
    }
}

/// The matrix encoding of a grounded theory.
#[derive(Debug, Clone)]
pub struct EncodingSystem {
    pub basis: TransferBasis,
    /// One column per `G(δ)`: the transfers the formula performs.
    pub a_matrix: IntMatrix,
    /// One column per `G(θ)`: the transfers its requirement consumes.
    pub b_matrix: IntMatrix,
    /// One column per `G(θ)`: the transfers its promise performs.
    pub c_matrix: IntMatrix,
    pub delta_columns: Vec<OmegaForm>,
    pub theta_columns: Vec<OmegaForm>,
}

impl EncodingSystem {
    /// `n + m`: reusable exchanges first, then contracts.
    pub fn column_count(&self) -> usize {
        self.delta_columns.len() + self.theta_columns.len()
    }

    /// The grounded formula a column index refers to.
    pub fn column_formula(&self, idx: usize) -> &OmegaForm {
        if idx < self.delta_columns.len() {
            &self.delta_columns[idx]
        } else {
            &self.theta_columns[idx - self.delta_columns.len()]
        }
    }

    /// The `[A|C]` column of a combined index.
    fn performed_column(&self, idx: usize) -> &Vec<Int> {
        if idx < self.delta_columns.len() {
            &self.a_matrix.columns[idx]
        } else {
            &self.c_matrix.columns[idx - self.delta_columns.len()]
        }
    }

    /// `[A|C]·y`.
    pub fn performed(&self, y: &[Int]) -> Vec<Int> {
        let mut out = vec![Int::zero(); self.basis.len()];
        for (j, coeff) in y.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            for (o, c) in out.iter_mut().zip(self.performed_column(j)) {
                *o += c * coeff;
            }
        }
        out
    }

    /// `[0|C−B]·y`.
    pub fn slack(&self, y: &[Int]) -> Vec<Int> {
        let n = self.delta_columns.len();
        let diff = self.c_matrix.sub(&self.b_matrix);
        let z: Vec<Int> = y[n..].to_vec();
        diff.mul_vec(&z)
    }
}

/// Builds the transfer basis and the A/B/C matrices of a theory.
pub fn build_system(theory: &GroundedTheory) -> EncodingSystem {
    let mut imps: BTreeSet<LinImp> = BTreeSet::new();
    for f in theory.formulas() {
        match f {
            OmegaForm::GDelta(d) => imps.extend(d.keys().cloned()),
            OmegaForm::GTheta(t) => {
                imps.extend(t.lhs.keys().cloned());
                imps.extend(t.rhs.keys().cloned());
            }
            _ => {}
        }
    }
    let basis = TransferBasis { implications: imps.into_iter().collect() };
    let p = basis.len();

    let mut delta_columns = Vec::new();
    let mut theta_columns = Vec::new();
    let mut a_cols = Vec::new();
    let mut b_cols = Vec::new();
    let mut c_cols = Vec::new();

    for f in theory.formulas() {
        match f {
            OmegaForm::GDelta(d) => {
                a_cols.push(basis.vector_of(d).expect("basis covers the theory"));
                delta_columns.push(f.clone());
            }
            OmegaForm::GTheta(t) => {
                b_cols.push(basis.vector_of(&t.lhs).expect("basis covers the theory"));
                c_cols.push(basis.vector_of(&t.rhs).expect("basis covers the theory"));
                theta_columns.push(f.clone());
            }
            _ => {}
        }
    }

    EncodingSystem {
        basis,
        a_matrix: IntMatrix::new(p, a_cols),
        b_matrix: IntMatrix::new(p, b_cols),
        c_matrix: IntMatrix::new(p, c_cols),
        delta_columns,
        theta_columns,
    }
}

fn leq(a: &[Int], b: &[Int]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn all_nonneg(v: &[Int]) -> bool {
    v.iter().all(|x| !x.is_negative())
}

fn is_zero_vec(v: &[Int]) -> bool {
    v.iter().all(|x| x.is_zero())
}

/// All nonnegative integer `y` with `[A|C]·y = target` and
/// `(C−B)·y ≥ 0`.
///
/// Columns whose `[A|C]` part is zero perform no transfers and are never
/// required, so they are pinned to zero; columns exceeding the target
/// anywhere cannot be selected. The reduced system is solved twice: via
/// the Hilbert basis of the slack cone (solving `[A | C·H]·x = target`
/// and mapping back), and by direct bounded enumeration. The two answers
/// must coincide.
pub fn solve_fair_system(
    sys: &EncodingSystem,
    target: &[Int],
    config: &DecideConfig,
) -> Result<Vec<Vec<Int>>, DecideError> {
    assert!(all_nonneg(target), "targets are exchange encodings");
    let total = sys.column_count();
    let n = sys.delta_columns.len();

    // Support restriction: a selected column's performed transfers must
    // fit under the target; for contracts the required transfers must
    // too, since the slack condition bounds requirements by promises.
    let usable: Vec<usize> = (0..total)
        .filter(|&j| {
            let col = sys.performed_column(j);
            if is_zero_vec(col) || !leq(col, target) {
                return false;
            }
            if j >= n {
                leq(&sys.b_matrix.columns[j - n], target)
            } else {
                true
            }
        })
        .collect();

    let cb = sys.c_matrix.sub(&sys.b_matrix);
    let usable_theta: Vec<usize> = usable.iter().copied().filter(|&j| j >= n).collect();
    let usable_delta: Vec<usize> = usable.iter().copied().filter(|&j| j < n).collect();

    // Route one: Hilbert basis of the restricted slack cone.
    let cone = IntMatrix::new(
        sys.basis.len(),
        usable_theta.iter().map(|&j| cb.columns[j - n].clone()).collect(),
    );
    let h = hilbert_basis(&cone, config.hilbert_frontier_cap)?;
    let mut d_columns: Vec<Vec<Int>> = Vec::new();
    for &j in &usable_delta {
        d_columns.push(sys.a_matrix.columns[j].clone());
    }
    for gen in &h {
        let mut col = vec![Int::zero(); sys.basis.len()];
        for (k, coeff) in gen.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let c_col = &sys.c_matrix.columns[usable_theta[k] - n];
            for (o, c) in col.iter_mut().zip(c_col) {
                *o += c * coeff;
            }
        }
        d_columns.push(col);
    }
    let mut via_hilbert: BTreeSet<Vec<Int>> = BTreeSet::new();
    for w in enumerate_exact_covers(&d_columns, target) {
        let mut y = vec![Int::zero(); total];
        for (i, &j) in usable_delta.iter().enumerate() {
            y[j] = w[i].clone();
        }
        for (k, gen) in h.iter().enumerate() {
            let coeff = &w[usable_delta.len() + k];
            if coeff.is_zero() {
                continue;
            }
            for (gi, &j) in gen.iter().zip(&usable_theta) {
                y[j] += gi * coeff;
            }
        }
        via_hilbert.insert(y);
    }

    // Route two: direct enumeration over the usable columns.
    let direct_cols: Vec<Vec<Int>> =
        usable.iter().map(|&j| sys.performed_column(j).clone()).collect();
    let mut via_direct: BTreeSet<Vec<Int>> = BTreeSet::new();
    for w in enumerate_exact_covers(&direct_cols, target) {
        let mut y = vec![Int::zero(); total];
        for (i, &j) in usable.iter().enumerate() {
            y[j] = w[i].clone();
        }
        if all_nonneg(&sys.slack(&y)) {
            via_direct.insert(y);
        }
    }

    assert_eq!(via_hilbert, via_direct, "the Hilbert route and direct enumeration must agree");
    Ok(via_direct.into_iter().collect())
}

/// All nonnegative integer combinations of `columns` summing exactly to
/// `target`. Columns are nonnegative and nonzero, so every coefficient is
/// bounded by componentwise quotients of the running residual.
fn enumerate_exact_covers(columns: &[Vec<Int>], target: &[Int]) -> Vec<Vec<Int>> {
    fn rec(
        columns: &[Vec<Int>],
        idx: usize,
        residual: &mut Vec<Int>,
        coeffs: &mut Vec<Int>,
        out: &mut Vec<Vec<Int>>,
    ) {
        if idx == columns.len() {
            if residual.iter().all(|x| x.is_zero()) {
                out.push(coeffs.clone());
            }
            return;
        }
        let col = &columns[idx];
        let mut bound: Option<Int> = None;
        for (c, r) in col.iter().zip(residual.iter()) {
            if c.is_zero() {
                continue;
            }
            let q = r / c;
            bound = Some(match bound {
                None => q,
                Some(b) => b.min(q),
            });
        }
        let bound = bound.unwrap_or_else(Int::zero).max(Int::zero());
        let mut k = Int::zero();
        while k <= bound {
            coeffs[idx] = k.clone();
            rec(columns, idx + 1, residual, coeffs, out);
            // Move one more copy of the column out of the residual.
            for (r, c) in residual.iter_mut().zip(col) {
                *r -= c;
            }
            k += 1;
        }
        // Undo all copies taken by the loop.
        for (r, c) in residual.iter_mut().zip(col) {
            *r += c * (&bound + 1);
        }
        coeffs[idx] = Int::zero();
    }
    let mut out = Vec::new();
    let mut coeffs = vec![Int::zero(); columns.len()];
    let mut residual: Vec<Int> = target.to_vec();
    rec(columns, 0, &mut residual, &mut coeffs, &mut out);
    out
}

/// Single-step feasibility: delegates to the exchange environment.
pub fn feasible_single_step(exc: &Exchange, st: &State) -> Result<State, ModelError> {
    apply_exchange(st, exc)
}

/// An ordered partition of `exc` into steps, each feasible from the
/// running state, or `None` when no order exists. Transfers are first
/// sequenced one at a time (a feasible multi-transfer step can always be
/// serialized), then greedily recombined into larger feasible steps.
pub fn firing_sequence(
    exc: &Exchange,
    st: &State,
    cap: u64,
) -> Result<Option<Vec<Exchange>>, DecideError> {
    if exc.len() > cap {
        return Err(DecideError::SearchCap { limit: cap });
    }
    if exc.is_empty() {
        return Ok(Some(Vec::new()));
    }
    let mut dead: BTreeSet<Exchange> = BTreeSet::new();
    let mut order: Vec<Transfer> = Vec::new();
    if !sequence_singletons(st.clone(), exc.clone(), &mut order, &mut dead) {
        return Ok(None);
    }

    // Compress: extend the current step while it stays feasible as a whole.
    let mut steps: Vec<Exchange> = Vec::new();
    let mut step_start = st.clone();
    let mut current = Exchange::new();
    for tr in order {
        let mut attempt = current.clone();
        attempt.insert(tr.clone(), 1);
        if apply_exchange(&step_start, &attempt).is_ok() {
            current = attempt;
        } else {
            step_start = apply_exchange(&step_start, &current).expect("step was feasible");
            steps.push(std::mem::take(&mut current));
            current.insert(tr, 1);
        }
    }
    if !current.is_empty() {
        steps.push(current);
    }
    Ok(Some(steps))
}

fn sequence_singletons(
    st: State,
    remaining: Exchange,
    order: &mut Vec<Transfer>,
    dead: &mut BTreeSet<Exchange>,
) -> bool {
    if remaining.is_empty() {
        return true;
    }
    if dead.contains(&remaining) {
        return false;
    }
    for tr in remaining.keys().cloned().collect::<Vec<_>>() {
        let single = Exchange::singleton(tr.clone());
        if let Ok(next) = apply_exchange(&st, &single) {
            let mut rest = remaining.clone();
            rest.remove(&tr, 1);
            order.push(tr);
            if sequence_singletons(next, rest, order, dead) {
                return true;
            }
            order.pop();
        }
    }
    dead.insert(remaining);
    false
}

/// A solution of the fairness system together with everything needed to
/// act on it.
#[derive(Debug, Clone)]
pub struct FairnessCertificate {
    /// Multiplicities over the `[A|C]` columns, reusable exchanges first.
    pub y: Vec<Int>,
    /// The exchange performed, decoded from `[A|C]·y`.
    pub exchange: Exchange,
    /// `(C−B)·y`; componentwise nonnegative.
    pub slack: Vec<Int>,
    /// Per-user payoffs reconstructed from the selected contracts.
    pub witness: FairnessWitness,
    /// Step decomposition for eventually-fair computations.
    pub firing: Option<Vec<Exchange>>,
}

/// The grounded formulas a solution selects, with multiplicities.
pub fn selected_formulas(sys: &EncodingSystem, y: &[Int]) -> Vec<(OmegaForm, u64)> {
    y.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| (sys.column_formula(j).clone(), c.to_u64().expect("small multiplicities")))
        .collect()
}

/// Per-user payoffs read off a solution's selected contracts.
pub fn witness_from_selection(sys: &EncodingSystem, y: &[Int]) -> FairnessWitness {
    let n = sys.delta_columns.len();
    let mut per_user: BTreeMap<UserId, Exchange> = BTreeMap::new();
    for (j, coeff) in y.iter().enumerate().skip(n) {
        let Some(k) = coeff.to_u64() else { continue };
        if k == 0 {
            continue;
        }
        let OmegaForm::GTheta(theta) = sys.column_formula(j) else { continue };
        // The grant's giver identifies whose policy the contract came from.
        let Some(owner) = theta.rhs.keys().next().map(|i| i.from.user.clone()) else {
            continue;
        };
        let Ok(payoff) = decode_exchange(&theta.lhs) else { continue };
        let entry = per_user.entry(owner).or_default();
        for _ in 0..k {
            *entry = entry.union(&payoff);
        }
    }
    FairnessWitness { per_user }
}

/// A grounded theory and its matrix encoding, prepared once.
pub struct DecisionSetting {
    pub theory: GroundedTheory,
    pub system: EncodingSystem,
}

impl DecisionSetting {
    pub fn new(
        rulesets: &BTreeMap<UserId, Ruleset>,
        ctx: &Context,
        universe: &BTreeSet<UserId>,
    ) -> Self {
        let ctx_atoms = compile_context(ctx);
        let mut compiled = Vec::new();
        for rs in rulesets.values() {
            compiled.extend(compile_ruleset(rs));
        }
        let theory = ground_rules(&compiled, universe, &ctx_atoms);
        let system = build_system(&theory);
        DecisionSetting { theory, system }
    }

    pub fn from_theory(theory: GroundedTheory) -> Self {
        let system = build_system(&theory);
        DecisionSetting { theory, system }
    }
}

/// Certifies one specific exchange: fair agreement on the label plus
/// feasibility in the requested mode. The target state is implied.
pub fn certificate_for_exchange(
    setting: &DecisionSetting,
    st: &State,
    exc: &Exchange,
    mode: ProofMode,
    config: &DecideConfig,
) -> Result<Option<FairnessCertificate>, DecideError> {
    if exc.len() > config.exchange_cap {
        return Err(DecideError::SearchCap { limit: config.exchange_cap });
    }
    let sys = &setting.system;
    let Some(target) = sys.basis.vector_of(&encode_exchange(exc)) else {
        return Ok(None);
    };
    let solutions = solve_fair_system(sys, &target, config)?;
    let Some(y) = solutions.into_iter().next() else {
        return Ok(None);
    };
    let firing = match mode {
        ProofMode::Strict => {
            if feasible_single_step(exc, st).is_err() {
                return Ok(None);
            }
            None
        }
        ProofMode::StarCut => match firing_sequence(exc, st, config.exchange_cap)? {
            Some(steps) => Some(steps),
            None => return Ok(None),
        },
    };
    Ok(Some(FairnessCertificate {
        slack: sys.slack(&y),
        witness: witness_from_selection(sys, &y),
        exchange: exc.clone(),
        firing,
        y,
    }))
}

/// Is the target state reachable from `st` by a fair exchange (strict
/// mode) or an eventually fair computation (star-cut mode)? Returns the
/// lexicographically least certificate under the column order, searching
/// exchanges up to the configured size cap.
pub fn decide(
    setting: &DecisionSetting,
    st: &State,
    st_target: &State,
    mode: ProofMode,
    config: &DecideConfig,
) -> Result<Option<FairnessCertificate>, DecideError> {
    // Resources are neither created nor destroyed.
    if st.total_resources() != st_target.total_resources() {
        return Ok(None);
    }
    let mut best: Option<FairnessCertificate> = None;
    for exc in candidate_exchanges(&setting.system, st, st_target, mode, config.exchange_cap) {
        if mode == ProofMode::Strict {
            match feasible_single_step(&exc, st) {
                Ok(reached) if &reached == st_target => {}
                _ => continue,
            }
        }
        let Some(cert) = certificate_for_exchange(setting, st, &exc, mode, config)? else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => cert.y < b.y,
        };
        if better {
            best = Some(cert);
        }
    }
    Ok(best)
}

/// All exchanges over the performable transfers whose net flow turns
/// `st` into `st_target`, up to `cap` transfers. In strict mode each
/// giver's outgoing count is bounded by her holdings.
fn candidate_exchanges(
    sys: &EncodingSystem,
    st: &State,
    st_target: &State,
    mode: ProofMode,
    cap: u64,
) -> Vec<Exchange> {
    // Transfers some A or C column can perform.
    let mut performable: BTreeSet<Transfer> = BTreeSet::new();
    for j in 0..sys.column_count() {
        let col = sys.performed_column(j);
        for (imp, c) in sys.basis.implications.iter().zip(col) {
            if !c.is_zero() {
                if let Ok(exc) = decode_exchange(&DeltaForm::singleton(imp.clone())) {
                    performable.extend(exc.keys().cloned());
                }
            }
        }
    }
    let transfers: Vec<Transfer> = performable.into_iter().collect();

    // Net outflow each (user, resource) must realize.
    let mut need: BTreeMap<(UserId, ResourceId), i64> = BTreeMap::new();
    let mut keys: BTreeSet<(UserId, ResourceId)> = BTreeSet::new();
    for (u, r, _) in st.entries() {
        keys.insert((u.clone(), r.clone()));
    }
    for (u, r, _) in st_target.entries() {
        keys.insert((u.clone(), r.clone()));
    }
    for (u, r) in keys {
        let delta = st.count(&u, &r) as i64 - st_target.count(&u, &r) as i64;
        need.insert((u, r), delta);
    }
    // Pairs never touched by any transfer can carry no flow.
    let touched: BTreeSet<(UserId, ResourceId)> = transfers
        .iter()
        .flat_map(|t| {
            [(t.giver.clone(), t.resource.clone()), (t.receiver.clone(), t.resource.clone())]
        })
        .collect();
    if need.iter().any(|(k, v)| *v != 0 && !touched.contains(k)) {
        return Vec::new();
    }

    // The last transfer index able to change each pair's flow.
    let mut last_touch: BTreeMap<(UserId, ResourceId), usize> = BTreeMap::new();
    for (i, t) in transfers.iter().enumerate() {
        last_touch.insert((t.giver.clone(), t.resource.clone()), i);
        last_touch.insert((t.receiver.clone(), t.resource.clone()), i);
    }

    fn rec(
        transfers: &[Transfer],
        idx: usize,
        budget: u64,
        st: &State,
        mode: ProofMode,
        need: &BTreeMap<(UserId, ResourceId), i64>,
        last_touch: &BTreeMap<(UserId, ResourceId), usize>,
        flow: &mut BTreeMap<(UserId, ResourceId), i64>,
        current: &mut Exchange,
        out: &mut Vec<Exchange>,
    ) {
        if idx == transfers.len() {
            if flow.iter().all(|(k, v)| *v == need.get(k).copied().unwrap_or(0)) {
                out.push(current.clone());
            }
            return;
        }
        let tr = &transfers[idx];
        let giver_key = (tr.giver.clone(), tr.resource.clone());
        let recv_key = (tr.receiver.clone(), tr.resource.clone());
        let mut max_n = budget;
        if mode == ProofMode::Strict {
            let stock = st.count(&tr.giver, &tr.resource);
            max_n = max_n.min(stock);
        }
        for n in 0..=max_n {
            if n > 0 {
                current.insert(tr.clone(), 1);
                *flow.entry(giver_key.clone()).or_insert(0) += 1;
                *flow.entry(recv_key.clone()).or_insert(0) -= 1;
            }
            // Once the last transfer touching a pair has chosen its
            // count, that pair's flow is final and must match.
            let settled_ok = [&giver_key, &recv_key].iter().all(|k| {
                last_touch.get(*k) != Some(&idx)
                    || flow.get(*k).copied().unwrap_or(0) == need.get(*k).copied().unwrap_or(0)
            });
            // Each remaining transfer raises one pair's flow by one and
            // lowers another's, so both total gaps bound the budget.
            let mut deficit = 0i64;
            let mut excess = 0i64;
            for (k, target) in need {
                let f = flow.get(k).copied().unwrap_or(0);
                deficit += (target - f).max(0);
                excess += (f - target).max(0);
            }
            let remaining = (budget - n) as i64;
            if settled_ok && deficit <= remaining && excess <= remaining {
                rec(transfers, idx + 1, budget - n, st, mode, need, last_touch, flow, current, out);
            }
        }
        let reset = current.remove(tr, max_n);
        *flow.entry(giver_key).or_insert(0) -= reset as i64;
        *flow.entry(recv_key).or_insert(0) += reset as i64;
    }

    let mut out = Vec::new();
    let mut flow: BTreeMap<(UserId, ResourceId), i64> = BTreeMap::new();
    let mut current = Exchange::new();
    rec(&transfers, 0, cap, st, mode, &need, &last_touch, &mut flow, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests;
