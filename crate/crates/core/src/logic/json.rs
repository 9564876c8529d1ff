//! The `.muacl-proof` JSON encoding.
//!
//! Formulas: `{"at":{"res":..,"usr":..}}`, `{"limp":[at,at]}`,
//! `{"contract":[delta,delta]}`, `{"G":theta|delta}`, `{"top":true}`,
//! `{"pred":{"name":..,"args":[..]}}`, `{"and":[w,w]}`, `{"imp":[w,w]}`.
//! A δ or σ is an array of its occurrences in canonical sorted order; a
//! node is `{"rule":..,"conclusion":..,"principal":..,"premises":[..]}`.
//! Output is canonical (sorted keys, sorted multisets), so equal proofs
//! serialize to identical bytes.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::model::{ResourceId, UserId};
use crate::multiset::Multiset;

use super::{
    DeltaForm, LinAtom, LinImp, NLSequent, NodeSequent, OmegaForm, ProofNode, RuleId, Sequent,
    SigmaForm, ThetaForm,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed proof encoding: {0}")]
pub struct FormatError(pub String);

fn err(msg: impl Into<String>) -> FormatError {
    FormatError(msg.into())
}

// --- encoding ---------------------------------------------------------------

fn atom_to_json(a: &LinAtom) -> Value {
    json!({"at": {"res": a.resource.0, "usr": a.user.0}})
}

fn imp_to_json(i: &LinImp) -> Value {
    json!({"limp": [atom_to_json(&i.from), atom_to_json(&i.to)]})
}

fn sigma_to_json(s: &SigmaForm) -> Value {
    Value::Array(s.occurrences().map(atom_to_json).collect())
}

fn delta_to_json(d: &DeltaForm) -> Value {
    Value::Array(d.occurrences().map(imp_to_json).collect())
}

fn theta_to_json(t: &ThetaForm) -> Value {
    json!({"contract": [delta_to_json(&t.lhs), delta_to_json(&t.rhs)]})
}

fn omega_to_json(w: &OmegaForm) -> Value {
    match w {
        OmegaForm::Top => json!({"top": true}),
        OmegaForm::Pred { name, args } => {
            let args: Vec<Value> = args.iter().map(|a| Value::String(a.0.clone())).collect();
            json!({"pred": {"name": name, "args": args}})
        }
        OmegaForm::And(a, b) => json!({"and": [omega_to_json(a), omega_to_json(b)]}),
        OmegaForm::Imp(a, b) => json!({"imp": [omega_to_json(a), omega_to_json(b)]}),
        OmegaForm::GTheta(t) => json!({"G": theta_to_json(t)}),
        OmegaForm::GDelta(d) => json!({"G": delta_to_json(d)}),
    }
}

fn sequent_to_json(s: &Sequent) -> Value {
    json!({
        "omega": s.omega.occurrences().map(omega_to_json).collect::<Vec<_>>(),
        "theta": s.theta.occurrences().map(theta_to_json).collect::<Vec<_>>(),
        "delta": s.delta.occurrences().map(delta_to_json).collect::<Vec<_>>(),
        "sigma": s.sigma.occurrences().map(sigma_to_json).collect::<Vec<_>>(),
        "goal": sigma_to_json(&s.goal),
    })
}

fn nl_sequent_to_json(s: &NLSequent) -> Value {
    json!({
        "omega": s.omega.occurrences().map(omega_to_json).collect::<Vec<_>>(),
        "nlgoal": omega_to_json(&s.goal),
    })
}

pub fn proof_to_json(p: &ProofNode) -> Value {
    let conclusion = match &p.conclusion {
        NodeSequent::Linear(s) => sequent_to_json(s),
        NodeSequent::NonLinear(s) => nl_sequent_to_json(s),
    };
    json!({
        "rule": p.rule.as_str(),
        "conclusion": conclusion,
        "principal": p.principal.clone().map(Value::String).unwrap_or(Value::Null),
        "premises": p.premises.iter().map(proof_to_json).collect::<Vec<_>>(),
    })
}

/// Canonical textual form (serde_json orders object keys).
pub fn proof_to_string(p: &ProofNode) -> String {
    serde_json::to_string_pretty(&proof_to_json(p)).expect("proof serialization cannot fail")
}

// --- decoding ---------------------------------------------------------------

fn as_obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, FormatError> {
    v.as_object().ok_or_else(|| err(format!("{what} must be an object")))
}

fn as_arr<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, FormatError> {
    v.as_array().ok_or_else(|| err(format!("{what} must be an array")))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str, FormatError> {
    v.as_str().ok_or_else(|| err(format!("{what} must be a string")))
}

fn pair<'a>(v: &'a Value, what: &str) -> Result<(&'a Value, &'a Value), FormatError> {
    let arr = as_arr(v, what)?;
    if arr.len() != 2 {
        return Err(err(format!("{what} must have exactly two entries")));
    }
    Ok((&arr[0], &arr[1]))
}

fn atom_from_json(v: &Value) -> Result<LinAtom, FormatError> {
    let obj = as_obj(v, "atom")?;
    let at = obj.get("at").ok_or_else(|| err("expected an 'at' formula"))?;
    let at = as_obj(at, "'at' payload")?;
    let res = as_str(at.get("res").ok_or_else(|| err("'at' missing res"))?, "res")?;
    let usr = as_str(at.get("usr").ok_or_else(|| err("'at' missing usr"))?, "usr")?;
    Ok(LinAtom::new(ResourceId::new(res), UserId::new(usr)))
}

fn imp_from_json(v: &Value) -> Result<LinImp, FormatError> {
    let obj = as_obj(v, "implication")?;
    let limp = obj.get("limp").ok_or_else(|| err("expected a 'limp' formula"))?;
    let (a, b) = pair(limp, "'limp' payload")?;
    Ok(LinImp::new(atom_from_json(a)?, atom_from_json(b)?))
}

fn sigma_from_json(v: &Value) -> Result<SigmaForm, FormatError> {
    let arr = as_arr(v, "sigma")?;
    arr.iter().map(atom_from_json).collect::<Result<_, _>>()
}

fn delta_from_json(v: &Value) -> Result<DeltaForm, FormatError> {
    let arr = as_arr(v, "delta")?;
    arr.iter().map(imp_from_json).collect::<Result<_, _>>()
}

fn theta_from_json(v: &Value) -> Result<ThetaForm, FormatError> {
    let obj = as_obj(v, "contract")?;
    let c = obj.get("contract").ok_or_else(|| err("expected a 'contract' formula"))?;
    let (l, r) = pair(c, "'contract' payload")?;
    Ok(ThetaForm::new(delta_from_json(l)?, delta_from_json(r)?))
}

fn omega_from_json(v: &Value) -> Result<OmegaForm, FormatError> {
    let obj = as_obj(v, "omega formula")?;
    if obj.contains_key("top") {
        return Ok(OmegaForm::Top);
    }
    if let Some(p) = obj.get("pred") {
        let p = as_obj(p, "'pred' payload")?;
        let name = as_str(p.get("name").ok_or_else(|| err("'pred' missing name"))?, "name")?;
        let args = as_arr(p.get("args").ok_or_else(|| err("'pred' missing args"))?, "args")?
            .iter()
            .map(|a| Ok(UserId::new(as_str(a, "pred arg")?)))
            .collect::<Result<Vec<_>, FormatError>>()?;
        return Ok(OmegaForm::Pred { name: name.to_string(), args });
    }
    if let Some(a) = obj.get("and") {
        let (l, r) = pair(a, "'and' payload")?;
        return Ok(OmegaForm::and(omega_from_json(l)?, omega_from_json(r)?));
    }
    if let Some(a) = obj.get("imp") {
        let (l, r) = pair(a, "'imp' payload")?;
        return Ok(OmegaForm::imp(omega_from_json(l)?, omega_from_json(r)?));
    }
    if let Some(g) = obj.get("G") {
        return if g.is_array() {
            Ok(OmegaForm::GDelta(delta_from_json(g)?))
        } else {
            Ok(OmegaForm::GTheta(theta_from_json(g)?))
        };
    }
    Err(err("unknown omega formula"))
}

fn sequent_from_json(v: &Value) -> Result<NodeSequent, FormatError> {
    let obj = as_obj(v, "conclusion")?;
    let omega: Multiset<OmegaForm> = as_arr(
        obj.get("omega").ok_or_else(|| err("conclusion missing omega"))?,
        "omega",
    )?
    .iter()
    .map(omega_from_json)
    .collect::<Result<_, _>>()?;

    if let Some(goal) = obj.get("nlgoal") {
        return Ok(NodeSequent::NonLinear(NLSequent { omega, goal: omega_from_json(goal)? }));
    }

    let theta: Multiset<ThetaForm> =
        as_arr(obj.get("theta").ok_or_else(|| err("conclusion missing theta"))?, "theta")?
            .iter()
            .map(theta_from_json)
            .collect::<Result<_, _>>()?;
    let delta: Multiset<DeltaForm> =
        as_arr(obj.get("delta").ok_or_else(|| err("conclusion missing delta"))?, "delta")?
            .iter()
            .map(delta_from_json)
            .collect::<Result<_, _>>()?;
    let sigma: Multiset<SigmaForm> =
        as_arr(obj.get("sigma").ok_or_else(|| err("conclusion missing sigma"))?, "sigma")?
            .iter()
            .map(sigma_from_json)
            .collect::<Result<_, _>>()?;
    let goal = sigma_from_json(obj.get("goal").ok_or_else(|| err("conclusion missing goal"))?)?;
    Ok(NodeSequent::Linear(Sequent { omega, theta, delta, sigma, goal }))
}

pub fn proof_from_json(v: &Value) -> Result<ProofNode, FormatError> {
    let obj = as_obj(v, "proof node")?;
    let rule = as_str(obj.get("rule").ok_or_else(|| err("node missing rule"))?, "rule")?;
    let rule = RuleId::from_str(rule).ok_or_else(|| err(format!("unknown rule {rule:?}")))?;
    let conclusion =
        sequent_from_json(obj.get("conclusion").ok_or_else(|| err("node missing conclusion"))?)?;
    let principal = match obj.get("principal") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(err("principal must be a string or null")),
    };
    let premises = as_arr(
        obj.get("premises").ok_or_else(|| err("node missing premises"))?,
        "premises",
    )?
    .iter()
    .map(proof_from_json)
    .collect::<Result<Vec<_>, _>>()?;
    Ok(ProofNode { rule, conclusion, principal, premises })
}

pub fn proof_from_str(s: &str) -> Result<ProofNode, FormatError> {
    let v: Value = serde_json::from_str(s).map_err(|e| err(format!("invalid JSON: {e}")))?;
    proof_from_json(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::ProofMode;

    fn atom(r: &str, u: &str) -> LinAtom {
        LinAtom::new(ResourceId::new(r), UserId::new(u))
    }

    fn sample_proof() -> ProofNode {
        let a = atom("sb", "Alice");
        let theta = ThetaForm::new(
            DeltaForm::new(),
            DeltaForm::singleton(LinImp::new(a.clone(), atom("sb", "Bob"))),
        );
        let seq = Sequent {
            omega: [
                OmegaForm::Top,
                OmegaForm::pred("is_paladin", vec![UserId::new("Bob")]),
                OmegaForm::GTheta(theta),
            ]
            .into_iter()
            .collect(),
            theta: Multiset::new(),
            delta: Multiset::new(),
            sigma: [SigmaForm::singleton(a.clone())].into_iter().collect(),
            goal: SigmaForm::singleton(a),
        };
        ProofNode::new(RuleId::SigmaAx, NodeSequent::Linear(seq), vec![])
    }

    #[test]
    fn json_roundtrips_and_is_canonical() {
        let p = sample_proof();
        let s1 = proof_to_string(&p);
        let q = proof_from_str(&s1).unwrap();
        assert_eq!(p, q);
        assert_eq!(proof_to_string(&q), s1);
    }

    #[test]
    fn truncated_files_are_rejected() {
        let p = sample_proof();
        let s = proof_to_string(&p);
        assert!(proof_from_str(&s[..s.len() / 2]).is_err());
    }

    #[test]
    fn unknown_rules_are_rejected() {
        let v = json!({
            "rule": "mystery",
            "conclusion": {"omega": [], "theta": [], "delta": [], "sigma": [], "goal": []},
            "principal": null,
            "premises": [],
        });
        assert!(proof_from_json(&v).is_err());
    }

    #[test]
    fn decoded_proofs_check_like_the_originals() {
        let p = sample_proof();
        let q = proof_from_str(&proof_to_string(&p)).unwrap();
        crate::logic::check_proof(&q, ProofMode::Strict).unwrap();
    }

    #[test]
    fn hash_is_stable_over_reserialization() {
        let p = sample_proof();
        let q = proof_from_str(&proof_to_string(&p)).unwrap();
        assert_eq!(crate::logic::proof_hash(&p), crate::logic::proof_hash(&q));
    }
}
