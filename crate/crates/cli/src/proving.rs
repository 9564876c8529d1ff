use std::path::Path;

use muac_core::compile::{compile_state, full_theory_omega};
use muac_core::decide::{DecideError, DecisionSetting};
use muac_core::logic::{check_proof, check_reduced_against, proof_from_str, proof_hash, proof_to_string, ProofMode};
use muac_core::model::UserId;
use muac_core::prove::{fair_st, slice};
use serde_json::json;

use crate::common::{effective_cap, load_scenario, parse_resources};

#[allow(clippy::too_many_arguments)]
pub fn prove(
    scenario_path: &Path,
    user: &str,
    want: &str,
    mode: ProofMode,
    cap: Option<u64>,
    out: &Path,
    full: bool,
    json: bool,
) -> Result<u8, String> {
    let scenario = load_scenario(scenario_path)?;
    let user = UserId::new(user);
    if !scenario.universe.users.contains(&user) {
        return Err(format!("unknown user {user}"));
    }
    let resources = parse_resources(want)?;
    for r in &resources {
        if !scenario.universe.resources.contains(r) {
            return Err(format!("unknown resource {r}"));
        }
    }
    let cap = effective_cap(cap);
    let rulesets = scenario.all_rulesets();

    let outcome = match fair_st(
        &rulesets,
        &scenario.context,
        &scenario.universe.users,
        &scenario.state,
        &user,
        &resources,
        cap,
        mode,
    ) {
        Ok(Some(outcome)) => outcome,
        Ok(None) => {
            if json {
                println!("{}", json!({"ok": false, "reason": "no fair exchange"}));
            } else {
                println!("no fair exchange grants {user} the requested resources (cap {cap})");
            }
            return Ok(1);
        }
        Err(e @ DecideError::ResourceCap { .. }) | Err(e @ DecideError::SearchCap { .. }) => {
            if json {
                println!("{}", json!({"ok": false, "reason": "cap exceeded", "detail": e.to_string()}));
            } else {
                println!("search aborted: {e}");
            }
            return Ok(2);
        }
    };

    let proof = if full {
        outcome.proof.clone()
    } else {
        let setting =
            DecisionSetting::new(&rulesets, &scenario.context, &scenario.universe.users);
        let (_, _, sliced) = slice(&setting, &outcome.certificate, &scenario.state);
        sliced
    };
    let body = proof_to_string(&proof);
    std::fs::write(out, &body).map_err(|e| format!("cannot write {}: {e}", out.display()))?;

    if json {
        println!(
            "{}",
            json!({
                "ok": true,
                "proof": out.display().to_string(),
                "proof_hash": proof_hash(&proof),
                "nodes": proof.node_count(),
                "exchange": outcome.certificate.exchange.iter()
                    .map(|(t, n)| json!({"transfer": t.to_string(), "count": n}))
                    .collect::<Vec<_>>(),
                "steps": outcome.firing.len(),
                "target": outcome.st_target,
            })
        );
    } else {
        println!("fair exchange found for {user}:");
        for (t, n) in outcome.certificate.exchange.iter() {
            println!("  {t}  x{n}");
        }
        println!("steps: {}", outcome.firing.len().max(1));
        println!("proof: {} ({} nodes)", out.display(), proof.node_count());
    }
    Ok(0)
}

pub fn verify(
    proof_path: &Path,
    against: Option<&Path>,
    mode: ProofMode,
    json: bool,
) -> Result<u8, String> {
    let body = std::fs::read_to_string(proof_path)
        .map_err(|e| format!("cannot read {}: {e}", proof_path.display()))?;
    let fail = |reason: String| {
        if json {
            println!("{}", json!({"ok": false, "reason": reason}));
        } else {
            println!("invalid: {reason}");
        }
    };
    let proof = match proof_from_str(&body) {
        Ok(p) => p,
        Err(e) => {
            fail(format!("InvalidProof: {e}"));
            return Ok(3);
        }
    };
    if let Err(e) = check_proof(&proof, mode) {
        fail(format!("InvalidProof: {e}"));
        return Ok(3);
    }
    if let Some(path) = against {
        let scenario = load_scenario(path)?;
        let omega = full_theory_omega(
            &scenario.all_rulesets(),
            &scenario.context,
            &scenario.universe.users,
        );
        let sigma = compile_state(&scenario.state);
        if let Err(e) = check_reduced_against(&proof, &omega, &sigma) {
            fail(format!("NotSubsumed: {e}"));
            return Ok(4);
        }
    }
    if json {
        println!(
            "{}",
            json!({"ok": true, "nodes": proof.node_count(), "proof_hash": proof_hash(&proof)})
        );
    } else {
        println!("valid ({} nodes)", proof.node_count());
    }
    Ok(0)
}
