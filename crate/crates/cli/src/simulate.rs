use std::collections::BTreeMap;
use std::path::Path;

use muac_core::decide::{certificate_for_exchange, decide, DecideConfig, DecisionSetting};
use muac_core::logic::{check_proof, ProofMode};
use muac_core::model::{
    fair_exchange_between, is_fair_label, is_fair_transition, ExchangePolicy, OracleConfig,
    UserId,
};
use muac_core::muac::interpret_ruleset;
use muac_core::prove::{fair_st, synthesize_proof};
use muac_core::scenario::{Expectation, ProposalKind};
use serde_json::json;

use crate::common::{effective_cap, load_scenario};

struct Row {
    name: String,
    kind: &'static str,
    verdict: String,
    oracle: String,
    agree: bool,
    proof_nodes: Option<usize>,
    expect: Option<String>,
    expect_ok: bool,
}

pub fn run(scenario_path: &Path, cap: Option<u64>, json: bool) -> Result<u8, String> {
    let scenario = load_scenario(scenario_path)?;
    let cap = effective_cap(cap);
    let config = DecideConfig { exchange_cap: cap, ..DecideConfig::default() };
    let rulesets = scenario.all_rulesets();
    let setting = DecisionSetting::new(&rulesets, &scenario.context, &scenario.universe.users);
    let policies: BTreeMap<UserId, ExchangePolicy> = rulesets
        .iter()
        .map(|(u, rs)| {
            (u.clone(), interpret_ruleset(rs, &scenario.context, &scenario.universe.users))
        })
        .collect();
    let oracle_cfg = OracleConfig { max_exchange_size: cap };

    let mut rows: Vec<Row> = Vec::new();
    for proposal in &scenario.proposals {
        let row = match &proposal.kind {
            ProposalKind::Exchange(exc) => {
                let strict =
                    certificate_for_exchange(&setting, &scenario.state, exc, ProofMode::Strict, &config)
                        .map_err(|e| e.to_string())?;
                let eventual =
                    certificate_for_exchange(&setting, &scenario.state, exc, ProofMode::StarCut, &config)
                        .map_err(|e| e.to_string())?;
                let verdict = verdict_name(strict.is_some(), eventual.is_some());

                let oracle_strict =
                    is_fair_transition(&scenario.state, exc, &policies, &oracle_cfg)
                        .map_err(|e| e.to_string())?;
                let oracle_eventual = is_fair_label(&policies, exc, &oracle_cfg)
                    .map_err(|e| e.to_string())?
                    .is_fair()
                    && muac_core::decide::firing_sequence(exc, &scenario.state, cap)
                        .map_err(|e| e.to_string())?
                        .is_some();
                let oracle = verdict_name(oracle_strict, oracle_eventual);
                let agree = verdict == oracle;

                // Self-verify the synthesized proof when one exists.
                let proof_nodes = match (&strict, &eventual) {
                    (Some(cert), _) | (None, Some(cert)) => {
                        let mode =
                            if strict.is_some() { ProofMode::Strict } else { ProofMode::StarCut };
                        let target = muac_core::model::apply_net(&scenario.state, exc)
                            .ok_or("certified exchange must reach a state")?;
                        let proof = synthesize_proof(
                            cert,
                            &setting,
                            &rulesets,
                            &scenario.context,
                            &scenario.universe.users,
                            &scenario.state,
                            &target,
                            mode,
                        );
                        check_proof(&proof, mode).map_err(|e| e.to_string())?;
                        Some(proof.node_count())
                    }
                    _ => None,
                };

                let expect_ok = expectation_matches(&proposal.expect, &verdict);
                Row {
                    name: proposal.name.clone(),
                    kind: "exchange",
                    verdict,
                    oracle,
                    agree,
                    proof_nodes,
                    expect: proposal.expect.as_ref().map(|e| e.as_str().to_string()),
                    expect_ok,
                }
            }
            ProposalKind::Target(st_target) => {
                let strict =
                    decide(&setting, &scenario.state, st_target, ProofMode::Strict, &config)
                        .map_err(|e| e.to_string())?;
                let eventual =
                    decide(&setting, &scenario.state, st_target, ProofMode::StarCut, &config)
                        .map_err(|e| e.to_string())?;
                let verdict = verdict_name(strict.is_some(), eventual.is_some());
                let oracle_strict =
                    fair_exchange_between(&scenario.state, st_target, &policies, cap)
                        .map_err(|e| e.to_string())?
                        .is_some();
                // The exhaustive oracle covers single transitions only.
                let oracle =
                    if oracle_strict { "fair".to_string() } else { "not-fair-strictly".into() };
                let agree = strict.is_some() == oracle_strict;
                let expect_ok = expectation_matches(&proposal.expect, &verdict);
                Row {
                    name: proposal.name.clone(),
                    kind: "target",
                    verdict,
                    oracle,
                    agree,
                    proof_nodes: None,
                    expect: proposal.expect.as_ref().map(|e| e.as_str().to_string()),
                    expect_ok,
                }
            }
            ProposalKind::Want { user, resources } => {
                let outcome = fair_st(
                    &rulesets,
                    &scenario.context,
                    &scenario.universe.users,
                    &scenario.state,
                    user,
                    resources,
                    cap,
                    ProofMode::StarCut,
                )
                .map_err(|e| e.to_string())?;
                let verdict =
                    if outcome.is_some() { "granted".to_string() } else { "denied".into() };
                let proof_nodes = outcome.as_ref().map(|o| {
                    check_proof(&o.proof, ProofMode::StarCut).expect("synthesized proofs check");
                    o.proof.node_count()
                });
                let expect_ok = expectation_matches(&proposal.expect, &verdict);
                Row {
                    name: proposal.name.clone(),
                    kind: "want",
                    verdict,
                    oracle: "-".into(),
                    agree: true,
                    proof_nodes,
                    expect: proposal.expect.as_ref().map(|e| e.as_str().to_string()),
                    expect_ok,
                }
            }
        };
        rows.push(row);
    }

    let all_ok = rows.iter().all(|r| r.agree && r.expect_ok);
    if json {
        let rows: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({
                    "name": r.name,
                    "kind": r.kind,
                    "verdict": r.verdict,
                    "oracle": r.oracle,
                    "agree": r.agree,
                    "proof_nodes": r.proof_nodes,
                    "expect": r.expect,
                    "expect_ok": r.expect_ok,
                })
            })
            .collect();
        println!("{}", json!({"ok": all_ok, "proposals": rows}));
    } else {
        println!(
            "{:<16} {:<9} {:<16} {:<17} {:<6} {:<16} ok",
            "proposal", "kind", "verdict", "oracle", "agree", "expect"
        );
        for r in &rows {
            println!(
                "{:<16} {:<9} {:<16} {:<17} {:<6} {:<16} {}",
                r.name,
                r.kind,
                r.verdict,
                r.oracle,
                if r.agree { "yes" } else { "NO" },
                r.expect.clone().unwrap_or_else(|| "-".into()),
                if r.agree && r.expect_ok { "yes" } else { "NO" },
            );
        }
        if !all_ok {
            println!("\ndisagreement or failed expectation detected");
        }
    }
    Ok(if all_ok { 0 } else { 1 })
}

fn verdict_name(strict: bool, eventual: bool) -> String {
    match (strict, eventual) {
        (true, _) => "fair".into(),
        (false, true) => "eventually-fair".into(),
        (false, false) => "unfair".into(),
    }
}

fn expectation_matches(expect: &Option<Expectation>, verdict: &str) -> bool {
    match expect {
        None => true,
        Some(Expectation::Fair) => verdict == "fair",
        Some(Expectation::EventuallyFair) => verdict == "eventually-fair",
        Some(Expectation::Unfair) => verdict == "unfair",
        Some(Expectation::Granted) => verdict == "granted",
        Some(Expectation::Denied) => verdict == "denied",
    }
}
